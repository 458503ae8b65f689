from __future__ import annotations

import re

import pytest

from reqcode.errors import EmptyTargets, MissingContext
from reqcode.model import Category, Mode, Problem
from reqcode.prompts import (
    IclExample,
    PromptPlan,
    Stage,
    apply_preference,
    build_nfr_instruction_block,
    build_prompt,
    load_icl_examples,
    preference_sentence,
)

PROBLEM = Problem(
    task_id="t/0",
    mode=Mode.FUNCTION,
    description="def f(x):\n    \"\"\"Return x.\"\"\"\n",
    entry_point="f",
)


@pytest.fixture(scope="module")
def example() -> IclExample:
    return load_icl_examples(("builtin:subarray",))[0]


def test_requirements_prompt_shape(example):
    plan = PromptPlan(stage=Stage.REQUIREMENTS, examples=(example,))
    prompt = build_prompt(plan, PROBLEM)
    assert prompt.endswith("Write requirements for the problem.")
    # example block precedes the test problem block
    assert prompt.index(example.description.strip()) < prompt.index(PROBLEM.description.strip())
    # the example's requirements document is embedded verbatim
    assert example.requirements.strip() in prompt


def test_zero_shot_degenerate():
    plan = PromptPlan(stage=Stage.REQUIREMENTS, examples=())
    prompt = build_prompt(plan, PROBLEM)
    assert prompt == PROBLEM.description.strip("\n") + "\nWrite requirements for the problem."


def test_code_prompt_embeds_generated_requirements(example):
    generated = "# Functional Requirements\n## Edge Cases\n- Handle empty input."
    plan = PromptPlan(stage=Stage.CODE, examples=(example,), requirements_context=generated)
    prompt = build_prompt(plan, PROBLEM)
    assert generated in prompt
    assert prompt.endswith("Write the code for the problem.")
    # generated requirements sit between the test description and the instruction
    assert (
        prompt.index(PROBLEM.description.strip())
        < prompt.index(generated)
        < prompt.rindex("Write the code for the problem.")
    )


def test_tests_prompt_embeds_generated_requirements(example):
    generated = "# Functional Requirements\n- something"
    plan = PromptPlan(stage=Stage.TESTS, examples=(example,), requirements_context=generated)
    prompt = build_prompt(plan, PROBLEM)
    assert generated in prompt
    assert prompt.endswith("Write test cases for the problem.")


def test_code_tdd_prompt_embeds_tests(example):
    plan = PromptPlan(
        stage=Stage.CODE_TDD,
        examples=(example,),
        requirements_context="# Requirements doc",
        tests_context="# Test Cases Regarding Functional Requirements\nassert f(1) == 1",
    )
    prompt = build_prompt(plan, PROBLEM)
    assert "assert f(1) == 1" in prompt
    assert prompt.endswith("Write the code for the problem.")
    assert "Write test cases for the problem." in prompt


def test_missing_context_raises(example):
    with pytest.raises(MissingContext):
        build_prompt(PromptPlan(stage=Stage.CODE, examples=(example,)), PROBLEM)
    with pytest.raises(MissingContext):
        build_prompt(
            PromptPlan(stage=Stage.CODE_TDD, examples=(example,), requirements_context="r"),
            PROBLEM,
        )


def test_build_prompt_is_pure(example):
    plan = PromptPlan(stage=Stage.REQUIREMENTS, examples=(example,))
    assert build_prompt(plan, PROBLEM) == build_prompt(plan, PROBLEM)


def test_preference_instruction_mode(example):
    plan = PromptPlan(stage=Stage.CODE, examples=(example,), requirements_context="# r")
    updated = apply_preference(plan, "instruction", {Category.NFR_TIME})
    assert updated.preference_instruction == (
        "Consider the time performance requirement to be the most important."
    )
    # everything else stays put
    assert updated.examples == plan.examples
    assert updated.requirements_context == plan.requirements_context
    prompt = build_prompt(updated, PROBLEM)
    assert prompt.endswith("Consider the time performance requirement to be the most important.")


def test_preference_sentence_orders_names():
    sentence = preference_sentence({Category.NFR_RELIABILITY, Category.NFR_TIME})
    assert sentence == "Consider the time performance and reliability requirements to be the most important."


def test_plug_and_play_filters_examples(example):
    plan = PromptPlan(stage=Stage.CODE, examples=(example,), requirements_context=example.requirements)
    updated = apply_preference(plan, "plug_and_play", {Category.NFR_TIME})
    kept = updated.examples[0].requirements
    assert "# Non-functional Requirements" in kept
    assert "## Performance" in kept
    assert "Robustness" not in kept
    assert "Maintainability" not in kept
    # the generated-requirements context is filtered the same way
    assert "Robustness" not in updated.requirements_context
    assert updated.nfr_subset == frozenset({Category.NFR_TIME})


def test_plug_and_play_full_set_is_identity(example):
    plan = PromptPlan(stage=Stage.CODE, examples=(example,), requirements_context=example.requirements)
    updated = apply_preference(
        plan,
        "plug_and_play",
        {
            Category.NFR_TIME,
            Category.NFR_ROBUSTNESS,
            Category.NFR_MAINTAINABILITY,
            Category.NFR_RELIABILITY,
        },
    )
    assert updated.examples == plan.examples
    assert updated.requirements_context == plan.requirements_context


def test_plug_and_play_empty_targets_rejected(example):
    plan = PromptPlan(stage=Stage.CODE, examples=(example,), requirements_context="# r")
    with pytest.raises(EmptyTargets):
        apply_preference(plan, "plug_and_play", set())


def test_preference_targets_must_be_nfr(example):
    plan = PromptPlan(stage=Stage.CODE, examples=(example,), requirements_context="# r")
    with pytest.raises(ValueError):
        apply_preference(plan, "instruction", {Category.FR_EDGE})


def test_nfr_instruction_block_contents():
    block = build_nfr_instruction_block()
    assert "Robustness: Ensures that code is resilient to invalid inputs." in block
    assert block == build_nfr_instruction_block()  # byte-stable
    for name in ("Performance", "Robustness", "Maintainability", "Reliability"):
        assert len(re.findall(rf"\b{name}\b", block)) == 1


def test_nfr_instruction_block_prepends_before_instruction(example):
    plan = PromptPlan(
        stage=Stage.CODE,
        examples=(example,),
        requirements_context="# r",
        instruction_preamble=build_nfr_instruction_block(),
    )
    prompt = build_prompt(plan, PROBLEM)
    assert prompt.index("non-functional requirements") < prompt.rindex(
        "Write the code for the problem."
    )
