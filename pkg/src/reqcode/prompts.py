"""Prompt assembly for the three generation stages plus TDD-style code gen.

Templates are data files, not code, so document fixtures can be dropped in
verbatim. Placeholder tokens are ``{description}``, ``{requirements}``,
``{code}`` and ``{tests}``; substitution is token-based, so braces in code
never need escaping.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from enum import Enum
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .errors import EmptyTargets, MissingContext
from .model import NFR_CATEGORIES, Category, Problem
from .parsing import filter_nfr_sections


class Stage(str, Enum):
    REQUIREMENTS = "requirements"
    CODE = "code"
    TESTS = "tests"
    CODE_TDD = "code_tdd"


STAGE_INSTRUCTIONS = {
    Stage.REQUIREMENTS: "Write requirements for the problem.",
    Stage.CODE: "Write the code for the problem.",
    Stage.TESTS: "Write test cases for the problem.",
    Stage.CODE_TDD: "Write the code for the problem.",
}

_NFR_NAMES = {
    Category.NFR_TIME: "time performance",
    Category.NFR_ROBUSTNESS: "robustness",
    Category.NFR_MAINTAINABILITY: "maintainability",
    Category.NFR_RELIABILITY: "reliability",
}

_NFR_ORDER = (
    Category.NFR_TIME,
    Category.NFR_ROBUSTNESS,
    Category.NFR_MAINTAINABILITY,
    Category.NFR_RELIABILITY,
)


@dataclass(frozen=True)
class IclExample:
    """One worked example: description, requirements, and stage outputs."""

    description: str
    requirements: str
    code: str | None = None
    tests: str | None = None
    cot_plan: str | None = None


@dataclass(frozen=True)
class PromptPlan:
    """Everything needed to assemble one stage prompt deterministically."""

    stage: Stage
    examples: tuple[IclExample, ...] = ()
    stage_instruction: str | None = None
    nfr_subset: frozenset[Category] | None = None
    preference_instruction: str | None = None
    instruction_preamble: str | None = None
    requirements_context: str | None = None
    tests_context: str | None = None

    def instruction(self) -> str:
        return self.stage_instruction or STAGE_INSTRUCTIONS[self.stage]


_TOKEN_RE = re.compile(r"\{(description|requirements|code|tests)\}")


def render_template(template: str, values: dict[str, str]) -> str:
    """Substitute placeholder tokens; unknown text (including braces) is kept."""

    def repl(m: re.Match) -> str:
        return values[m.group(1)].strip("\n")

    return _TOKEN_RE.sub(repl, template)


@dataclass(frozen=True)
class TemplateSet:
    """Example-block and query-block templates per stage."""

    example: dict[Stage, str]
    query: dict[Stage, str]

    @classmethod
    def from_dir(cls, path: Path) -> "TemplateSet":
        example = {}
        query = {}
        for stage in Stage:
            example[stage] = (path / f"{stage.value}.example.tmpl").read_text(encoding="utf-8")
            query[stage] = (path / f"{stage.value}.query.tmpl").read_text(encoding="utf-8")
        return cls(example=example, query=query)


@lru_cache(maxsize=1)
def default_templates() -> TemplateSet:
    root = resources.files("reqcode").joinpath("data/templates")
    example = {}
    query = {}
    for stage in Stage:
        example[stage] = root.joinpath(f"{stage.value}.example.tmpl").read_text(encoding="utf-8")
        query[stage] = root.joinpath(f"{stage.value}.query.tmpl").read_text(encoding="utf-8")
    return TemplateSet(example=example, query=query)


def _example_values(stage: Stage, ex: IclExample) -> dict[str, str]:
    values = {"description": ex.description, "requirements": ex.requirements}
    if stage in (Stage.CODE, Stage.CODE_TDD):
        if ex.code is None:
            raise MissingContext(f"stage {stage.value} needs code in every in-context example")
        values["code"] = ex.code
    if stage in (Stage.TESTS, Stage.CODE_TDD):
        if ex.tests is None:
            raise MissingContext(f"stage {stage.value} needs tests in every in-context example")
        values["tests"] = ex.tests
    return values


def _query_values(plan: PromptPlan, problem: Problem) -> dict[str, str]:
    values = {"description": problem.description}
    if plan.stage in (Stage.CODE, Stage.TESTS, Stage.CODE_TDD):
        if not plan.requirements_context:
            raise MissingContext(f"stage {plan.stage.value} needs generated requirements context")
        values["requirements"] = plan.requirements_context
    if plan.stage is Stage.CODE_TDD:
        if not plan.tests_context:
            raise MissingContext("stage code_tdd needs generated tests context")
        values["tests"] = plan.tests_context
    return values


def build_prompt(plan: PromptPlan, problem: Problem, templates: TemplateSet | None = None) -> str:
    """Assemble the stage prompt: example blocks, test-problem block, instruction.

    Pure function of its inputs; identical inputs give a byte-identical prompt.
    """
    templates = templates or default_templates()
    blocks = [
        render_template(templates.example[plan.stage], _example_values(plan.stage, ex)).strip("\n")
        for ex in plan.examples
    ]
    query = render_template(templates.query[plan.stage], _query_values(plan, problem)).strip("\n")
    tail: list[str] = [query]
    if plan.instruction_preamble:
        tail.append(plan.instruction_preamble.strip("\n"))
    tail.append(plan.instruction())
    if plan.preference_instruction:
        tail.append(plan.preference_instruction.strip("\n"))
    blocks.append("\n".join(tail))
    return "\n\n".join(blocks)


def preference_sentence(targets: frozenset[Category] | set[Category]) -> str:
    ordered = [c for c in _NFR_ORDER if c in targets]
    names = [_NFR_NAMES[c] for c in ordered]
    if len(names) == 1:
        subject = f"{names[0]} requirement"
    else:
        subject = ", ".join(names[:-1]) + f" and {names[-1]} requirements"
    return f"Consider the {subject} to be the most important."


def apply_preference(plan: PromptPlan, mode: str, targets: set[Category] | frozenset[Category]) -> PromptPlan:
    """Apply a preference over NFR categories to a prompt plan.

    ``instruction`` appends a priority sentence naming the targets;
    ``plug_and_play`` filters the NFR sections of every example's
    requirements (and of the generated-requirements context) down to the
    targets, dropping the others.
    """
    targets = frozenset(targets)
    if not targets <= NFR_CATEGORIES:
        bad = sorted(c.value for c in targets - NFR_CATEGORIES)
        raise ValueError(f"preference targets must be NFR categories, got {bad}")
    if mode == "instruction":
        if not targets:
            return plan
        return replace(plan, preference_instruction=preference_sentence(targets))
    if mode == "plug_and_play":
        if not targets:
            raise EmptyTargets("plug-and-play preference needs at least one target category")
        keep = set(targets)
        examples = tuple(
            replace(ex, requirements=filter_nfr_sections(ex.requirements, keep))
            for ex in plan.examples
        )
        requirements_context = plan.requirements_context
        if requirements_context is not None:
            requirements_context = filter_nfr_sections(requirements_context, keep)
        return replace(
            plan,
            examples=examples,
            requirements_context=requirements_context,
            nfr_subset=targets,
        )
    raise ValueError(f"unknown preference mode: {mode!r}")


_NFR_INSTRUCTION_BLOCK = """\
# Code must satisfy not only functional requirements but also the following non-functional requirements.
# Non-functional Requirements
## Performance: Pertains to time-centric aspects such as algorithmic time complexity or stipulated timeout conditions.
## Robustness: Ensures that code is resilient to invalid inputs.
## Maintainability: Considers factors that contribute to the ease of maintenance.
## Reliability: Ensures that code can handle errors gracefully without causing system failures over an extended period."""


def build_nfr_instruction_block() -> str:
    """Fixed paragraph spelling out the four NFRs, for optional prepending."""
    return _NFR_INSTRUCTION_BLOCK


# --- in-context example loading ------------------------------------------------

_EXAMPLE_FILES = {
    "description": "description.txt",
    "requirements": "requirements.txt",
    "code": "code.txt",
    "tests": "tests.txt",
    "cot_plan": "cot_plan.txt",
}


def load_icl_example(path: Path) -> IclExample:
    """Load one example directory (description.txt, requirements.txt, ...)."""
    fields: dict[str, str | None] = {}
    for name, filename in _EXAMPLE_FILES.items():
        f = path / filename
        fields[name] = f.read_text(encoding="utf-8") if f.exists() else None
    if fields["description"] is None or fields["requirements"] is None:
        raise MissingContext(f"example at {path} needs description.txt and requirements.txt")
    return IclExample(**fields)  # type: ignore[arg-type]


def load_icl_examples(refs: tuple[str, ...] | list[str]) -> tuple[IclExample, ...]:
    """Resolve example references: ``builtin:<name>`` or a directory path."""
    out = []
    for ref in refs:
        if ref.startswith("builtin:"):
            name = ref.split(":", 1)[1]
            root = resources.files("reqcode").joinpath(f"data/examples/{name}")
            with resources.as_file(root) as p:
                out.append(load_icl_example(Path(p)))
        else:
            out.append(load_icl_example(Path(ref)))
    return tuple(out)
