from __future__ import annotations

import pytest

from reqcode.errors import UnknownCategory
from reqcode.model import (
    Category,
    GeneratedTest,
    Mode,
    Problem,
    RequirementSet,
    ResourceLimits,
    TestKind,
    Verdict,
    VerdictMatrix,
    VerdictStatus,
    normalize_category,
    validate_problem,
)


@pytest.mark.parametrize(
    "label, expected",
    [
        ("## Edge Cases", Category.FR_EDGE),
        ("## Performance Requirements", Category.NFR_TIME),
        ("### Robustness", Category.NFR_ROBUSTNESS),
        ("## General Cases", Category.FR_GENERAL),
        ("general", Category.FR_GENERAL),
        ("  EDGE CASES  ", Category.FR_EDGE),
        ("### Reliability", Category.NFR_RELIABILITY),
        ("## Maintainability", Category.NFR_MAINTAINABILITY),
        ("Time Perf.", Category.NFR_TIME),
        ("fr_general", Category.FR_GENERAL),
        ("## Input-output Conditions", Category.FR_GENERAL),
        ("## Expected Behavior", Category.FR_GENERAL),
    ],
)
def test_normalize_category(label, expected):
    assert normalize_category(label) is expected


def test_normalize_category_rejects_unknown():
    with pytest.raises(UnknownCategory):
        normalize_category("## Something Else Entirely")


def test_category_set_is_closed():
    assert {c.value for c in Category} == {
        "fr_general",
        "fr_edge",
        "nfr_time",
        "nfr_robustness",
        "nfr_maintainability",
        "nfr_reliability",
    }


def _gt(test_id="t1", category=Category.FR_GENERAL, kind=TestKind.ASSERTION, **kw):
    if kind is TestKind.ASSERTION and "assertion_code" not in kw:
        kw["assertion_code"] = "assert True"
    return GeneratedTest(test_id=test_id, category=category, kind=kind, **kw)


def test_validate_problem_well_formed():
    p = Problem(
        task_id="t/1",
        mode=Mode.FUNCTION,
        description="desc",
        entry_point="f",
        gt_tests=(_gt(),),
    )
    assert validate_problem(p) == []


def test_validate_problem_missing_entry_point():
    p = Problem(task_id="t/1", mode=Mode.FUNCTION, description="desc")
    assert "entry_point required" in validate_problem(p)


def test_validate_problem_duplicate_test_ids():
    p = Problem(
        task_id="t/1",
        mode=Mode.FUNCTION,
        description="desc",
        entry_point="f",
        gt_tests=(_gt("t3"), _gt("t3")),
    )
    assert "duplicate test_id: t3" in validate_problem(p)


def test_resource_limit_defaults_per_mode():
    assert ResourceLimits.default_for(Mode.FUNCTION).timeout_s == 5.0
    assert ResourceLimits.default_for(Mode.STDIO).timeout_s == 2.0
    assert ResourceLimits.default_for(Mode.FUNCTION).memory_mb == 256


def test_resource_limits_must_be_positive():
    with pytest.raises(ValueError):
        ResourceLimits(timeout_s=0)
    with pytest.raises(ValueError):
        ResourceLimits(timeout_s=1.0, memory_mb=0)


def test_cc_threshold_enforces_category():
    with pytest.raises(ValueError):
        GeneratedTest(
            test_id="x", category=Category.FR_EDGE, kind=TestKind.CC_THRESHOLD, cc_limit=10
        )


def test_non_standard_cc_limit_is_accepted_with_warning(caplog):
    import logging

    with caplog.at_level(logging.WARNING):
        t = GeneratedTest(
            test_id="x",
            category=Category.NFR_MAINTAINABILITY,
            kind=TestKind.CC_THRESHOLD,
            cc_limit=7,
        )
    assert t.cc_limit == 7
    assert any("non-standard cc_limit" in r.message for r in caplog.records)


def test_reliability_marker_carries_no_payload():
    with pytest.raises(ValueError):
        GeneratedTest(
            test_id="x",
            category=Category.NFR_RELIABILITY,
            kind=TestKind.RELIABILITY_MARKER,
            assertion_code="assert True",
        )


def test_requirement_set_raw_invariant():
    with pytest.raises(ValueError):
        RequirementSet(edge_cases=("x",), raw="")
    rs = RequirementSet(edge_cases=("x",), raw="doc")
    assert rs.edge_cases == ("x",)


def test_verdict_pass_property():
    assert Verdict("t", VerdictStatus.PASS).passed
    for status in (VerdictStatus.FAIL, VerdictStatus.ERROR, VerdictStatus.TIMEOUT):
        assert not Verdict("t", status).passed


def test_matrix_validation_catches_ragged_rows():
    m = VerdictMatrix.from_dict(
        {
            0: [Verdict("a", VerdictStatus.PASS), Verdict("b", VerdictStatus.FAIL)],
            1: [Verdict("a", VerdictStatus.PASS)],
        }
    )
    assert any("rectangular" in msg for msg in m.validate())
    ok = VerdictMatrix.from_dict(
        {
            0: [Verdict("a", VerdictStatus.PASS)],
            1: [Verdict("a", VerdictStatus.ERROR)],
        }
    )
    assert ok.validate() == []
    assert ok.sample_indexes() == (0, 1)
