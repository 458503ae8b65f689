from __future__ import annotations

import itertools
import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reqcode.errors import DomainError, EmptyPool, MissingCategoryTests
from reqcode.model import Category, Verdict, VerdictStatus
from reqcode.rank import (
    Normalization,
    WeightProfile,
    candidates_passing_category,
    category_pass_at_k,
    filter_top_k,
    filtered_pass_at_k,
    pass_at_k,
    score_candidate,
)


def pass_at_k_by_enumeration(n: int, c: int, k: int) -> float:
    """Independent oracle: enumerate every k-subset and count the hits."""
    correct = set(range(c))
    subsets = list(itertools.combinations(range(n), k))
    hits = sum(1 for s in subsets if correct & set(s))
    return hits / len(subsets)


def _verdict(test_id: str, ok: bool) -> Verdict:
    return Verdict(test_id, VerdictStatus.PASS if ok else VerdictStatus.FAIL)


# --- pass_at_k -------------------------------------------------------------------


@pytest.mark.parametrize(
    "n,c,k,expected",
    [
        (10, 10, 1, 1.0),
        (10, 0, 5, 0.0),
        (1, 1, 1, 1.0),
        (1, 0, 1, 0.0),
    ],
)
def test_pass_at_k_trivial_points(n, c, k, expected):
    assert pass_at_k(n, c, k) == expected


def test_pass_at_k_matches_closed_form():
    # 1 - C(7,2)/C(10,2) = 8/15; verified against full subset enumeration
    expected = 1 - math.comb(7, 2) / math.comb(10, 2)
    assert pass_at_k(10, 3, 2) == pytest.approx(expected, abs=1e-15)
    assert pass_at_k(10, 3, 2) == pytest.approx(pass_at_k_by_enumeration(10, 3, 2), abs=1e-12)
    assert pass_at_k(10, 3, 2) == pytest.approx(8 / 15, abs=1e-15)


def test_pass_at_k_domain_errors():
    for n, c, k in ((10, 11, 1), (10, -1, 1), (10, 5, 0), (10, 5, 11)):
        with pytest.raises(DomainError):
            pass_at_k(n, c, k)


def test_pass_at_k_monotone_and_boundary():
    for n in range(1, 9):
        for c in range(n + 1):
            values = [pass_at_k(n, c, k) for k in range(1, n + 1)]
            assert values == sorted(values)  # nondecreasing in k
            assert pass_at_k(n, c, n) == (1.0 if c > 0 else 0.0)
        for k in range(1, n + 1):
            values = [pass_at_k(n, c, k) for c in range(n + 1)]
            assert values == sorted(values)  # nondecreasing in c


# --- scoring ---------------------------------------------------------------------

CATS = {
    "g1": Category.FR_GENERAL,
    "g2": Category.FR_GENERAL,
    "g3": Category.FR_GENERAL,
    "e1": Category.FR_EDGE,
    "e2": Category.FR_EDGE,
    "rel": Category.NFR_RELIABILITY,
}


def test_score_all_pass_equals_category_count():
    row = [_verdict(t, True) for t in CATS]
    assert score_candidate(row, CATS) == 3.0  # three categories present


def test_score_mixed_categories():
    row = [
        _verdict("g1", True),
        _verdict("g2", True),
        _verdict("g3", True),
        _verdict("e1", False),
        _verdict("e2", False),
    ]
    cats = {k: CATS[k] for k in ("g1", "g2", "g3", "e1", "e2")}
    assert score_candidate(row, cats) == 1.0  # 3/3 general + 0/2 edge


def test_score_linear_in_weights():
    row = [_verdict("g1", True), _verdict("e1", False), _verdict("e2", True)]
    cats = {k: CATS[k] for k in ("g1", "e1", "e2")}
    base = score_candidate(row, cats, WeightProfile())
    doubled = score_candidate(row, cats, WeightProfile().scaled(2.0))
    assert doubled == pytest.approx(2 * base)


def test_score_per_test_normalization():
    row = [_verdict("g1", True), _verdict("g2", True), _verdict("e1", True)]
    cats = {k: CATS[k] for k in ("g1", "g2", "e1")}
    profile = WeightProfile(normalization=Normalization.PER_TEST)
    assert score_candidate(row, cats, profile) == 3.0


def test_score_bounded_by_total_weight():
    row = [_verdict(t, True) for t in CATS]
    profile = WeightProfile()
    total = sum(profile.weights[c] for c in {CATS[t] for t in CATS})
    assert 0.0 <= score_candidate(row, CATS, profile) <= total


def test_weight_profile_validation():
    with pytest.raises(ValueError):
        WeightProfile(weights={c: 0.0 for c in Category})
    with pytest.raises(ValueError):
        WeightProfile(weights={Category.FR_EDGE: -1.0})


# --- filtering -------------------------------------------------------------------


def test_filter_top_k_tie_break():
    assert filter_top_k([(0, 2.0), (1, 3.0), (2, 3.0)], 2) == [1, 2]


def test_filter_top_k_k_exceeds_pool():
    assert filter_top_k([(0, 1.0), (1, 2.0)], 10) == [1, 0]


def test_filter_top_k_empty_pool():
    with pytest.raises(EmptyPool):
        filter_top_k([], 1)


def test_targeted_filtering_depends_only_on_target_verdicts():
    # selection with robustness-only weights ignores every other category
    cats = {"r1": Category.NFR_ROBUSTNESS, "g1": Category.FR_GENERAL}
    profile = WeightProfile.only([Category.NFR_ROBUSTNESS])
    rows = {
        0: [_verdict("r1", False), _verdict("g1", True)],
        1: [_verdict("r1", True), _verdict("g1", False)],
    }
    scores = [(i, score_candidate(row, cats, profile)) for i, row in rows.items()]
    assert filter_top_k(scores, 1) == [1]


def test_weight_scaling_argmax_invariance():
    rng = random.Random(1234)
    for _ in range(100):
        n_tests = rng.randint(1, 6)
        cats = {f"t{j}": rng.choice(list(Category)) for j in range(n_tests)}
        rows = {
            i: [_verdict(t, rng.random() < 0.5) for t in cats] for i in range(6)
        }
        weights = {c: rng.uniform(0.1, 3.0) for c in Category}
        base = WeightProfile(weights=weights)
        scaled = base.scaled(7.3)
        s1 = [(i, score_candidate(row, cats, base)) for i, row in rows.items()]
        s2 = [(i, score_candidate(row, cats, scaled)) for i, row in rows.items()]
        assert filter_top_k(s1, 3) == filter_top_k(s2, 3)


# --- filtered / category pass@k ----------------------------------------------------


def test_filtered_pass_at_one_picks_the_winner():
    scores = [(0, 1.0), (1, 5.0), (2, 3.0)]
    gt = {0: False, 1: True, 2: False}
    assert filtered_pass_at_k(scores, gt, 1) == 1


def test_filtered_pass_zero_when_nothing_passes():
    scores = [(0, 1.0), (1, 5.0)]
    gt = {0: False, 1: False}
    for k in (1, 2):
        assert filtered_pass_at_k(scores, gt, k) == 0


def test_filtered_pass_identical_pool_degenerates():
    scores = [(i, 2.0) for i in range(4)]
    gt_pass = {i: True for i in range(4)}
    gt_fail = {i: False for i in range(4)}
    assert filtered_pass_at_k(scores, gt_pass, 1) == 1
    assert filtered_pass_at_k(scores, gt_fail, 1) == 0


def test_filtered_pass_requires_gt_for_selected():
    with pytest.raises(DomainError):
        filtered_pass_at_k([(0, 1.0)], {}, 1)


def test_oracle_filtering_always_finds_a_passer():
    # when scores equal the ground-truth indicator, filtered pass@1 is 1 iff c >= 1
    rng = random.Random(7)
    for _ in range(50):
        n = rng.randint(1, 10)
        gt = {i: rng.random() < 0.4 for i in range(n)}
        scores = [(i, 1.0 if gt[i] else 0.0) for i in range(n)]
        expected = 1 if any(gt.values()) else 0
        assert filtered_pass_at_k(scores, gt, 1) == expected


def _gt_rows():
    cats = {
        "g1": Category.FR_GENERAL,
        "t1": Category.NFR_TIME,
        "m1": Category.NFR_MAINTAINABILITY,
    }
    rows = {
        0: [_verdict("g1", True), _verdict("t1", True), _verdict("m1", True)],
        1: [_verdict("g1", True), _verdict("t1", True), _verdict("m1", False)],
        2: [
            Verdict("g1", VerdictStatus.ERROR),
            _verdict("t1", False),
            _verdict("m1", True),
        ],
    }
    return rows, cats


def test_candidate_passing_all_counts_toward_every_category():
    rows, cats = _gt_rows()
    for cat in (Category.NFR_TIME, Category.NFR_MAINTAINABILITY, None):
        assert 0 in candidates_passing_category(rows, cats, cat)


def test_cc_only_failure_excluded_from_maintainability_and_all():
    rows, cats = _gt_rows()
    maint = candidates_passing_category(rows, cats, Category.NFR_MAINTAINABILITY)
    assert 1 not in maint
    assert 1 in candidates_passing_category(rows, cats, Category.NFR_TIME)
    assert 1 in candidates_passing_category(rows, cats, Category.NFR_RELIABILITY)
    assert 1 not in candidates_passing_category(rows, cats, None)


def test_reliability_is_derived_from_errors():
    rows, cats = _gt_rows()
    reliable = candidates_passing_category(rows, cats, Category.NFR_RELIABILITY)
    assert reliable == {0, 1}  # candidate 2 raised


def test_missing_category_reported_not_fabricated():
    rows, cats = _gt_rows()
    with pytest.raises(MissingCategoryTests):
        candidates_passing_category(rows, cats, Category.NFR_ROBUSTNESS)


def test_category_pass_at_k_fraction():
    # 4 of 10 candidates pass the robustness tests; k=1
    cats = {"r1": Category.NFR_ROBUSTNESS}
    rows = {i: [_verdict("r1", i < 4)] for i in range(10)}
    got = category_pass_at_k(rows, cats, Category.NFR_ROBUSTNESS, [1])
    assert got[1] == pytest.approx(pass_at_k_by_enumeration(10, 4, 1), abs=1e-12)
    assert got[1] == pytest.approx(0.4, abs=1e-12)


# --- property-based spot checks ------------------------------------------------------


@given(
    n=st.integers(1, 30),
    data=st.data(),
)
@settings(max_examples=80, deadline=None)
def test_pass_at_k_stays_in_unit_interval(n, data):
    c = data.draw(st.integers(0, n))
    k = data.draw(st.integers(1, n))
    value = pass_at_k(n, c, k)
    assert 0.0 <= value <= 1.0
