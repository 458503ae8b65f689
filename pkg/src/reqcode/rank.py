"""Candidate scoring, top-k filtering, and Pass@k estimation."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import DomainError, EmptyPool, MissingCategoryTests
from .model import Category, Verdict, VerdictStatus


class Normalization(str, Enum):
    PER_TEST = "per_test"
    PER_CATEGORY = "per_category"


def _default_weights() -> dict[Category, float]:
    return {c: 1.0 for c in Category}


@dataclass(frozen=True)
class WeightProfile:
    """Per-category weights plus the normalization rule.

    ``per_category`` (the default) scores each category by its pass fraction
    so a category with many tests cannot dominate; ``per_test`` sums the
    weighted per-test outcomes directly.
    """

    weights: Mapping[Category, float] = field(default_factory=_default_weights)
    normalization: Normalization = Normalization.PER_CATEGORY

    def __post_init__(self):
        full = {c: 1.0 for c in Category}
        full.update({Category(k): float(v) for k, v in self.weights.items()})
        if any(w < 0 for w in full.values()):
            raise ValueError("weights must be >= 0")
        if not any(w > 0 for w in full.values()):
            raise ValueError("at least one weight must be > 0")
        object.__setattr__(self, "weights", full)

    @classmethod
    def only(cls, categories: Iterable[Category], normalization=Normalization.PER_CATEGORY):
        """Weights concentrated on the given categories; everything else 0."""
        keep = set(categories)
        return cls(
            weights={c: (1.0 if c in keep else 0.0) for c in Category},
            normalization=normalization,
        )

    def weight_for(self, category: Category) -> float:
        return self.weights[category]

    def scaled(self, factor: float) -> "WeightProfile":
        return WeightProfile(
            weights={c: w * factor for c, w in self.weights.items()},
            normalization=self.normalization,
        )


def score_candidate(
    row: Sequence[Verdict],
    categories: Mapping[str, Category],
    weights: WeightProfile | None = None,
) -> float:
    """Weighted requirement-compliance score of one candidate row.

    ``categories`` maps each test_id in the row to its category; the derived
    reliability verdict participates as one more category with its single
    verdict.
    """
    weights = weights or WeightProfile()
    if weights.normalization is Normalization.PER_TEST:
        return sum(
            weights.weight_for(categories[v.test_id]) * (1.0 if v.passed else 0.0) for v in row
        )
    passes: dict[Category, int] = {}
    totals: dict[Category, int] = {}
    for v in row:
        cat = categories[v.test_id]
        totals[cat] = totals.get(cat, 0) + 1
        if v.passed:
            passes[cat] = passes.get(cat, 0) + 1
    return sum(
        weights.weight_for(cat) * (passes.get(cat, 0) / max(1, total))
        for cat, total in totals.items()
    )


def filter_top_k(scores: Sequence[tuple[int, float]], k: int) -> list[int]:
    """Indices of the top-k scores, ties broken by ascending sample_index."""
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    if not scores:
        raise EmptyPool("no candidates to filter")
    ranked = sorted(scores, key=lambda pair: (-pair[1], pair[0]))
    return [idx for idx, _ in ranked[: min(k, len(ranked))]]


def pass_at_k(n: int, c: int, k: int) -> float:
    """Unbiased estimate that at least one of k draws from n is correct.

    Computed as 1 - prod_{i=n-c+1..n} (1 - k/i) in exact arithmetic, which
    equals the binomial expression 1 - C(n-c, k)/C(n, k) exactly.
    """
    if not (0 <= c <= n):
        raise DomainError(f"need 0 <= c <= n, got c={c} n={n}")
    if not (1 <= k <= n):
        raise DomainError(f"need 1 <= k <= n, got k={k} n={n}")
    prod = Fraction(1)
    for i in range(n - c + 1, n + 1):
        prod *= 1 - Fraction(k, i)
        if prod == 0:
            break
    return float(1 - prod)


def filtered_pass_at_k(
    scores: Sequence[tuple[int, float]],
    gt_passed: Mapping[int, bool],
    k: int,
) -> int:
    """1 iff a ground-truth-passing candidate exists among the k filtered samples."""
    selected = filter_top_k(scores, k)
    missing = [i for i in selected if i not in gt_passed]
    if missing:
        raise DomainError(f"ground-truth verdicts missing for candidates {missing}")
    return int(any(gt_passed[i] for i in selected))


def candidates_passing_category(
    rows: Mapping[int, Sequence[Verdict]],
    categories: Mapping[str, Category],
    category: Category | None,
) -> set[int]:
    """Sample indexes whose row passes the given ground-truth category.

    A candidate passes category X iff every ground-truth test of X passes;
    reliability is derived (no runtime error across the whole row). With
    ``category=None`` ("All") a candidate must pass every test of every
    category, reliability included.
    """
    if category is Category.NFR_RELIABILITY or category is None:
        reliable = {
            idx
            for idx, row in rows.items()
            if not any(v.status is VerdictStatus.ERROR for v in row)
        }
        if category is Category.NFR_RELIABILITY:
            if not categories:
                raise MissingCategoryTests("no ground-truth tests to derive reliability from")
            return reliable
    relevant = [tid for tid, cat in categories.items() if category is None or cat == category]
    if not relevant and category is not None:
        raise MissingCategoryTests(f"dataset has no ground-truth tests for {category.value}")
    passing = set()
    for idx, row in rows.items():
        verdicts = {v.test_id: v for v in row}
        if all(tid in verdicts and verdicts[tid].passed for tid in relevant):
            passing.add(idx)
    if category is None:
        passing &= reliable
    return passing


def category_pass_at_k(
    rows: Mapping[int, Sequence[Verdict]],
    categories: Mapping[str, Category],
    category: Category | None,
    k_values: Sequence[int],
) -> dict[int, float]:
    """Per-k Pass@k for one problem against one ground-truth category."""
    n = len(rows)
    if n == 0:
        raise EmptyPool("no candidate rows")
    c = len(candidates_passing_category(rows, categories, category))
    return {k: pass_at_k(n, c, k) for k in k_values}
