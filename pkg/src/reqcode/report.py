"""Report emission: canonical JSON plus a plain-text table.

The JSON report is canonicalized (sorted keys, no wall-clock fields), so two
runs over identical inputs produce byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

from .errors import EmptyRun
from .gateway import count_generated_tests
from .harness import RunRecord
from .model import Category
from .rank import pass_at_k

REPORT_CATEGORIES = (
    ("all", "All"),
    (Category.NFR_TIME.value, "Time Perf."),
    (Category.NFR_ROBUSTNESS.value, "Robustness"),
    (Category.NFR_MAINTAINABILITY.value, "Maintainability"),
    (Category.NFR_RELIABILITY.value, "Reliability"),
)

ALL_COLUMN_NOTE = (
    "The 'all' column requires every ground-truth test of every category to pass, "
    "derived reliability included."
)


def _mean(values: list[float]) -> float | None:
    return sum(values) / len(values) if values else None


def build_report(record: RunRecord) -> dict:
    """Aggregate a run record into the report structure (no wall-clock data)."""
    k_values = [int(k) for k in record.config.get("k_values", [1])]
    problems = record.problems

    unfiltered: dict[str, float | None] = {}
    filtered: dict[str, float | None] = {}
    for k in k_values:
        uf = [
            pass_at_k(p["n"], p["c_gt"], min(k, p["n"]))
            for p in problems
            if p.get("c_gt") is not None and p["n"] >= 1
        ]
        unfiltered[str(k)] = _mean(uf)
        fl = [p["filtered"][str(k)] for p in problems if p["filtered"].get(str(k)) is not None]
        filtered[str(k)] = _mean([float(v) for v in fl])

    per_category: dict[str, dict[str, float | None]] = {}
    for cat_key, _label in REPORT_CATEGORIES:
        per_k: dict[str, float | None] = {}
        for k in k_values:
            vals = [
                pass_at_k(p["n"], p["category_c"][cat_key], min(k, p["n"]))
                for p in problems
                if p.get("category_c", {}).get(cat_key) is not None and p["n"] >= 1
            ]
            per_k[str(k)] = _mean(vals)
        per_category[cat_key] = per_k

    try:
        avg_tests = count_generated_tests(record)
    except EmptyRun:
        avg_tests = None

    return {
        "problems": len(problems),
        "skipped": len(record.skipped),
        "skipped_detail": record.skipped,
        "k_values": k_values,
        "pass_at_k": {"unfiltered": unfiltered, "filtered": filtered},
        "per_category_pass_at_k": per_category,
        "avg_generated_tests_per_problem": avg_tests,
        "notes": [ALL_COLUMN_NOTE],
        "per_problem": [
            {
                "task_id": p["task_id"],
                "n": p["n"],
                "c_gt": p.get("c_gt"),
                "ranking": p["ranking"],
                "scores": p["scores"],
                "filtered": p["filtered"],
                "category_c": p.get("category_c", {}),
                "gen_test_count": p["gen_test_count"],
                "infra_flagged": p.get("infra_flagged", False),
            }
            for p in problems
        ],
    }


def _fmt(value: float | None) -> str:
    return "   -  " if value is None else f"{value:6.4f}"


def render_text_report(report: dict) -> str:
    lines: list[str] = []
    if report["problems"] == 0:
        lines.append("== 0 problems: nothing was evaluated ==")
    lines.append(f"problems: {report['problems']}  skipped: {report['skipped']}")
    avg = report["avg_generated_tests_per_problem"]
    lines.append(
        "avg generated tests/problem: " + (f"{avg:.2f}" if avg is not None else "-")
    )
    lines.append("")
    ks = report["k_values"]
    header = "pass@k            " + "  ".join(f"k={k:<4d}" for k in ks)
    lines.append(header)
    for name, key in (("unfiltered", "unfiltered"), ("filtered", "filtered")):
        row = report["pass_at_k"][key]
        lines.append(f"  {name:<16}" + "  ".join(_fmt(row[str(k)]) for k in ks))
    lines.append("")
    lines.append("per-category pass@k (ground truth)")
    for cat_key, label in REPORT_CATEGORIES:
        row = report["per_category_pass_at_k"][cat_key]
        lines.append(f"  {label:<16}" + "  ".join(_fmt(row[str(k)]) for k in ks))
    lines.append("")
    for note in report["notes"]:
        lines.append(f"note: {note}")
    return "\n".join(lines) + "\n"


def emit_report(record: RunRecord, out_dir: Path | str, formats=("json", "txt")) -> dict[str, Path]:
    """Write report files with stable key ordering; returns the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = build_report(record)
    paths: dict[str, Path] = {}
    if "json" in formats:
        path = out_dir / "report.json"
        path.write_text(
            json.dumps(report, sort_keys=True, indent=1, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )
        paths["json"] = path
    if "txt" in formats:
        path = out_dir / "report.txt"
        path.write_text(render_text_report(report), encoding="utf-8")
        paths["txt"] = path
    return paths
