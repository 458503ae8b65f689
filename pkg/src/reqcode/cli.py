"""Command-line entry point.

Exit codes: 0 success, 2 config error, 3 provider error, 4 runner error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import (
    BudgetExceeded,
    ConfigError,
    InvalidRequest,
    MissingFixture,
    ProviderUnavailable,
    RunnerUnavailable,
    SchemaError,
)
from .dataset import load_dataset
from .harness import (
    RECORD_FILENAME,
    RunConfig,
    RunRecord,
    build_runner,
    qc_filter_fr_tests,
    run_pipeline,
    run_single_stage,
)
from .model import FR_CATEGORIES
from .parsing import parse_test_doc
from .prompts import Stage
from .report import emit_report, render_text_report, build_report

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PROVIDER = 3
EXIT_RUNNER = 4

_PROVIDER_ERRORS = (ProviderUnavailable, InvalidRequest, BudgetExceeded, MissingFixture)
_CONFIG_ERRORS = (ConfigError, SchemaError, FileNotFoundError)


def _add_config_arg(parser: argparse.ArgumentParser):
    parser.add_argument("--config", required=True, help="path to the JSON run config")


def _add_override_args(parser: argparse.ArgumentParser):
    parser.add_argument("--dataset", help="override the dataset path")
    parser.add_argument("--out-dir", help="override the output directory")
    parser.add_argument("--n", type=int, help="override the number of code samples")
    parser.add_argument("--k", type=int, nargs="+", help="override the Pass@k values")
    parser.add_argument("--parallelism", type=int, help="override worker parallelism")
    parser.add_argument("--seed-label", help="override the run label")


def _apply_overrides(cfg, args):
    import dataclasses

    updates = {}
    if args.dataset:
        updates["dataset"] = args.dataset
    if args.out_dir:
        updates["out_dir"] = args.out_dir
    if args.n:
        updates["sampling"] = dataclasses.replace(cfg.sampling, n=args.n)
    if args.k:
        updates["k_values"] = tuple(args.k)
    if args.parallelism:
        updates["parallelism"] = args.parallelism
    if args.seed_label:
        updates["seed_label"] = args.seed_label
    return dataclasses.replace(cfg, **updates) if updates else cfg


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reqcode",
        description="Requirements-aware code generation, execution, and ranking harness.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="full pipeline: generate, execute, score, report")
    _add_config_arg(run_p)
    _add_override_args(run_p)

    exec_p = sub.add_parser("exec", help="re-score a cached run without provider calls")
    _add_config_arg(exec_p)
    _add_override_args(exec_p)

    for stage_cmd, stage in (
        ("gen-reqs", Stage.REQUIREMENTS),
        ("gen-code", Stage.CODE),
        ("gen-tests", Stage.TESTS),
    ):
        p = sub.add_parser(stage_cmd, help=f"run only the {stage.value} stage (cached)")
        _add_config_arg(p)
        p.set_defaults(stage=stage)

    qc_p = sub.add_parser("qc-tests", help="keep only generated FR tests the canonical solution passes")
    _add_config_arg(qc_p)

    rep_p = sub.add_parser("report", help="re-emit reports from a saved run record")
    rep_p.add_argument("--record", required=True, help="path to run_record.json")
    rep_p.add_argument("--out", default=None, help="output directory (default: record directory)")
    return parser


def _cmd_run(args) -> int:
    cfg = _apply_overrides(RunConfig.from_file(args.config), args)
    record = run_pipeline(cfg, offline=(args.command == "exec"))
    if record.skipped and not record.problems:
        reasons = "; ".join(s["reason"] for s in record.skipped[:3])
        raise ProviderUnavailable(f"every problem was skipped ({reasons})")
    paths = emit_report(record, cfg.out_dir)
    sys.stdout.write(render_text_report(build_report(record)))
    for kind, path in sorted(paths.items()):
        print(f"{kind} report: {path}")
    print(f"run record: {Path(cfg.out_dir) / RECORD_FILENAME}")
    return EXIT_OK


def _cmd_stage(args) -> int:
    cfg = RunConfig.from_file(args.config)
    produced = run_single_stage(cfg, args.stage)
    for task_id, texts in produced.items():
        print(f"{task_id}: {len(texts)} completion(s) cached")
    return EXIT_OK


def _cmd_qc(args) -> int:
    cfg = RunConfig.from_file(args.config)
    problems = {p.task_id: p for p in load_dataset(cfg.dataset)}
    docs = run_single_stage(cfg, Stage.TESTS)
    results = {}
    with build_runner(cfg.runner, cfg.parallelism) as runner:
        for task_id, texts in docs.items():
            problem = problems[task_id]
            if not problem.canonical_solution:
                print(f"{task_id}: skipped (no canonical solution)")
                continue
            parsed = parse_test_doc(texts[0], problem.mode)
            fr = [t for t in parsed.tests if t.category in FR_CATEGORIES]
            qc = qc_filter_fr_tests(problem, fr, runner)
            results[task_id] = {
                "kept": [t.test_id for t in qc.kept],
                "discarded": qc.discard_log(),
            }
            print(f"{task_id}: kept {len(qc.kept)}/{len(fr)} FR tests")
    out = Path(cfg.out_dir) / "qc_tests.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(results, sort_keys=True, indent=1), encoding="utf-8")
    print(f"qc report: {out}")
    return EXIT_OK


def _cmd_report(args) -> int:
    record_path = Path(args.record)
    record = RunRecord.load(record_path)
    out_dir = Path(args.out) if args.out else record_path.parent
    paths = emit_report(record, out_dir)
    sys.stdout.write(render_text_report(build_report(record)))
    for kind, path in sorted(paths.items()):
        print(f"{kind} report: {path}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_arg_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        if args.command in ("run", "exec"):
            return _cmd_run(args)
        if args.command in ("gen-reqs", "gen-code", "gen-tests"):
            return _cmd_stage(args)
        if args.command == "qc-tests":
            return _cmd_qc(args)
        if args.command == "report":
            return _cmd_report(args)
        raise AssertionError(f"unhandled command {args.command}")
    except _CONFIG_ERRORS as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _PROVIDER_ERRORS as exc:
        print(f"provider error: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    except RunnerUnavailable as exc:
        print(f"runner error: {exc}", file=sys.stderr)
        return EXIT_RUNNER


if __name__ == "__main__":
    sys.exit(main())
