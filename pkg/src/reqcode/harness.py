"""Pipeline orchestration: dataset in, verdicts and rankings out.

A run walks each problem through requirements -> (code || tests) ->
parse -> substitute -> execute -> score -> filter. Stage completions are
cached on disk, so re-running with an identical configuration issues zero
provider calls, and the resulting RunRecord is replayable: it carries
everything needed to recompute reports without the provider.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from .dataset import load_dataset
from .errors import (
    BudgetExceeded,
    ConfigError,
    EmptyCode,
    InvalidRequest,
    MissingFixture,
    MissingGroundTruth,
    ProviderUnavailable,
    RunnerUnavailable,
)
from .gateway import (
    Budget,
    CompletionProvider,
    FixtureKey,
    MockProvider,
    OpenAIProvider,
    RateLimiter,
    SamplingConfig,
    Strategy,
)
from .model import (
    FR_CATEGORIES,
    Category,
    CodeCandidate,
    GeneratedTest,
    Problem,
    Provenance,
    VerdictMatrix,
)
from .orchestrate import (
    DEFAULT_RUNNER_CMD,
    RunnerClient,
    SubprocessRunnerPool,
    run_candidate,
    run_matrix,
    wire_test,
)
from .parsing import parse_requirements_doc, parse_test_doc, extract_code_block
from .prompts import (
    PromptPlan,
    Stage,
    apply_preference,
    build_nfr_instruction_block,
    build_prompt,
    load_icl_examples,
)
from .rank import (
    WeightProfile,
    Normalization,
    candidates_passing_category,
    filter_top_k,
    score_candidate,
)
from .errors import MissingCategoryTests
from .stub_runner import InProcessRunner

log = logging.getLogger(__name__)

RECORD_FILENAME = "run_record.json"
RECORD_SCHEMA_VERSION = 1


# --- configuration -------------------------------------------------------------


@dataclass(frozen=True)
class ProviderConfig:
    kind: str = "mock"  # "mock" | "openai"
    fixtures_dir: str | None = None
    model: str | None = None
    base_url: str | None = None
    fan_out: int = 4
    retry_cap: int = 3
    max_calls: int | None = None
    max_total_tokens: int | None = None
    min_request_interval_s: float = 0.0


@dataclass(frozen=True)
class RunnerSetup:
    kind: str = "stub"  # "stub" | "subprocess"
    cmd: tuple[str, ...] = ()


@dataclass(frozen=True)
class Preference:
    mode: str  # "instruction" | "plug_and_play"
    targets: tuple[str, ...]


@dataclass(frozen=True)
class RunConfig:
    dataset: str
    out_dir: str
    provider: ProviderConfig = ProviderConfig()
    sampling: SamplingConfig = SamplingConfig()
    stages: tuple[str, ...] = ("requirements", "code", "tests")
    weights: WeightProfile = field(default_factory=WeightProfile)
    preference: Preference | None = None
    k_values: tuple[int, ...] = (1,)
    parallelism: int = 1
    runner: RunnerSetup = RunnerSetup()
    seed_label: str = ""
    icl_examples: tuple[str, ...] = ("builtin:subarray",)
    nfr_instruction: bool = False
    qc_generated_tests: bool = False

    def __post_init__(self):
        for stage in self.stages:
            if stage not in {s.value for s in Stage}:
                raise ConfigError(f"unknown stage: {stage}")
        if "code" in self.stages and "code_tdd" in self.stages:
            raise ConfigError("stages code and code_tdd are mutually exclusive")
        bad_k = [k for k in self.k_values if k < 1 or k > self.sampling.n]
        if bad_k:
            raise ConfigError(f"k values must lie in [1, n={self.sampling.n}]: {bad_k}")
        if self.parallelism < 1:
            raise ConfigError("parallelism must be >= 1")
        if self.preference is not None and self.preference.mode not in (
            "instruction",
            "plug_and_play",
        ):
            raise ConfigError(f"unknown preference mode: {self.preference.mode}")

    @classmethod
    def from_dict(cls, raw: dict, base_dir: Path | None = None) -> "RunConfig":
        def resolve(p: str) -> str:
            path = Path(p)
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            return str(path)

        try:
            provider_raw = dict(raw.get("provider", {}))
            if provider_raw.get("fixtures_dir"):
                provider_raw["fixtures_dir"] = resolve(provider_raw["fixtures_dir"])
            sampling_raw = dict(raw.get("sampling", {}))
            if "strategy" in sampling_raw:
                sampling_raw["strategy"] = Strategy(sampling_raw["strategy"])
            if "stop" in sampling_raw:
                sampling_raw["stop"] = tuple(sampling_raw["stop"])
            weights_raw = dict(raw.get("weights", {}))
            weights = WeightProfile(
                weights={
                    Category(k): float(v) for k, v in weights_raw.get("weights", {}).items()
                },
                normalization=Normalization(weights_raw.get("normalization", "per_category")),
            )
            preference = None
            if raw.get("preference"):
                preference = Preference(
                    mode=raw["preference"]["mode"],
                    targets=tuple(raw["preference"].get("targets", ())),
                )
            runner_raw = dict(raw.get("runner", {}))
            return cls(
                dataset=resolve(raw["dataset"]),
                out_dir=resolve(raw["out_dir"]),
                provider=ProviderConfig(**provider_raw),
                sampling=SamplingConfig(**sampling_raw),
                stages=tuple(raw.get("stages", ("requirements", "code", "tests"))),
                weights=weights,
                preference=preference,
                k_values=tuple(raw.get("k_values", (1,))),
                parallelism=int(raw.get("parallelism", 1)),
                runner=RunnerSetup(
                    kind=runner_raw.get("kind", "stub"),
                    cmd=tuple(runner_raw.get("cmd", ())),
                ),
                seed_label=raw.get("seed_label", ""),
                icl_examples=tuple(
                    ref if ref.startswith("builtin:") else resolve(ref)
                    for ref in raw.get("icl_examples", ("builtin:subarray",))
                ),
                nfr_instruction=bool(raw.get("nfr_instruction", False)),
                qc_generated_tests=bool(raw.get("qc_generated_tests", False)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad run config: {exc}") from exc

    @classmethod
    def from_file(cls, path: Path | str) -> "RunConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(raw, base_dir=path.parent)

    def to_canonical_dict(self) -> dict:
        data = dataclasses.asdict(self)
        data["sampling"]["strategy"] = self.sampling.strategy.value
        data["sampling"]["stop"] = list(self.sampling.stop)
        data["weights"] = {
            "weights": {c.value: w for c, w in sorted(self.weights.weights.items())},
            "normalization": self.weights.normalization.value,
        }
        return data


def build_provider(cfg: ProviderConfig) -> CompletionProvider:
    if cfg.kind == "mock":
        if not cfg.fixtures_dir:
            raise ConfigError("mock provider needs fixtures_dir")
        return MockProvider(cfg.fixtures_dir)
    if cfg.kind == "openai":
        if not cfg.model:
            raise ConfigError("openai provider needs a model name")
        return OpenAIProvider(
            model=cfg.model,
            base_url=cfg.base_url,
            fan_out=cfg.fan_out,
            retry_cap=cfg.retry_cap,
            budget=Budget(max_calls=cfg.max_calls, max_total_tokens=cfg.max_total_tokens),
            rate_limiter=RateLimiter(cfg.min_request_interval_s),
        )
    raise ConfigError(f"unknown provider kind: {cfg.kind}")


def build_runner(setup: RunnerSetup, parallelism: int) -> RunnerClient:
    if setup.kind == "stub":
        return InProcessRunner()
    if setup.kind == "subprocess":
        cmd = setup.cmd or DEFAULT_RUNNER_CMD
        return SubprocessRunnerPool(cmd, size=parallelism)
    raise ConfigError(f"unknown runner kind: {setup.kind}")


# --- completion cache ----------------------------------------------------------


def _sha(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


class CompletionCache:
    """Per-(task, stage) completion store keyed by prompt and sampling hashes."""

    def __init__(self, root: Path):
        self.root = Path(root)

    def _path(self, task_id: str, stage: str) -> Path:
        return self.root / task_id / f"{stage}.json"

    def get(self, task_id: str, stage: str, prompt: str, scfg: SamplingConfig) -> list[str] | None:
        path = self._path(task_id, stage)
        if not path.exists():
            return None
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError):
            return None
        if data.get("prompt_sha") != _sha(prompt) or data.get("params_sha") != scfg.params_hash():
            return None
        texts = data.get("texts", [])
        if len(texts) != scfg.n:
            return None
        return list(texts)

    def put(self, task_id: str, stage: str, prompt: str, scfg: SamplingConfig, texts: list[str]):
        path = self._path(task_id, stage)
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = {
            "prompt_sha": _sha(prompt),
            "params_sha": scfg.params_hash(),
            "texts": list(texts),
        }
        path.write_text(json.dumps(payload, ensure_ascii=False), encoding="utf-8")


# --- run record ----------------------------------------------------------------


@dataclass
class RunRecord:
    """Replayable record of one pipeline run (primitive, JSON-stable fields)."""

    config: dict
    problems: list[dict] = field(default_factory=list)
    skipped: list[dict] = field(default_factory=list)
    provider_calls: int = 0
    schema_version: int = RECORD_SCHEMA_VERSION

    def generated_test_counts(self) -> list[int]:
        return [p["gen_test_count"] for p in self.problems]

    def to_json_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "config": self.config,
            "problems": self.problems,
            "skipped": self.skipped,
            "provider_calls": self.provider_calls,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "RunRecord":
        return cls(
            config=data["config"],
            problems=list(data.get("problems", [])),
            skipped=list(data.get("skipped", [])),
            provider_calls=int(data.get("provider_calls", 0)),
            schema_version=int(data.get("schema_version", RECORD_SCHEMA_VERSION)),
        )

    def save(self, path: Path):
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(
            json.dumps(self.to_json_dict(), sort_keys=True, ensure_ascii=False, indent=1),
            encoding="utf-8",
        )

    @classmethod
    def load(cls, path: Path | str) -> "RunRecord":
        return cls.from_json_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _verdicts_to_wire(verdicts) -> list[dict]:
    return [
        {"test_id": v.test_id, "status": v.status.value, "wall_ms": v.wall_ms, "message": v.message}
        for v in verdicts
    ]


def _matrix_to_wire(matrix: VerdictMatrix) -> dict:
    return {
        "rows": {str(idx): _verdicts_to_wire(row) for idx, row in matrix.rows},
        "skipped": list(matrix.skipped),
    }


# --- quality control -----------------------------------------------------------


@dataclass(frozen=True)
class QcResult:
    kept: tuple[GeneratedTest, ...]
    discarded: tuple[tuple[GeneratedTest, str], ...]  # (test, verdict status)

    def discard_log(self) -> list[str]:
        return [f"{t.test_id}: canonical solution verdict={status}" for t, status in self.discarded]


def qc_filter_fr_tests(problem: Problem, candidate_tests, runner: RunnerClient) -> QcResult:
    """Keep only candidate FR tests the canonical solution passes."""
    tests = list(candidate_tests)
    non_fr = [t.test_id for t in tests if t.category not in FR_CATEGORIES]
    if non_fr:
        raise ValueError(f"qc_filter_fr_tests takes FR tests only, got {non_fr}")
    if not problem.canonical_solution:
        raise MissingGroundTruth(f"{problem.task_id} has no canonical solution")
    if not tests:
        return QcResult(kept=(), discarded=())
    canonical = CodeCandidate(
        task_id=problem.task_id, sample_index=0, source=problem.canonical_solution
    )
    verdicts = run_candidate(canonical, tests, problem.effective_limits(), runner, problem.mode)
    kept = []
    discarded = []
    for test, verdict in zip(tests, verdicts):
        if verdict.passed:
            kept.append(test)
        else:
            discarded.append((test, verdict.status.value))
    return QcResult(kept=tuple(kept), discarded=tuple(discarded))


# --- pipeline ------------------------------------------------------------------

_PROVIDER_FAILURES = (ProviderUnavailable, InvalidRequest, BudgetExceeded, MissingFixture)


class _StageRunner:
    """Shared state for one pipeline run."""

    def __init__(self, cfg: RunConfig, provider: CompletionProvider | None):
        self.cfg = cfg
        self.provider = provider
        self.cache = CompletionCache(Path(cfg.out_dir) / "completions")
        self.examples = load_icl_examples(cfg.icl_examples)

    def completions(self, problem: Problem, stage: Stage, prompt: str, n: int) -> list[str]:
        scfg = replace(self.cfg.sampling, n=n)
        cached = self.cache.get(problem.task_id, stage.value, prompt, scfg)
        if cached is not None:
            return cached
        if stage.value not in self.cfg.stages:
            raise ConfigError(
                f"stage {stage.value} is disabled and no cached completions exist "
                f"for {problem.task_id}"
            )
        if self.provider is None:
            raise ConfigError(
                f"offline run: no cached {stage.value} completions for {problem.task_id}"
            )
        got = self.provider.complete(prompt, scfg, key=FixtureKey(problem.task_id, stage.value))
        texts = [c.text for c in got]
        self.cache.put(problem.task_id, stage.value, prompt, scfg, texts)
        return texts

    def plan_for(self, stage: Stage, requirements_context: str | None = None,
                 tests_context: str | None = None) -> PromptPlan:
        plan = PromptPlan(
            stage=stage,
            examples=self.examples,
            requirements_context=requirements_context,
            tests_context=tests_context,
            instruction_preamble=(
                build_nfr_instruction_block()
                if self.cfg.nfr_instruction and stage in (Stage.CODE, Stage.CODE_TDD)
                else None
            ),
        )
        if self.cfg.preference is not None:
            targets = {Category(t) for t in self.cfg.preference.targets}
            plan = apply_preference(plan, self.cfg.preference.mode, targets)
        return plan


def _gt_categories(problem: Problem) -> dict[str, str]:
    return {t.test_id: t.category.value for t in problem.gt_tests}


def _process_problem(state: _StageRunner, problem: Problem, runner: RunnerClient) -> dict:
    cfg = state.cfg
    timings: dict[str, int] = {}
    prompts: dict[str, str] = {}
    warnings: list[str] = []

    def timed(stage_name: str, fn):
        start = time.perf_counter()
        result = fn()
        timings[stage_name] = int((time.perf_counter() - start) * 1000)
        return result

    # Stage 1: requirements.
    req_plan = state.plan_for(Stage.REQUIREMENTS)
    req_prompt = build_prompt(req_plan, problem)
    prompts[Stage.REQUIREMENTS.value] = req_prompt
    req_doc = timed(
        "requirements", lambda: state.completions(problem, Stage.REQUIREMENTS, req_prompt, 1)
    )[0]
    requirements = parse_requirements_doc(req_doc)
    requirements_context = req_doc.strip("\n")

    # Stage 2a: tests (parallel branch).
    code_stage = Stage.CODE_TDD if "code_tdd" in cfg.stages else Stage.CODE
    tests_plan = state.plan_for(Stage.TESTS, requirements_context=requirements_context)
    tests_prompt = build_prompt(tests_plan, problem)
    prompts[Stage.TESTS.value] = tests_prompt
    test_doc = timed("tests", lambda: state.completions(problem, Stage.TESTS, tests_prompt, 1))[0]
    parsed_tests = parse_test_doc(test_doc, problem.mode)
    warnings.extend(parsed_tests.warnings)
    gen_tests = list(parsed_tests.tests)

    if cfg.qc_generated_tests and problem.canonical_solution:
        fr = [t for t in gen_tests if t.category in FR_CATEGORIES]
        rest = [t for t in gen_tests if t.category not in FR_CATEGORIES]
        qc = qc_filter_fr_tests(problem, fr, runner)
        warnings.extend(qc.discard_log())
        gen_tests = list(qc.kept) + rest

    # Stage 2b: code (n samples).
    code_plan = state.plan_for(
        code_stage,
        requirements_context=requirements_context,
        tests_context=test_doc.strip("\n") if code_stage is Stage.CODE_TDD else None,
    )
    code_prompt = build_prompt(code_plan, problem)
    prompts[code_stage.value] = code_prompt
    code_texts = timed(
        "code", lambda: state.completions(problem, code_stage, code_prompt, cfg.sampling.n)
    )
    provenance = Provenance(
        provider=state.provider.name if state.provider else "cache",
        params_hash=cfg.sampling.params_hash(),
    )
    candidates: list[CodeCandidate] = []
    for i, text in enumerate(code_texts):
        try:
            source = extract_code_block(text)
        except EmptyCode:
            warnings.append(f"sample {i}: completion held no code; candidate dropped")
            continue
        candidates.append(
            CodeCandidate(
                task_id=problem.task_id,
                sample_index=i,
                source=source,
                reasoning=text if text.strip() != source.strip() else None,
                provenance=provenance,
            )
        )
    if not candidates:
        raise EmptyCode(f"{problem.task_id}: no candidate completion contained code")

    # Stage 3: execute, score, filter.
    limits = problem.effective_limits()
    infra_flagged = False

    def run_or_salvage(tests) -> VerdictMatrix:
        nonlocal infra_flagged
        try:
            return run_matrix(candidates, tests, limits, runner, problem.mode, parallelism=1)
        except RunnerUnavailable as exc:
            if exc.partial is None or not exc.partial.rows:
                raise
            infra_flagged = True
            warnings.append(f"runner lost rows {list(exc.failed_rows)}: {exc}")
            return exc.partial

    gen_matrix = timed("execute_generated", lambda: run_or_salvage(gen_tests)) if gen_tests else VerdictMatrix()
    gen_categories = {t.test_id: t.category for t in gen_tests}

    scores: list[tuple[int, float]] = []
    if gen_tests:
        for idx, row in gen_matrix.rows:
            scores.append((idx, score_candidate(row, gen_categories, cfg.weights)))
    else:
        warnings.append("no generated tests parsed; scores default to 0")
        scores = [(c.sample_index, 0.0) for c in candidates]
    ranking = filter_top_k(scores, len(scores)) if scores else []

    gt_matrix = (
        timed("execute_gt", lambda: run_or_salvage(list(problem.gt_tests)))
        if problem.gt_tests
        else VerdictMatrix()
    )

    executed = [idx for idx, _ in gt_matrix.rows] if problem.gt_tests else [i for i, _ in scores]
    scored_ids = {idx for idx, _ in scores}
    usable = [idx for idx in executed if idx in scored_ids]

    gt_cats = {t.test_id: t.category for t in problem.gt_tests}
    fr_ids = [tid for tid, cat in gt_cats.items() if cat in FR_CATEGORIES]
    gt_passed: dict[int, bool] = {}
    category_c: dict[str, int | None] = {}
    c_gt = None
    if problem.gt_tests:
        rows = {idx: row for idx, row in gt_matrix.rows}
        for idx, row in rows.items():
            by_id = {v.test_id: v for v in row}
            gt_passed[idx] = bool(fr_ids) and all(
                tid in by_id and by_id[tid].passed for tid in fr_ids
            )
        c_gt = sum(1 for idx in usable if gt_passed.get(idx, False))
        for cat in (
            Category.NFR_TIME,
            Category.NFR_ROBUSTNESS,
            Category.NFR_MAINTAINABILITY,
            Category.NFR_RELIABILITY,
        ):
            try:
                passing = candidates_passing_category(rows, gt_cats, cat)
                category_c[cat.value] = len(passing & set(usable))
            except MissingCategoryTests:
                category_c[cat.value] = None
        try:
            passing_all = candidates_passing_category(rows, gt_cats, None)
            category_c["all"] = len(passing_all & set(usable))
        except MissingCategoryTests:
            category_c["all"] = None

    usable_scores = [(idx, s) for idx, s in scores if idx in usable] or scores
    filtered: dict[str, int | None] = {}
    for k in cfg.k_values:
        if problem.gt_tests and usable:
            filtered[str(k)] = int(
                any(gt_passed.get(idx, False) for idx in filter_top_k(usable_scores, k))
            )
        else:
            filtered[str(k)] = None

    return {
        "task_id": problem.task_id,
        "mode": problem.mode.value,
        "prompts": prompts,
        "completions": {
            "requirements": [req_doc],
            "tests": [test_doc],
            code_stage.value: list(code_texts),
        },
        "requirements_raw": requirements.raw,
        "requirement_buckets": {k: list(v) for k, v in requirements.buckets().items()},
        "generated_tests": [
            {**wire_test(t), "category": t.category.value, "comment": t.comment} for t in gen_tests
        ],
        "gen_test_count": len(gen_tests),
        "parse_warnings": warnings,
        "candidates": [
            {"sample_index": c.sample_index, "source": c.source} for c in candidates
        ],
        "gen_matrix": _matrix_to_wire(gen_matrix),
        "gt_matrix": _matrix_to_wire(gt_matrix),
        "gt_categories": {tid: cat.value for tid, cat in gt_cats.items()},
        "scores": [[idx, s] for idx, s in scores],
        "ranking": ranking,
        "n": len(usable),
        "c_gt": c_gt,
        "gt_passed": {str(i): bool(v) for i, v in gt_passed.items()},
        "category_c": category_c,
        "filtered": filtered,
        "infra_flagged": infra_flagged,
        "timings_ms": timings,
    }


def run_pipeline(cfg: RunConfig, offline: bool = False) -> RunRecord:
    """Execute the full pipeline over a dataset and persist the run record."""
    problems = load_dataset(cfg.dataset)
    provider = None if offline else build_provider(cfg.provider)
    state = _StageRunner(cfg, provider)
    record = RunRecord(config=cfg.to_canonical_dict())

    def work(problem: Problem):
        return _process_problem(state, problem, runner)

    results: dict[str, dict] = {}
    skipped: dict[str, str] = {}
    with build_runner(cfg.runner, cfg.parallelism) as runner:
        if cfg.parallelism > 1 and len(problems) > 1:
            with ThreadPoolExecutor(max_workers=cfg.parallelism) as executor:
                futures = {executor.submit(work, p): p for p in problems}
                for fut, problem in futures.items():
                    try:
                        results[problem.task_id] = fut.result()
                    except _PROVIDER_FAILURES + (EmptyCode,) as exc:
                        skipped[problem.task_id] = f"{type(exc).__name__}: {exc}"
        else:
            for problem in problems:
                try:
                    results[problem.task_id] = work(problem)
                except _PROVIDER_FAILURES + (EmptyCode,) as exc:
                    skipped[problem.task_id] = f"{type(exc).__name__}: {exc}"

    record.problems = [results[p.task_id] for p in problems if p.task_id in results]
    record.skipped = [
        {"task_id": task_id, "reason": reason} for task_id, reason in sorted(skipped.items())
    ]
    if provider is not None and hasattr(provider, "call_count"):
        record.provider_calls = provider.call_count
    record.save(Path(cfg.out_dir) / RECORD_FILENAME)
    return record


def run_single_stage(cfg: RunConfig, stage: Stage) -> dict[str, list[str]]:
    """Produce (and cache) completions for one stage only; no execution.

    Returns the raw completion texts per task. Used by the gen-* commands.
    """
    problems = load_dataset(cfg.dataset)
    provider = build_provider(cfg.provider)
    effective = replace(cfg, stages=tuple(sorted(set(cfg.stages) | {stage.value})))
    state = _StageRunner(effective, provider)
    out: dict[str, list[str]] = {}
    for problem in problems:
        if stage is Stage.REQUIREMENTS:
            plan = state.plan_for(Stage.REQUIREMENTS)
            prompt = build_prompt(plan, problem)
            out[problem.task_id] = state.completions(problem, stage, prompt, 1)
            continue
        req_plan = state.plan_for(Stage.REQUIREMENTS)
        req_prompt = build_prompt(req_plan, problem)
        req_doc = state.completions(problem, Stage.REQUIREMENTS, req_prompt, 1)[0]
        context = req_doc.strip("\n")
        if stage is Stage.TESTS:
            plan = state.plan_for(Stage.TESTS, requirements_context=context)
            out[problem.task_id] = state.completions(
                problem, stage, build_prompt(plan, problem), 1
            )
        elif stage in (Stage.CODE, Stage.CODE_TDD):
            tests_context = None
            if stage is Stage.CODE_TDD:
                tests_plan = state.plan_for(Stage.TESTS, requirements_context=context)
                tests_doc = state.completions(
                    problem, Stage.TESTS, build_prompt(tests_plan, problem), 1
                )[0]
                tests_context = tests_doc.strip("\n")
            plan = state.plan_for(
                stage, requirements_context=context, tests_context=tests_context
            )
            out[problem.task_id] = state.completions(
                problem, stage, build_prompt(plan, problem), cfg.sampling.n
            )
    return out
