"""Requirements-aware code generation, execution, and ranking harness."""

from .errors import ReqcodeError
from .model import (
    Category,
    CodeCandidate,
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
from .gateway import Completion, MockProvider, OpenAIProvider, SamplingConfig, count_generated_tests
from .parsing import (
    ParsedTestDoc,
    extract_code_block,
    parse_requirements_doc,
    parse_test_doc,
    serialize_requirements,
    serialize_tests,
    substitute_candidate,
)
from .prompts import (
    IclExample,
    PromptPlan,
    Stage,
    apply_preference,
    build_nfr_instruction_block,
    build_prompt,
)
from .orchestrate import (
    RunnerRequest,
    RunnerResponse,
    SubprocessRunnerPool,
    evaluate_reliability,
    run_candidate,
    run_matrix,
)
from .stub_runner import InProcessRunner
from .rank import (
    WeightProfile,
    category_pass_at_k,
    filter_top_k,
    filtered_pass_at_k,
    pass_at_k,
    score_candidate,
)
from .dataset import load_dataset
from .harness import RunConfig, RunRecord, qc_filter_fr_tests, run_pipeline
from .report import build_report, emit_report

__version__ = "0.1.0"

__all__ = [
    "Category",
    "CodeCandidate",
    "Completion",
    "GeneratedTest",
    "IclExample",
    "InProcessRunner",
    "MockProvider",
    "Mode",
    "OpenAIProvider",
    "ParsedTestDoc",
    "Problem",
    "PromptPlan",
    "ReqcodeError",
    "RequirementSet",
    "ResourceLimits",
    "RunConfig",
    "RunRecord",
    "RunnerRequest",
    "RunnerResponse",
    "SamplingConfig",
    "Stage",
    "SubprocessRunnerPool",
    "TestKind",
    "Verdict",
    "VerdictMatrix",
    "VerdictStatus",
    "WeightProfile",
    "apply_preference",
    "build_nfr_instruction_block",
    "build_prompt",
    "build_report",
    "category_pass_at_k",
    "count_generated_tests",
    "emit_report",
    "evaluate_reliability",
    "extract_code_block",
    "filter_top_k",
    "filtered_pass_at_k",
    "load_dataset",
    "normalize_category",
    "parse_requirements_doc",
    "parse_test_doc",
    "pass_at_k",
    "qc_filter_fr_tests",
    "run_candidate",
    "run_matrix",
    "run_pipeline",
    "score_candidate",
    "serialize_requirements",
    "serialize_tests",
    "substitute_candidate",
    "validate_problem",
]
