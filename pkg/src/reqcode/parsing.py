"""Parsers that turn raw completions into requirement sets, code, and tests.

Generated documents follow a markdown-ish heading convention; heading
matching is prefix-based and tolerant of depth drift because generated
documents vary heading depth between runs. Parsing is best-effort: nothing
is silently dropped, unparseable content is quoted in warnings.
"""

from __future__ import annotations

import ast
import logging
import re
from dataclasses import dataclass

from .errors import EmptyCode
from .model import (
    Category,
    GeneratedTest,
    Mode,
    RequirementSet,
    TestKind,
    is_category_label,
    normalize_category,
)

log = logging.getLogger(__name__)

RELIABILITY_MARKER_PHRASE = "satisfied if no errors occur"
GENERATED_CODE_PLACEHOLDER = "${Generated Code}"

_FENCE_RE = re.compile(r"```[^\n]*\n(.*?)```", re.DOTALL)
_CODELIKE_RE = re.compile(r"^(?:from\s+\S+\s+import|import\s+\S+|def\s+\w|class\s+\w|@\w|async\s+def\s+\w)")
_HEADING_RE = re.compile(r"^(#+)\s*(.*)$")
_CC_ASSERT_RE = re.compile(r"total_complexity\s*<=\s*(\d+)")
_KV_RE = re.compile(r"^([A-Z][A-Z_]*)\s*=\s*(.+)$", re.DOTALL)

# Section carriers that group category headings without being categories.
_STRUCTURAL_HEADINGS = frozenset(
    {
        "functional requirements",
        "non functional requirements",
        "test cases regarding functional requirements",
        "test cases regarding non functional requirements",
        "specific quality requirements",
        "problem agnostic requirements",
    }
)

_SQUASH_RE = re.compile(r"[^a-z0-9]+")


def _squash(text: str) -> str:
    return _SQUASH_RE.sub(" ", text.lower()).strip()


def extract_code_block(completion: str) -> str:
    """Pull the final program out of a completion.

    Preference order: last fenced code block, then the suffix starting at the
    first import/def-like line (completions often carry an outline before the
    code), then the whole text.
    """
    fenced = _FENCE_RE.findall(completion)
    if fenced:
        code = fenced[-1].strip("\n")
    else:
        lines = completion.splitlines()
        start = None
        for i, line in enumerate(lines):
            if _CODELIKE_RE.match(line):
                start = i
                break
        code = "\n".join(lines[start:]) if start is not None else completion
        code = code.strip("\n")
    if not code.strip():
        raise EmptyCode("completion contains no code")
    return code


# --- requirement documents ---------------------------------------------------

# Requirement-document headings keep io-conditions and expected-behavior in
# separate buckets even though both are verified by fr_general tests.
_REQ_BUCKET_ALIASES = {
    "problem agnostic requirements": "problem_agnostic",
    "input output conditions": "io_conditions",
    "input output condition": "io_conditions",
    "inputs": "io_conditions",
    "outputs": "io_conditions",
    "expected behavior": "expected_behavior",
    "expected behaviour": "expected_behavior",
    "edge cases": "edge_cases",
    "edge case": "edge_cases",
    "performance": "time_performance",
    "performance requirements": "time_performance",
    "time performance": "time_performance",
    "robustness": "robustness",
    "reliability": "reliability",
    "maintainability": "maintainability",
}

_REQ_SECTION_HEADINGS = frozenset(
    {"functional requirements", "non functional requirements", "specific quality requirements"}
)


def parse_requirements_doc(doc: str) -> RequirementSet:
    """Parse a generated requirement document into its category buckets.

    Bullets under each recognized heading land in the matching bucket;
    unknown headings are warned about and their bullets go to
    problem_agnostic. The verbatim document is preserved in ``raw``.
    """
    buckets: dict[str, list[str]] = {name: [] for name in RequirementSet.BUCKETS}
    current: str | None = None
    for line in doc.splitlines():
        stripped = line.strip()
        if not stripped:
            continue
        m = _HEADING_RE.match(stripped)
        if m:
            label = _squash(m.group(2))
            if label in _REQ_SECTION_HEADINGS:
                current = None
            elif label in _REQ_BUCKET_ALIASES:
                current = _REQ_BUCKET_ALIASES[label]
            else:
                log.warning("requirements doc: unknown heading %r", m.group(2))
                current = "problem_agnostic"
            continue
        item = stripped[2:].strip() if stripped.startswith("- ") else stripped
        if not item:
            continue
        buckets[current or "problem_agnostic"].append(item)
    return RequirementSet(
        raw=doc, **{name: tuple(items) for name, items in buckets.items()}
    )


_REQ_SERIAL_LAYOUT = (
    ("problem_agnostic", "# Problem Agnostic Requirements"),
    (None, "# Functional Requirements"),
    ("io_conditions", "## Input-output Conditions"),
    ("expected_behavior", "## Expected Behavior"),
    ("edge_cases", "## Edge Cases"),
    (None, "# Non-functional Requirements"),
    ("time_performance", "## Performance"),
    (None, "## Specific Quality Requirements"),
    ("robustness", "### Robustness"),
    ("reliability", "### Reliability"),
    ("maintainability", "### Maintainability"),
)


def serialize_requirements(rs: RequirementSet) -> str:
    """Emit the canonical heading format; parse_requirements_doc inverts it."""
    out: list[str] = []
    pending_sections: list[str] = []
    for bucket, heading in _REQ_SERIAL_LAYOUT:
        if bucket is None:
            # Section carriers are flushed only once a non-empty child shows up;
            # a new carrier replaces pending ones at its own depth or deeper.
            depth = heading.index(" ")
            pending_sections = [h for h in pending_sections if h.index(" ") < depth]
            pending_sections.append(heading)
            continue
        items = getattr(rs, bucket)
        if not items:
            continue
        for section in pending_sections:
            out.append(section)
        pending_sections = []
        out.append(heading)
        out.extend(f"- {item}" for item in items)
        out.append("")
    return "\n".join(out).rstrip("\n") + ("\n" if out else "")


# --- preference filtering on requirement documents ---------------------------

_NFR_HEADING_CATEGORY = {
    "performance": Category.NFR_TIME,
    "performance requirements": Category.NFR_TIME,
    "time performance": Category.NFR_TIME,
    "robustness": Category.NFR_ROBUSTNESS,
    "reliability": Category.NFR_RELIABILITY,
    "maintainability": Category.NFR_MAINTAINABILITY,
}

_NFR_SECTION_LABELS = frozenset({"non functional requirements", "specific quality requirements"})


def filter_nfr_sections(doc: str, keep: set[Category]) -> str:
    """Drop NFR sections of a requirement document not named in ``keep``.

    Functional and problem-agnostic sections pass through untouched. When
    every category is kept the document is returned byte-identical, so the
    full-set filter is the identity.
    """
    lines = doc.splitlines(keepends=True)
    kept: list[str] = []
    drop_below: int | None = None  # heading depth of the section being dropped
    eat_blanks = False
    for line in lines:
        m = _HEADING_RE.match(line.strip())
        if m:
            depth = len(m.group(1))
            label = _squash(m.group(2))
            if drop_below is not None and depth > drop_below:
                continue
            drop_below = None
            cat = _NFR_HEADING_CATEGORY.get(label)
            if cat is not None and cat not in keep:
                drop_below = depth
                eat_blanks = False
                continue
            eat_blanks = False
            kept.append(line)
            continue
        if drop_below is not None:
            eat_blanks = True
            continue
        if eat_blanks and not line.strip():
            # swallow the blank that trailed a removed block
            eat_blanks = False
            continue
        eat_blanks = False
        kept.append(line)

    # Remove NFR section carriers whose whole body was dropped.
    def _prune(lines_in: list[str]) -> list[str]:
        out: list[str] = []
        i = 0
        while i < len(lines_in):
            line = lines_in[i]
            m = _HEADING_RE.match(line.strip())
            if m and _squash(m.group(2)) in _NFR_SECTION_LABELS:
                depth = len(m.group(1))
                j = i + 1
                has_content = False
                while j < len(lines_in):
                    m2 = _HEADING_RE.match(lines_in[j].strip())
                    if m2 and len(m2.group(1)) <= depth:
                        break
                    if lines_in[j].strip():
                        has_content = True
                    j += 1
                if not has_content:
                    i = j
                    continue
            out.append(line)
            i += 1
        return out

    pruned = _prune(kept)
    while True:  # nested carriers may empty out only after their child is pruned
        again = _prune(pruned)
        if again == pruned:
            return "".join(pruned)
        pruned = again


# --- test documents -----------------------------------------------------------


@dataclass(frozen=True)
class ParsedTestDoc:
    """Categorized tests plus warnings for anything that could not be kept."""

    tests: tuple[GeneratedTest, ...] = ()
    warnings: tuple[str, ...] = ()


# Host-snippet machinery around the complexity assertion; carries no checks.
_CC_MACHINERY_RE = re.compile(
    r"^(?:import\s+inspect|from\s+radon[.\w]*\s+import\s+.*|result\s*=\s*ComplexityVisitor\b.*)$"
)


def _statement_complete(text: str) -> bool:
    try:
        ast.parse(text)
        return True
    except SyntaxError as exc:
        if "was never closed" in str(exc) or "unexpected EOF" in str(exc) or "EOF in" in str(exc):
            return False
        return True  # broken for another reason; let the caller deal with it


def parse_test_doc(doc: str, mode: Mode | str) -> ParsedTestDoc:
    """Parse a generated test document into category-tagged tests.

    Function mode turns each assert statement (with its preceding comment
    lines) into one assertion test; a ``total_complexity <= N`` assertion
    becomes a cc threshold check and a "Satisfied if no errors occur" marker
    becomes a reliability marker. Stdio mode pairs INPUT with OUTPUT or
    STD_ERROR values and maps COMPLEXITY_LIMIT to the cc threshold.
    """
    mode = Mode(mode)
    state = _DocState()
    lines = doc.splitlines()
    i = 0
    while i < len(lines):
        line = lines[i]
        stripped = line.strip()
        if not stripped:
            i += 1
            continue
        m = _HEADING_RE.match(stripped)
        if m:
            _consume_heading(state, m, mode)
            i += 1
            continue
        if RELIABILITY_MARKER_PHRASE in stripped.lower():
            state.add_reliability_marker()
            i += 1
            continue
        if mode is Mode.FUNCTION:
            i = _consume_function_line(state, lines, i)
        else:
            i = _consume_stdio_line(state, lines, i)
    state.finish()
    return ParsedTestDoc(tests=tuple(state.tests), warnings=tuple(state.warnings))


class _DocState:
    def __init__(self):
        self.tests: list[GeneratedTest] = []
        self.warnings: list[str] = []
        self.category: Category | None = None
        self.comments: list[str] = []
        self.pending_input: str | None = None
        self.pending_message: str | None = None

    def next_id(self) -> str:
        return f"t{len(self.tests):03d}"

    def effective_category(self) -> Category:
        if self.category is None:
            self.warnings.append("test outside any recognized heading; defaulting to fr_general")
            return Category.FR_GENERAL
        return self.category

    def take_comment(self) -> str | None:
        comment = "\n".join(self.comments) if self.comments else None
        self.comments = []
        if self.pending_message is not None:
            comment = self.pending_message if comment is None else f"{self.pending_message}\n{comment}"
            self.pending_message = None
        return comment

    def add_reliability_marker(self):
        self.comments = []
        self.tests.append(
            GeneratedTest(
                test_id=self.next_id(),
                category=Category.NFR_RELIABILITY,
                kind=TestKind.RELIABILITY_MARKER,
                comment=None,
            )
        )

    def add_cc(self, limit: int):
        self.tests.append(
            GeneratedTest(
                test_id=self.next_id(),
                category=Category.NFR_MAINTAINABILITY,
                kind=TestKind.CC_THRESHOLD,
                cc_limit=limit,
                comment=self.take_comment(),
            )
        )

    def flush_dangling_input(self):
        if self.pending_input is not None:
            self.warnings.append(f"INPUT without OUTPUT/STD_ERROR dropped: {self.pending_input!r}")
            self.pending_input = None

    def finish(self):
        self.flush_dangling_input()


def _consume_heading(state: _DocState, m: re.Match, mode: Mode) -> None:
    depth, text = len(m.group(1)), m.group(2)
    label = _squash(text)
    if RELIABILITY_MARKER_PHRASE in label:
        state.add_reliability_marker()
        return
    if label in _STRUCTURAL_HEADINGS:
        state.flush_dangling_input()
        state.comments = []
        state.category = None
        return
    if is_category_label(text):
        state.flush_dangling_input()
        state.comments = []
        state.category = normalize_category(text)
        return
    if depth >= 3:
        state.comments.append(text)
        return
    state.warnings.append(f"unknown heading: {m.group(0)!r}")


def _consume_function_line(state: _DocState, lines: list[str], i: int) -> int:
    stripped = lines[i].strip()
    if _CC_MACHINERY_RE.match(stripped):
        return i + 1
    if not stripped.startswith("assert"):
        state.warnings.append(f"unparseable line dropped: {lines[i]!r}")
        return i + 1
    statement = lines[i].rstrip()
    j = i + 1
    while not _statement_complete(statement) and j < len(lines):
        statement += "\n" + lines[j].rstrip()
        j += 1
    cc = _CC_ASSERT_RE.search(statement)
    if cc:
        state.add_cc(int(cc.group(1)))
        return j
    try:
        ast.parse(statement)
    except SyntaxError:
        state.warnings.append(f"assertion does not parse, dropped: {statement!r}")
        return j
    state.tests.append(
        GeneratedTest(
            test_id=state.next_id(),
            category=state.effective_category(),
            kind=TestKind.ASSERTION,
            assertion_code=statement,
            comment=state.take_comment(),
        )
    )
    return j


def _consume_stdio_line(state: _DocState, lines: list[str], i: int) -> int:
    m = _KV_RE.match(lines[i].strip())
    if not m:
        state.warnings.append(f"unparseable line dropped: {lines[i]!r}")
        return i + 1
    key, expr = m.group(1), m.group(2)
    j = i + 1
    while not _statement_complete(expr) and j < len(lines):
        expr += "\n" + lines[j].rstrip()
        j += 1
    try:
        value = _eval_literal_expr(expr)
    except ValueError as exc:
        state.warnings.append(f"{key} value not evaluable ({exc}): {expr!r}")
        return j
    if key == "ERROR_MESSAGE":
        state.pending_message = str(value)
    elif key == "INPUT":
        state.flush_dangling_input()
        state.pending_input = str(value)
    elif key in ("OUTPUT", "STD_ERROR"):
        if state.pending_input is None:
            state.warnings.append(f"{key} without preceding INPUT dropped: {expr!r}")
            return j
        state.tests.append(
            GeneratedTest(
                test_id=state.next_id(),
                category=state.effective_category(),
                kind=TestKind.STDIO,
                input=state.pending_input,
                expected_output=str(value) if key == "OUTPUT" else None,
                expected_stderr_substring=str(value) if key == "STD_ERROR" else None,
                comment=state.take_comment(),
            )
        )
        state.pending_input = None
    elif key == "COMPLEXITY_LIMIT":
        state.add_cc(int(value))
    else:
        state.warnings.append(f"unknown key dropped: {key}={expr!r}")
    return j


def _eval_literal_expr(expr: str):
    """Evaluate a restricted literal expression: strings/ints with + and *.

    Generated stdio tests build large inputs with expressions like
    ``"0" * 2000 + "\\n"``, which ast.literal_eval rejects.
    """
    node = ast.parse(expr.strip(), mode="eval").body
    return _eval_node(node)


def _eval_node(node: ast.AST):
    if isinstance(node, ast.Constant) and isinstance(node.value, (str, int)):
        return node.value
    if isinstance(node, ast.BinOp) and isinstance(node.op, (ast.Add, ast.Mult)):
        left, right = _eval_node(node.left), _eval_node(node.right)
        return left + right if isinstance(node.op, ast.Add) else left * right
    raise ValueError(f"unsupported expression node: {ast.dump(node)[:80]}")


# --- serialization ------------------------------------------------------------

_CATEGORY_SERIAL_ORDER = (
    Category.FR_GENERAL,
    Category.FR_EDGE,
    Category.NFR_TIME,
    Category.NFR_ROBUSTNESS,
    Category.NFR_RELIABILITY,
    Category.NFR_MAINTAINABILITY,
)

_TESTDOC_HEADINGS = {
    Category.FR_GENERAL: "## General Cases",
    Category.FR_EDGE: "## Edge Cases",
    Category.NFR_TIME: "## Performance Requirements",
    Category.NFR_ROBUSTNESS: "### Robustness",
    Category.NFR_RELIABILITY: "### Reliability",
    Category.NFR_MAINTAINABILITY: "### Maintainability",
}


def serialize_tests(tests: tuple[GeneratedTest, ...] | list[GeneratedTest], mode: Mode | str) -> str:
    """Emit tests back in the generated-document format.

    parse_test_doc is idempotent on this output: parsing it reproduces the
    same tests in the same canonical order.
    """
    mode = Mode(mode)
    by_cat: dict[Category, list[GeneratedTest]] = {c: [] for c in _CATEGORY_SERIAL_ORDER}
    for t in tests:
        by_cat[t.category].append(t)
    out: list[str] = []
    fr_emitted = nfr_emitted = quality_emitted = False
    for cat in _CATEGORY_SERIAL_ORDER:
        group = by_cat[cat]
        if not group:
            continue
        if cat in (Category.FR_GENERAL, Category.FR_EDGE) and not fr_emitted:
            out.append("# Test Cases Regarding Functional Requirements")
            fr_emitted = True
        if cat not in (Category.FR_GENERAL, Category.FR_EDGE) and not nfr_emitted:
            out.append("# Test Cases Regarding Non-functional Requirements")
            nfr_emitted = True
        heading = _TESTDOC_HEADINGS[cat]
        if heading.startswith("### ") and not quality_emitted:
            out.append("## Specific Quality Requirements")
            quality_emitted = True
        out.append(heading)
        comment_prefix = "#" * (heading.index(" ") + 1)
        for t in group:
            if t.comment:
                out.extend(f"{comment_prefix} {line}" for line in t.comment.splitlines())
            if t.kind is TestKind.ASSERTION:
                out.append(t.assertion_code)
            elif t.kind is TestKind.STDIO:
                out.append(f"INPUT = {t.input!r}")
                if t.expected_output is not None:
                    out.append(f"OUTPUT = {t.expected_output!r}")
                if t.expected_stderr_substring is not None:
                    out.append(f"STD_ERROR = {t.expected_stderr_substring!r}")
            elif t.kind is TestKind.RELIABILITY_MARKER:
                out.append(f"{comment_prefix} Satisfied if no errors occur across all test cases")
            elif t.kind is TestKind.CC_THRESHOLD:
                if mode is Mode.FUNCTION:
                    out.append('from radon.visitors import ComplexityVisitor')
                    out.append(f'result = ComplexityVisitor.from_code("""{GENERATED_CODE_PLACEHOLDER}""")')
                    out.append(
                        f"assert result.total_complexity <= {t.cc_limit}, "
                        f"'Cyclomatic Complexity above {t.cc_limit}.'"
                    )
                else:
                    out.append(f"COMPLEXITY_LIMIT = {t.cc_limit}")
            out.append("")
    return "\n".join(out).rstrip("\n") + ("\n" if out else "")


# --- candidate substitution ---------------------------------------------------


def substitute_candidate(test: GeneratedTest, candidate) -> str:
    """Replace the generated-code placeholder in an assertion with the source.

    ``candidate`` is a CodeCandidate (or raw source string). The placeholder
    sits inside a triple-quoted string in the host snippet, so triple quotes
    in the candidate are neutralized and a trailing backslash is padded to
    keep the snippet syntactically valid.
    """
    if test.kind is not TestKind.ASSERTION:
        raise ValueError("substitution applies to assertion tests only")
    code = test.assertion_code or ""
    if GENERATED_CODE_PLACEHOLDER not in code:
        return code
    source = candidate if isinstance(candidate, str) else candidate.source
    safe = source.replace('"""', '\\"\\"\\"')
    if safe.endswith("\\"):
        safe += "\n"
    return code.replace(GENERATED_CODE_PLACEHOLDER, safe)
