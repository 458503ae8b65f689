"""McCabe cyclomatic complexity over Python source.

A unit is a function (or method); the module itself becomes one more unit
when any top-level logic exists outside definitions, imports, and the
docstring. Each unit starts at 1 and gains one point per decision point:
conditional statements and clauses, loop statements, exception handlers,
boolean short-circuit operators, conditional expressions, match cases, and
per-clause conditions inside comprehensions. Nesting depth is not weighted.
"""

from __future__ import annotations

import ast
from dataclasses import dataclass

_FUNCTION_NODES = (ast.FunctionDef, ast.AsyncFunctionDef)
_BRANCH_NODES = (ast.If, ast.While, ast.For, ast.AsyncFor, ast.ExceptHandler, ast.IfExp)


@dataclass(frozen=True)
class CcReport:
    cc_total: int
    per_unit: tuple[tuple[str, int], ...]

    def unit(self, name: str) -> int:
        return dict(self.per_unit)[name]


def _decision_points(node: ast.AST) -> int:
    """Decision points in a scope, excluding nested function bodies."""
    count = 0
    for child in ast.iter_child_nodes(node):
        if isinstance(child, _FUNCTION_NODES):
            continue
        if isinstance(child, _BRANCH_NODES):
            count += 1
        elif isinstance(child, ast.BoolOp):
            count += len(child.values) - 1
        elif isinstance(child, ast.comprehension):
            count += len(child.ifs)
        elif isinstance(child, ast.Match):
            count += len(child.cases)
        count += _decision_points(child)
    return count


def _collect_functions(node: ast.AST, prefix: str, units: list[tuple[str, int]]):
    for child in ast.iter_child_nodes(node):
        if isinstance(child, _FUNCTION_NODES):
            name = f"{prefix}{child.name}"
            units.append((name, 1 + _decision_points(child)))
            _collect_functions(child, f"{name}.", units)
        elif isinstance(child, ast.ClassDef):
            _collect_functions(child, f"{prefix}{child.name}.", units)
        else:
            _collect_functions(child, prefix, units)


def _is_docstring(stmt: ast.stmt) -> bool:
    return (
        isinstance(stmt, ast.Expr)
        and isinstance(stmt.value, ast.Constant)
        and isinstance(stmt.value.value, str)
    )


def compute_cc(source: str) -> CcReport:
    """Per-unit and summed complexity; raises SyntaxError for broken source."""
    tree = ast.parse(source)
    units: list[tuple[str, int]] = []
    _collect_functions(tree, "", units)

    module_logic = any(
        not isinstance(stmt, _FUNCTION_NODES + (ast.ClassDef, ast.Import, ast.ImportFrom))
        and not _is_docstring(stmt)
        for stmt in tree.body
    )
    if module_logic:
        decisions = 0
        for stmt in tree.body:
            if isinstance(stmt, _FUNCTION_NODES):
                continue
            if isinstance(stmt, _BRANCH_NODES):
                decisions += 1
            decisions += _decision_points(stmt)
        units.append(("<module>", 1 + decisions))

    total = sum(cc for _, cc in units)
    return CcReport(cc_total=total, per_unit=tuple(units))


def select_cc_threshold(gt_cc: int) -> int:
    """Complexity budget for candidates, chosen from the ground-truth solution:
    5 when the reference stays under 5, otherwise 10."""
    return 5 if gt_cc < 5 else 10
