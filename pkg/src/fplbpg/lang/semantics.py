"""Meaning of priority formulas: utility values, gradients, bounds, checks.

A formula over n named objectives compiles to a utility u: [0,1]^n -> [0,1]:

    leaf            -> its bound value
    and_{p}(...)    -> power mean M_p of the child utilities
    or_{p}(...)     -> 1 - M_p(1 - child utilities)
    !x              -> 1 - u(x)
    [x @ d]         -> (u(x) + max(d, 0)) / (1 + d), clamped to [0, 1]
    x^k             -> u(x)^k
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from ..powermean import (
    GRAD_FLOOR,
    min_fulfillment_bound,
    power_mean_cols,
    power_mean_grad_cols,
)
from .syntax import (
    And,
    Formula,
    Leaf,
    Not,
    Offset,
    Or,
    Power,
    free_variables,
    parse,
)

__all__ = [
    "Diagnostic",
    "UtilitySpec",
    "bound_report",
    "evaluate",
    "evaluate_many",
    "gradient",
    "gradient_many",
    "load_spec_file",
    "load_spec_text",
    "validate",
]


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" or "warning"
    message: str
    line: int = 0
    col: int = 0

    def render(self, filename: str) -> str:
        return f"{filename}:{self.line}:{self.col}: {self.severity}: {self.message}"


@dataclass(frozen=True)
class UtilitySpec:
    """A formula plus the objective order fixing the fulfillment-vector layout."""

    formula: Formula
    objective_order: tuple[str, ...]

    def __post_init__(self):
        free = free_variables(self.formula)
        if len(set(self.objective_order)) != len(self.objective_order):
            raise ValueError("objective order contains duplicates")
        if set(self.objective_order) != set(free):
            raise ValueError(
                f"objective order {list(self.objective_order)} does not match "
                f"the formula's free variables {list(free)}"
            )

    @classmethod
    def from_formula(cls, formula: Formula) -> "UtilitySpec":
        return cls(formula, free_variables(formula))


def validate(node: Formula, mode: str = "strict") -> list[Diagnostic]:
    """Structural checks; relaxed mode downgrades p > 0 to a warning."""
    if mode not in ("strict", "relaxed"):
        raise ValueError(f"unknown validation mode {mode!r}")
    out: list[Diagnostic] = []

    def pos(n: Formula) -> tuple[int, int]:
        return n.pos if n.pos is not None else (0, 0)

    def walk(n: Formula) -> None:
        if isinstance(n, (And, Or)):
            if n.p > 0:
                severity = "warning" if mode == "relaxed" else "error"
                out.append(Diagnostic(severity, "p must be <= 0", *pos(n)))
            for c in n.children:
                walk(c)
        elif isinstance(n, Offset):
            if n.delta <= -1.0:
                out.append(Diagnostic("error", "delta must exceed -1", *pos(n)))
            elif n.delta > 1.0:
                out.append(Diagnostic("error", "delta must be at most 1", *pos(n)))
            walk(n.child)
        elif isinstance(n, Power):
            if not n.k > 0:
                out.append(Diagnostic("error", "emphasis power must be positive", *pos(n)))
            walk(n.child)
        elif isinstance(n, Not):
            walk(n.child)

    walk(node)
    return out


def _forward(node: Formula, env: Mapping[str, object], memo: dict) -> object:
    """Utility of each node; works elementwise on scalars or 1-d arrays."""
    key = id(node)
    if key in memo:
        return memo[key]
    if isinstance(node, Leaf):
        val = env[node.name]
    elif isinstance(node, And):
        vals = np.stack([_forward(c, env, memo) for c in node.children])
        val = power_mean_cols(node.p, vals)
    elif isinstance(node, Or):
        vals = np.stack([1.0 - _forward(c, env, memo) for c in node.children])
        val = 1.0 - power_mean_cols(node.p, vals)
    elif isinstance(node, Not):
        val = 1.0 - _forward(node.child, env, memo)
    elif isinstance(node, Offset):
        raw = (_forward(node.child, env, memo) + max(node.delta, 0.0)) / (
            1.0 + node.delta
        )
        val = np.clip(raw, 0.0, 1.0)
        memo[("raw", key)] = raw
    elif isinstance(node, Power):
        val = _forward(node.child, env, memo) ** node.k
    else:
        raise TypeError(f"not a formula node: {node!r}")
    memo[key] = val
    return val


def _backward(node: Formula, upstream, memo: dict, grads: dict) -> None:
    if isinstance(node, Leaf):
        grads[node.name] = grads[node.name] + upstream
        return
    if isinstance(node, (And, Or)):
        if not math.isfinite(node.p):
            raise ValueError("gradient undefined for infinite p")
        vals = np.stack([memo[id(c)] for c in node.children])
        if isinstance(node, Or):
            vals = 1.0 - vals
        w = power_mean_grad_cols(node.p, vals)
        # for or-nodes the two negations cancel: du/du_i = dM/d(1-u_i)
        for child, wi in zip(node.children, w):
            _backward(child, upstream * wi, memo, grads)
        return
    if isinstance(node, Not):
        _backward(node.child, -upstream, memo, grads)
        return
    if isinstance(node, Offset):
        raw = memo[("raw", id(node))]
        factor = np.where(raw > 1.0, 0.0, 1.0 / (1.0 + node.delta))
        _backward(node.child, upstream * factor, memo, grads)
        return
    if isinstance(node, Power):
        base = memo[id(node.child)]
        if node.k < 1.0:
            base = np.maximum(base, GRAD_FLOOR)
        _backward(node.child, upstream * node.k * base ** (node.k - 1.0), memo, grads)
        return
    raise TypeError(f"not a formula node: {node!r}")


def _checked_binding(spec: UtilitySpec, binding: Mapping[str, float]) -> dict:
    env = {}
    for name in spec.objective_order:
        if name not in binding:
            raise ValueError(f"unbound variable {name!r}")
        v = float(binding[name])
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"binding {name}={v} outside [0, 1]")
        env[name] = v
    return env


def evaluate(spec: UtilitySpec, binding: Mapping[str, float]) -> float:
    """Utility of the spec under a full binding of its objectives."""
    env = _checked_binding(spec, binding)
    return float(_forward(spec.formula, env, {}))


def gradient(spec: UtilitySpec, binding: Mapping[str, float]) -> dict[str, float]:
    """du/df per objective, by reverse traversal.  Requires finite exponents."""
    env = _checked_binding(spec, binding)
    memo: dict = {}
    _forward(spec.formula, env, memo)
    grads = {name: 0.0 for name in spec.objective_order}
    _backward(spec.formula, 1.0, memo, grads)
    return {name: float(g) for name, g in grads.items()}


def evaluate_many(spec: UtilitySpec, columns: np.ndarray) -> np.ndarray:
    """Vectorized utility over a (n_objectives, batch) array of fulfillments."""
    columns = np.asarray(columns, dtype=float)
    if columns.shape[0] != len(spec.objective_order):
        raise ValueError("row count must match the objective order")
    env = dict(zip(spec.objective_order, columns))
    return np.asarray(_forward(spec.formula, env, {}), dtype=float)


def gradient_many(spec: UtilitySpec, columns: np.ndarray) -> np.ndarray:
    """Vectorized du/df with the same (n_objectives, batch) layout."""
    columns = np.asarray(columns, dtype=float)
    if columns.shape[0] != len(spec.objective_order):
        raise ValueError("row count must match the objective order")
    env = dict(zip(spec.objective_order, columns))
    memo: dict = {}
    _forward(spec.formula, env, memo)
    grads = {name: np.zeros(columns.shape[1:]) for name in spec.objective_order}
    _backward(spec.formula, np.ones(columns.shape[1:]), memo, grads)
    return np.stack([grads[name] for name in spec.objective_order])


def bound_report(spec: UtilitySpec, target: float) -> dict[str, float | None]:
    """Guaranteed per-objective minimum fulfillment implied by u >= target.

    Entries are None where no lower bound is available (negated or
    disjunctive subtrees, and conjunctions with p = +inf).
    """
    if not 0.0 <= target <= 1.0:
        raise ValueError("target must lie in [0, 1]")
    out: dict[str, float | None] = {name: None for name in spec.objective_order}

    def record(name: str, t: float) -> None:
        prev = out[name]
        out[name] = t if prev is None else max(prev, t)

    def walk(node: Formula, t: float, guaranteed: bool) -> None:
        if isinstance(node, Leaf):
            if guaranteed:
                record(node.name, t)
            return
        if isinstance(node, And):
            n = len(node.children)
            if node.p == -math.inf:
                child_t = t  # the minimum itself must reach t
            elif node.p == math.inf:
                guaranteed, child_t = False, 0.0
            elif node.p == 0.0:
                child_t = t**n  # p -> 0 limit of the closed form
            else:
                child_t = min_fulfillment_bound(node.p, n, t)
            for c in node.children:
                walk(c, child_t, guaranteed)
            return
        if isinstance(node, (Or, Not)):
            kids = node.children if isinstance(node, Or) else (node.child,)
            for c in kids:
                walk(c, 0.0, False)
            return
        if isinstance(node, Offset):
            child_t = min(max(t * (1.0 + node.delta) - max(node.delta, 0.0), 0.0), 1.0)
            walk(node.child, child_t, guaranteed)
            return
        if isinstance(node, Power):
            walk(node.child, t ** (1.0 / node.k), guaranteed)
            return
        raise TypeError(f"not a formula node: {node!r}")

    walk(spec.formula, target, True)
    return out


_OBJECTIVE_HEADER = "objective"


def load_spec_text(text: str) -> UtilitySpec:
    """Parse a spec file: optional `objective <name>` headers, then one formula.

    Header lines fix the objective order explicitly; otherwise the order is
    first appearance in the formula.  Header lines are blanked rather than
    removed so diagnostics keep the original line numbers.
    """
    order: list[str] = []
    lines = text.split("\n")
    in_header = True
    for idx, line in enumerate(lines):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        parts = stripped.split()
        if in_header and parts[0] == _OBJECTIVE_HEADER and len(parts) == 2:
            order.append(parts[1])
            lines[idx] = ""
        else:
            in_header = False
    formula = parse("\n".join(lines))
    if order:
        return UtilitySpec(formula, tuple(order))
    return UtilitySpec.from_formula(formula)


def load_spec_file(path) -> UtilitySpec:
    with open(path, encoding="utf-8") as fh:
        return load_spec_text(fh.read())
