"""Two competing objectives under projected gradient ascent.

Base values b0, b1 each feed a fulfillment that the other suppresses:

    f0 = b0 * (1 - alpha * b1)
    f1 = b1 * (1 - alpha * b0)

Ascending a utility over (f0, f1) with respect to (b0, b1) exposes how each
composition operator resolves the tension: strict conjunctions compromise,
disjunctions and linear utilities pick a winner, offsets stage the order.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .lang import UtilitySpec, evaluate, gradient

# Defaults produce all four operator regimes within the step budget.  The
# competition strength must exceed 0.5: at or below that the linear
# utility's ascent direction is non-negative in both coordinates everywhere
# in the box, so it saturates instead of showing winner-take-all.  Much
# above 0.6 the offset run converges to an interior balance without a
# visible second phase, so 0.55 sits in the window where all four show.
DEFAULT_ALPHA = 0.55
DEFAULT_LR = 0.01
DEFAULT_STEPS = 2000
DEFAULT_INIT = (0.55, 0.45)  # f0 starts slightly ahead


@dataclass(frozen=True)
class ToyState:
    b0: float
    b1: float
    alpha: float = DEFAULT_ALPHA

    def __post_init__(self):
        for field in ("b0", "b1", "alpha"):
            v = getattr(self, field)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{field}={v} outside [0, 1]")


@dataclass(frozen=True)
class TraceRow:
    step: int
    b0: float
    b1: float
    f0: float
    f1: float
    utility: float


def toy_fulfillments(state: ToyState) -> tuple[float, float]:
    f0 = state.b0 * (1.0 - state.alpha * state.b1)
    f1 = state.b1 * (1.0 - state.alpha * state.b0)
    return f0, f1


def toy_run(
    spec: UtilitySpec,
    init: ToyState | None = None,
    lr: float = DEFAULT_LR,
    steps: int = DEFAULT_STEPS,
) -> list[TraceRow]:
    """Projected gradient ascent on u(f0(b), f1(b)); returns steps+1 rows."""
    if lr <= 0:
        raise ValueError("lr must be positive")
    if set(spec.objective_order) != {"f0", "f1"}:
        raise ValueError(
            f"toy specs must be over f0 and f1, got {spec.objective_order}"
        )
    state = init if init is not None else ToyState(*DEFAULT_INIT)
    b0, b1, alpha = state.b0, state.b1, state.alpha

    def row(step: int) -> TraceRow:
        f0 = b0 * (1.0 - alpha * b1)
        f1 = b1 * (1.0 - alpha * b0)
        u = evaluate(spec, {"f0": f0, "f1": f1})
        return TraceRow(step, b0, b1, f0, f1, u)

    rows = [row(0)]
    for step in range(1, steps + 1):
        f0 = b0 * (1.0 - alpha * b1)
        f1 = b1 * (1.0 - alpha * b0)
        g = gradient(spec, {"f0": f0, "f1": f1})
        db0 = g["f0"] * (1.0 - alpha * b1) + g["f1"] * (-alpha * b1)
        db1 = g["f0"] * (-alpha * b0) + g["f1"] * (1.0 - alpha * b0)
        b0 = min(max(b0 + lr * db0, 0.0), 1.0)
        b1 = min(max(b1 + lr * db1, 0.0), 1.0)
        rows.append(row(step))
    return rows


def phase_crossing_step(rows: list[TraceRow], window: int = 50) -> int | None:
    """First step where f0's windowed gain overtakes f1's, provided f1 led earlier.

    Returns None when no two-phase pattern is present.
    """
    f0 = np.array([r.f0 for r in rows])
    f1 = np.array([r.f1 for r in rows])
    if len(rows) <= window:
        return None
    d0 = f0[window:] - f0[:-window]
    d1 = f1[window:] - f1[:-window]
    f1_leads = np.nonzero(d1 > d0 + 1e-9)[0]
    if f1_leads.size == 0:
        return None
    first_lead = f1_leads[0]
    f0_takes_over = np.nonzero(d0[first_lead:] > d1[first_lead:] + 1e-9)[0]
    if f0_takes_over.size == 0:
        return None
    return int(first_lead + f0_takes_over[0] + window)


def write_trace_csv(rows: list[TraceRow], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "b0", "b1", "f0", "f1", "utility"])
        for r in rows:
            writer.writerow(
                [r.step]
                + [format(v, ".12g") for v in (r.b0, r.b1, r.f0, r.f1, r.utility)]
            )
