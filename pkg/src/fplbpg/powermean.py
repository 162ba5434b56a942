"""Power-mean operators, their gradients, and the guarantee formulas built on them.

The power mean M_p(x) = ((1/n) sum x_i^p)^(1/p) interpolates from min(x)
(p -> -inf) through the geometric mean (p = 0) and arithmetic mean (p = 1)
to max(x) (p -> +inf).  All functions here are pure and accept only
non-negative inputs.
"""

from __future__ import annotations

import math

import numpy as np

NEG_INF = float("-inf")
POS_INF = float("inf")

# |p| below this evaluates the geometric-mean limit; x**p is too unstable there.
GEOMETRIC_BAND = 1e-8
# |p| above this evaluates the min/max limit; x**p overflows there.
MINMAX_BAND = 1e6
# Inputs of the gradient are clamped to this floor for p < 1, where x**(p-1)
# diverges at 0.  Keeps policy gradients finite while preserving direction.
GRAD_FLOOR = 1e-6


def power_mean_cols(p: float, x: np.ndarray) -> np.ndarray:
    """Power mean along axis 0 of a non-negative array.

    Vectorized core shared by the scalar API and batched formula evaluation.
    Inputs are not validated; callers guarantee non-negative entries.
    """
    x = np.asarray(x, dtype=float)
    if math.isnan(p):
        raise ValueError("exponent must not be NaN")
    if abs(p) < GEOMETRIC_BAND:
        # exp(mean(log x)), with any zero element short-circuiting to 0
        has_zero = (x <= 0.0).any(axis=0)
        safe = np.where(x <= 0.0, 1.0, x)
        out = np.exp(np.log(safe).mean(axis=0))
        return np.where(has_zero, 0.0, out)
    if p > MINMAX_BAND:
        return x.max(axis=0)
    if p < -MINMAX_BAND:
        return x.min(axis=0)
    # Factor out the dominant element so x**p never overflows: ratios are <= 1
    # for p > 0 and >= 1 for p < 0, and the reference element contributes
    # exactly 1 to the sum.  Equal inputs come back bit-exact.
    ref = x.max(axis=0) if p > 0 else x.min(axis=0)
    degenerate = ref <= 0.0  # all-zero column, or zero annihilation for p < 0
    safe_ref = np.where(degenerate, 1.0, ref)
    with np.errstate(over="ignore", divide="ignore"):
        ratio = x / safe_ref
        out = safe_ref * (ratio**p).mean(axis=0) ** (1.0 / p)
    return np.where(degenerate, 0.0, out)


def power_mean_grad_cols(p: float, x: np.ndarray) -> np.ndarray:
    """Columnwise gradient of power_mean_cols; same clamping as power_mean_grad."""
    x = np.asarray(x, dtype=float)
    if not math.isfinite(p):
        raise ValueError("power mean gradient undefined for infinite exponent")
    if p < 1.0:
        x = np.maximum(x, GRAD_FLOOR)
    n = x.shape[0]
    if abs(p) < GEOMETRIC_BAND:
        return power_mean_cols(0.0, x) / (n * x)
    m = power_mean_cols(p, x)
    degenerate = m <= 0.0  # all-zero column with p >= 1
    safe_m = np.where(degenerate, 1.0, m)
    grad = (x / safe_m) ** (p - 1.0) / n
    return np.where(degenerate, 0.0, grad)


def _validated(xs) -> np.ndarray:
    x = np.asarray(xs, dtype=float).reshape(-1)
    if x.size == 0:
        raise ValueError("power mean of an empty sequence")
    if (x < 0.0).any():
        raise ValueError("power mean inputs must be non-negative")
    return x


def power_mean(p: float, xs) -> float:
    """M_p(xs) for an extended-real exponent p.

    p = 0 yields the geometric mean, p = -inf the minimum, p = +inf the
    maximum.  For p < 0 any zero element annihilates the mean to 0.
    """
    return float(power_mean_cols(float(p), _validated(xs)))


def power_mean_grad(p: float, xs) -> np.ndarray:
    """dM_p/dx_i for finite p: (1/n) * x_i**(p-1) * M_p**(1-p).

    Inputs below GRAD_FLOOR are clamped first when p < 1.  Entries are
    always >= 0 (the mean is monotone in every component).
    """
    return power_mean_grad_cols(float(p), _validated(xs))


def min_fulfillment_bound(p: float, n: int, y: float) -> float:
    """Largest v guaranteed to lower-bound min(xs) given M_p(xs) = y.

    Closed form (n*(y**p - 1) + 1)**(1/p), valid for finite nonzero p and
    xs in [0,1]^n.  Returns the vacuous bound 0 when the formula has no
    real solution (possible for p > 0) or diverges (y = 0 with p < 0).
    """
    p = float(p)
    if not math.isfinite(p) or p == 0.0:
        raise ValueError("minimum fulfillment bound requires finite nonzero p")
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 <= y <= 1.0:
        raise ValueError("y must lie in [0, 1]")
    if p < 0.0 and y == 0.0:
        return 0.0
    radicand = n * (y**p - 1.0) + 1.0
    if radicand <= 0.0:
        return 0.0
    return float(radicand ** (1.0 / p))


def _pow_ext(x: float, p: float) -> float:
    # 0**p for p < 0 is the +inf limit, which float ** rejects.
    if x == 0.0 and p < 0.0:
        return math.inf
    return x**p


def conservation_delta(p: float, xs, i: int, j: int, delta: float) -> float:
    """Compensation d' on component j that keeps M_p fixed after x_i += delta.

    d' = x_j - (x_i**p + x_j**p - (x_i + delta)**p)**(1/p).  Raises when the
    radicand leaves the valid range, meaning no in-range compensation exists.
    """
    p = float(p)
    if not math.isfinite(p) or p == 0.0:
        raise ValueError("conservation requires finite nonzero p")
    x = _validated(xs)
    if i == j:
        raise ValueError("i and j must differ")
    xi, xj = float(x[i]), float(x[j])
    if xi + delta < 0.0:
        raise ValueError("x_i + delta must be non-negative")
    if delta == 0.0:
        return 0.0
    radicand = _pow_ext(xi, p) + _pow_ext(xj, p) - _pow_ext(xi + delta, p)
    if radicand < 0.0 or (radicand == 0.0 and p < 0.0) or math.isnan(radicand):
        raise ValueError("no in-range compensation exists for this perturbation")
    new_xj = 0.0 if math.isinf(radicand) else radicand ** (1.0 / p)
    return xj - new_xj


def worst_case_reduce(p: float, xs) -> float:
    """Value v with M_p((1, ..., 1, v)) = M_p(xs), obtained constructively.

    Walks every non-minimal component up to 1, compensating on the minimal
    one each time, so v <= min(xs).  Returns 0 when no such configuration
    exists (only possible for p > 0, where the bound is vacuous).
    """
    p = float(p)
    if not math.isfinite(p) or p == 0.0:
        raise ValueError("worst-case reduction requires finite nonzero p")
    x = _validated(xs)
    if (x > 1.0).any():
        raise ValueError("inputs must lie in [0, 1]")
    work = x.copy()
    m = int(np.argmin(work))
    for idx in range(work.size):
        if idx == m or work[idx] == 1.0:
            continue
        try:
            d = conservation_delta(p, work, idx, m, 1.0 - work[idx])
        except ValueError:
            return 0.0
        work[idx] = 1.0
        work[m] -= d
        if work[m] <= 0.0:
            return max(float(work[m]), 0.0)
    return float(work[m])
