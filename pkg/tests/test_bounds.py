"""Tests for the guarantee formulas: minimum bound, conservation, worst case."""

import numpy as np
import pytest

from fplbpg.powermean import (
    conservation_delta,
    min_fulfillment_bound,
    power_mean,
    worst_case_reduce,
)


def bruteforce_min_bound(p, y, grid=20001):
    """Grid-search oracle: the v in (v, 1) pairs whose M_p lands on y, n = 2."""
    vs = np.linspace(0.0, 1.0, grid)
    errs = [abs(power_mean(p, (v, 1.0)) - y) for v in vs]
    return float(vs[int(np.argmin(errs))])


class TestMinFulfillmentBound:
    def test_full_fulfillment(self):
        assert min_fulfillment_bound(-2.0, 2, 1.0) == pytest.approx(1.0, abs=1e-12)

    def test_two_objectives_strict_conjunction(self):
        # Lemma-style closed form gives ~0.8250 for n=2, p=-2, y=0.9.
        b = min_fulfillment_bound(-2.0, 2, 0.9)
        assert b == pytest.approx(0.8250, abs=1e-4)
        # cross-check against the brute-force grid search over (v, 1) pairs
        assert b == pytest.approx(bruteforce_min_bound(-2.0, 0.9), abs=2e-4)

    def test_prose_value_discrepancy_pinned(self):
        # A published worked example quotes 0.38 for this case; the closed
        # form it cites yields ~0.825.  Pin the formula's value so any
        # change that "fixes" it back to 0.38 fails loudly.
        b = min_fulfillment_bound(-2.0, 2, 0.9)
        assert abs(b - 0.38) > 0.4
        assert b == pytest.approx(0.8250286473, abs=1e-9)

    def test_harmonic_three_objectives(self):
        # 1/(3*(1/0.5 - 1) + 1) = 1/4
        b = min_fulfillment_bound(-1.0, 3, 0.5)
        assert b == pytest.approx(0.25, rel=1e-12)
        assert power_mean(-1.0, (1.0, 1.0, b)) == pytest.approx(0.5, rel=1e-12)

    def test_vacuous_bound_positive_p(self):
        # arithmetic mean 0.1 over two elements forces no positive minimum
        assert min_fulfillment_bound(1.0, 2, 0.1) == 0.0

    def test_divergent_radicand_negative_p(self):
        assert min_fulfillment_bound(-2.0, 4, 0.0) == 0.0

    def test_p_zero_rejected(self):
        with pytest.raises(ValueError):
            min_fulfillment_bound(0.0, 2, 0.5)

    def test_infinite_p_rejected(self):
        with pytest.raises(ValueError):
            min_fulfillment_bound(float("inf"), 2, 0.5)

    def test_soundness_randomized(self):
        # Theorem: min(xs) >= bound(p, n, M_p(xs)) for xs in [0,1]^n.
        rng = np.random.default_rng(53)
        for _ in range(10_000):
            n = int(rng.integers(1, 9))
            xs = rng.uniform(0.0, 1.0, size=n)
            p = rng.uniform(0.1, 5.0) * (-1 if rng.random() < 0.5 else 1)
            y = power_mean(p, xs)
            assert xs.min() >= min_fulfillment_bound(p, n, min(y, 1.0)) - 1e-9


class TestConservationDelta:
    def test_arithmetic_mean_equal_and_opposite(self):
        d = conservation_delta(1.0, (0.5, 0.5), 0, 1, 0.1)
        assert d == pytest.approx(0.1, abs=1e-12)

    def test_zero_perturbation(self):
        assert conservation_delta(2.0, (0.6, 0.8), 0, 1, 0.0) == 0.0

    def test_harmonic_recomputation(self):
        xs = np.array([0.5, 0.5])
        d = conservation_delta(-1.0, xs, 0, 1, 0.25)
        after = np.array([xs[0] + 0.25, xs[1] - d])
        assert power_mean(-1.0, after) == pytest.approx(
            power_mean(-1.0, xs), rel=1e-12
        )

    def test_same_index_rejected(self):
        with pytest.raises(ValueError):
            conservation_delta(1.0, (0.5, 0.5), 1, 1, 0.1)

    def test_invalid_radicand_errors(self):
        # raising x_0 from 0.5 to 1.5 under p=1 would need x_1 below 0
        with pytest.raises(ValueError):
            conservation_delta(1.0, (0.5, 0.4), 0, 1, 1.0)

    def test_lowering_to_zero_under_negative_p_errors(self):
        with pytest.raises(ValueError):
            conservation_delta(-1.0, (0.5, 0.5), 0, 1, -0.5)

    def test_conservation_randomized(self):
        rng = np.random.default_rng(59)
        checked = 0
        while checked < 10_000:
            n = int(rng.integers(2, 9))
            xs = rng.uniform(0.05, 1.0, size=n)
            i, j = rng.choice(n, size=2, replace=False)
            delta = rng.uniform(-0.5, 0.5)
            if xs[i] + delta <= 0.0:
                continue
            try:
                d = conservation_delta(float(rng.uniform(0.1, 4.0) * rng.choice([-1, 1])), xs, i, j, delta)
            except ValueError:
                continue
            checked += 1

    def test_conservation_preserves_mean_randomized(self):
        rng = np.random.default_rng(61)
        checked = 0
        while checked < 10_000:
            n = int(rng.integers(2, 9))
            xs = rng.uniform(0.05, 1.0, size=n)
            p = float(rng.uniform(0.1, 4.0) * rng.choice([-1, 1]))
            i, j = (int(v) for v in rng.choice(n, size=2, replace=False))
            delta = float(rng.uniform(-0.5, 0.5))
            if xs[i] + delta <= 0.0:
                continue
            try:
                d = conservation_delta(p, xs, i, j, delta)
            except ValueError:
                continue
            after = xs.copy()
            after[i] += delta
            after[j] -= d
            if after[j] < 0.0:
                continue
            before_m = power_mean(p, xs)
            after_m = power_mean(p, after)
            assert after_m == pytest.approx(before_m, rel=1e-12)
            checked += 1


class TestWorstCaseReduce:
    def test_already_worst_case(self):
        for p in (-2.0, -1.0, 0.5, 1.0, 3.0):
            assert worst_case_reduce(p, (1.0, 1.0, 0.4)) == pytest.approx(0.4, abs=1e-12)

    def test_matches_bound_for_strict_conjunction(self):
        v = worst_case_reduce(-2.0, (0.9, 0.9))
        assert v == pytest.approx(min_fulfillment_bound(-2.0, 2, 0.9), abs=1e-12)
        assert power_mean(-2.0, (1.0, v)) == pytest.approx(0.9, rel=1e-12)

    def test_arithmetic_mean_case(self):
        # (0.5 + 0.7) - 1 = 0.2 conserves the arithmetic mean
        assert worst_case_reduce(1.0, (0.5, 0.7)) == pytest.approx(0.2, rel=1e-9)

    def test_below_minimum(self):
        rng = np.random.default_rng(67)
        for _ in range(2000):
            n = int(rng.integers(1, 9))
            xs = rng.uniform(0.0, 1.0, size=n)
            p = float(rng.uniform(0.1, 5.0) * rng.choice([-1, 1]))
            assert worst_case_reduce(p, xs) <= xs.min() + 1e-12

    def test_agrees_with_closed_form(self):
        # constructive route (iterated conservation) vs Lemma-style formula
        rng = np.random.default_rng(71)
        for _ in range(2000):
            n = int(rng.integers(1, 9))
            xs = rng.uniform(0.0, 1.0, size=n)
            p = float(rng.uniform(0.1, 5.0) * rng.choice([-1, 1]))
            v = worst_case_reduce(p, xs)
            closed = min_fulfillment_bound(p, n, min(power_mean(p, xs), 1.0))
            assert v == pytest.approx(closed, abs=1e-9)

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            worst_case_reduce(-1.0, (0.5, 1.2))
