"""Tests for the power-mean operators and their gradients."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fplbpg.powermean import (
    GRAD_FLOOR,
    NEG_INF,
    POS_INF,
    power_mean,
    power_mean_grad,
)


def fd_grad(p, xs, h=1e-6):
    """Central finite-difference oracle for the power-mean gradient."""
    xs = np.asarray(xs, dtype=float)
    out = np.empty_like(xs)
    for i in range(xs.size):
        hi = xs.copy()
        lo = xs.copy()
        hi[i] += h
        lo[i] -= h
        out[i] = (power_mean(p, hi) - power_mean(p, lo)) / (2 * h)
    return out


class TestPowerMean:
    def test_arithmetic_mean(self):
        assert power_mean(1.0, (0.2, 0.4)) == pytest.approx(0.3, abs=1e-12)

    def test_geometric_mean(self):
        assert power_mean(0.0, (0.25, 1.0)) == pytest.approx(0.5, abs=1e-12)

    def test_minimum_limit(self):
        assert power_mean(NEG_INF, (0.3, 0.7)) == 0.3

    def test_maximum_limit(self):
        assert power_mean(POS_INF, (0.3, 0.7)) == 0.7

    def test_zero_annihilation_for_negative_p(self):
        assert power_mean(-1.0, (0.0, 0.5)) == 0.0

    def test_geometric_zero_short_circuit(self):
        assert power_mean(0.0, (0.0, 0.9)) == 0.0

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError):
            power_mean(1.0, ())

    def test_negative_element_rejected(self):
        with pytest.raises(ValueError):
            power_mean(1.0, (0.5, -0.1))

    def test_nan_exponent_rejected(self):
        with pytest.raises(ValueError):
            power_mean(float("nan"), (0.5, 0.5))

    def test_equal_inputs_are_bit_exact(self):
        for p in (-5.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, NEG_INF, POS_INF):
            assert power_mean(p, (0.37, 0.37, 0.37)) == 0.37

    def test_harmonic_mean_value(self):
        # M_{-1}(0.5, 0.25) = 2 / (2 + 4) = 1/3
        assert power_mean(-1.0, (0.5, 0.25)) == pytest.approx(1 / 3, rel=1e-12)


class TestPowerMeanProperties:
    """Randomized checks of the four algebraic properties."""

    P_CHOICES = [-6.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 6.0, NEG_INF, POS_INF]

    def _random_cases(self, count, seed=7):
        rng = np.random.default_rng(seed)
        for _ in range(count):
            n = int(rng.integers(1, 9))
            xs = rng.uniform(0.0, 1.0, size=n)
            p = rng.uniform(-6.0, 6.0) if rng.random() < 0.8 else float(rng.choice(self.P_CHOICES))
            yield p, xs

    def test_range_preservation(self):
        for p, xs in self._random_cases(10_000):
            m = power_mean(p, xs)
            assert xs.min() - 1e-9 <= m <= xs.max() + 1e-9

    def test_commutativity(self):
        rng = np.random.default_rng(11)
        for p, xs in self._random_cases(10_000, seed=13):
            perm = rng.permutation(xs)
            assert power_mean(p, xs) == pytest.approx(power_mean(p, perm), abs=1e-12)

    def test_monotonicity_in_components(self):
        rng = np.random.default_rng(17)
        for p, xs in self._random_cases(10_000, seed=19):
            bumped = xs.copy()
            i = int(rng.integers(xs.size))
            bumped[i] = min(1.0, bumped[i] + rng.uniform(0.0, 0.5))
            assert power_mean(p, bumped) >= power_mean(p, xs) - 1e-9

    def test_monotonicity_in_p(self):
        rng = np.random.default_rng(23)
        for _, xs in self._random_cases(10_000, seed=29):
            p1, p2 = sorted(rng.uniform(-6.0, 6.0, size=2))
            assert power_mean(p1, xs) <= power_mean(p2, xs) + 1e-12

    def test_limit_consistency_large_p(self):
        rng = np.random.default_rng(31)
        for _ in range(200):
            xs = rng.uniform(0.01, 1.0, size=int(rng.integers(2, 9)))
            assert abs(power_mean(1e6, xs) - xs.max()) <= 1e-3
            assert abs(power_mean(-1e6, xs) - xs.min()) <= 1e-3

    def test_limit_consistency_small_p(self):
        rng = np.random.default_rng(37)
        for _ in range(200):
            xs = rng.uniform(0.01, 1.0, size=int(rng.integers(2, 9)))
            geo = math.exp(np.mean(np.log(xs)))
            assert abs(power_mean(1e-9, xs) - geo) <= 1e-6
            assert abs(power_mean(-1e-9, xs) - geo) <= 1e-6

    @given(
        st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=1, max_size=8),
        st.floats(min_value=-6.0, max_value=6.0),
    )
    @settings(max_examples=300, deadline=None)
    def test_range_preservation_hypothesis(self, xs, p):
        m = power_mean(p, xs)
        assert min(xs) - 1e-9 <= m <= max(xs) + 1e-9


class TestPowerMeanGrad:
    def test_arithmetic_mean_gradient(self):
        g = power_mean_grad(1.0, (0.2, 0.4))
        assert g == pytest.approx([0.5, 0.5], abs=1e-12)

    def test_geometric_mean_gradient(self):
        # frozen from the finite-difference oracle (h=1e-6); analytically
        # M_0/(n*x_i) = 0.5/(2*0.25), 0.5/(2*1.0)
        g = power_mean_grad(0.0, (0.25, 1.0))
        assert g == pytest.approx([1.0, 0.25], rel=1e-9)
        assert g == pytest.approx(fd_grad(0.0, (0.25, 1.0)), rel=1e-4)

    def test_harmonic_equal_inputs(self):
        # symmetry + degree-1 homogeneity: gradients sum to 1 at equal inputs
        g = power_mean_grad(-1.0, (0.5, 0.5))
        assert g == pytest.approx([0.5, 0.5], abs=1e-12)

    def test_infinite_p_rejected(self):
        with pytest.raises(ValueError):
            power_mean_grad(POS_INF, (0.5, 0.5))
        with pytest.raises(ValueError):
            power_mean_grad(NEG_INF, (0.5, 0.5))

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(41)
        for _ in range(500):
            n = int(rng.integers(1, 9))
            xs = rng.uniform(10 * GRAD_FLOOR, 1.0, size=n)
            p = rng.uniform(-5.0, 5.0)
            if abs(p) < 1e-3:
                p = 0.0
            g = power_mean_grad(p, xs)
            ref = fd_grad(p, xs)
            assert np.allclose(g, ref, rtol=1e-4, atol=1e-9)

    def test_gradient_nonnegative(self):
        rng = np.random.default_rng(43)
        for _ in range(1000):
            xs = rng.uniform(0.0, 1.0, size=int(rng.integers(1, 9)))
            p = rng.uniform(-5.0, 5.0)
            assert (power_mean_grad(p, xs) >= 0.0).all()

    def test_euler_homogeneity(self):
        # sum_i x_i * dM/dx_i = M for degree-1 homogeneous means
        rng = np.random.default_rng(47)
        for _ in range(2000):
            xs = rng.uniform(1e-3, 1.0, size=int(rng.integers(1, 9)))
            p = rng.uniform(-5.0, 5.0)
            if abs(p) < 1e-3:
                p = 0.0
            g = power_mean_grad(p, xs)
            assert float(xs @ g) == pytest.approx(power_mean(p, xs), abs=1e-9)

    def test_zero_input_clamped_not_rejected(self):
        g = power_mean_grad(-1.0, (0.0, 0.5))
        assert np.isfinite(g).all()
        assert (g >= 0.0).all()
