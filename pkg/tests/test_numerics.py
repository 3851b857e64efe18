import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from musm.errors import NonFiniteIntegrand, NotHermitian, NotPsd, RankDeficient
from musm.numerics import hermitian_sqrt, pseudo_inverse, q_function, quad_half_pi

from conftest import crandn


class TestHermitianSqrt:
    def test_identity(self):
        np.testing.assert_allclose(hermitian_sqrt(np.eye(4)), np.eye(4), atol=1e-15)

    def test_diagonal(self):
        np.testing.assert_allclose(hermitian_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), atol=1e-14)

    def test_random_psd_remultiplies(self, rng):
        b = crandn(rng, 6, 6)
        a = b @ b.conj().T
        s = hermitian_sqrt(a)
        assert np.linalg.norm(s @ s - a) / np.linalg.norm(a) < 1e-10
        np.testing.assert_allclose(s, s.conj().T, atol=1e-14)
        assert np.linalg.eigvalsh(s).min() >= -1e-12

    def test_clamps_roundoff_negative(self):
        # rank-one matrix perturbed below zero at the last digit
        v = np.array([1.0, 1.0, 1.0])
        a = np.outer(v, v) - 1e-14 * np.eye(3)
        s = hermitian_sqrt(a)
        assert np.all(np.isfinite(s))

    def test_rejects_indefinite(self):
        with pytest.raises(NotPsd):
            hermitian_sqrt(np.diag([1.0, -0.5]))

    def test_rejects_non_hermitian(self):
        with pytest.raises(NotHermitian):
            hermitian_sqrt(np.array([[1.0, 0.5], [0.2, 1.0]]))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 12), st.integers(0, 2**32 - 1))
    def test_property_square_reproduces(self, n, seed):
        r = np.random.default_rng(seed)
        b = crandn(r, n, n)
        a = b @ b.conj().T
        s = hermitian_sqrt(a)
        assert np.linalg.norm(s @ s - a) <= 1e-10 * np.linalg.norm(a)


class TestPseudoInverse:
    def test_identity(self):
        np.testing.assert_allclose(pseudo_inverse(np.eye(3)), np.eye(3), atol=1e-15)

    def test_diagonal(self):
        w = pseudo_inverse(np.array([[2.0, 0, 0], [0, 4.0, 0]]))
        np.testing.assert_allclose(w, [[0.5, 0], [0, 0.25], [0, 0]], atol=1e-15)

    def test_random_right_inverse(self, rng):
        h = crandn(rng, 4, 8)
        assert np.linalg.norm(h @ pseudo_inverse(h) - np.eye(4)) < 1e-9

    def test_moore_penrose_identity_many(self, rng):
        for _ in range(1000):
            k, n = rng.integers(1, 6), rng.integers(6, 12)
            h = crandn(rng, k, n)
            w = pseudo_inverse(h)
            assert np.linalg.norm(h @ w @ h - h) <= 1e-9 * np.linalg.norm(h)

    def test_rank_deficient(self):
        h = np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0]])
        with pytest.raises(RankDeficient):
            pseudo_inverse(h)

    def test_tall_rejected(self):
        with pytest.raises(RankDeficient):
            pseudo_inverse(np.ones((3, 2)))


def rayleigh_closed_form(g):
    return 0.5 * (1 - math.sqrt(g / (1 + g)))


class TestQuadrature:
    def test_constant(self):
        assert quad_half_pi(lambda t: 1.0) == pytest.approx(0.5, abs=1e-15)

    def test_sin_squared(self):
        assert quad_half_pi(lambda t: np.sin(t) ** 2) == pytest.approx(0.25, abs=1e-14)

    def test_rayleigh_gamma_one(self):
        val = quad_half_pi(lambda t: 1.0 / (1.0 + 1.0 / np.sin(t) ** 2))
        assert val == pytest.approx(0.14644660940672624, abs=1e-12)

    @pytest.mark.parametrize("g", [0.1, 1.0, 10.0, 100.0])
    def test_rayleigh_closed_form(self, g):
        val = quad_half_pi(lambda t: 1.0 / (1.0 + g / np.sin(t) ** 2))
        assert abs(val - rayleigh_closed_form(g)) < 1e-9

    @pytest.mark.parametrize("g", [0.1, 1.0, 10.0, 100.0, 1e4])
    def test_node_doubling_stable(self, g):
        f = lambda t: 1.0 / (1.0 + g / np.sin(t) ** 2) ** 2  # noqa: E731
        assert abs(quad_half_pi(f, 64) - quad_half_pi(f, 128)) <= 1e-10

    def test_scalar_only_callable(self):
        assert quad_half_pi(lambda t: math.cos(t) ** 0) == pytest.approx(0.5)

    def test_non_finite(self):
        with pytest.raises(NonFiniteIntegrand):
            quad_half_pi(lambda t: np.where(t > 1.0, np.inf, 1.0))

    def test_too_few_nodes(self):
        with pytest.raises(ValueError):
            quad_half_pi(lambda t: 1.0, nodes=8)


class TestQFunction:
    def test_zero(self):
        assert q_function(0.0) == 0.5

    def test_tail(self):
        assert q_function(40.0) < 1e-300

    def test_one(self):
        # erfc(1/sqrt(2))/2 from mpmath at 30 digits
        import mpmath

        mpmath.mp.dps = 30
        ref = float(mpmath.erfc(1 / mpmath.sqrt(2)) / 2)
        assert q_function(1.0) == pytest.approx(ref, rel=1e-14)
        assert q_function(1.0) == pytest.approx(0.158655, abs=1e-6)

    @given(st.floats(-8, 8))
    def test_symmetry(self, x):
        assert abs(q_function(x) + q_function(-x) - 1.0) < 1e-12

    def test_monotone(self):
        x = np.linspace(-6, 6, 501)
        assert np.all(np.diff(q_function(x)) < 0)
