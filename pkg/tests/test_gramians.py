"""Gramians, H2 machinery, peak gain, and the error-norm dispatcher."""

import math

import numpy as np
import numpy.testing as npt
import pytest

from tanmor import (
    EmptyGrid,
    InvariantViolation,
    NonzeroFeedthrough,
    StateSpace,
    controllability_gramian,
    error_norm,
    h2_norm_sq,
    peak_gain,
    psd_factor,
    series_sub,
)

from helpers import grid_peak, h2_sq_quadrature, random_mixed, random_stable


def lyap_defect(sys, theta):
    return np.linalg.norm(
        sys.A @ theta + theta @ sys.A.conj().T + sys.B @ sys.B.conj().T, "fro"
    )


class TestControllabilityGramian:
    @pytest.mark.parametrize("field", ["real", "complex"])
    def test_stable_solve_residual(self, field):
        sys = random_stable(8, 2, 2, seed=0, field=field)
        res = controllability_gramian(sys)
        scale = np.linalg.norm(sys.B @ sys.B.conj().T, "fro")
        assert lyap_defect(sys, res.theta) <= 1e-8 * scale
        assert res.residual <= 1e-8 * scale
        # Hermitian PSD
        npt.assert_allclose(res.theta, res.theta.conj().T, rtol=1e-12, atol=1e-14)
        assert np.linalg.eigvalsh(res.theta).min() >= -1e-10 * abs(
            np.linalg.eigvalsh(res.theta)
        ).max()

    def test_trace_matches_frequency_integral_real(self):
        sys = random_stable(6, 2, 3, seed=1)
        theta = controllability_gramian(sys).theta
        got = float(np.trace(sys.C @ theta @ sys.C.T))
        want = h2_sq_quadrature(sys)
        npt.assert_allclose(got, want, rtol=1e-7)

    def test_trace_matches_frequency_integral_complex(self):
        sys = random_stable(5, 2, 2, seed=2, field="complex")
        theta = controllability_gramian(sys).theta
        got = float(np.real(np.trace(sys.C @ theta @ sys.C.conj().T)))
        want = h2_sq_quadrature(sys)
        npt.assert_allclose(got, want, rtol=1e-7)

    @pytest.mark.parametrize("field", ["real", "complex"])
    def test_mixed_stability_matches_integral(self, field):
        """Poles on both sides: the two-sided resolvent integral is the reference."""
        sys = random_mixed(5, 3, 2, 2, seed=3, field=field)
        theta = controllability_gramian(sys).theta
        got = float(np.real(np.trace(sys.C @ theta @ sys.C.conj().T)))
        want = h2_sq_quadrature(sys)
        npt.assert_allclose(got, want, rtol=1e-6)

    def test_antistable_only(self):
        stable = random_stable(4, 1, 2, seed=4)
        anti = StateSpace(-stable.A, stable.B, stable.C, stable.D)
        theta = controllability_gramian(anti).theta
        got = float(np.trace(anti.C @ theta @ anti.C.T))
        npt.assert_allclose(got, h2_sq_quadrature(anti), rtol=1e-7)

    def test_imaginary_axis_pole_rejected(self):
        osc = StateSpace([[0.0, 2.0], [-2.0, 0.0]], [[1.0], [0.0]], [[1.0, 0.0]])
        with pytest.raises(InvariantViolation):
            controllability_gramian(osc)

    def test_order_zero(self):
        res = controllability_gramian(StateSpace.constant(np.ones((2, 2))))
        assert res.theta.shape == (0, 0)
        assert res.residual == 0.0


def test_psd_factor_reconstructs():
    rng = np.random.default_rng(5)
    F = rng.standard_normal((6, 4))
    theta = F @ F.T
    L = psd_factor(theta)
    npt.assert_allclose(L @ L.conj().T, theta, rtol=1e-10, atol=1e-12)


class TestH2Norm:
    def test_against_quadrature(self):
        sys = random_stable(7, 2, 2, seed=6)
        npt.assert_allclose(h2_norm_sq(sys), h2_sq_quadrature(sys), rtol=1e-7)

    def test_feedthrough_rejected(self):
        sys = random_stable(3, 1, 1, seed=7, feedthrough=True)
        with pytest.raises(NonzeroFeedthrough):
            h2_norm_sq(sys)

    def test_strict_proper_projection(self):
        sys = random_stable(3, 1, 1, seed=8, feedthrough=True)
        bare = StateSpace(sys.A, sys.B, sys.C, np.zeros((1, 1)))
        npt.assert_allclose(
            h2_norm_sq(sys, strict_proper=True), h2_norm_sq(bare), rtol=1e-13
        )

    def test_order_zero_is_zero(self):
        assert h2_norm_sq(StateSpace.constant(np.zeros((2, 3)))) == 0.0


class TestPeakGain:
    def test_sharp_resonance(self):
        # Pole pair at -0.005 +/- j: peak gain ~ 1/(2*zeta) = 100 near w = 1.
        w0, zeta = 1.0, 5e-3
        sys = StateSpace(
            [[0.0, w0], [-w0, -2 * zeta * w0]], [[0.0], [1.0]], [[1.0, 0.0]]
        )
        pg = peak_gain(sys, rtol=1e-8)
        assert abs(pg.omega_star - w0) < 1e-2
        npt.assert_allclose(pg.gain, 100.0, rtol=1e-3)

    @pytest.mark.parametrize("seed", range(6))
    def test_against_dense_grid(self, seed):
        sys = random_stable(7, 2, 3, seed=seed, feedthrough=(seed % 2 == 0))
        pg = peak_gain(sys, rtol=1e-6)
        _, grid_max = grid_peak(sys)
        assert grid_max <= pg.gain * 1.01
        assert pg.gain <= grid_max * 1.01

    def test_unstable_system(self):
        sys = random_mixed(4, 3, 2, 2, seed=30)
        pg = peak_gain(sys, rtol=1e-6)
        _, grid_max = grid_peak(sys)
        assert grid_max <= pg.gain * 1.01
        assert pg.gain <= grid_max * 1.01

    def test_complex_system_negative_peak(self):
        # A single complex pole at -0.01 + 3j peaks near w = +3 only; its
        # mirror system peaks near -3.  Signed search must find both.
        a = np.array([[-0.01 + 3.0j]])
        sys = StateSpace(a, [[1.0]], [[1.0]], scalar_field="complex")
        pg = peak_gain(sys)
        assert abs(pg.omega_star - 3.0) < 1e-2
        mirror = StateSpace(a.conj(), [[1.0]], [[1.0]], scalar_field="complex")
        pg2 = peak_gain(mirror)
        assert abs(pg2.omega_star + 3.0) < 1e-2

    def test_supremum_at_infinity(self):
        # G(s) = 1 - 1/(s+1) rises monotonically toward 1; no finite argmax.
        sys = StateSpace([[-1.0]], [[1.0]], [[-1.0]], [[1.0]])
        pg = peak_gain(sys)
        assert math.isinf(pg.omega_star)
        npt.assert_allclose(pg.gain, 1.0, rtol=1e-12)

    def test_constant_and_zero_systems(self):
        const = peak_gain(StateSpace.constant(np.diag([2.0, 0.5])))
        assert math.isinf(const.omega_star) and const.gain == 2.0
        zero = peak_gain(StateSpace([[-1.0]], [[0.0]], [[0.0]]))
        assert zero.gain == 0.0

    @pytest.mark.parametrize("rtol", [0.0, -1.0, 0.5, 0.7])
    def test_rtol_range(self, rtol):
        sys = random_stable(3, 1, 1, seed=9)
        with pytest.raises(ValueError):
            peak_gain(sys, rtol=rtol)


class TestErrorNorm:
    def test_exact_path(self):
        g = random_stable(8, 2, 2, seed=10)
        r = random_stable(3, 2, 2, seed=11)
        est = error_norm(g, r, [])
        assert not est.approximate
        want = math.sqrt(h2_sq_quadrature(series_sub(g, r)))
        npt.assert_allclose(est.value, want, rtol=1e-6)

    def test_quadrature_fallback(self):
        g = random_stable(6, 2, 2, seed=12)
        r = random_mixed(2, 2, 2, 2, seed=13)  # reduced model went unstable
        grid = np.geomspace(1e-3, 1e3, 3000)
        est = error_norm(g, r, grid)
        assert est.approximate
        want = math.sqrt(h2_sq_quadrature(series_sub(g, r)))
        npt.assert_allclose(est.value, want, rtol=2e-2)

    def test_feedthrough_mismatch(self):
        g = random_stable(3, 1, 1, seed=14, feedthrough=True)
        r = random_stable(2, 1, 1, seed=15)
        with pytest.raises(NonzeroFeedthrough):
            error_norm(g, r, [])

    def test_tiny_fallback_grid(self):
        g = random_stable(3, 1, 1, seed=16)
        r = random_mixed(1, 1, 1, 1, seed=17)
        with pytest.raises(EmptyGrid):
            error_norm(g, r, [1.0])

    def test_matched_feedthrough_cancels(self):
        g = random_stable(5, 2, 2, seed=18, feedthrough=True)
        r = StateSpace(g.A, g.B, g.C, g.D)
        est = error_norm(g, r, [])
        assert est.value <= 1e-10
