import numpy as np
import pytest
from scipy.integrate import quad

from extlab.geometry import BoxGrid
from extlab.weights import (
    GaussianMixture,
    GridSampledWeight,
    mixture_from_json,
    random_signed_mixture,
    sample_on_grid,
    standard_gaussian,
)


class TestMixtureBasics:
    def test_unit_mass_fourier_at_zero(self):
        w = standard_gaussian(3, width=0.7, mass=1.0)
        assert abs(w.fourier(np.zeros((1, 3)))[0] - 1.0) < 1e-14

    def test_self_dual_gaussian(self):
        w = standard_gaussian(2, width=1.0)
        rng = np.random.default_rng(0)
        xi = rng.standard_normal((50, 2))
        expect = np.exp(-np.pi * np.sum(xi**2, axis=1))
        assert np.max(np.abs(w.fourier(xi) - expect)) < 1e-14

    def test_conjugate_symmetry(self):
        rng = np.random.default_rng(1)
        w = random_signed_mixture(rng, 3, 5, 1.5, (0.4, 1.2))
        xi = rng.standard_normal((40, 3))
        assert np.max(np.abs(np.conj(w.fourier(xi)) - w.fourier(-xi))) < 1e-13

    def test_width_validation(self):
        with pytest.raises(ValueError):
            GaussianMixture(np.array([1.0]), np.zeros((1, 2)), np.array([0.0]))

    def test_nonnegative_verification(self):
        w = GaussianMixture(np.array([1.0, -0.9]), np.array([[0.0, 0.0], [0.3, 0.0]]),
                            np.array([0.5, 0.5]))
        with pytest.raises(ValueError):
            w.verify_nonnegative()


class TestLineIntegrals:
    def test_gaussian_factorizes(self):
        w = standard_gaussian(3, width=1.0)
        rng = np.random.default_rng(2)
        om = rng.standard_normal(3)
        om /= np.linalg.norm(om)
        # v perp omega
        v = np.cross(om, [0.0, 0.0, 1.0])
        v /= np.linalg.norm(v)
        v *= 0.8
        got = w.line_integral(v[None], om[None])[0]
        assert abs(got - np.exp(-np.pi * 0.64)) < 1e-14

    def test_quad_oracle_random_line(self):
        rng = np.random.default_rng(3)
        w = random_signed_mixture(rng, 2, 4, 1.0, (0.3, 1.0))
        p = rng.standard_normal(2)
        d = rng.standard_normal(2)
        oracle = quad(lambda t: w((p + t * d)[None])[0], -30, 30, limit=300)[0]
        got = w.line_integral(p[None], d[None])[0]
        assert abs(got - oracle) < 1e-9

    def test_translation_covariance(self):
        w = standard_gaussian(3, width=0.9)
        a = np.array([0.3, -0.2, 0.5])
        shifted = GaussianMixture(w.coeffs, w.centers + a, w.widths)
        om = np.array([0.0, 0.0, 1.0])
        v = np.array([0.4, 0.1, 0.0])
        a_perp = a - (a @ om) * om
        lhs = shifted.line_integral(v[None], om[None])[0]
        rhs = w.line_integral((v - a_perp)[None], om[None])[0]
        assert abs(lhs - rhs) < 1e-14


class TestAutocorrelation:
    def test_single_gaussian_doubles_variance(self):
        w = GaussianMixture(np.array([2.0]), np.array([[0.5, 0.0]]), np.array([0.8]))
        ac = w.autocorrelate()
        assert np.allclose(ac.centers, 0.0)
        assert np.allclose(ac.widths, 0.8 * np.sqrt(2))
        assert np.allclose(ac.coeffs, 4.0 * (0.8 / np.sqrt(2)) ** 2)

    def test_peak_is_l2_norm_sq(self):
        rng = np.random.default_rng(4)
        w = random_signed_mixture(rng, 2, 5, 1.0, (0.4, 1.0))
        grid = BoxGrid(2, side=14.0, npts=281)
        vals = w(grid.nodes())
        l2_sq = np.sum(vals**2) * grid.cell_volume
        assert abs(w.autocorrelate()(np.zeros((1, 2)))[0] - l2_sq) < 1e-6

    def test_autocorrelation_even(self):
        rng = np.random.default_rng(5)
        w = random_signed_mixture(rng, 3, 4, 1.0, (0.4, 1.0))
        ac = w.autocorrelate()
        x = rng.standard_normal((30, 3))
        assert np.max(np.abs(ac(x) - ac(-x))) < 1e-12

    def test_fourier_of_autocorrelation_is_power_spectrum(self):
        rng = np.random.default_rng(6)
        w = random_signed_mixture(rng, 2, 3, 1.0, (0.5, 1.0))
        xi = rng.standard_normal((20, 2))
        lhs = w.autocorrelate().fourier(xi)
        rhs = np.abs(w.fourier(xi)) ** 2
        assert np.max(np.abs(lhs - rhs)) < 1e-12


class TestGridSampled:
    def test_bump_fourier_matches_closed_form(self):
        w = standard_gaussian(2, width=0.6)
        grid = BoxGrid(2, side=8.0, npts=96)
        ws = sample_on_grid(w, grid)
        rng = np.random.default_rng(7)
        xi = rng.uniform(-1.5, 1.5, (25, 2))
        assert np.max(np.abs(ws.fourier(xi) - w.fourier(xi))) < 1e-6

    def test_ball_indicator_chord_length(self):
        grid = BoxGrid(2, side=3.0, npts=150)
        nodes = grid.nodes()
        vals = (np.linalg.norm(nodes, axis=1) <= 1.0).astype(float)
        ws = GridSampledWeight(grid, vals.reshape(150, 150), nonnegative=True)
        om = np.array([[1.0, 0.0]])
        for b in (0.0, 0.3, 0.7):
            v = np.array([[0.0, b]])
            chord = 2.0 * np.sqrt(1.0 - b**2)
            assert abs(ws.line_integral(v, om)[0] - chord) < 2 * grid.step

    def test_nonnegative_flag(self):
        grid = BoxGrid(2, side=2.0, npts=8)
        with pytest.raises(ValueError):
            GridSampledWeight(grid, -np.ones((8, 8)), nonnegative=True)


class TestSerialization:
    def test_roundtrip(self):
        rng = np.random.default_rng(8)
        w = random_signed_mixture(rng, 3, 4, 1.0, (0.5, 1.2))
        w2 = mixture_from_json(w.to_json())
        x = rng.standard_normal((20, 3))
        assert np.max(np.abs(w(x) - w2(x))) < 1e-15
