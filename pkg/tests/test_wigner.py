import numpy as np
import pytest

from extlab.geometry import BoxGrid, build_sphere_grid, cap_set, midpoint_set
from extlab.systems import (
    SurfaceFunction,
    make_harmonics,
    random_bump_system,
    smooth_cap_bump,
)
from extlab.transforms import extension, schrodinger_evolve
from extlab.wigner import (
    classical_wigner,
    kernel_L,
    moyal_classical,
    moyal_spherical,
    moyal_spherical_closed,
    spherical_wigner,
    velocity_average,
    wigner_point,
)


def band_limited_noise(rng, grid, band=1.2, nmodes=9):
    """Random resolved data: low-frequency modes under a gaussian envelope."""
    ks = np.linspace(-band, band, nmodes)
    c = rng.standard_normal(nmodes) + 1j * rng.standard_normal(nmodes)
    u = (np.exp(2j * np.pi * np.outer(grid.axis, ks)) @ c)
    return u * np.exp(-np.pi * grid.axis**2 / 4)


def hermite_data(grid, orders):
    """Orthonormal Hermite-function samples (exact closed forms, d=1)."""
    from numpy.polynomial.hermite import hermval

    x = grid.axis
    out = []
    for k in orders:
        c = np.zeros(k + 1)
        c[k] = 1.0
        # physicists' Hermite with weight e^{-pi x^2}, normalized on R
        h = hermval(np.sqrt(2 * np.pi) * x, c) * np.exp(-np.pi * x**2)
        h /= np.sqrt(np.sum(np.abs(h) ** 2) * grid.step)
        out.append(h.astype(complex))
    return out


@pytest.fixture(scope="module")
def line():
    return BoxGrid(1, side=12.0, npts=128)


@pytest.fixture(scope="module")
def s2():
    return build_sphere_grid(3, (16, 32))


class TestClassicalWigner:
    def test_gaussian_closed_form_d1(self, line):
        u = 2.0**0.25 * np.exp(-np.pi * line.axis**2)
        W = classical_wigner(line, u)
        X, V = np.meshgrid(line.axis, W.v_axis, indexing="ij")
        expect = 2.0 * np.exp(-2 * np.pi * (X**2 + V**2))
        assert np.max(np.abs(W.values - expect)) < 1e-10

    def test_gaussian_closed_form_d2(self):
        grid = BoxGrid(2, side=4.8, npts=32)
        nodes = grid.nodes()
        u = 2.0**0.5 * np.exp(-np.pi * np.sum(nodes**2, axis=1))
        W = classical_wigner(grid, u)
        ax, vx = grid.axis, W.v_axis
        X1, X2, V1, V2 = np.meshgrid(ax, ax, vx, vx, indexing="ij")
        expect = 4.0 * np.exp(-2 * np.pi * (X1**2 + X2**2 + V1**2 + V2**2))
        assert np.max(np.abs(W.values - expect)) < 1e-6

    def test_marginal_is_intensity(self, line):
        rng = np.random.default_rng(0)
        u = (rng.standard_normal(line.npts) + 1j * rng.standard_normal(line.npts))
        u *= np.exp(-np.pi * line.axis**2 / 4)
        W = classical_wigner(line, u)
        marg = np.real(np.sum(W.values, axis=1)) * W.v_step
        assert np.max(np.abs(marg - np.abs(u) ** 2)) < 1e-8

    def test_total_mass(self, line):
        u = hermite_data(line, [2])[0]
        W = classical_wigner(line, u)
        assert abs(W.integral() - np.sum(np.abs(u) ** 2) * line.step) < 1e-8

    def test_autowigner_real(self, line):
        rng = np.random.default_rng(1)
        u = (rng.standard_normal(line.npts) + 1j * rng.standard_normal(line.npts))
        u *= np.exp(-np.pi * line.axis**2 / 3)
        W = classical_wigner(line, u)
        assert np.max(np.abs(W.values.imag)) < 1e-10 * np.max(np.abs(W.values))


class TestMoyalClassical:
    def test_normalized_gaussian_gives_one(self, line):
        u = 2.0**0.25 * np.exp(-np.pi * line.axis**2)
        u /= np.sqrt(np.sum(np.abs(u) ** 2) * line.step)
        val = moyal_classical(line, u, u, u, u) * line.step  # see note below
        # <W(u,u), W(u,u)> = |<u,u>|^2 = 1 for normalized u
        assert abs(moyal_classical(line, u, u, u, u) - 1.0) < 1e-6

    def test_orthogonal_pair(self, line):
        f, g = hermite_data(line, [0, 1])
        val = moyal_classical(line, f, f, g, g)
        assert abs(val) < 1e-8

    def test_random_pair_identity(self, line):
        rng = np.random.default_rng(2)
        fs = [band_limited_noise(rng, line) for _ in range(4)]
        f1, f2, g1, g2 = fs
        lhs = moyal_classical(line, f1, f2, g1, g2)
        ip = lambda a, b: np.sum(a * np.conj(b)) * line.step
        rhs = ip(f1, g1) * np.conj(ip(f2, g2))
        scale = np.sqrt(ip(f1, f1).real * ip(f2, f2).real * ip(g1, g1).real * ip(g2, g2).real)
        assert abs(lhs - rhs) < 1e-6 * scale

    def test_wigner_gram_of_orthonormal_family(self, line):
        data = hermite_data(line, [0, 1, 2, 3])
        m = len(data)
        gram = np.empty((m, m), dtype=complex)
        for j in range(m):
            for k in range(m):
                gram[j, k] = moyal_classical(line, data[j], data[j], data[k], data[k])
        assert np.max(np.abs(gram - np.eye(m))) < 1e-6


class TestFourierInvariance:
    def test_swap_identity(self):
        # with the forward transform uh = F u, the exact relation is
        # W(uh)(xi, x) = W(u)(-x, xi)
        grid = BoxGrid(1, side=12.0, npts=128)
        rng = np.random.default_rng(3)
        u = band_limited_noise(rng, grid)
        fgrid = BoxGrid(1, side=8.0, npts=128)
        phase = np.exp(-2j * np.pi * np.outer(fgrid.axis, grid.axis))
        uh = grid.step * (phase @ u)
        for xi_idx in (40, 64, 90):
            for x_idx in (50, 64, 77):
                neg_x_idx = grid.npts - 1 - x_idx  # -axis[i] = axis[N-1-i]
                wu = wigner_point(grid, u, u, neg_x_idx,
                                  np.array([fgrid.axis[xi_idx]]))[0]
                wh = wigner_point(fgrid, uh, uh, xi_idx,
                                  np.array([grid.axis[x_idx]]))[0]
                assert abs(wu - wh) < 1e-6 * max(1.0, abs(wu))


class TestTransport:
    def test_velocity_average_matches_evolution(self):
        grid = BoxGrid(1, side=12.0, npts=320)
        u0 = np.exp(-np.pi * grid.axis**2).astype(complex)
        W = classical_wigner(grid, u0)
        freq = BoxGrid(1, side=8.0, npts=129)
        uhat = np.exp(-np.pi * freq.nodes()[:, 0] ** 2)
        for t in (0.0, 0.25, 0.5):
            xs = np.linspace(-1.0, 1.0, 7)
            ut = schrodinger_evolve(freq, uhat, t, xs[:, None])
            rho = velocity_average(W, xs, -2.0 * t)
            rel = np.abs(rho - np.abs(ut) ** 2) / np.abs(ut) ** 2
            assert np.max(rel) < 1e-4


class TestSphericalWigner:
    def test_full_sphere_value_at_zero(self, s2):
        ones = SurfaceFunction(s2, np.ones(s2.size),
                               cap_set(s2, np.array([0, 0, 1.0]), np.pi + 1))
        om = s2.nodes[37]
        val = spherical_wigner(ones, ones, om, np.zeros((1, 3)))[0]
        # 2 int |omega.w'| dsigma(w') = 4 pi; the |cos| kink at the equator
        # limits the 16x32 product rule to ~1e-3 relative
        assert abs(val - 4 * np.pi) < 1e-2

    def test_support_in_midpoint_set(self, s2):
        g = smooth_cap_bump(s2, np.array([0.0, 0.0, 1.0]), 0.5, 3.0, 0.2)
        M = midpoint_set(g.support)
        outside = np.nonzero(~M.mask)[0]
        rng = np.random.default_rng(4)
        v = rng.standard_normal((4, 3))
        for idx in outside[:: max(1, len(outside) // 10)]:
            vals = spherical_wigner(g, g, s2.nodes[idx], v)
            assert np.max(np.abs(vals)) < 1e-12

    def test_hermitian_real(self, s2):
        rng = np.random.default_rng(5)
        sys = random_bump_system(s2, rng, 2)
        g = sys.functions[0]
        om = s2.nodes[200]
        v = rng.standard_normal((6, 3))
        vals = spherical_wigner(g, g, om, v - (v @ om)[:, None] * om[None])
        assert np.max(np.abs(vals.imag)) < 1e-10 * max(1.0, np.max(np.abs(vals)))

    def test_phase_space_representation(self):
        # X* W(g,g) = |E g|^2: adjoint X-ray of the Wigner field; the
        # omega-quadrature is oscillatory in |x|, so certify on 24x48
        grid = build_sphere_grid(3, (24, 48))
        rng = np.random.default_rng(6)
        sys = random_bump_system(grid, rng, 2)
        g = sys.functions[1]
        pts = rng.standard_normal((8, 3)) * 1.2
        lhs = np.zeros(8)
        for i in range(grid.size):
            lhs += grid.qweights[i] * spherical_wigner(g, g, grid.nodes[i], pts).real
        rhs = np.abs(extension(grid, g.values, pts)) ** 2
        assert np.max(np.abs(lhs - rhs)) < 1e-3 * np.max(rhs)


class TestMoyalSpherical:
    def test_hemisphere_half(self, s2):
        g = smooth_cap_bump(s2, np.array([0.0, 0.0, 1.0]), 1.2, 3.0, 0.35)
        nrm = g.norm()
        gn = SurfaceFunction(s2, g.values / nrm, g.support,
                             fn=lambda pts, f=g.fn, nn=nrm: f(pts) / nn)
        a, b = moyal_spherical(gn, gn, gn, gn)
        assert abs(gn.inner(gn.tilde())) < 1e-14  # disjoint supports
        assert abs(b - 0.5) < 1e-12
        assert abs(a - 0.5) < 1e-2 * 0.5

    def test_self_quadruple_formula(self, s2):
        rng = np.random.default_rng(7)
        sys = random_bump_system(s2, rng, 1)
        g = sys.functions[0]
        expect = 0.5 * (1.0 + abs(g.inner(g.tilde())) ** 2)
        a, b = moyal_spherical(g, g, g, g)
        assert abs(b - expect) < 1e-10
        assert abs(a - expect) < 1e-2 * expect

    def test_random_quadruples_routes_agree(self, s2):
        rng = np.random.default_rng(8)
        sys = random_bump_system(s2, rng, 4)
        f1, f2, g1, g2 = sys.functions
        a, b = moyal_spherical(f1, f2, g1, g2)
        scale = max(abs(b), 1e-3)
        assert abs(a - b) < 1e-2 * scale


class TestKernelL:
    def test_orthonormal_antipodally_clean(self, s2):
        # two caps with no antipodal overlap: <g_j, g~_k> = 0 off-diagonal
        caps = [np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0])]
        rng = np.random.default_rng(9)
        funcs = []
        for c in caps:
            b = smooth_cap_bump(s2, c, 0.5, rng.uniform(2, 5), 0.2)
            funcs.append(SurfaceFunction(s2, b.values / b.norm(), b.support))
        from extlab.systems import OrthonormalSystem, gram_matrix

        sys = OrthonormalSystem(funcs, gram_matrix(funcs))
        L, schur = kernel_L(sys)
        for j, f in enumerate(funcs):
            expect = 1.0 + abs(f.inner(f.tilde())) ** 2
            assert abs(L[j, j] - expect) < 1e-10
        assert abs(L[0, 1]) < 1e-12
        assert schur <= 2.0 + 1e-9

    def test_single_function(self, s2):
        rng = np.random.default_rng(10)
        sys = random_bump_system(s2, rng, 1)
        L, schur = kernel_L(sys)
        g = sys.functions[0]
        expect = 1.0 + abs(g.inner(g.tilde())) ** 2
        assert L.shape == (1, 1)
        assert abs(L[0, 0] - expect) < 1e-10

    def test_harmonics_schur_bound(self, s2):
        sys = make_harmonics(s2, [0, 1])  # six lowest real harmonics
        L, schur = kernel_L(sys)
        # real harmonics: <Y_j, Y~_k> = (-1)^l delta: L = 2 I
        assert np.max(np.abs(L - 2.0 * np.eye(len(sys)))) < 1e-9
        assert abs(schur - 2.0) < 1e-9

    def test_matches_moyal(self, s2):
        rng = np.random.default_rng(11)
        sys = random_bump_system(s2, rng, 2)
        L, _ = kernel_L(sys)
        g0, g1 = sys.functions
        val = moyal_spherical_closed(g0, g0, g1, g1)
        # L is 2^{n-2} times the Moyal pairing
        assert abs(L[0, 1] - 2.0 * val.real) < 1e-10
