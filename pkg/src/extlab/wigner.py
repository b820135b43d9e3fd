"""Wigner distributions and Moyal inner products.

Classical transform on box grids:
    W(u1,u2)(x, v) = int u1(x + y/2) conj(u2(x - y/2)) e^{-2 pi i v.y} dy,
discretized with y on the step-2h lattice (so x +- y/2 stays on the grid)
and v on the full conjugate band; with that pairing the v-marginal and the
v-plane Parseval identity are exact, which the Moyal checks rely on.

Spherical transform on S^{n-1} grids:
    W(g1,g2)(omega, v) = 2^{n-2} int g1(w') conj(g2(R_omega w'))
                         e^{-2 pi i (w' - R_omega w').v} |omega.w'|^{n-2} dsigma(w'),
with v in the tangent plane at omega.  The reflected amplitude is evaluated
analytically when the surface function carries an evaluator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from extlab.geometry import BoxGrid, PhaseGrid, SphereGrid, tangent_frame
from extlab.systems import OrthonormalSystem, SurfaceFunction


# ---------------------------------------------------------------------------
# classical Wigner


@dataclass(eq=False)
class ClassicalWignerField:
    """W on the product of a spatial box grid and its conjugate v lattice."""

    xgrid: BoxGrid
    v_axis: np.ndarray
    values: np.ndarray  # shape (npts,)*d + (nv,)*d

    @property
    def v_step(self) -> float:
        return float(self.v_axis[1] - self.v_axis[0])

    def support_mask(self, threshold_rel: float = 1e-8, dilate: int = 1) -> np.ndarray:
        from scipy.ndimage import binary_dilation

        peak = np.max(np.abs(self.values))
        mask = np.abs(self.values) > threshold_rel * peak
        if dilate:
            mask = binary_dilation(mask, iterations=dilate)
        return mask

    def integral(self) -> float:
        d = self.xgrid.dim
        return float(np.real(np.sum(self.values)) * self.xgrid.cell_volume * self.v_step**d)


def _conjugate_band(n_y: int, step_y: float) -> np.ndarray:
    dv = 1.0 / (step_y * n_y)
    return (np.arange(n_y) - n_y // 2) * dv


def classical_wigner(grid: BoxGrid, u1: np.ndarray, u2: np.ndarray | None = None
                     ) -> ClassicalWignerField:
    """Wigner field of box-supported samples (d = 1 or 2)."""
    if u2 is None:
        u2 = u1
    d = grid.dim
    h = grid.step
    n = grid.npts
    n_y = 2 * n - 1
    v_axis = _conjugate_band(n_y, 2.0 * h)
    ks = np.arange(-(n - 1), n)
    phase = (2.0 * h) * np.exp(-2j * np.pi * (2.0 * h) * np.outer(ks, v_axis))
    if d == 1:
        a = np.asarray(u1, dtype=complex).reshape(n)
        b = np.asarray(u2, dtype=complex).reshape(n)
        M = _mixed_y_products_1d(a, b)
        W = M @ phase
    elif d == 2:
        a = np.asarray(u1, dtype=complex).reshape(n, n)
        b = np.asarray(u2, dtype=complex).reshape(n, n)
        M = _mixed_y_products_2d(a, b)  # (n, n, ny, ny)
        # each per-axis phase matrix carries one factor of the y step
        W = np.tensordot(M, phase, axes=(2, 0))      # -> (n, n, ny, nv1)
        W = np.tensordot(W, phase, axes=(2, 0))      # -> (n, n, nv1, nv2)
    else:
        raise ValueError("classical Wigner supports d = 1 and 2")
    return ClassicalWignerField(grid, v_axis, W)


def _mixed_y_products_1d(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    ks = np.arange(-(n - 1), n)
    M = np.zeros((n, len(ks)), dtype=complex)
    for j, k in enumerate(ks):
        lo = max(0, k, -k)
        hi = min(n, n + k, n - k)
        if lo < hi:
            idx = np.arange(lo, hi)
            M[idx, j] = a[idx + k] * np.conj(b[idx - k])
    return M


def _mixed_y_products_2d(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    ks = np.arange(-(n - 1), n)
    M = np.zeros((n, n, len(ks), len(ks)), dtype=complex)
    for j1, k1 in enumerate(ks):
        lo1, hi1 = max(0, k1, -k1), min(n, n + k1, n - k1)
        if lo1 >= hi1:
            continue
        i1 = np.arange(lo1, hi1)
        for j2, k2 in enumerate(ks):
            lo2, hi2 = max(0, k2, -k2), min(n, n + k2, n - k2)
            if lo2 >= hi2:
                continue
            i2 = np.arange(lo2, hi2)
            M[np.ix_(i1, i2, [j1], [j2])] = (
                a[np.ix_(i1 + k1, i2 + k2)] * np.conj(b[np.ix_(i1 - k1, i2 - k2)])
            )[:, :, None, None]
    return M


def wigner_point(grid: BoxGrid, u1: np.ndarray, u2: np.ndarray,
                 x_index: int, v: np.ndarray) -> np.ndarray:
    """W(u1,u2)(x_i, v) for a grid node x_i and arbitrary v (d = 1)."""
    a = np.asarray(u1, dtype=complex).ravel()
    b = np.asarray(u2, dtype=complex).ravel()
    n = a.shape[0]
    h = grid.step
    ks = np.arange(-(n - 1), n)
    valid = (x_index + ks >= 0) & (x_index + ks < n) & (x_index - ks >= 0) & (x_index - ks < n)
    kv = ks[valid]
    prod = a[x_index + kv] * np.conj(b[x_index - kv])
    v = np.atleast_1d(np.asarray(v, dtype=float))
    phase = np.exp(-2j * np.pi * np.outer(kv * 2.0 * h, v))
    return (2.0 * h) * (prod @ phase)


def moyal_classical(grid: BoxGrid, f1: np.ndarray, f2: np.ndarray,
                    g1: np.ndarray, g2: np.ndarray) -> complex:
    """Phase-space inner product <W(f1,f2), W(g1,g2)> from the fields."""
    Wf = classical_wigner(grid, f1, f2)
    Wg = classical_wigner(grid, g1, g2)
    d = grid.dim
    val = np.sum(Wf.values * np.conj(Wg.values))
    return complex(val * grid.cell_volume * Wf.v_step**d)


def velocity_average(field: ClassicalWignerField, x: np.ndarray, t: float) -> np.ndarray:
    """rho(W)(x, t) = int W(x + t v, v) dv by v-lattice quadrature (d = 1).

    Cubic interpolation in the x-slot; W is treated as zero outside its box.
    """
    from scipy.interpolate import CubicSpline

    if field.xgrid.dim != 1:
        raise ValueError("velocity_average implemented for d = 1")
    xq = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.zeros(xq.shape[0])
    ax = field.xgrid.axis
    for j, v in enumerate(field.v_axis):
        slice_j = field.values[:, j].real
        spline = CubicSpline(ax, slice_j, extrapolate=False)
        vals = spline(xq + t * v)
        out += np.where(np.isnan(vals), 0.0, vals)
    return out * field.v_step


# ---------------------------------------------------------------------------
# spherical Wigner


def _reflection_data(grid: SphereGrid, omega: np.ndarray):
    """Reflected nodes, in-plane frequency components and jacobian weights."""
    dots = grid.nodes @ omega
    refl = 2.0 * dots[:, None] * omega[None] - grid.nodes
    xi = grid.nodes - refl  # = 2 P_perp omega', lies in <omega>^perp
    return dots, refl, xi


def _spherical_wigner_raw(g1: SurfaceFunction, g2: SurfaceFunction, omega: np.ndarray,
                          v_points: np.ndarray) -> np.ndarray:
    grid = g1.grid
    dots, refl, xi = _reflection_data(grid, omega)
    n = grid.n
    rho = (2.0 ** (n - 2) * grid.qweights * g1.values
           * np.conj(g2.at(refl)) * np.abs(dots) ** (n - 2))
    v = np.atleast_2d(np.asarray(v_points, dtype=float))
    phase = np.exp(-2j * np.pi * (xi @ v.T))
    return rho @ phase


def spherical_wigner(g1: SurfaceFunction, g2: SurfaceFunction, omega: np.ndarray,
                     v_points: np.ndarray) -> np.ndarray:
    """W_{S^{n-1}}(g1, g2)(omega, v) at tangent vectors v (rows, in R^n).

    The node quadrature is Hermitian-symmetrized (the reflection map is an
    isometry the node set does not respect), so W(g, g) is exactly real.
    """
    omega = np.asarray(omega, dtype=float)
    a = _spherical_wigner_raw(g1, g2, omega, v_points)
    b = _spherical_wigner_raw(g2, g1, omega, v_points)
    return 0.5 * (a + np.conj(b))


def spherical_wigner_grid(g1: SurfaceFunction, g2: SurfaceFunction, omega: np.ndarray,
                          plane: PhaseGrid) -> np.ndarray:
    """W on the in-plane tensor grid at omega (Hermitian-symmetrized)."""
    omega = np.asarray(omega, dtype=float)
    frame = tangent_frame(omega)
    pts = plane.offsets @ frame
    shape = (plane.m,) * (g1.grid.n - 1)
    return spherical_wigner(g1, g2, omega, pts).reshape(shape)


def moyal_spherical(f1: SurfaceFunction, f2: SurfaceFunction,
                    g1: SurfaceFunction, g2: SurfaceFunction) -> tuple[complex, complex]:
    """Both routes of the spherical Moyal identity <W(f1,f2), W(g1,g2)>.

    (a) phase-space route: the tangent-plane integral is carried out exactly
    by Parseval (the node sums are trigonometric sums whose truncated plane
    integrals diverge, so the v-integration must be closed-form), leaving
    the quadrature over (omega, omega') of reflected amplitude products
    against |omega.omega'|^{2n-5};
    (b) the closed double-integral formula against |omega + omega'|^{n-3}
    at unreflected node pairs.
    The two routes share no evaluation points off the diagonal, so their
    agreement certifies both discretizations.  Returns (route_a, route_b).
    """
    grid = f1.grid
    n = grid.n
    g1t, g2t = g1.tilde(), g2.tilde()
    total = 0.0 + 0.0j
    pref = 2.0 ** (n - 3)
    for i in range(grid.size):
        om = grid.nodes[i]
        dots = grid.nodes @ om
        refl = 2.0 * dots[:, None] * om[None] - grid.nodes
        jac = np.abs(dots) ** (2 * n - 5) if n != 2 else _safe_inverse_abs(dots)
        ff = f1.values * np.conj(f2.at(refl))
        t1 = ff * np.conj(g1.values) * g2.at(refl)
        t2 = ff * np.conj(g2t.values) * g1t.at(refl)
        total += grid.qweights[i] * pref * np.sum(grid.qweights * jac * (t1 + t2))
    return complex(total), moyal_spherical_closed(f1, f2, g1, g2)


def _safe_inverse_abs(dots: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    out = np.zeros_like(dots)
    big = np.abs(dots) > tol
    out[big] = 1.0 / np.abs(dots[big])
    return out


def _midpoint_kernel(grid: SphereGrid, sep_tol: float = 1e-9) -> np.ndarray:
    """|omega + omega'|^{n-3} on node pairs; zero marks the antipodal pole."""
    n = grid.n
    if n == 3:
        return np.ones((grid.size, grid.size))
    s = np.linalg.norm(grid.nodes[:, None, :] + grid.nodes[None], axis=-1)
    kern = np.zeros_like(s)
    good = s > sep_tol
    kern[good] = s[good] ** (n - 3)
    return kern


def moyal_spherical_closed(f1: SurfaceFunction, f2: SurfaceFunction,
                           g1: SurfaceFunction, g2: SurfaceFunction) -> complex:
    """Closed-form double integral of the spherical Moyal identity."""
    grid = f1.grid
    n = grid.n
    q = grid.qweights
    kern = _midpoint_kernel(grid)
    if n == 2:
        _check_antipodal_products(grid, kern, f1, g1, f2, g2)
    u1 = q * f1.values * np.conj(g1.values)          # omega' slot
    u2 = q * np.conj(f2.values) * g2.values          # omega slot
    t1 = u1 @ kern @ u2
    g2t, g1t = g2.tilde(), g1.tilde()
    u1b = q * f1.values * np.conj(g2t.values)
    u2b = q * np.conj(f2.values) * g1t.values
    t2 = u1b @ kern @ u2b
    return complex((t1 + t2) / 2.0 ** (n - 2))


def _check_antipodal_products(grid, kern, f1, g1, f2, g2) -> None:
    bad = kern == 0.0
    if not np.any(bad):
        return
    p1 = np.abs(f1.values * np.conj(g1.values))
    p2 = np.abs(f2.values * np.conj(g2.values))
    if np.max(np.outer(p1, p2)[bad]) > 1e-14:
        raise ValueError(
            "antipodal-separation hypothesis violated: the n=2 Moyal kernel "
            "is singular where the amplitude products live"
        )


def kernel_L(system: OrthonormalSystem) -> tuple[np.ndarray, float]:
    """Pair-interaction matrix of squared Wigner fields and its Schur bound.

    L(j,k) = <W(g_j,g_j), W(g_k,g_k)> * 2^{n-2}, assembled from the closed
    double-integral formula; for n=3 this reduces to
    |<g_j,g_k>|^2 + |<g_j, g~_k>|^2.  Returns (L, sup-row-sum bound).
    """
    grid = system.grid
    n = grid.n
    q = grid.qweights
    kern = _midpoint_kernel(grid)
    funcs = system.functions
    tildes = [f.tilde() for f in funcs]
    m = len(funcs)
    L = np.zeros((m, m))
    for j in range(m):
        for k in range(m):
            u = q * funcs[j].values * np.conj(funcs[k].values)
            t1 = np.conj(u) @ kern @ u
            ub = q * funcs[j].values * np.conj(tildes[k].values)
            t2 = np.conj(ub) @ kern @ ub
            val = t1 + t2
            if abs(val.imag) > 1e-10 * max(1.0, abs(val.real)):
                raise AssertionError("L(j,k) should be real")
            L[j, k] = val.real
    schur = float(np.max(np.sum(np.abs(L), axis=1)))
    return L, schur
