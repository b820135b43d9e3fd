"""Integral transforms.

Extension operators from sphere grids, Fourier transforms of weights, X-ray
and origin-restricted Radon transforms with their adjoints, the space-time
line transform rho*, the free Schrodinger propagator and negative powers of
the Laplacian.

All oscillatory kernels use the global convention e^{-2 pi i x.xi} forward,
e^{+2 pi i x.xi} inverse.  Powers of 2 pi enter multipliers only through
(-Delta)^s <-> (2 pi |xi|)^{2s}, fixed in frac_laplacian_field below.
"""

from __future__ import annotations

import numpy as np

from extlab.geometry import BoxGrid, DirectionSet, PhaseGrid, SphereGrid, tangent_frame
from extlab.weights import GaussianMixture, GridSampledWeight


class TailError(RuntimeError):
    """An in-plane or spatial truncation cannot be certified small enough."""


class AliasingError(RuntimeError):
    """The spatial window is too small for the dispersive spreading requested."""


# ---------------------------------------------------------------------------
# extension operator


def extension(grid: SphereGrid, values: np.ndarray, points: np.ndarray,
              chunk: int = 8192) -> np.ndarray:
    """Extension integral sum_k q_k g(omega_k) e^{-2 pi i x.omega_k}.

    values: (m,) or (m, j) amplitudes on the grid nodes; points: (P, n).
    Returns (P,) or (P, j) complex.
    """
    vals = np.asarray(values)
    single = vals.ndim == 1
    coeff = grid.qweights[:, None] * (vals[:, None] if single else vals)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.empty((pts.shape[0], coeff.shape[1]), dtype=complex)
    for lo in range(0, pts.shape[0], chunk):
        phase = np.exp(-2j * np.pi * (pts[lo:lo + chunk] @ grid.nodes.T))
        out[lo:lo + chunk] = phase @ coeff
    return out[:, 0] if single else out


def extension_on_box(grid: SphereGrid, values: np.ndarray, box: BoxGrid) -> np.ndarray:
    """Extension field on a tensor box grid via per-axis phase factorization.

    Returns (box.npts,)*dim complex for (m,) values, or (j, ...) for (m, j).
    Memory stays O(npts * m) instead of O(npts^dim * m).
    """
    vals = np.asarray(values)
    single = vals.ndim == 1
    coeff = (grid.qweights[:, None] * (vals[:, None] if single else vals)).T  # (j, m)
    axis = box.axis
    if box.dim != grid.n:
        raise ValueError("box dimension must match the sphere's ambient dimension")
    phases = [np.exp(-2j * np.pi * np.outer(axis, grid.nodes[:, ax])) for ax in range(box.dim)]
    j, m = coeff.shape
    npts = box.npts
    if box.dim == 2:
        out = np.empty((j, npts, npts), dtype=complex)
        for jj in range(j):
            out[jj] = (phases[0] * coeff[jj][None, :]) @ phases[1].T
    elif box.dim == 3:
        out = np.empty((j, npts, npts, npts), dtype=complex)
        for i1 in range(npts):
            w = coeff * phases[0][i1][None, :]  # (j, m)
            for jj in range(j):
                out[jj, i1] = (phases[1] * w[jj][None, :]) @ phases[2].T
    else:
        raise ValueError("extension_on_box supports dim 2 and 3")
    return out[0] if single else out


# ---------------------------------------------------------------------------
# Fourier transform of weights


def fourier_weight(w, xi: np.ndarray) -> np.ndarray:
    """what(xi) for mixtures (exact) or grid samples (direct quadrature)."""
    return w.fourier(xi)


# ---------------------------------------------------------------------------
# X-ray transform


def xray(w, omega: np.ndarray, v: np.ndarray) -> np.ndarray:
    """X-ray transform Xw(omega, v) = int w(v + t omega) dt, v perp omega.

    omega and v broadcast as rows.
    """
    omega = np.atleast_2d(np.asarray(omega, dtype=float))
    v = np.atleast_2d(np.asarray(v, dtype=float))
    if np.max(np.abs(np.sum(omega * v, axis=1))) > 1e-10 * max(1.0, float(np.max(np.abs(v)))):
        raise ValueError("v must be perpendicular to omega")
    return w.line_integral(v, omega)


def xray_norm(w, E: DirectionSet, plane: PhaseGrid, p: float,
              tail_rel_tol: float = 1e-5) -> float:
    """L^p norm of Xw over {(omega, v): omega in E, v in <omega>^perp}.

    Direct route: quadrature over E's nodes x the in-plane grid.  The
    outermost ring of in-plane cells must carry a negligible share of the
    integral (decay certificate); otherwise TailError.
    """
    if p <= 0 or not np.isfinite(p):
        raise ValueError("p must lie in (0, inf)")
    members = E.members
    if members.shape[0] == 0:
        return 0.0
    qs = E.grid.qweights[E.mask]
    ring = plane.boundary_ring_mask()
    total = 0.0
    ring_total = 0.0
    for i, om in enumerate(members):
        pts = plane.points(om)
        vals = np.abs(w.line_integral(pts, np.broadcast_to(om, pts.shape))) ** p
        total += qs[i] * np.sum(vals) * plane.cell
        ring_total += qs[i] * np.sum(vals[ring]) * plane.cell
    if total > 0 and 3.0 * ring_total > tail_rel_tol * total:
        raise TailError(
            f"in-plane tail not controlled: boundary ring carries "
            f"{ring_total/total:.2e} of the integral (tolerance {tail_rel_tol:.1e}); "
            f"enlarge the plane radius"
        )
    return total ** (1.0 / p)


def xray_l2_sq_fourier(w, E: DirectionSet, freq_plane: PhaseGrid) -> float:
    """Plancherel route: ||Xw||_{L^2(omega in E)}^2 = int_E int_{plane} |what|^2.

    Uses F_v Xw(omega, xi) = what(xi) for xi perp omega.
    """
    members = E.members
    qs = E.grid.qweights[E.mask]
    total = 0.0
    for i, om in enumerate(members):
        xi = freq_plane.points(om)
        total += qs[i] * np.sum(np.abs(w.fourier(xi)) ** 2) * freq_plane.cell
    return float(total)


def xray_l2_sq_exact(w: GaussianMixture, E: DirectionSet) -> float:
    """Closed form of ||Xw||_{L^2(omega in E)}^2 for Gaussian mixtures.

    Per direction, the plane integral of |what|^2 is a 2-Gaussian overlap:
    sum_ij c_i c_j s_i^n s_j^n sigma^{-(n-1)} e^{-pi |P_omega(a_i - a_j)|^2 / sigma^2},
    sigma^2 = s_i^2 + s_j^2.
    """
    members = E.members
    qs = E.grid.qweights[E.mask]
    n = E.grid.n
    s2 = w.widths[:, None] ** 2 + w.widths[None] ** 2
    amp = (w.coeffs[:, None] * w.coeffs[None]) * (w.widths[:, None] ** n) * (w.widths[None] ** n)
    amp = amp / s2 ** ((n - 1) / 2.0)
    da = w.centers[:, None, :] - w.centers[None]  # (k, k, n)
    total = 0.0
    for i, om in enumerate(members):
        along = da @ om
        perp2 = np.sum(da**2, axis=-1) - along**2
        total += qs[i] * np.sum(amp * np.exp(-np.pi * perp2 / s2))
    return float(total)


# ---------------------------------------------------------------------------
# restricted Radon transform and the X_0 adjoint


def radon0(f, omega: np.ndarray, plane: PhaseGrid | None = None) -> np.ndarray:
    """Radon transform over hyperplanes through the origin, indexed by normal.

    Mixtures use the exact hyperplane integral; callables are integrated on
    the given in-plane grid.
    """
    omega = np.atleast_2d(np.asarray(omega, dtype=float))
    if isinstance(f, GaussianMixture):
        return f.hyperplane_integral(omega)
    if plane is None:
        raise ValueError("a PhaseGrid is required for non-mixture integrands")
    out = np.empty(omega.shape[0])
    for i, om in enumerate(omega):
        out[i] = np.sum(f(plane.points(om))) * plane.cell
    return out


def x0_adjoint(f_values: np.ndarray, grid: SphereGrid, x: np.ndarray) -> np.ndarray:
    """X_0* f(x) = |x|^{-(n-1)} (f(xhat) + f(-xhat)), nearest-node f.

    f_values: per-node samples of f on the sphere grid.
    """
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    r = np.linalg.norm(pts, axis=1)
    if np.any(r == 0):
        raise ValueError("X_0* is singular at x = 0")
    hat = pts / r[:, None]
    f = np.asarray(f_values)
    fwd = f[grid.nearest(hat)]
    bwd = f[grid.nearest(-hat)]
    return (fwd + bwd) / r ** (grid.n - 1)


def x0_line(w: GaussianMixture, omega: np.ndarray) -> np.ndarray:
    """X_0 w(omega) = int w(t omega) dt (lines through the origin)."""
    omega = np.atleast_2d(np.asarray(omega, dtype=float))
    zeros = np.zeros_like(omega)
    return w.line_integral(zeros, omega)


# ---------------------------------------------------------------------------
# space-time line transform rho*


def rho_adjoint(w, x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """rho* w(x, v) = int w(x - t v, t) dt for a space-time weight on R^{d+1}.

    x, v: (P, d) rows; the space-time line is (x, 0) + t(-v, 1).
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    v = np.atleast_2d(np.asarray(v, dtype=float))
    P, d = x.shape
    points = np.concatenate([x, np.zeros((P, 1))], axis=1)
    dirs = np.concatenate([-v, np.ones((P, 1))], axis=1)
    return w.line_integral(points, dirs)


# ---------------------------------------------------------------------------
# free Schrodinger evolution


def schrodinger_evolve(freq_grid: BoxGrid, uhat: np.ndarray, t: float,
                       points: np.ndarray) -> np.ndarray:
    """u(x, t) = int e^{-2 pi i (x.xi + t |xi|^2)} uhat(xi) d xi by lattice sum.

    uhat: (size,) or (size, j) samples on freq_grid nodes (flat C order).
    """
    vals = np.asarray(uhat)
    single = vals.ndim == 1
    coeff = vals[:, None] if single else vals
    xi = freq_grid.nodes()
    mult = np.exp(-2j * np.pi * t * np.sum(xi**2, axis=1))[:, None]
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    phase = np.exp(-2j * np.pi * (pts @ xi.T))
    out = freq_grid.cell_volume * (phase @ (mult * coeff))
    return out[:, 0] if single else out


def check_dispersion_window(freq_grid: BoxGrid, space_half_width: float,
                            t_max: float, data_half_width: float) -> None:
    """Raise if dispersive drift can leave the spatial window by |t| <= t_max.

    Group drift is bounded by 2 |t| |xi|_max; the spatial window must also
    stay inside half the periodization length 1/(2 dxi).
    """
    xi_max = np.sqrt(freq_grid.dim) * freq_grid.side / 2.0
    drift = data_half_width + 2.0 * abs(t_max) * xi_max
    period_half = 1.0 / (2.0 * freq_grid.step)
    if drift > space_half_width or space_half_width > period_half + 1e-12:
        raise AliasingError(
            f"dispersive support ~{drift:.2f} vs spatial half-width "
            f"{space_half_width:.2f} (periodization half-length {period_half:.2f})"
        )


# ---------------------------------------------------------------------------
# fractional Laplacian


def _cell_average_multiplier(dim: int, h: float, s: float, center: np.ndarray) -> float:
    """Exact-ish cell average of (2 pi |xi|)^{2s} over a cube cell.

    The origin cell integrates exactly in the radial variable:
    int_cell |xi|^a f(xihat) = int_{S^{n-1}} f rbar^{n+a}/(n+a), rbar the
    cube-boundary distance.  Off-origin cells use midpoint subdivision.
    """
    if np.all(center == 0.0):
        from extlab.geometry import build_sphere_grid

        sg = build_sphere_grid(2 if dim == 2 else 3, 64 if dim == 2 else (24, 48))
        rbar = (h / 2.0) / np.max(np.abs(sg.nodes), axis=1)
        a = 2.0 * s
        integral = (2.0 * np.pi) ** a * np.sum(sg.qweights * rbar ** (dim + a)) / (dim + a)
        return integral / h**dim
    m = 12
    sub = (np.arange(m) + 0.5) / m - 0.5
    axes = np.meshgrid(*([sub * h] * dim), indexing="ij")
    pts = np.stack([ax.ravel() for ax in axes], axis=1) + center[None]
    return float(np.mean((2.0 * np.pi * np.linalg.norm(pts, axis=1)) ** (2.0 * s)))


def frac_laplacian_field(w, s: float, freq_grid: BoxGrid, space_grid: BoxGrid) -> np.ndarray:
    """Real field of (-Delta)^s w on the space grid, s in (-dim/2, 0].

    Inverse-Fourier quadrature of (2 pi |xi|)^{2s} what(xi) over freq_grid;
    the 3^dim cells around xi = 0 use exact cell averages of the multiplier
    (the origin cell's integrable singularity handled radially).  freq_grid
    must have an odd point count so the origin is a node.
    """
    dim = freq_grid.dim
    if not (-dim / 2.0 < s <= 0):
        raise ValueError("multiplier order must satisfy -dim/2 < s <= 0")
    if freq_grid.npts % 2 == 0:
        raise ValueError("frequency grid must have odd npts so xi=0 is a node")
    if 1.0 / freq_grid.step < space_grid.side:
        raise ValueError(
            "frequency lattice too coarse: the reconstructed field is periodic "
            f"with period {1.0/freq_grid.step:.2f} < spatial box {space_grid.side:.2f}"
        )
    xi = freq_grid.nodes()
    wh = w.fourier(xi)
    r = np.linalg.norm(xi, axis=1)
    if s == 0:
        mult = np.ones_like(r)
    else:
        mult = np.zeros_like(r)
        nz = r > 0
        mult[nz] = (2.0 * np.pi * r[nz]) ** (2.0 * s)
        # the multiplier's curvature at the singularity dominates the midpoint
        # error; replace values on the 3^dim central cells by exact cell averages
        h = freq_grid.step
        near = np.nonzero(r <= 1.8 * h + 1e-12)[0]
        for idx in near:
            mult[idx] = _cell_average_multiplier(dim, h, s, xi[idx])
    coeff = (mult * wh) * freq_grid.cell_volume
    # separable inverse transform: contract one axis at a time
    shape = (freq_grid.npts,) * dim
    tensor = coeff.reshape(shape)
    ax_f = freq_grid.axis
    ax_x = space_grid.axis
    for axis in range(dim):
        phase = np.exp(2j * np.pi * np.outer(ax_x, ax_f))
        tensor = np.tensordot(phase, tensor, axes=(1, axis))
        tensor = np.moveaxis(tensor, 0, axis)
    field = tensor
    imag_max = float(np.max(np.abs(field.imag)))
    scale = float(np.max(np.abs(field.real))) + 1e-300
    if imag_max > 1e-8 * scale:
        raise AssertionError("multiplier field of a real weight is not real")
    return field.real


def frac_laplacian_norm(w, s: float, p: float, freq_grid: BoxGrid,
                        space_grid: BoxGrid) -> float:
    """||(-Delta)^s w||_{L^p} by grid quadrature of the multiplier field."""
    if s == 0:
        vals = np.abs(w(space_grid.nodes()))
    else:
        vals = np.abs(frac_laplacian_field(w, s, freq_grid, space_grid)).ravel()
    return float(np.sum(vals**p) * space_grid.cell_volume) ** (1.0 / p)
