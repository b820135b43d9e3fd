"""Orthonormal input families.

Surface functions on sphere grids (node samples plus an optional analytic
evaluator for off-node work), certified orthonormal systems, wavepacket and
spherical-harmonic constructors, quadrature Gram-Schmidt, complete discrete
torus bases, and density-operator coefficient wrappers.

All inner products are quadrature inner products <f,g> = sum_k q_k f_k
conj(g_k); node averages are never used, so the discrete Bessel and
Parseval identities below hold exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import sph_harm_y

from extlab.geometry import DirectionSet, SphereGrid, cap_union_set, geodesic_distance


@dataclass(eq=False)
class SurfaceFunction:
    """Complex amplitude on sphere grid nodes with declared support."""

    grid: SphereGrid
    values: np.ndarray
    support: DirectionSet
    fn: object = None  # optional callable points -> values for off-node use

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex).copy()
        off = np.abs(self.values[~self.support.mask])
        if off.size and np.max(off) > 1e-14:
            raise ValueError("values do not vanish off the declared support")
        self.values[~self.support.mask] = 0.0

    def inner(self, other: "SurfaceFunction") -> complex:
        return complex(np.sum(self.grid.qweights * self.values * np.conj(other.values)))

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.grid.qweights * np.abs(self.values) ** 2)))

    def tilde(self) -> "SurfaceFunction":
        """g tilde = conj(g(-.)), an exact node permutation on symmetric grids."""
        vals = np.conj(self.values[self.grid.antipode])
        mask = self.support.mask[self.grid.antipode]
        fn = None
        if self.fn is not None:
            inner_fn = self.fn
            fn = lambda pts: np.conj(inner_fn(-np.atleast_2d(pts)))
        return SurfaceFunction(self.grid, vals,
                               DirectionSet(self.grid, mask, tag="custom"), fn=fn)

    def at(self, points: np.ndarray) -> np.ndarray:
        """Evaluate at arbitrary unit vectors (analytic if available)."""
        pts = np.atleast_2d(points)
        if self.fn is not None:
            return np.asarray(self.fn(pts), dtype=complex)
        return self.values[self.grid.nearest(pts)]


@dataclass(eq=False)
class OrthonormalSystem:
    """Family with certified Gram matrix under the quadrature inner product."""

    functions: list
    gram: np.ndarray
    tol: float = 1e-8
    recipe: dict = field(default_factory=dict)

    def __post_init__(self):
        dev = np.max(np.abs(self.gram - np.eye(len(self.functions))))
        if dev > self.tol:
            raise ValueError(f"Gram deviates from identity by {dev:.3e} > tol {self.tol:.1e}")

    def __len__(self) -> int:
        return len(self.functions)

    @property
    def grid(self) -> SphereGrid:
        return self.functions[0].grid

    def values_matrix(self) -> np.ndarray:
        """Node values stacked as columns, shape (m, j)."""
        return np.stack([f.values for f in self.functions], axis=1)

    def support_union(self) -> DirectionSet:
        mask = np.zeros(self.grid.size, dtype=bool)
        for f in self.functions:
            mask |= f.support.mask
        return DirectionSet(self.grid, mask, tag="custom", params={"kind": "system-support"})

    def to_json(self) -> str:
        return json.dumps(self.recipe, sort_keys=True)


def gram_matrix(functions: list) -> np.ndarray:
    vals = np.stack([f.values for f in functions], axis=1)
    q = functions[0].grid.qweights
    return vals.conj().T @ (q[:, None] * vals)


def check_almost_orthonormal(functions: list) -> float:
    """Schur bound sup_k sum_j |<g_j, g_k>|^2 (finite = almost orthonormal)."""
    g = gram_matrix(functions)
    return float(np.max(np.sum(np.abs(g) ** 2, axis=0)))


# ---------------------------------------------------------------------------
# wavepackets


def make_wavepackets(grid: SphereGrid, caps: list[tuple[np.ndarray, float]],
                     modulations: list[np.ndarray]) -> OrthonormalSystem:
    """Modulated normalized cap indicators; Gram is exactly the identity.

    caps: (center, radius) pairs, pairwise disjoint on the grid; modulations:
    one spatial point per cap; g_j = sigma(C_j)^{-1/2} 1_{C_j} e^{-2 pi i x_j.xi}.
    """
    if len(caps) != len(modulations):
        raise ValueError("need one modulation point per cap")
    masks = []
    for center, radius in caps:
        c = np.asarray(center, dtype=float)
        c = c / np.linalg.norm(c)
        masks.append(geodesic_distance(grid.nodes, c) <= radius)
    occupancy = np.sum(np.stack(masks), axis=0)
    if np.any(occupancy > 1):
        raise ValueError("caps overlap on the grid")
    funcs = []
    for (center, radius), x, mask in zip(caps, modulations, masks):
        meas = float(np.sum(grid.qweights[mask]))
        if meas == 0.0:
            raise ValueError("a cap contains no grid nodes")
        x = np.asarray(x, dtype=float)
        vals = np.zeros(grid.size, dtype=complex)
        vals[mask] = np.exp(-2j * np.pi * (grid.nodes[mask] @ x)) / np.sqrt(meas)
        sup = DirectionSet(grid, mask, tag="cap-union",
                           params={"centers": [np.asarray(center).tolist()], "radius": radius})
        c = np.asarray(center, dtype=float)
        c = c / np.linalg.norm(c)

        def fn(pts, c=c, radius=radius, x=x, meas=meas):
            pts = np.atleast_2d(pts)
            inside = geodesic_distance(pts, c) <= radius
            return inside * np.exp(-2j * np.pi * (pts @ x)) / np.sqrt(meas)

        funcs.append(SurfaceFunction(grid, vals, sup, fn=fn))
    recipe = {"kind": "wavepackets",
              "caps": [[np.asarray(c).tolist(), float(r)] for c, r in caps],
              "modulations": [np.asarray(m).tolist() for m in modulations]}
    return OrthonormalSystem(funcs, gram_matrix(funcs), recipe=recipe)


def smooth_cap_bump(grid: SphereGrid, center: np.ndarray, radius: float,
                    kappa: float, taper: float, modulation: np.ndarray | None = None):
    """Cap-supported C^1 bump: e^{kappa(omega.c - 1)} times a smoothstep taper.

    Exactly zero outside the cap; taper should span >= 3 grid cells so the
    quadrature stays inside the tolerance budget.
    """
    c = np.asarray(center, dtype=float)
    c = c / np.linalg.norm(c)
    x0 = None if modulation is None else np.asarray(modulation, dtype=float)

    def fn(pts):
        pts = np.atleast_2d(pts)
        d = geodesic_distance(pts, c)
        t = np.clip((radius - d) / taper, 0.0, 1.0)
        smooth = t * t * (3.0 - 2.0 * t)
        vals = np.exp(kappa * (pts @ c - 1.0)) * smooth
        if x0 is not None:
            vals = vals * np.exp(-2j * np.pi * (pts @ x0))
        return vals

    mask = geodesic_distance(grid.nodes, c) <= radius
    vals = np.zeros(grid.size, dtype=complex)
    vals[mask] = fn(grid.nodes[mask])
    sup = DirectionSet(grid, mask, tag="cap-union",
                       params={"centers": [c.tolist()], "radius": radius})
    return SurfaceFunction(grid, vals, sup, fn=fn)


# ---------------------------------------------------------------------------
# spherical harmonics (n = 3)


def real_harmonic_values(grid: SphereGrid, ell: int, m: int) -> np.ndarray:
    """Real orthonormal spherical harmonic sampled on the grid nodes."""
    theta = np.arccos(np.clip(grid.nodes[:, 2], -1.0, 1.0))
    phi = np.arctan2(grid.nodes[:, 1], grid.nodes[:, 0])
    if m == 0:
        return sph_harm_y(ell, 0, theta, phi).real
    y = sph_harm_y(ell, abs(m), theta, phi)
    if m > 0:
        return np.sqrt(2.0) * (-1.0) ** m * y.real
    return np.sqrt(2.0) * (-1.0) ** m * y.imag


def make_harmonics(grid: SphereGrid, degrees: list[int]) -> OrthonormalSystem:
    """Real orthonormal spherical harmonics for the listed degrees."""
    if grid.n != 3:
        raise ValueError("spherical harmonics systems are built on S^2")
    if grid.exact_degree < 2 * max(degrees):
        raise ValueError(
            f"grid exactness degree {grid.exact_degree} < 2*max degree "
            f"{2 * max(degrees)}; the Gram matrix cannot be certified"
        )
    funcs = []
    full = DirectionSet(grid, np.ones(grid.size, dtype=bool), tag="full")
    for ell in degrees:
        for m in range(-ell, ell + 1):
            vals = real_harmonic_values(grid, ell, m)

            def fn(pts, ell=ell, m=m):
                pts = np.atleast_2d(pts)
                theta = np.arccos(np.clip(pts[:, 2], -1.0, 1.0))
                phi = np.arctan2(pts[:, 1], pts[:, 0])
                if m == 0:
                    return sph_harm_y(ell, 0, theta, phi).real + 0j
                y = sph_harm_y(ell, abs(m), theta, phi)
                out = y.real if m > 0 else y.imag
                return np.sqrt(2.0) * (-1.0) ** m * out + 0j

            funcs.append(SurfaceFunction(grid, vals.astype(complex), full, fn=fn))
    recipe = {"kind": "harmonics", "degrees": list(map(int, degrees))}
    return OrthonormalSystem(funcs, gram_matrix(funcs), tol=1e-10, recipe=recipe)


# ---------------------------------------------------------------------------
# Gram-Schmidt


def orthonormalize(raw: list, tol: float = 1e-8,
                   pivot_threshold: float = 1e-8) -> tuple[OrthonormalSystem, list[int]]:
    """Modified Gram-Schmidt under the quadrature inner product.

    Returns the system and the indices of dropped (numerically dependent)
    inputs.  Analytic evaluators are carried through as linear combinations.
    """
    grid = raw[0].grid
    q = grid.qweights
    kept_vals: list[np.ndarray] = []
    kept_coeff: list[np.ndarray] = []
    dropped: list[int] = []
    for i, f in enumerate(raw):
        v = f.values.copy()
        c = np.zeros(len(raw), dtype=complex)
        c[i] = 1.0
        base = np.sqrt(np.sum(q * np.abs(v) ** 2))
        for u, cu in zip(kept_vals, kept_coeff):
            proj = np.sum(q * v * np.conj(u))
            v -= proj * u
            c = c - proj * cu
        # second pass for numerical orthogonality
        for u, cu in zip(kept_vals, kept_coeff):
            proj = np.sum(q * v * np.conj(u))
            v -= proj * u
            c = c - proj * cu
        nrm = np.sqrt(np.sum(q * np.abs(v) ** 2))
        if base == 0.0 or nrm < pivot_threshold * base:
            dropped.append(i)
            continue
        kept_vals.append(v / nrm)
        kept_coeff.append(c / nrm)
    funcs = []
    union = np.zeros(grid.size, dtype=bool)
    for f in raw:
        union |= f.support.mask
    sup = DirectionSet(grid, union, tag="custom", params={"kind": "gram-schmidt"})
    have_fns = all(f.fn is not None for f in raw)
    for v, c in zip(kept_vals, kept_coeff):
        fn = None
        if have_fns:
            raws = [f.fn for f in raw]

            def fn(pts, c=c, raws=raws):
                pts = np.atleast_2d(pts)
                out = np.zeros(pts.shape[0], dtype=complex)
                for ci, rf in zip(c, raws):
                    if ci != 0:
                        out += ci * np.asarray(rf(pts), dtype=complex)
                return out

        funcs.append(SurfaceFunction(grid, v, sup, fn=fn))
    system = OrthonormalSystem(funcs, gram_matrix(funcs), tol=tol,
                               recipe={"kind": "gram-schmidt", "inputs": len(raw)})
    return system, dropped


def random_bump_system(grid: SphereGrid, rng: np.random.Generator, count: int,
                       kappa_range: tuple[float, float] = (2.0, 6.0),
                       support: DirectionSet | None = None,
                       taper: float | None = None) -> OrthonormalSystem:
    """Orthonormalized random bump amplitudes, optionally cap-supported."""
    raws = []
    if support is None:
        full = DirectionSet(grid, np.ones(grid.size, dtype=bool), tag="full")
        for _ in range(count):
            c = rng.standard_normal(grid.n)
            c /= np.linalg.norm(c)
            kappa = rng.uniform(*kappa_range)
            z = rng.standard_normal() + 1j * rng.standard_normal()

            def fn(pts, c=c, kappa=kappa, z=z):
                pts = np.atleast_2d(pts)
                return z * np.exp(kappa * (pts @ c - 1.0)) + 0j

            raws.append(SurfaceFunction(grid, fn(grid.nodes), full, fn=fn))
    else:
        centers = np.atleast_2d(np.asarray(support.params["centers"], dtype=float))
        radius = float(support.params["radius"])
        if taper is None:
            taper = max(3.0 * grid.angular_resolution, 0.25 * radius)
        for i in range(count):
            c = centers[i % len(centers)]
            kappa = rng.uniform(*kappa_range)
            base = smooth_cap_bump(grid, c, radius, kappa, taper)
            z = rng.standard_normal() + 1j * rng.standard_normal()
            jitter = rng.uniform(1.0, 4.0)

            def fn(pts, base=base, z=z, jitter=jitter, c=c):
                pts = np.atleast_2d(pts)
                shape = np.exp(jitter * (pts @ c - 1.0))
                return z * shape * base.fn(pts)

            raws.append(SurfaceFunction(grid, fn(grid.nodes), base.support, fn=fn))
    system, dropped = orthonormalize(raws)
    if dropped:
        raise ValueError(f"random bump inputs were rank deficient: dropped {dropped}")
    return system


# ---------------------------------------------------------------------------
# discrete torus systems


@dataclass(eq=False)
class TorusSystem:
    """Complete orthonormal family on a frequency subset K of Z_N.

    Members are the |K| re-indexed exponentials g_j(xi_m) = e^{2 pi i j m/|K|}
    / sqrt(|K|) (a unitary matrix over the counting inner product on K); the
    transform to the ambient torus is the unitary DFT, so Parseval and the
    completeness identity sum_j |ghat_j(v)|^2 = |K|/N hold exactly.
    """

    n_ambient: int
    kidx: np.ndarray
    matrix: np.ndarray  # (|K|, |K|) unitary; rows are members

    @property
    def size(self) -> int:
        return len(self.kidx)

    @property
    def measure(self) -> float:
        """Normalized lattice measure |K|/N of the frequency subset."""
        return self.size / self.n_ambient

    def hat(self) -> np.ndarray:
        """ghat_j(v) = N^{-1/2} sum_m g_j(xi_m) e^{-2 pi i v xi_m / N}, (j, N)."""
        v = np.arange(self.n_ambient)
        phase = np.exp(-2j * np.pi * np.outer(self.kidx, v) / self.n_ambient)
        return (self.matrix @ phase) / np.sqrt(self.n_ambient)


def make_dft_system(n_ambient: int, kidx: np.ndarray) -> TorusSystem:
    kidx = np.unique(np.asarray(kidx, dtype=int) % n_ambient)
    m = len(kidx)
    if m == 0:
        raise ValueError("K must be nonempty")
    j, mm = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
    matrix = np.exp(2j * np.pi * j * mm / m) / np.sqrt(m)
    return TorusSystem(n_ambient, kidx, matrix)


# ---------------------------------------------------------------------------
# density operators


@dataclass(eq=False)
class DensityOperator:
    """Coefficients (lambda_j) attached to an orthonormal system."""

    system: OrthonormalSystem
    lam: np.ndarray

    def __post_init__(self):
        self.lam = np.asarray(self.lam, dtype=float)
        if self.lam.shape != (len(self.system),):
            raise ValueError("coefficient length must match the system size")
        if not np.isfinite(np.sum(self.lam**2)):
            raise ValueError("coefficients must be square-summable")

    def l2(self) -> float:
        return float(np.linalg.norm(self.lam))
