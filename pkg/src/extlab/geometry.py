"""Sphere and box discretizations.

Quadrature grids on the unit circle / sphere, direction subsets with their
surface measure, geodesic reflection and midpoint sets, Cantor arc
constructions, deterministic tangent frames and in-plane phase grids.

Conventions fixed here and used everywhere downstream:
  * S^1 uses a uniform angular rule, S^2 a product Gauss-Legendre (in cos
    theta) x uniform (in phi) rule; both are antipodally closed (even node
    counts) so g -> conj(g(-.)) is an exact node permutation.
  * the declared polynomial exactness degree of the S^2 rule is
    min(2*n_theta - 1, n_phi - 1).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.spatial import cKDTree

SURFACE_MEASURE = {2: 2.0 * np.pi, 3: 4.0 * np.pi}


class ResolutionError(ValueError):
    """A requested construction is finer than the grid can certify."""


# ---------------------------------------------------------------------------
# sphere grids


@dataclass(frozen=True, eq=False)
class SphereGrid:
    """Quadrature discretization of S^{n-1} (n = 2 or 3)."""

    n: int
    nodes: np.ndarray          # (m, n) unit vectors
    qweights: np.ndarray       # (m,) positive quadrature weights
    exact_degree: int          # certified polynomial exactness degree
    angular_resolution: float  # max nearest-node geodesic gap
    antipode: np.ndarray       # (m,) index of the antipodal node
    tree: cKDTree = field(repr=False)

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    @property
    def total_measure(self) -> float:
        return SURFACE_MEASURE[self.n]

    def nearest(self, points: np.ndarray) -> np.ndarray:
        """Indices of the nearest grid nodes to the given unit vectors."""
        pts = np.atleast_2d(points)
        return self.tree.query(pts)[1]

    def integrate(self, values: np.ndarray) -> complex | float:
        return np.tensordot(self.qweights, values, axes=(0, 0))


def geodesic_distance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Great-circle distance between unit vectors (broadcasting)."""
    dot = np.clip(np.sum(a * b, axis=-1), -1.0, 1.0)
    return np.arccos(dot)


def _nearest_gap(nodes: np.ndarray) -> float:
    tree = cKDTree(nodes)
    chord, _ = tree.query(nodes, k=2)
    chord = np.clip(chord[:, 1], 0.0, 2.0)
    return float(np.max(2.0 * np.arcsin(chord / 2.0)))


def build_sphere_grid(n: int, resolution: int | tuple[int, int]) -> SphereGrid:
    """Build the S^1 uniform rule or the S^2 Gauss-Legendre x uniform rule.

    resolution: node count for n=2; (n_theta, n_phi) or a single n_theta
    (n_phi = 2*n_theta) for n=3.  Counts are forced even so the grid is
    antipodally closed.
    """
    if n == 2:
        m = int(resolution) if not isinstance(resolution, tuple) else int(resolution[0])
        if m < 4:
            raise ResolutionError("need at least 4 nodes on S^1")
        m += m % 2
        angles = 2.0 * np.pi * np.arange(m) / m
        nodes = np.stack([np.cos(angles), np.sin(angles)], axis=1)
        qweights = np.full(m, 2.0 * np.pi / m)
        # uniform rule integrates e^{ik phi} exactly for |k| < m
        degree = m - 1
        res = 2.0 * np.pi / m
        antipode = (np.arange(m) + m // 2) % m
    elif n == 3:
        if isinstance(resolution, tuple):
            n_theta, n_phi = resolution
        else:
            n_theta, n_phi = int(resolution), 2 * int(resolution)
        if n_theta < 2 or n_phi < 4:
            raise ResolutionError("S^2 grid needs n_theta >= 2, n_phi >= 4")
        n_phi += n_phi % 2
        x, wx = np.polynomial.legendre.leggauss(n_theta)
        phis = 2.0 * np.pi * np.arange(n_phi) / n_phi
        sin_t = np.sqrt(1.0 - x**2)
        nodes = np.empty((n_theta * n_phi, 3))
        nodes[:, 0] = np.outer(sin_t, np.cos(phis)).ravel()
        nodes[:, 1] = np.outer(sin_t, np.sin(phis)).ravel()
        nodes[:, 2] = np.outer(x, np.ones(n_phi)).ravel()
        qweights = np.outer(wx, np.full(n_phi, 2.0 * np.pi / n_phi)).ravel()
        degree = min(2 * n_theta - 1, n_phi - 1)
        res = _nearest_gap(nodes)
        # antipode of (x, phi) is (-x, phi + pi); both are grid nodes
        i_t = np.repeat(np.arange(n_theta), n_phi)
        i_p = np.tile(np.arange(n_phi), n_theta)
        antipode = (n_theta - 1 - i_t) * n_phi + (i_p + n_phi // 2) % n_phi
    else:
        raise ValueError(f"unsupported dimension n={n} (only 2 and 3)")

    grid = SphereGrid(
        n=n,
        nodes=nodes,
        qweights=qweights,
        exact_degree=degree,
        angular_resolution=res,
        antipode=antipode,
        tree=cKDTree(nodes),
    )
    _validate_grid(grid)
    return grid


def _validate_grid(grid: SphereGrid) -> None:
    norms = np.linalg.norm(grid.nodes, axis=1)
    if np.max(np.abs(norms - 1.0)) > 1e-12:
        raise AssertionError("sphere nodes are not unit vectors")
    total = float(np.sum(grid.qweights))
    if abs(total - grid.total_measure) > 1e-10 * grid.total_measure:
        raise AssertionError("quadrature weights do not sum to the surface measure")
    flip = grid.nodes[grid.antipode] + grid.nodes
    if np.max(np.abs(flip)) > 1e-12:
        raise AssertionError("antipode index map is inexact")


def moment_oracle(n: int, d: int) -> float:
    """Closed form of the axial moment integral of (a.omega)^d over S^{n-1}.

    For a unit vector a: 0 for odd d; n=3: 4*pi/(d+1); n=2: 2*pi*(d-1)!!/d!!.
    """
    if d % 2 == 1:
        return 0.0
    if n == 3:
        return 4.0 * np.pi / (d + 1)
    if n == 2:
        num, den = 1.0, 1.0
        for k in range(1, d + 1):
            if k % 2 == 1:
                num *= k
            else:
                den *= k
        return 2.0 * np.pi * num / den
    raise ValueError("unsupported dimension")


# ---------------------------------------------------------------------------
# direction sets


@dataclass(frozen=True, eq=False)
class DirectionSet:
    """Subset of sphere grid nodes with its quadrature measure."""

    grid: SphereGrid
    mask: np.ndarray  # (m,) bool
    tag: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mask.shape != (self.grid.size,):
            raise ValueError("mask length must equal the node count")

    @property
    def measure(self) -> float:
        return float(np.sum(self.grid.qweights[self.mask]))

    @property
    def indices(self) -> np.ndarray:
        return np.nonzero(self.mask)[0]

    @property
    def members(self) -> np.ndarray:
        return self.grid.nodes[self.mask]

    def union(self, other: "DirectionSet") -> "DirectionSet":
        return DirectionSet(self.grid, self.mask | other.mask, tag="custom")

    def to_json(self) -> str:
        return json.dumps(
            {"tag": self.tag, "params": self.params, "mask": self.mask.astype(int).tolist()},
            sort_keys=True,
        )


def direction_set_from_json(grid: SphereGrid, text: str) -> DirectionSet:
    data = json.loads(text)
    mask = np.asarray(data["mask"], dtype=bool)
    return DirectionSet(grid, mask, tag=data["tag"], params=data["params"])


def full_set(grid: SphereGrid) -> DirectionSet:
    return DirectionSet(grid, np.ones(grid.size, dtype=bool), tag="full")


def cap_set(grid: SphereGrid, center: np.ndarray, radius: float) -> DirectionSet:
    """Geodesic cap {omega: dist(omega, center) <= radius}, snapped to nodes."""
    center = np.asarray(center, dtype=float)
    center = center / np.linalg.norm(center)
    mask = geodesic_distance(grid.nodes, center) <= radius
    return DirectionSet(grid, mask, tag="cap-union",
                        params={"centers": [center.tolist()], "radius": radius})


def cap_union_set(grid: SphereGrid, centers: np.ndarray, radius: float) -> DirectionSet:
    mask = np.zeros(grid.size, dtype=bool)
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    for c in centers:
        cu = c / np.linalg.norm(c)
        mask |= geodesic_distance(grid.nodes, cu) <= radius
    return DirectionSet(grid, mask, tag="cap-union",
                        params={"centers": centers.tolist(), "radius": radius})


def check_antipodal_separation(K: DirectionSet, delta0: float = 0.1) -> float:
    """Min geodesic distance from members of K to the antipodes of members.

    The n=2 sphere-theorem hypothesis needs this to exceed delta0; raises
    otherwise and returns the separation when it passes.
    """
    pts = K.members
    if len(pts) == 0:
        return np.pi
    chord, _ = cKDTree(pts).query(-pts, k=1)
    sep = float(np.min(2.0 * np.arcsin(np.clip(chord / 2.0, 0.0, 1.0))))
    if sep <= delta0:
        raise ValueError(
            f"direction set violates the antipodal separation hypothesis "
            f"(separation {sep:.4f} <= delta0 {delta0})"
        )
    return sep


# ---------------------------------------------------------------------------
# reflection and midpoint sets


def reflect(omega: np.ndarray, omega_prime: np.ndarray) -> np.ndarray:
    """Geodesic reflection R_omega omega' = 2(omega.omega') omega - omega'.

    omega is a great-circle midpoint of omega' and R_omega omega'.
    Broadcasts over leading axes; inputs must be unit within 1e-10.
    """
    omega = np.asarray(omega, dtype=float)
    omega_prime = np.asarray(omega_prime, dtype=float)
    for v in (omega, omega_prime):
        nrm = np.linalg.norm(v, axis=-1)
        if np.any(np.abs(nrm - 1.0) > 1e-10):
            raise ValueError("reflect requires unit vectors (within 1e-10)")
    dot = np.sum(omega * omega_prime, axis=-1, keepdims=True)
    return 2.0 * dot * omega - omega_prime


def midpoint_set(K: DirectionSet, eta: float | None = None) -> DirectionSet:
    """Discrete midpoint set K^<>.

    A node omega is marked iff some omega' in K has R_omega omega' within
    geodesic distance eta of a node of K (equivalently, some pair of K has
    omega as a great-circle midpoint up to eta).  The result is antipodally
    symmetric and contains K.  eta defaults to, and must be at least,
    2x the grid angular resolution.
    """
    grid = K.grid
    if eta is None:
        eta = 2.0 * grid.angular_resolution
    if eta < 2.0 * grid.angular_resolution:
        raise ResolutionError(
            f"midpoint tolerance eta={eta:.4g} below 2x grid resolution "
            f"{grid.angular_resolution:.4g}; midpoints would be undetectable"
        )
    members = K.members
    mask = K.mask.copy()
    if members.shape[0] == 0:
        return DirectionSet(grid, mask, tag="custom", params={"kind": "midpoint", "eta": eta})
    ktree = cKDTree(members)
    chord_tol = 2.0 * np.sin(min(eta, np.pi) / 2.0)
    chunk = max(1, int(2e6 // max(1, members.shape[0])))
    for lo in range(0, grid.size, chunk):
        om = grid.nodes[lo:lo + chunk][:, None, :]          # (c, 1, n)
        refl = 2.0 * np.sum(om * members[None], axis=-1, keepdims=True) * om - members[None]
        dist, _ = ktree.query(refl.reshape(-1, grid.n))
        hit = (dist.reshape(refl.shape[:2]) <= chord_tol).any(axis=1)
        mask[lo:lo + chunk] |= hit
    return DirectionSet(grid, mask, tag="custom", params={"kind": "midpoint", "eta": eta})


def system_midpoint_union(supports: list[DirectionSet], eta: float | None = None) -> DirectionSet:
    """Union over members of per-support midpoint sets (the K* set)."""
    out = None
    for s in supports:
        ms = midpoint_set(s, eta=eta)
        out = ms if out is None else out.union(ms)
    if out is None:
        raise ValueError("need at least one support")
    return replace(out, tag="custom", params={"kind": "midpoint-union"})


# ---------------------------------------------------------------------------
# Cantor construction on S^1


def cantor_direction_set(grid: SphereGrid, generation: int,
                         base_start: float = 0.0, base_length: float = np.pi) -> DirectionSet:
    """Middle-thirds construction of arcs on S^1.

    Generation N keeps 2^N arcs of angular length base_length/3^N; the
    retained measure is base_length*(2/3)^N.
    """
    if grid.n != 2:
        raise ValueError("cantor_direction_set is defined on S^1 only")
    if generation < 0:
        raise ValueError("generation must be >= 0")
    arcs = [(base_start, base_length)]
    for _ in range(generation):
        arcs = [piece for a, ln in arcs for piece in ((a, ln / 3.0), (a + 2.0 * ln / 3.0, ln / 3.0))]
    arc_len = base_length / 3.0**generation
    if arc_len < 2.0 * grid.angular_resolution:
        raise ResolutionError(
            f"generation-{generation} arcs (length {arc_len:.4g}) fall below "
            f"2x grid resolution {grid.angular_resolution:.4g}"
        )
    angles = np.mod(np.arctan2(grid.nodes[:, 1], grid.nodes[:, 0]), 2.0 * np.pi)
    mask = np.zeros(grid.size, dtype=bool)
    for a, ln in arcs:
        rel = np.mod(angles - a, 2.0 * np.pi)
        mask |= rel <= ln + 1e-12
    return DirectionSet(grid, mask, tag="cantor",
                        params={"generation": generation, "base_start": base_start,
                                "base_length": base_length})


# ---------------------------------------------------------------------------
# tangent frames and phase grids


def tangent_frame(omega: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal frame of <omega>^perp, shape (n-1, n).

    Gram-Schmidt against the last coordinate axis, falling back to the first
    axis within 0.1 of the poles; for n=2 the frame is the +90 degree
    rotation of omega.
    """
    omega = np.asarray(omega, dtype=float)
    n = omega.shape[-1]
    if n == 2:
        return np.array([[-omega[1], omega[0]]])
    ref = np.array([0.0, 0.0, 1.0])
    if abs(omega @ ref) > 0.9:
        ref = np.array([1.0, 0.0, 0.0])
    e1 = ref - (ref @ omega) * omega
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(omega, e1)
    return np.stack([e1, e2])


@dataclass(frozen=True)
class PhaseGrid:
    """Uniform midpoint grid on the tangent planes {v : vial omega}.

    Covers [-radius, radius]^(n-1) in the deterministic tangent frame with
    m points per axis; cell area (2*radius/m)^(n-1).
    """

    n: int
    radius: float
    m: int

    @property
    def cell(self) -> float:
        return (2.0 * self.radius / self.m) ** (self.n - 1)

    @property
    def offsets(self) -> np.ndarray:
        h = 2.0 * self.radius / self.m
        axis = -self.radius + h * (np.arange(self.m) + 0.5)
        if self.n == 2:
            return axis[:, None]
        a, b = np.meshgrid(axis, axis, indexing="ij")
        return np.stack([a.ravel(), b.ravel()], axis=1)

    def points(self, omega: np.ndarray) -> np.ndarray:
        """In-plane nodes as vectors of R^n, shape (m^(n-1), n)."""
        frame = tangent_frame(omega)
        return self.offsets @ frame

    def boundary_ring_mask(self) -> np.ndarray:
        """Mask of outermost cells, for tail estimates."""
        if self.n == 2:
            idx = np.arange(self.m)
            return (idx == 0) | (idx == self.m - 1)
        i, j = np.divmod(np.arange(self.m * self.m), self.m)
        return (i == 0) | (i == self.m - 1) | (j == 0) | (j == self.m - 1)


# ---------------------------------------------------------------------------
# box grids


@dataclass(frozen=True, eq=False)
class BoxGrid:
    """Uniform midpoint grid on [-side/2, side/2]^dim."""

    dim: int
    side: float
    npts: int

    @property
    def step(self) -> float:
        return self.side / self.npts

    @property
    def cell_volume(self) -> float:
        return self.step**self.dim

    @property
    def size(self) -> int:
        return self.npts**self.dim

    @property
    def axis(self) -> np.ndarray:
        return -self.side / 2.0 + self.step * (np.arange(self.npts) + 0.5)

    def nodes(self) -> np.ndarray:
        """Flat (npts^dim, dim) node coordinates, C-ordered."""
        grids = np.meshgrid(*([self.axis] * self.dim), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def contains(self, points: np.ndarray) -> np.ndarray:
        half = self.side / 2.0
        return np.all(np.abs(np.atleast_2d(points)) <= half, axis=1)
