"""Weight models.

The primary model is a signed mixture of isotropic Gaussians
    w(x) = sum_i c_i exp(-pi |x - a_i|^2 / s_i^2),
closed under Fourier transform, line integrals, hyperplane integrals and
autocorrelation, so the two sides of every inequality can be compared
without fabricating quadrature error on the weight side.  Grid-sampled
weights are second class (indicator experiments, cone searches).

Fourier convention (global): what(xi) = int w(x) e^{-2 pi i x.xi} dx, so a
unit-width term transforms to s^n e^{-pi s^2 |xi|^2} e^{-2 pi i a.xi}.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from extlab.geometry import BoxGrid


@dataclass(frozen=True, eq=False)
class GaussianMixture:
    """Signed isotropic Gaussian mixture on R^dim."""

    coeffs: np.ndarray   # (k,) real
    centers: np.ndarray  # (k, dim)
    widths: np.ndarray   # (k,) positive

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.atleast_1d(np.asarray(self.coeffs, dtype=float)))
        object.__setattr__(self, "centers", np.atleast_2d(np.asarray(self.centers, dtype=float)))
        object.__setattr__(self, "widths", np.atleast_1d(np.asarray(self.widths, dtype=float)))
        if np.any(self.widths <= 0):
            raise ValueError("mixture widths must be positive")
        if self.centers.shape[0] != self.coeffs.shape[0]:
            raise ValueError("coeffs and centers disagree in length")

    @property
    def dim(self) -> int:
        return self.centers.shape[1]

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        d2 = np.sum((x[:, None, :] - self.centers[None]) ** 2, axis=-1)
        vals = self.coeffs * np.exp(-np.pi * d2 / self.widths**2)
        return np.sum(vals, axis=1)

    def scale(self, factor: float) -> "GaussianMixture":
        return GaussianMixture(self.coeffs * factor, self.centers, self.widths)

    def dilate(self, lam: float) -> "GaussianMixture":
        """w(./lam): centers and widths multiply by lam."""
        return GaussianMixture(self.coeffs, self.centers * lam, self.widths * lam)

    def reflected(self) -> "GaussianMixture":
        """w tilde = w(-.) for real w."""
        return GaussianMixture(self.coeffs, -self.centers, self.widths)

    def mass(self) -> float:
        return float(np.sum(self.coeffs * self.widths**self.dim))

    def l2_norm_sq(self) -> float:
        return float(self.autocorrelate()(np.zeros((1, self.dim)))[0])

    def fourier(self, xi: np.ndarray) -> np.ndarray:
        """what(xi), exact."""
        xi = np.atleast_2d(np.asarray(xi, dtype=float))
        amp = self.coeffs * self.widths**self.dim
        quad = np.exp(-np.pi * self.widths[None] ** 2 * np.sum(xi**2, axis=1)[:, None])
        phase = np.exp(-2j * np.pi * (xi @ self.centers.T))
        return (quad * phase) @ amp

    def line_integral(self, point: np.ndarray, direction: np.ndarray) -> np.ndarray:
        """int w(p + t d) dt for rows of (point, direction); d need not be unit."""
        p = np.atleast_2d(np.asarray(point, dtype=float))
        d = np.atleast_2d(np.asarray(direction, dtype=float))
        dn = np.linalg.norm(d, axis=1, keepdims=True)
        u = d / dn
        rel = p[:, None, :] - self.centers[None]
        along = np.sum(rel * u[:, None, :], axis=-1)
        dist2 = np.sum(rel**2, axis=-1) - along**2
        vals = self.coeffs * self.widths * np.exp(-np.pi * dist2 / self.widths**2)
        return np.sum(vals, axis=1) / dn[:, 0]

    def hyperplane_integral(self, normal: np.ndarray) -> np.ndarray:
        """int over {xi . normal = 0} of w, for unit normals (rows)."""
        nrm = np.atleast_2d(np.asarray(normal, dtype=float))
        proj = nrm @ self.centers.T
        vals = self.coeffs * self.widths ** (self.dim - 1) * np.exp(-np.pi * proj**2 / self.widths**2)
        return np.sum(vals, axis=1)

    def autocorrelate(self) -> "GaussianMixture":
        """w * wtilde, exact mixture; even and positive-definite."""
        s2 = self.widths[:, None] ** 2 + self.widths[None] ** 2
        sig = np.sqrt(s2)
        amp = (self.coeffs[:, None] * self.coeffs[None]) * (
            (self.widths[:, None] * self.widths[None]) / sig
        ) ** self.dim
        centers = self.centers[:, None, :] - self.centers[None]
        k = self.coeffs.shape[0]
        return GaussianMixture(amp.reshape(k * k), centers.reshape(k * k, self.dim), sig.reshape(k * k))

    def convolve(self, other: "GaussianMixture") -> "GaussianMixture":
        s2 = self.widths[:, None] ** 2 + other.widths[None] ** 2
        sig = np.sqrt(s2)
        amp = (self.coeffs[:, None] * other.coeffs[None]) * (
            (self.widths[:, None] * other.widths[None]) / sig
        ) ** self.dim
        centers = self.centers[:, None, :] + other.centers[None]
        k = amp.size
        return GaussianMixture(amp.reshape(k), centers.reshape(k, self.dim), sig.reshape(k))

    def tail_mass_outside_box(self, side: float) -> float:
        """Upper bound on int_{outside [-side/2, side/2]^dim} |w|."""
        from scipy.special import erfc

        half = side / 2.0
        total = 0.0
        for c, a, s in zip(self.coeffs, self.centers, self.widths):
            # union bound over faces: per axis mass outside [-half, half]
            inside = 1.0
            for ai in a:
                lo = erfc(np.sqrt(np.pi) * (half + ai) / s) / 2.0
                hi = erfc(np.sqrt(np.pi) * (half - ai) / s) / 2.0
                inside *= max(0.0, 1.0 - lo - hi)
            total += abs(c) * s**self.dim * (1.0 - inside)
        return total

    def verify_nonnegative(self, probe_points: np.ndarray | None = None) -> bool:
        """Check w >= -1e-9 at term centers, pairwise midpoints and probes."""
        pts = [self.centers]
        k = len(self.coeffs)
        if k > 1:
            mid = 0.5 * (self.centers[:, None, :] + self.centers[None])
            pts.append(mid.reshape(k * k, self.dim))
        if probe_points is not None:
            pts.append(np.atleast_2d(probe_points))
        vals = self(np.concatenate(pts, axis=0))
        if np.min(vals) < -1e-9:
            raise ValueError(f"weight flagged nonnegative evaluates to {np.min(vals):.3e}")
        return True

    def to_json(self) -> str:
        return json.dumps(
            {
                "kind": "gaussian-mixture",
                "coeffs": self.coeffs.tolist(),
                "centers": self.centers.tolist(),
                "widths": self.widths.tolist(),
            },
            sort_keys=True,
        )


def mixture_from_json(text: str) -> GaussianMixture:
    data = json.loads(text)
    if data.get("kind") != "gaussian-mixture":
        raise ValueError("not a gaussian-mixture record")
    return GaussianMixture(
        np.asarray(data["coeffs"]), np.asarray(data["centers"]), np.asarray(data["widths"])
    )


def standard_gaussian(dim: int, width: float = 1.0, mass: float | None = None) -> GaussianMixture:
    c = 1.0 if mass is None else mass / width**dim
    return GaussianMixture(np.array([c]), np.zeros((1, dim)), np.array([width]))


def random_signed_mixture(rng: np.random.Generator, dim: int, terms: int,
                          center_radius: float, width_range: tuple[float, float]) -> GaussianMixture:
    """Signed mixture: +-uniform coefficients, centers in a ball."""
    coeffs = rng.uniform(0.2, 1.0, terms) * rng.choice([-1.0, 1.0], terms)
    centers = rng.standard_normal((terms, dim))
    centers *= (center_radius * rng.uniform(0, 1, terms) ** (1 / dim)
                / np.linalg.norm(centers, axis=1))[:, None]
    widths = rng.uniform(*width_range, terms)
    return GaussianMixture(coeffs, centers, widths)


def random_nonneg_mixture(rng: np.random.Generator, dim: int, terms: int,
                          center_radius: float, width_range: tuple[float, float]) -> GaussianMixture:
    m = random_signed_mixture(rng, dim, terms, center_radius, width_range)
    return GaussianMixture(np.abs(m.coeffs), m.centers, m.widths)


# ---------------------------------------------------------------------------
# grid-sampled weights


@dataclass(eq=False)
class GridSampledWeight:
    """Real samples on a BoxGrid; values treated as multilinear between nodes."""

    grid: BoxGrid
    values: np.ndarray  # shape (npts,)*dim
    nonnegative: bool = False

    def __post_init__(self):
        shape = (self.grid.npts,) * self.grid.dim
        self.values = np.asarray(self.values, dtype=float).reshape(shape)
        if self.nonnegative and np.min(self.values) < -1e-12:
            raise ValueError("weight flagged nonnegative has negative samples")
        self._interp = RegularGridInterpolator(
            (self.grid.axis,) * self.grid.dim,
            self.values,
            method="linear",
            bounds_error=False,
            fill_value=0.0,
        )

    @property
    def dim(self) -> int:
        return self.grid.dim

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self._interp(np.atleast_2d(x))

    def mass(self) -> float:
        return float(np.sum(self.values)) * self.grid.cell_volume

    def fourier(self, xi: np.ndarray) -> np.ndarray:
        """Direct quadrature sum_k w(x_k) e^{-2 pi i x_k.xi} * cell volume."""
        xi = np.atleast_2d(np.asarray(xi, dtype=float))
        nodes = self.grid.nodes()
        phase = np.exp(-2j * np.pi * (xi @ nodes.T))
        return self.grid.cell_volume * (phase @ self.values.ravel())

    def line_integral(self, point: np.ndarray, direction: np.ndarray,
                      step_factor: float = 0.5) -> np.ndarray:
        """Composite midpoint rule along lines truncated to the box."""
        p = np.atleast_2d(np.asarray(point, dtype=float))
        d = np.atleast_2d(np.asarray(direction, dtype=float))
        u = d / np.linalg.norm(d, axis=1, keepdims=True)
        half_diag = self.grid.side * np.sqrt(self.dim) / 2.0
        step = step_factor * self.grid.step
        nsteps = int(np.ceil(2 * half_diag / step))
        ts = -half_diag + (np.arange(nsteps) + 0.5) * (2 * half_diag / nsteps)
        pts = p[:, None, :] + ts[None, :, None] * u[:, None, :]
        vals = self._interp(pts.reshape(-1, self.dim)).reshape(len(p), nsteps)
        return np.sum(vals, axis=1) * (2 * half_diag / nsteps)


def sample_on_grid(w, grid: BoxGrid, nonnegative: bool = False) -> GridSampledWeight:
    vals = w(grid.nodes()).reshape((grid.npts,) * grid.dim)
    return GridSampledWeight(grid, vals, nonnegative=nonnegative)
