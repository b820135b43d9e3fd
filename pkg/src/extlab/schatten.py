"""Weighted kernels and Schatten norms.

The sphere operator g -> int g(theta) 1_K(omega) 1_K(theta) what(theta-omega)
dsigma(theta) is embedded as the Hermitian matrix
    A_{jk} = sqrt(q_j) sqrt(q_k) what(omega_k - omega_j)
over the nodes of K, so matrix eigenvalues approximate operator eigenvalues
on L^2(K) and <ghat, A ghat> with ghat = sqrt(q) g reproduces the weighted
intensity integral of g exactly in the weight.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from extlab.geometry import BoxGrid, DirectionSet
from extlab.systems import DensityOperator
from extlab.transforms import extension_on_box


@dataclass(eq=False)
class KernelMatrix:
    """Quadrature-embedded Hermitian kernel over a node subset."""

    entries: np.ndarray      # (m, m) complex
    node_indices: np.ndarray
    hermitian: bool = True

    def __post_init__(self):
        if self.hermitian:
            dev = np.max(np.abs(self.entries - self.entries.conj().T))
            scale = max(1.0, float(np.max(np.abs(self.entries))))
            if dev > 1e-12 * scale:
                raise ValueError(f"kernel not Hermitian (deviation {dev:.2e})")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)

    def frobenius_sq(self) -> float:
        return float(np.sum(np.abs(self.entries) ** 2))

    def trace(self) -> float:
        return float(np.real(np.trace(self.entries)))


def assemble_sphere_kernel(w, K: DirectionSet) -> KernelMatrix:
    """Embedded kernel of the K-restricted weighted composition for real w."""
    idx = K.indices
    nodes = K.grid.nodes[idx]
    q = K.grid.qweights[idx]
    diffs = nodes[None, :, :] - nodes[:, None, :]  # omega_k - omega_j at [j, k]
    m = len(idx)
    wh = w.fourier(diffs.reshape(m * m, K.grid.n)).reshape(m, m)
    root = np.sqrt(q)
    entries = root[:, None] * wh * root[None, :]
    entries = 0.5 * (entries + entries.conj().T)  # symmetrize round-off
    return KernelMatrix(entries, idx)


def assemble_paraboloid_kernel(w, xi_points: np.ndarray, cell_volume: float) -> KernelMatrix:
    """Embedded kernel for the paraboloid: entries what(xi_k - xi_j, |xi_k|^2 - |xi_j|^2).

    w is a real space-time weight on R^{d+1}; xi_points are the lattice points
    of the frequency subset K with their cell volume.  The squared Frobenius
    norm equals the lattice double integral
    int_K int_K |what(xi - eta, |xi|^2 - |eta|^2)|^2 dxi deta.
    """
    xi = np.atleast_2d(np.asarray(xi_points, dtype=float))
    m, d = xi.shape
    dxi = xi[None, :, :] - xi[:, None, :]
    sq = np.sum(xi**2, axis=1)
    dtau = sq[None, :] - sq[:, None]
    args = np.concatenate([dxi.reshape(m * m, d), dtau.reshape(m * m, 1)], axis=1)
    wh = w.fourier(args).reshape(m, m)
    entries = cell_volume * wh
    entries = 0.5 * (entries + entries.conj().T)
    return KernelMatrix(entries, np.arange(m))


def schatten_norm(A: KernelMatrix, p: float) -> float:
    """(sum |lambda_i|^p)^{1/p} from the full Hermitian eigendecomposition."""
    if not A.hermitian:
        raise ValueError("Schatten norms here require a Hermitian kernel")
    lam = np.abs(A.eigenvalues())
    if p == np.inf:
        return float(np.max(lam)) if lam.size else 0.0
    if p <= 0:
        raise ValueError("p must be positive")
    return float(np.sum(lam**p) ** (1.0 / p))


def c2_double_quadrature(w, K: DirectionSet) -> float:
    """Double quadrature of |what(theta - omega)|^2 over K x K."""
    idx = K.indices
    nodes = K.grid.nodes[idx]
    q = K.grid.qweights[idx]
    m = len(idx)
    diffs = (nodes[None, :, :] - nodes[:, None, :]).reshape(m * m, K.grid.n)
    vals = np.abs(w.fourier(diffs)) ** 2
    return float(q @ vals.reshape(m, m) @ q)


def intensity_pairing(A: KernelMatrix, K: DirectionSet, values: np.ndarray) -> np.ndarray:
    """<A ghat_j, ghat_j> for amplitude columns: the weighted intensity integrals.

    values: (grid size, j) node amplitudes; returns the j real pairings
    int |E g_j|^2 w computed exactly in the weight.
    """
    vals = np.atleast_2d(np.asarray(values, dtype=complex))
    if vals.shape[0] != K.grid.size:
        raise ValueError("amplitudes must live on the kernel's grid")
    root = np.sqrt(K.grid.qweights[A.node_indices])
    ghat = root[:, None] * vals[A.node_indices]
    pair = np.einsum("ij,ik,kj->j", ghat.conj(), A.entries, ghat)
    return np.real(pair)


def trace_pairing(w, gamma: DensityOperator, box: BoxGrid,
                  tail_rel_tol: float = 1e-4) -> tuple[float, float]:
    """Both sides of the trace identity, independently.

    Spatial route: quadrature of sum_j lambda_j |E g_j|^2 w over the box
    (Gaussian-tail bound via the pointwise Bessel estimate must pass);
    kernel route: sum_j lambda_j <A ghat_j, ghat_j>.
    Returns (spatial, kernel).
    """
    system = gamma.system
    K = system.support_union()
    A = assemble_sphere_kernel(w, K)
    vals = system.values_matrix()
    kernel_side = float(np.dot(gamma.lam, intensity_pairing(A, K, vals)))

    fields = extension_on_box(system.grid, vals, box)
    dens = np.tensordot(gamma.lam, np.abs(fields) ** 2, axes=(0, 0))
    wvals = w(box.nodes()).reshape(dens.shape)
    spatial = float(np.sum(dens * wvals) * box.cell_volume)

    sigma_k = K.measure
    tail = float(np.sum(np.abs(gamma.lam))) * sigma_k * w.tail_mass_outside_box(box.side)
    scale = max(abs(spatial), abs(kernel_side), 1e-12)
    if tail > tail_rel_tol * scale:
        raise RuntimeError(
            f"spatial tail bound {tail:.2e} exceeds {tail_rel_tol:.0e} x scale "
            f"{scale:.2e}; enlarge the box"
        )
    return spatial, kernel_side


def refinement_report(w, make_set, resolutions: list, top: int = 6) -> dict:
    """Leading kernel eigenvalues across sphere resolutions (Richardson-style).

    make_set: resolution -> DirectionSet on a freshly built grid; reports the
    top eigenvalues and their successive drifts.
    """
    eigs = []
    for res in resolutions:
        K = make_set(res)
        A = assemble_sphere_kernel(w, K)
        lam = np.sort(A.eigenvalues())[::-1][:top]
        eigs.append(lam)
    drifts = [float(np.max(np.abs(a - b))) for a, b in zip(eigs, eigs[1:])]
    return {"resolutions": list(resolutions),
            "top_eigenvalues": [e.tolist() for e in eigs],
            "drifts": drifts}
