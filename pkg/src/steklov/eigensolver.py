"""Steklov spectrum from the discrete pencil ``A phi = lambda B phi``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import EigendecompositionFailure, InsufficientResolution
from .geometry import BoundaryGrid, FourierShape, area, build_grid
from .nystrom import OperatorPair, assemble_pair

__all__ = [
    "SteklovSpectrum",
    "solve_spectrum",
    "steklov_spectrum",
    "normalized_eigenvalue",
    "evaluate_field",
    "multiplicity_clusters",
]

IMAG_TOL = 1e-8
NEGATIVE_TOL = 1e-8
CLUSTER_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class SteklovSpectrum:
    """Sorted Steklov eigenvalues with densities and boundary traces.

    Attributes
    ----------
    lambdas : ndarray, shape (count,)
        Ascending eigenvalues, ``lambdas[0] == 0``.
    densities : ndarray, shape (n, count)
        Layer densities ``phi``, scaled consistently with ``traces``.
    traces : ndarray, shape (n, count)
        Boundary values ``u = B phi`` with unit ``L2(ds)`` norm.
    """

    lambdas: np.ndarray
    densities: np.ndarray
    traces: np.ndarray
    grid: BoundaryGrid

    @property
    def shape(self) -> FourierShape:
        return self.grid.shape

    @property
    def n(self) -> int:
        return self.grid.n

    def __len__(self):
        return self.lambdas.size


def solve_spectrum(
    pair: OperatorPair,
    count: int,
    imag_tol: float = IMAG_TOL,
    negative_tol: float = NEGATIVE_TOL,
    cluster_tol: float = CLUSTER_TOL,
    method: str = "qz",
) -> SteklovSpectrum:
    """Lowest ``count`` eigenpairs of the pencil via dense QZ.

    ``method="standard"`` instead reduces to ``B^{-1} A`` and calls the
    standard eigensolver. ``B`` is invertible for the modified single layer,
    and this path is roughly an order of magnitude faster for large ``n``.

    Eigenvalues with a relative imaginary part above ``imag_tol`` or with an
    infinite/indeterminate ratio are discarded as spurious. Values in
    ``(-negative_tol, 0)`` are clamped to zero. Traces within a cluster of
    relative width ``cluster_tol`` are orthonormalized in ``L2(ds)``.

    Raises
    ------
    InsufficientResolution
        If ``count > n/3`` or fewer than ``count`` eigenvalues survive.
    EigendecompositionFailure
        If LAPACK fails.
    """
    grid = pair.grid
    if count < 1:
        raise ValueError("count must be positive")
    if 3 * count > grid.n:
        raise InsufficientResolution(
            f"{count} eigenvalues requested from {grid.n} nodes; need n >= 3 * count"
        )
    if method not in ("qz", "standard"):
        raise ValueError(f"unknown method {method!r}")
    try:
        if method == "qz":
            vals, vecs = scipy.linalg.eig(pair.A, pair.B, check_finite=True)
        else:
            vals, vecs = scipy.linalg.eig(scipy.linalg.solve(pair.B, pair.A), check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigendecompositionFailure(str(exc)) from exc

    ok = np.isfinite(vals) & (np.abs(vals.imag) <= imag_tol * (1 + np.abs(vals.real)))
    vals = vals.real[ok]
    vecs = vecs[:, ok]
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    if vals.size < count:
        raise InsufficientResolution(f"only {vals.size} valid eigenvalues, {count} requested")
    vals, vecs = vals[:count].copy(), vecs[:, :count]
    if vals[0] < -negative_tol:
        raise InsufficientResolution(f"negative eigenvalue {vals[0]:.3g}")
    vals[vals < 0] = 0.0

    # real eigenvalues of a real pencil come with eigenvectors that are real up to a phase
    idx = np.argmax(np.abs(vecs), axis=0)
    phase = vecs[idx, np.arange(count)]
    phi = (vecs / (phase / np.abs(phase))).real

    # a degenerate eigenspace comes back as an arbitrary complex basis whose
    # phase-fixed real parts may be nearly parallel; real and imaginary parts
    # both lie in the eigenspace, so take its dominant real subspace and make
    # it orthonormal in L2(ds) so that reduced matrices built from it are symmetric
    w = grid.weights
    sw = np.sqrt(w)[:, None]
    for cluster in multiplicity_clusters(vals, cluster_tol):
        if len(cluster) > 1:
            sl = slice(cluster[0], cluster[-1] + 1)
            k = len(cluster)
            cand = np.hstack([vecs[:, sl].real, vecs[:, sl].imag])
            _, s, vt = np.linalg.svd(sw * (pair.B @ cand), full_matrices=False)
            basis = cand @ (vt[:k].T / s[:k])
            # Rayleigh-Ritz inside the subspace so that near-degenerate
            # members come back as individual eigenvectors again
            ub = pair.B @ basis
            H = ub.T @ (w[:, None] * (pair.A @ basis))
            ritz, R = np.linalg.eigh(0.5 * (H + H.T))
            phi[:, sl] = basis @ R
            vals[sl] = np.maximum(ritz, 0.0)
    u = pair.B @ phi
    scale = 1.0 / np.sqrt(w @ u**2)
    # deterministic sign: largest |u| entry positive
    scale *= np.sign(u[np.argmax(np.abs(u), axis=0), np.arange(count)])
    return SteklovSpectrum(vals, phi * scale, u * scale, grid)


def steklov_spectrum(shape: FourierShape, n: int, count: int, **kwargs) -> SteklovSpectrum:
    """Convenience wrapper: grid, assembly and eigensolve in one call."""
    return solve_spectrum(assemble_pair(build_grid(shape, n)), count, **kwargs)


def normalized_eigenvalue(shape: FourierShape, spectrum: SteklovSpectrum, j=None):
    """Dilation-invariant ``lambda_j * sqrt(area)``; all of them if ``j`` is None."""
    lam = spectrum.lambdas if j is None else spectrum.lambdas[j]
    return lam * np.sqrt(area(shape))


def evaluate_field(spectrum: SteklovSpectrum, j: int, points) -> np.ndarray:
    """Evaluate eigenfunction ``j`` at planar points through its layer potential.

    The trapezoid rule is used for the potential, so accuracy degrades for
    points closer to the boundary than a few node spacings. Points outside
    the domain get the exterior extension of the representation.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[-1] != 2:
        raise ValueError("points must have shape (..., 2)")
    flat = pts.reshape(-1, 2)
    grid = spectrum.grid
    phi = spectrum.densities[:, j]
    w = grid.weights
    mean = w @ phi / w.sum()
    out = np.empty(flat.shape[0])
    # chunk to bound memory for large point clouds
    for start in range(0, flat.shape[0], 4096):
        chunk = flat[start:start + 4096]
        d = chunk[:, None, :] - grid.x[None, :, :]
        r2 = np.einsum("ijk,ijk->ij", d, d)
        on_node = r2 == 0
        hit = on_node.any(axis=1)
        r2[on_node] = 1.0
        vals = (np.log(r2) / (4 * np.pi)) @ (w * (phi - mean)) + mean
        # a point sitting exactly on a node gets the boundary trace there
        vals[hit] = spectrum.traces[np.argmax(on_node[hit], axis=1), j]
        out[start:start + 4096] = vals
    return out.reshape(pts.shape[:-1])


def multiplicity_clusters(lambdas, rel_tol: float = 1e-6) -> list[list[int]]:
    """Group consecutive eigenvalues whose gap is at most ``rel_tol * (1 + |lambda|)``."""
    if rel_tol <= 0:
        raise ValueError("rel_tol must be positive")
    lam = np.asarray(getattr(lambdas, "lambdas", lambdas), dtype=float)
    if lam.size == 0:
        return []
    clusters = [[0]]
    for i in range(1, lam.size):
        if abs(lam[i] - lam[i - 1]) <= rel_tol * (1 + abs(lam[i - 1])):
            clusters[-1].append(i)
        else:
            clusters.append([i])
    return clusters
