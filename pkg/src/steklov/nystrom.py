"""
Dense Nystrom discretization of the boundary operators of the Steklov problem.

The eigenfunction is represented by a modified single layer potential

    u(x) = int Phi(x - y) (phi(y) - mean(phi)) ds(y) + mean(phi),
    Phi(x) = log|x| / (2 pi),

so that its Dirichlet trace is ``B phi`` and its interior Neumann trace is
``A phi``, turning ``du/dn = lambda u`` into the pencil ``A phi = lambda B phi``.
The logarithmic singularity of the single layer kernel is integrated with
Kress' trigonometric product quadrature; everything else uses the
trapezoid rule, which is spectrally accurate for smooth periodic integrands.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import BoundaryGrid, check_node_count

__all__ = [
    "OperatorPair",
    "kress_log_weights",
    "mean_projector",
    "assemble_single_layer",
    "assemble_normal_derivative",
    "assemble_pair",
]


@dataclass(frozen=True, eq=False)
class OperatorPair:
    """Discrete Neumann-trace operator ``A`` and Dirichlet-trace operator ``B``."""

    A: np.ndarray
    B: np.ndarray
    grid: BoundaryGrid


def kress_log_weights(n: int) -> np.ndarray:
    """Product-quadrature weights for ``int_0^{2pi} log(4 sin^2((t - s)/2)) f(s) ds``.

    Returns ``R`` of length ``n`` such that the integral at ``t = t_i`` is
    ``sum_j R[(i - j) % n] f(t_j)``. The rule is exact for trigonometric
    polynomials of degree below ``n/2`` and follows from the expansion
    ``log(4 sin^2(s/2)) = -2 sum_{m>=1} cos(m s) / m``.
    """
    n = check_node_count(n)
    half = n // 2
    coef = np.zeros(half + 1)
    coef[1:half] = 1.0 / np.arange(1, half)
    coef[half] = 2.0 / n
    # irfft(c)[k] = (2 sum_m c_m cos(m t_k) + c_{n/2} (-1)^k) / n
    return -2 * np.pi * np.fft.irfft(coef, n)


def _circulant(row: np.ndarray) -> np.ndarray:
    n = row.size
    idx = np.subtract.outer(np.arange(n), np.arange(n)) % n
    return row[idx]


def mean_projector(grid: BoundaryGrid) -> np.ndarray:
    """Matrix ``P`` with ``(P phi)_i`` equal to the arc-length mean of ``phi``."""
    w = grid.weights
    return np.outer(np.ones(grid.n), w / w.sum())


def assemble_single_layer(grid: BoundaryGrid) -> np.ndarray:
    """Discretize ``phi -> int Phi(x - y) phi(y) ds(y)`` on the boundary.

    The kernel is split as

        log|x(t) - x(s)| / (2 pi) = log(4 sin^2((t - s)/2)) / (4 pi) + smooth,

    the first part is integrated with :func:`kress_log_weights`, the smooth
    remainder (diagonal limit ``log|x'(t)| / (2 pi)``) with the trapezoid rule.
    """
    n = grid.n
    diff = grid.x[:, None, :] - grid.x[None, :, :]
    dist2 = np.einsum("ijk,ijk->ij", diff, diff)
    sin2 = 4 * np.sin(np.subtract.outer(grid.t, grid.t) / 2) ** 2
    np.fill_diagonal(dist2, 1.0)
    np.fill_diagonal(sin2, 1.0)
    smooth = np.log(dist2 / sin2) / (4 * np.pi)
    np.fill_diagonal(smooth, np.log(grid.jac) / (2 * np.pi))
    log_part = _circulant(kress_log_weights(n)) / (4 * np.pi)
    return (log_part + grid.h * smooth) * grid.jac[None, :]


def assemble_normal_derivative(grid: BoundaryGrid) -> np.ndarray:
    """Discretize ``phi -> int dPhi(x - y)/dn(x) phi(y) ds(y)``.

    The kernel ``n(x).(x - y) / (2 pi |x - y|^2)`` is smooth on a smooth
    curve with diagonal limit ``kappa / (4 pi)``.
    """
    diff = grid.x[:, None, :] - grid.x[None, :, :]
    dist2 = np.einsum("ijk,ijk->ij", diff, diff)
    np.fill_diagonal(dist2, 1.0)
    kern = np.einsum("ik,ijk->ij", grid.normal, diff) / (2 * np.pi * dist2)
    np.fill_diagonal(kern, grid.kappa / (4 * np.pi))
    return kern * grid.weights[None, :]


def assemble_pair(grid: BoundaryGrid) -> OperatorPair:
    """Assemble ``A = (K - I/2)(I - P)`` and ``B = S(I - P) + P``.

    ``K - I/2`` is the interior limit of the normal derivative of the single
    layer potential with kernel ``log|x| / (2 pi)``.
    """
    n = grid.n
    eye = np.eye(n)
    P = mean_projector(grid)
    Q = eye - P
    S = assemble_single_layer(grid)
    K = assemble_normal_derivative(grid)
    A = (K - 0.5 * eye) @ Q
    B = S @ Q + P
    return OperatorPair(A, B, grid)
