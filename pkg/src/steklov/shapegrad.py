"""
Hadamard shape derivatives of Steklov eigenvalues and of the
area-normalized eigenvalues with respect to Fourier coefficients.

For a simple eigenpair with ``int u^2 ds = 1`` and normal velocity ``c``,

    lambda' = int (|grad u|^2 - 2 lambda^2 u^2 - lambda kappa u^2) c ds,

and on the boundary ``|grad u|^2 = (du/ds)^2 + lambda^2 u^2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .eigensolver import SteklovSpectrum, multiplicity_clusters
from .exceptions import NormalizationViolated
from .geometry import FourierShape, all_modes, area, parse_mode, perturbation_velocity

__all__ = [
    "GradientReport",
    "tangential_derivative",
    "eigenvalue_derivative",
    "objective_gradient",
    "is_simple",
    "cluster_derivative_matrices",
]

SIMPLE_TOL = 1e-6


@dataclass(frozen=True)
class GradientReport:
    """Gradient of ``Lambda_j`` and ``lambda_j`` over a set of coefficient modes."""

    j: int
    value: float
    lam: float
    modes: list
    dLambda: np.ndarray
    dlambda: np.ndarray
    cluster_warning: bool = False
    cluster: list = field(default_factory=list)

    def _pick(self, arr, kind):
        return np.array([g for (kd, _), g in zip(self.modes, arr) if kd == kind])

    @property
    def dLambda_dA(self) -> np.ndarray:
        return self._pick(self.dLambda, "cos")

    @property
    def dLambda_dB(self) -> np.ndarray:
        return self._pick(self.dLambda, "sin")

    @property
    def dlambda_dA(self) -> np.ndarray:
        return self._pick(self.dlambda, "cos")

    @property
    def dlambda_dB(self) -> np.ndarray:
        return self._pick(self.dlambda, "sin")


def tangential_derivative(values: np.ndarray, jac: np.ndarray) -> np.ndarray:
    """Arc-length derivative of nodal values by FFT differentiation in ``t``."""
    n = values.shape[0]
    k = np.fft.rfftfreq(n, 1.0 / n)
    ik = 1j * k
    ik[-1] = 0.0 if n % 2 == 0 else ik[-1]
    coef = np.fft.rfft(values, axis=0)
    shape = (-1,) + (1,) * (values.ndim - 1)
    du_dt = np.fft.irfft(ik.reshape(shape) * coef, n, axis=0)
    return du_dt / jac.reshape(shape)


def is_simple(lambdas, j: int, rel_tol: float = SIMPLE_TOL) -> bool:
    for cluster in multiplicity_clusters(lambdas, rel_tol):
        if j in cluster:
            return len(cluster) == 1
    return True


def eigenvalue_derivative(spectrum: SteklovSpectrum, j: int, velocity: np.ndarray, check: bool = True):
    """Shape derivative of ``lambda_j`` for normal velocities ``c``.

    ``velocity`` is a nodal vector or an ``(n, k)`` array of ``k`` velocities.
    The value is returned even when ``lambda_j`` sits in a cluster, in which
    case it is only meaningful for the particular basis the solver produced.
    """
    grid = spectrum.grid
    u = spectrum.traces[:, j]
    lam = spectrum.lambdas[j]
    w = grid.weights
    if check:
        norm = w @ u**2
        if abs(norm - 1) > 1e-8:
            raise NormalizationViolated(f"int u^2 ds = {norm:.12g}")
    du_ds = tangential_derivative(u, grid.jac)
    integrand = du_ds**2 - lam**2 * u**2 - lam * grid.kappa * u**2
    return (w * integrand) @ np.asarray(velocity)


def _area_derivative(shape: FourierShape, modes) -> np.ndarray:
    out = np.zeros(len(modes))
    for i, (kind, k) in enumerate(modes):
        if k > shape.m:
            continue
        if kind == "cos":
            out[i] = 2 * np.pi * shape.a[0] if k == 0 else np.pi * shape.a[k]
        else:
            out[i] = np.pi * shape.b[k - 1]
    return out


def objective_gradient(
    shape: FourierShape,
    spectrum: SteklovSpectrum,
    j: int,
    modes=None,
    simple_tol: float = SIMPLE_TOL,
) -> GradientReport:
    """Gradient of ``Lambda_j = lambda_j sqrt(area)`` over coefficient modes.

    ``modes`` defaults to every coefficient of ``shape`` (``a_0..a_m`` then
    ``b_1..b_m``); entries may be strings such as ``"a3"``/``"sin2"`` or
    ``(kind, k)`` tuples.
    """
    modes = all_modes(shape.m) if modes is None else [parse_mode(md) for md in modes]
    velocity = perturbation_velocity(spectrum.grid, modes)
    dlam = eigenvalue_derivative(spectrum, j, velocity)
    lam = float(spectrum.lambdas[j])
    A = area(shape)
    dA = _area_derivative(shape, modes)
    dLam = dlam * np.sqrt(A) + lam * dA / (2 * np.sqrt(A))
    cluster = next(c for c in multiplicity_clusters(spectrum.lambdas, simple_tol) if j in c)
    return GradientReport(
        j=j,
        value=lam * np.sqrt(A),
        lam=lam,
        modes=modes,
        dLambda=dLam,
        dlambda=dlam,
        cluster_warning=len(cluster) > 1,
        cluster=cluster,
    )


def cluster_derivative_matrices(spectrum: SteklovSpectrum, indices, velocity: np.ndarray) -> np.ndarray:
    """First-order perturbation matrices of a group of eigenvalues.

    For the traces ``u_a`` of ``indices`` returns ``M[i, a, b]``, the
    derivative along velocity column ``i`` of the eigenvalues restricted to
    their joint eigenspace:

        M_ab = int (du_a/ds du_b/ds - lam_a lam_b u_a u_b
                    - (lam_a + lam_b) kappa u_a u_b / 2) c ds.

    The diagonal coincides with :func:`eigenvalue_derivative`; the
    eigenvalues of ``M`` give one-sided derivatives of a degenerate cluster.
    """
    grid = spectrum.grid
    idx = list(indices)
    u = spectrum.traces[:, idx]
    lam = spectrum.lambdas[idx]
    du = tangential_derivative(u, grid.jac)
    c = np.asarray(velocity).reshape(grid.n, -1)
    wc = grid.weights[:, None] * c
    ss = np.einsum("ni,na,nb->iab", wc, du, du)
    uu = np.einsum("ni,na,nb->iab", wc, u, u)
    kuu = np.einsum("ni,na,nb->iab", wc * grid.kappa[:, None], u, u)
    return ss - np.outer(lam, lam) * uu - 0.5 * np.add.outer(lam, lam) * kuu
