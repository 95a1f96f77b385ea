"""
Star-shaped planar domains described by a truncated Fourier series of the
polar radius, and the boundary quantities needed by the Nystrom solver.

The boundary is ``x(t) = rho(t) (cos t, sin t)`` with

    rho(t) = sum_{k=0}^m a_k cos(k t) + sum_{k=1}^m b_k sin(k t)

traversed counterclockwise for ``t`` in ``[0, 2 pi)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from .exceptions import NonpositiveRadius, OddNodeCount, ShapeError

__all__ = [
    "FourierShape",
    "BoundaryGrid",
    "check_node_count",
    "evaluate_radius",
    "build_grid",
    "area",
    "perimeter",
    "perturbation_velocity",
    "parse_mode",
    "all_modes",
]


@dataclass(frozen=True, eq=False)
class FourierShape:
    """Polar Fourier description of a star-shaped domain.

    Parameters
    ----------
    a : array_like, shape (m+1,)
        Cosine coefficients ``a_0 .. a_m``.
    b : array_like, shape (m,), optional
        Sine coefficients ``b_1 .. b_m``. Shorter vectors are zero-padded,
        omitted means all zeros.
    """

    a: np.ndarray
    b: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=float)).copy()
        if a.ndim != 1 or a.size == 0:
            raise ShapeError("cosine coefficients must be a non-empty vector")
        b = np.zeros(0) if self.b is None else np.atleast_1d(np.asarray(self.b, dtype=float)).copy()
        if b.ndim != 1:
            raise ShapeError("sine coefficients must be a vector")
        m = max(a.size - 1, b.size)
        a = np.pad(a, (0, m + 1 - a.size))
        b = np.pad(b, (0, m - b.size))
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ShapeError("coefficients must be finite")
        a.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

        samples = max(16 * self.m, 64)
        rho = evaluate_radius(self, 2 * np.pi * np.arange(samples) / samples)[0]
        if rho.min() <= 0:
            raise NonpositiveRadius(
                f"radius reaches {rho.min():.3g} <= 0 on the {samples}-point check grid"
            )

    @property
    def m(self) -> int:
        """Highest Fourier mode."""
        return self.a.size - 1

    @classmethod
    def disk(cls, radius: float = 1.0) -> "FourierShape":
        return cls([radius])

    @classmethod
    def from_vector(cls, x: Sequence[float]) -> "FourierShape":
        """Inverse of :meth:`to_vector` (``[a_0..a_m, b_1..b_m]``)."""
        x = np.asarray(x, dtype=float)
        if x.ndim != 1 or x.size % 2 != 1:
            raise ShapeError("coefficient vector must have odd length 2m+1")
        m = (x.size - 1) // 2
        return cls(x[: m + 1], x[m + 1:])

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.a, self.b])

    def to_dict(self) -> dict:
        return {"a": self.a.tolist(), "b": self.b.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "FourierShape":
        if "a" not in d:
            raise ShapeError("shape object needs an 'a' entry")
        return cls(d["a"], d.get("b"))

    def padded(self, m: int) -> "FourierShape":
        """Same shape with coefficient vectors zero-padded to mode ``m``."""
        if m < self.m:
            raise ShapeError("cannot truncate a shape by padding")
        return FourierShape(np.pad(self.a, (0, m - self.m)), np.pad(self.b, (0, m - self.m)))

    def scaled(self, t: float) -> "FourierShape":
        return FourierShape(t * self.a, t * self.b)

    def reflected(self) -> "FourierShape":
        """Mirror image across the x-axis (``b_k -> -b_k``)."""
        return FourierShape(self.a, -self.b)

    def rotated(self, phi: float) -> "FourierShape":
        """Shape rotated counterclockwise by ``phi``: ``rho(t - phi)``."""
        k = np.arange(1, self.m + 1)
        c, s = np.cos(k * phi), np.sin(k * phi)
        a = self.a.copy()
        a[1:] = self.a[1:] * c - self.b * s
        b = self.a[1:] * s + self.b * c
        return FourierShape(a, b)

    def __repr__(self):
        return f"FourierShape(a={self.a.tolist()!r}, b={self.b.tolist()!r})"


@dataclass(frozen=True, eq=False)
class BoundaryGrid:
    """Nystrom nodes on the boundary of a :class:`FourierShape`.

    All arrays are indexed by node. ``normal`` is the outward unit normal,
    ``kappa`` the signed curvature (positive on a counterclockwise circle)
    and ``jac`` the arc-length speed ``|x'(t)|``.
    """

    shape: FourierShape
    n: int
    t: np.ndarray
    x: np.ndarray
    rho: np.ndarray
    drho: np.ndarray
    ddrho: np.ndarray
    jac: np.ndarray
    normal: np.ndarray
    kappa: np.ndarray

    @property
    def h(self) -> float:
        """Trapezoid step ``2 pi / n``."""
        return 2 * np.pi / self.n

    @property
    def weights(self) -> np.ndarray:
        """Arc-length quadrature weights ``h * jac``."""
        return self.h * self.jac

    @property
    def perimeter(self) -> float:
        return float(self.weights.sum())


def evaluate_radius(shape: FourierShape, theta) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Radius and its first two angular derivatives at ``theta``.

    Returns
    -------
    rho, drho, ddrho : ndarray
        Arrays broadcast to the shape of ``theta``.
    """
    theta = np.asarray(theta, dtype=float)
    t = theta.reshape(-1)
    k = np.arange(shape.m + 1)
    kt = np.outer(t, k)
    c, s = np.cos(kt), np.sin(kt)
    a = shape.a
    b = np.concatenate([[0.0], shape.b])
    rho = c @ a + s @ b
    drho = -s @ (k * a) + c @ (k * b)
    ddrho = -(c @ (k**2 * a)) - s @ (k**2 * b)
    return rho.reshape(theta.shape), drho.reshape(theta.shape), ddrho.reshape(theta.shape)


def check_node_count(n) -> int:
    if int(n) != n or n < 8 or int(n) % 2:
        raise OddNodeCount(f"node count must be an even integer >= 8, got {n}")
    return int(n)


def build_grid(shape: FourierShape, n: int) -> BoundaryGrid:
    """Equispaced Nystrom grid ``t_i = 2 pi i / n`` on the shape's boundary."""
    n = check_node_count(n)
    t = 2 * np.pi * np.arange(n) / n
    rho, drho, ddrho = evaluate_radius(shape, t)
    if rho.min() <= 0:
        raise NonpositiveRadius(f"radius reaches {rho.min():.3g} <= 0 on the grid")
    ct, st = np.cos(t), np.sin(t)
    x = np.column_stack([rho * ct, rho * st])
    dx = np.column_stack([drho * ct - rho * st, drho * st + rho * ct])
    jac = np.sqrt(rho**2 + drho**2)
    normal = np.column_stack([dx[:, 1], -dx[:, 0]]) / jac[:, None]
    kappa = (rho**2 + 2 * drho**2 - rho * ddrho) / jac**3
    return BoundaryGrid(shape, n, t, x, rho, drho, ddrho, jac, normal, kappa)


def area(shape: FourierShape) -> float:
    """Enclosed area, exact from the coefficients (Parseval)."""
    return float(np.pi * shape.a[0] ** 2 + 0.5 * np.pi * (np.sum(shape.a[1:] ** 2) + np.sum(shape.b**2)))


def perimeter(shape: FourierShape, n: int | None = None) -> float:
    """Boundary length by the trapezoid rule on ``n`` nodes.

    The default node count, ``max(1024, 16 m)`` rounded up to even, is well
    into the spectrally converged regime for any valid shape.
    """
    if n is None:
        n = max(1024, 16 * shape.m)
        n += n % 2
    return build_grid(shape, n).perimeter


ModeLike = Union[str, tuple]


def parse_mode(mode: ModeLike) -> tuple[str, int]:
    """Normalize ``"a3"``, ``"cos3"``, ``("sin", 2)`` and friends to ``(kind, k)``."""
    if isinstance(mode, str):
        s = mode.strip().lower()
        for prefix, kind in (("cos", "cos"), ("sin", "sin"), ("a", "cos"), ("b", "sin")):
            if s.startswith(prefix) and s[len(prefix):].lstrip("_ ").isdigit():
                return _checked_mode(kind, int(s[len(prefix):].lstrip("_ ")))
        raise ValueError(f"cannot parse mode {mode!r}")
    kind, k = mode
    kind = {"a": "cos", "b": "sin"}.get(kind, kind)
    return _checked_mode(kind, int(k))


def _checked_mode(kind: str, k: int) -> tuple[str, int]:
    if kind not in ("cos", "sin") or k < 0 or (kind == "sin" and k == 0):
        raise ValueError(f"invalid mode ({kind}, {k})")
    return kind, k


def all_modes(m: int, include_a0: bool = True) -> list[tuple[str, int]]:
    """Modes in coefficient-vector order: ``cos 0..m`` then ``sin 1..m``."""
    start = 0 if include_a0 else 1
    return [("cos", k) for k in range(start, m + 1)] + [("sin", k) for k in range(1, m + 1)]


def perturbation_velocity(grid: BoundaryGrid, modes: Iterable[ModeLike]) -> np.ndarray:
    """Normal velocity ``c = v . n`` at the nodes for coefficient perturbations.

    Returns an ``(n, len(modes))`` array; column ``i`` is the normal
    component of ``dx/da_k`` (cosine mode) or ``dx/db_k`` (sine mode).
    A single mode gives a vector of length ``n``.
    """
    single = isinstance(modes, str) or (isinstance(modes, tuple) and isinstance(modes[0], str))
    if single:
        return perturbation_velocity(grid, [modes])[:, 0]
    modes = [parse_mode(md) for md in modes]
    ks = np.array([k for _, k in modes], dtype=float)
    trig = np.where(
        np.array([kind == "cos" for kind, _ in modes])[None, :],
        np.cos(np.outer(grid.t, ks)),
        np.sin(np.outer(grid.t, ks)),
    )
    return (grid.rho / grid.jac)[:, None] * trig
