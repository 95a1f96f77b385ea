"""Input validation helpers shared by the estimators and the CLI."""

from __future__ import annotations

import numpy as np
from sklearn.utils import check_array

from .exceptions import ShapeError
from .geometry import FourierShape, check_node_count

__all__ = ["check_coefficients", "check_shape", "check_points", "check_node_count"]


def check_coefficients(X, ensure_2d: bool = True) -> np.ndarray:
    """Validate rows of stacked coefficient vectors ``[a_0..a_m, b_1..b_m]``."""
    X = check_array(X, ensure_2d=ensure_2d, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] % 2 != 1:
        raise ShapeError(f"coefficient rows need odd length 2m+1, got {X.shape[1]}")
    return X


def check_shape(shape) -> FourierShape:
    """Accept a FourierShape, a ``{"a", "b"}`` mapping or a coefficient vector."""
    if isinstance(shape, FourierShape):
        return shape
    if isinstance(shape, dict):
        return FourierShape.from_dict(shape)
    X = check_coefficients(shape, ensure_2d=False)
    if X.shape[0] != 1:
        raise ShapeError("expected a single shape")
    return FourierShape.from_vector(X[0])


def check_points(points) -> np.ndarray:
    P = check_array(points, dtype=np.float64)
    if P.shape[1] != 2:
        raise ValueError(f"points must have shape (n_points, 2), got {P.shape}")
    return P
