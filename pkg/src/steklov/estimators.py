"""
scikit-learn compatible wrappers.

``SteklovTransformer`` maps rows of Fourier coefficients to normalized
Steklov eigenvalues so shape families can feed into pipelines;
``SteklovEigenfunction`` fits to one boundary and predicts an eigenfunction
at planar points; ``SteklovShapeOptimizer`` runs the ``Lambda_p``
maximization with ``fit``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .eigensolver import evaluate_field, normalized_eigenvalue, steklov_spectrum
from .geometry import FourierShape, area
from .optimizer import ProblemSpec, optimize_restarts, verify_conjecture
from .validation import check_coefficients, check_node_count, check_points, check_shape


class SteklovTransformer(TransformerMixin, BaseEstimator):
    """Coefficient rows ``[a_0..a_m, b_1..b_m]`` to Steklov eigenvalues.

    Parameters
    ----------
    n_nodes : int
        Nystrom nodes per boundary.
    n_eigenvalues : int
        Number of nontrivial eigenvalues returned (``lambda_1 ..``).
    normalize : bool
        Return ``lambda_j sqrt(area)`` instead of ``lambda_j``.
    """

    def __init__(self, n_nodes: int = 256, n_eigenvalues: int = 12, normalize: bool = True):
        self.n_nodes = n_nodes
        self.n_eigenvalues = n_eigenvalues
        self.normalize = normalize

    def fit(self, X, y=None):
        X = check_coefficients(X)
        check_node_count(self.n_nodes)
        if self.n_eigenvalues < 1:
            raise ValueError("n_eigenvalues must be positive")
        self.n_features_in_ = X.shape[1]
        self.m_ = (X.shape[1] - 1) // 2
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_coefficients(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} coefficients, got {X.shape[1]}")
        out = np.empty((X.shape[0], self.n_eigenvalues))
        for i, row in enumerate(X):
            shape = FourierShape.from_vector(row)
            lam = steklov_spectrum(shape, self.n_nodes, self.n_eigenvalues + 1).lambdas[1:]
            out[i] = lam * np.sqrt(area(shape)) if self.normalize else lam
        return out

    def get_feature_names_out(self, input_features=None):
        prefix = "Lambda" if self.normalize else "lambda"
        return np.array([f"{prefix}_{j}" for j in range(1, self.n_eigenvalues + 1)], dtype=object)


class SteklovEigenfunction(RegressorMixin, BaseEstimator):
    """Fit to a boundary, then ``predict`` eigenfunction ``j`` at points.

    ``fit`` accepts a :class:`FourierShape`, a ``{"a", "b"}`` dict or one
    coefficient vector. After fitting, ``lambda_`` and ``trace_`` hold the
    eigenvalue and its unit-normalized boundary trace.
    """

    def __init__(self, j: int = 1, n_nodes: int = 256):
        self.j = j
        self.n_nodes = n_nodes

    def fit(self, X, y=None):
        shape = check_shape(X)
        check_node_count(self.n_nodes)
        if self.j < 0:
            raise ValueError("j must be nonnegative")
        self.shape_ = shape
        self.spectrum_ = steklov_spectrum(shape, self.n_nodes, max(self.j + 1, 2))
        self.lambda_ = float(self.spectrum_.lambdas[self.j])
        self.Lambda_ = float(normalized_eigenvalue(shape, self.spectrum_, self.j))
        self.trace_ = self.spectrum_.traces[:, self.j]
        return self

    def predict(self, X):
        check_is_fitted(self, "spectrum_")
        return evaluate_field(self.spectrum_, self.j, check_points(X))


class SteklovShapeOptimizer(BaseEstimator):
    """Maximize ``Lambda_p`` over Fourier shapes.

    ``fit(X=None)`` optimizes from ``n_restarts`` random seeds (full mode)
    or the interpolated seed (symmetric mode); passing ``X`` (a shape or
    coefficient vector) uses it as the single seed instead.
    """

    def __init__(
        self,
        p: int = 1,
        mode: str = "full",
        m_window=None,
        m_max=None,
        n_nodes=None,
        n_restarts: int = 5,
        max_iters: int = 1000,
        random_state=None,
    ):
        self.p = p
        self.mode = mode
        self.m_window = m_window
        self.m_max = m_max
        self.n_nodes = n_nodes
        self.n_restarts = n_restarts
        self.max_iters = max_iters
        self.random_state = random_state

    def fit(self, X=None, y=None):
        spec = ProblemSpec(
            p=self.p,
            mode=self.mode,
            m_window=self.m_window,
            m_max=self.m_max,
            n_nodes=self.n_nodes,
            max_iters=self.max_iters,
        )
        seeds = None if X is None else [check_shape(X)]
        best, runs = optimize_restarts(spec, self.n_restarts, rng=self.random_state, seeds=seeds)
        self.run_ = best
        self.runs_ = runs
        self.shape_ = best.shape
        self.value_ = best.value
        self.status_ = best.status
        self.report_ = verify_conjecture(best)
        return self

    def score(self, X=None, y=None):
        """Optimized ``Lambda_p``."""
        check_is_fitted(self, "run_")
        return self.value_
