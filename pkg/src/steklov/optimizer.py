"""
Maximization of the area-normalized Steklov eigenvalue ``Lambda_p``.

The nonsmooth objective is handled through its epigraph form

    max t   subject to   Lambda_j(shape) >= t,   j = p, ..., p + m - 1,

where ``m`` is the expected multiplicity at the optimum. The default
solver is a sequential quadratic method on the window as a whole: the
constraint ``Lambda_j >= t`` for the window is linearized as the matrix
inequality ``diag(Lambda) + sum_i d_i M_i >= t I`` using the reduced
derivative matrices of the window eigenspace, which stays smooth when
eigenvalues coalesce. The inequality is imposed by cutting planes, the
curvature comes from a damped BFGS model of the Lagrangian, and steps are
accepted by an actual/predicted ratio test with Levenberg damping.

``subproblem="lp"`` selects the plain sequential linear program with a
box trust region instead.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import linprog, minimize

from .eigensolver import (
    SteklovSpectrum,
    multiplicity_clusters,
    normalized_eigenvalue,
    steklov_spectrum,
)
from .exceptions import InsufficientResolution, SeedInvalid, ShapeError
from .geometry import FourierShape, area, perimeter
from .geometry import perturbation_velocity
from .shapegrad import _area_derivative, cluster_derivative_matrices

__all__ = [
    "ProblemSpec",
    "OptimizationRun",
    "expected_multiplicity",
    "interp_seed",
    "random_seed",
    "default_node_count",
    "optimize",
    "optimize_restarts",
    "verify_conjecture",
]

_log = logging.getLogger(__name__)

# fitted coefficients of the interpolated optimal family, (offset, slope) of 1/a_{kp}
INTERP_FIT = ((0.1815, 0.3444), (-6.1198, 7.6443), (-4.5563, -7.6561))
INTERP_A0 = 2.5

MODES = ("full", "symmetric")
# eigenvalues lambda_0..lambda_12 are kept per evaluation for the HPS check
BOUND_COUNT = 13


def expected_multiplicity(p: int) -> int:
    """Multiplicity of ``Lambda_p`` at the optimum: 2 for even ``p`` and ``p = 1``, else 3."""
    if p < 1:
        raise ValueError("p must be >= 1")
    return 2 if (p == 1 or p % 2 == 0) else 3


def interp_seed(p: int, a0: float = INTERP_A0) -> FourierShape:
    """Member of the interpolated near-optimal family with ``p``-fold symmetry.

    Only ``a_0``, ``a_p``, ``a_2p`` and ``a_3p`` are nonzero. The fitted
    coefficients are absolute values for mean radius ``a0 = 2.5``; passing
    a different ``a0`` rescales the whole shape.
    """
    if p < 2:
        raise ValueError("interpolated seeds are defined for p >= 2")
    a = np.zeros(3 * p + 1)
    a[0] = INTERP_A0
    for k, (c0, c1) in enumerate(INTERP_FIT, start=1):
        a[k * p] = 1.0 / (c0 + c1 * p)
    return FourierShape(a * (a0 / INTERP_A0))


def random_seed(m_max: int, rng=None, amplitude: float = 0.1) -> FourierShape:
    """``a_0 = 1`` and ``a_k, b_k ~ U(-amplitude/k, amplitude/k)``."""
    rng = np.random.default_rng(rng)
    k = np.arange(1, m_max + 1)
    while True:
        a = np.concatenate([[1.0], rng.uniform(-1, 1, m_max) * amplitude / k])
        b = rng.uniform(-1, 1, m_max) * amplitude / k
        try:
            return FourierShape(a, b)
        except ShapeError:
            continue


def default_node_count(p: int, m_window: int, highest_mode: int) -> int:
    """``max(128, 6 p m_window, 8 * highest_mode, 3 * eigenvalues needed)``, even."""
    n = max(128, 6 * p * m_window, 8 * highest_mode, 3 * (p + m_window + 5))
    return n + n % 2


@dataclass
class ProblemSpec:
    """Configuration of one ``Lambda_p`` maximization.

    ``mode="full"`` frees ``a_1..a_M, b_1..b_M`` with ``M = m_max``;
    ``mode="symmetric"`` frees only ``a_p, a_2p, a_3p``. ``a_0`` is held
    fixed in both modes since ``Lambda_p`` is dilation invariant.
    """

    p: int
    m_window: Optional[int] = None
    mode: str = "full"
    m_max: Optional[int] = None
    n_nodes: Optional[int] = None
    step_tol: float = 1e-8
    stat_tol: float = 1e-11
    max_iters: int = 1000
    initial_radius: float = 0.02
    max_radius: float = 0.2
    subproblem: str = "qp"

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 1:
            raise ValueError(f"p must be a positive integer, got {self.p}")
        self.p = int(self.p)
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.m_window is None:
            self.m_window = expected_multiplicity(self.p)
        if self.m_window < 1:
            raise ValueError("m_window must be >= 1")
        if self.m_max is None:
            self.m_max = 3 * self.p if self.mode == "symmetric" else 2 * self.p + 5
        if self.mode == "symmetric" and self.m_max < 3 * self.p:
            raise ValueError("symmetric mode needs m_max >= 3 p")
        if self.n_nodes is None:
            self.n_nodes = default_node_count(self.p, self.m_window, self.m_max)
        if self.subproblem not in ("qp", "lp"):
            raise ValueError("subproblem must be 'qp' or 'lp'")
        if self.step_tol <= 0 or self.stat_tol < 0 or self.max_iters < 1:
            raise ValueError("tolerances must be positive")

    @property
    def window(self) -> list[int]:
        return list(range(self.p, self.p + self.m_window))

    @property
    def count(self) -> int:
        """Eigenvalues computed per evaluation (window plus two above)."""
        return self.p + self.m_window + 2

    def free_modes(self) -> list[tuple[str, int]]:
        if self.mode == "symmetric":
            return [("cos", k * self.p) for k in (1, 2, 3)]
        return [("cos", k) for k in range(1, self.m_max + 1)] + [
            ("sin", k) for k in range(1, self.m_max + 1)
        ]

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class OptimizationRun:
    spec: ProblemSpec
    seed: FourierShape
    shape: FourierShape
    status: str
    value: float
    window_values: list
    spectrum_window: dict
    history: list = field(default_factory=list)
    iterations: int = 0
    evaluations: int = 0
    visited: list = field(default_factory=list)
    bound_margins: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "status": self.status,
            "value": self.value,
            "window_values": list(self.window_values),
            "spectrum_window": {str(k): v for k, v in self.spectrum_window.items()},
            "iterations": self.iterations,
            "evaluations": self.evaluations,
            "seed": self.seed.to_dict(),
            "shape": self.shape.to_dict(),
            "history": self.history,
        }


class _Evaluation:
    """Window values, their gradients and the window perturbation matrices."""

    __slots__ = ("x", "shape", "spectrum", "values", "grads", "mats", "start")

    def __init__(self, x, shape, spectrum, values, grads, mats, start):
        self.start = start
        self.x = x
        self.shape = shape
        self.spectrum = spectrum
        self.values = values
        self.grads = grads
        self.mats = mats

    @property
    def value(self) -> float:
        return float(self.values.min())

    @property
    def traces(self) -> np.ndarray:
        return self.spectrum.traces[:, self.start:self.start + self.values.size]


class _Problem:
    def __init__(self, spec: ProblemSpec, seed: FourierShape):
        self.spec = spec
        m = max(spec.m_max, seed.m)
        seed = seed.padded(m)
        self.template = seed.to_vector()
        self.m = m
        self.modes = spec.free_modes()
        self.index = np.array([k if kind == "cos" else m + k for kind, k in self.modes])
        if spec.mode == "symmetric":
            fixed = np.ones(self.template.size, bool)
            fixed[self.index] = False
            fixed[0] = False
            if np.any(self.template[fixed] != 0):
                raise SeedInvalid(f"symmetric mode seed may only use a_0 and a_kp (p={spec.p})")
        self.evaluations = 0
        self.visited: list[FourierShape] = []
        self.bound_margins: list[tuple[float, float]] = []

    def shape_of(self, x) -> FourierShape:
        v = self.template.copy()
        v[self.index] = x
        return FourierShape.from_vector(v)

    def evaluate(self, x) -> Optional[_Evaluation]:
        try:
            shape = self.shape_of(x)
            spectrum = steklov_spectrum(shape, self.spec.n_nodes, max(self.spec.count, BOUND_COUNT))
        except (ShapeError, InsufficientResolution):
            return None
        self.evaluations += 1
        self.visited.append(shape)
        window = self.spec.window
        shape_area = area(shape)
        root_area = np.sqrt(shape_area)
        L = spectrum.grid.perimeter
        js = np.arange(1, BOUND_COUNT)
        self.bound_margins.append((
            float((spectrum.lambdas[js] * L - 2 * np.pi * js).max()),
            float(4 * np.pi * shape_area - L**2),
        ))
        lam = spectrum.lambdas[window]
        values = lam * root_area
        velocity = perturbation_velocity(spectrum.grid, self.modes)
        dA = _area_derivative(shape, self.modes)
        # d(lambda sqrt(A)) = dlambda sqrt(A) + lambda dA / (2 sqrt(A)), in matrix form
        mats = cluster_derivative_matrices(spectrum, window, velocity) * root_area
        mats += (dA / (2 * root_area))[:, None, None] * np.diag(lam)[None, :, :]
        grads = np.einsum("iaa->ai", mats)
        return _Evaluation(np.asarray(x, float), shape, spectrum, values, grads, mats, window[0])


def _lp_step(ev: _Evaluation, radius: float):
    """Maximize ``t`` s.t. ``values + grads d >= t`` and ``|d|_inf <= radius``."""
    nfree = ev.x.size
    c = np.zeros(nfree + 1)
    c[-1] = -1.0
    A_ub = np.hstack([-ev.grads, np.ones((ev.grads.shape[0], 1))])
    b_ub = ev.values
    bounds = [(-radius, radius)] * nfree + [(None, None)]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if res.status != 0:
        return None, 0.0
    return res.x[:nfree], float(res.x[-1]) - ev.value


def simplex_qp(c: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Minimize ``c.mu + mu.Q.mu / 2`` over the probability simplex.

    Small problems are solved exactly by trying every face; larger ones
    fall back to SLSQP.
    """
    m = c.size
    if m > 6:
        res = minimize(
            lambda mu: c @ mu + 0.5 * mu @ Q @ mu,
            np.full(m, 1.0 / m),
            jac=lambda mu: c + Q @ mu,
            bounds=[(0, None)] * m,
            constraints=[{"type": "eq", "fun": lambda mu: mu.sum() - 1, "jac": lambda mu: np.ones(m)}],
            method="SLSQP",
            options={"ftol": 1e-15, "maxiter": 500},
        )
        mu = np.clip(res.x, 0, None)
        return mu / mu.sum()
    best, best_val = None, np.inf
    for mask in range(1, 2**m):
        F = [i for i in range(m) if mask >> i & 1]
        k = len(F)
        K = np.zeros((k + 1, k + 1))
        K[:k, :k] = Q[np.ix_(F, F)]
        K[:k, k] = K[k, :k] = 1.0
        rhs = np.concatenate([-c[F], [1.0]])
        sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
        if np.any(sol[:k] < -1e-14):
            continue
        mu = np.zeros(m)
        mu[F] = np.clip(sol[:k], 0, None)
        mu /= mu.sum()
        val = c @ mu + 0.5 * mu @ Q @ mu
        if val < best_val - 1e-15 * (1 + abs(val)):
            best, best_val = mu, val
    return best


def _qp_step(ev: _Evaluation, H: np.ndarray, damping: float, max_cuts: int = 12):
    """Quadratic model step for the window.

    Maximizes ``t - d.(H + damping I).d / 2`` subject to the linearized
    window ``D + sum_i d_i M_i >= t I`` (``D`` the window values, ``M_i``
    the perturbation matrices). The matrix inequality is imposed through
    cuts ``v.(D + M(d)).v >= t`` starting from the coordinate vectors and
    adding the lowest eigenvector of the model until it is satisfied.

    Returns the step, the multiplier matrix ``W = sum mu_v v v^T`` and the
    predicted increase of the window minimum.
    """
    Hd = H + damping * np.eye(H.shape[0])
    D = np.diag(ev.values)
    m = ev.values.size
    cuts = list(np.eye(m))
    for _ in range(max_cuts):
        V = np.array(cuts)
        c = np.einsum("va,ab,vb->v", V, D, V)
        G = np.einsum("va,iab,vb->vi", V, ev.mats, V)
        HinvGt = np.linalg.solve(Hd, G.T)
        mu = simplex_qp(c, G @ HinvGt)
        d = HinvGt @ mu
        t_cut = float(np.min(c + G @ d))
        w, vecs = np.linalg.eigh(D + np.einsum("i,iab->ab", d, ev.mats))
        if w[0] >= t_cut - 1e-12 * (1 + abs(t_cut)):
            break
        cuts.append(vecs[:, 0])
    W = np.einsum("v,va,vb->ab", mu, V, V)
    return d, W, float(w[0]) - ev.value


def _damped_bfgs(H: np.ndarray, s: np.ndarray, y: np.ndarray) -> np.ndarray:
    Hs = H @ s
    sHs = s @ Hs
    sy = s @ y
    if sHs <= 0:
        return H
    if sy < 0.2 * sHs:
        theta = 0.8 * sHs / (sHs - sy)
        y = theta * y + (1 - theta) * Hs
        sy = s @ y
    return H - np.outer(Hs, Hs) / sHs + np.outer(y, y) / sy


def gauge_rotation(shape: FourierShape) -> FourierShape:
    """Rotate so the largest non-constant mode is a positive pure cosine."""
    if shape.m == 0:
        return shape
    amp = np.hypot(shape.a[1:], shape.b)
    k = int(np.argmax(amp)) + 1
    if amp[k - 1] == 0:
        return shape
    phi = math.atan2(-shape.b[k - 1], shape.a[k]) / k
    return shape.rotated(phi)


def _spectrum_window(shape: FourierShape, p: int, n: int) -> dict:
    count = max(13, p + 5)
    n = max(n, 3 * count + (3 * count) % 2)
    sp = steklov_spectrum(shape, n, count)
    lam = normalized_eigenvalue(shape, sp)
    return {j: float(lam[j]) for j in range(max(1, p - 2), count)}


def optimize(spec: ProblemSpec, seed: Optional[FourierShape] = None, rng=None) -> OptimizationRun:
    """Maximize ``min_{j in window} Lambda_j`` from one seed.

    Parameters
    ----------
    spec : ProblemSpec
    seed : FourierShape, optional
        Initial shape. Defaults to :func:`interp_seed` in symmetric mode and
        :func:`random_seed` (drawn from ``rng``) in full mode.

    Returns
    -------
    OptimizationRun
        Final shape is normalized to area ``pi``.
    """
    if seed is None:
        seed = interp_seed(spec.p) if spec.mode == "symmetric" else random_seed(spec.m_max, rng)
    if not isinstance(seed, FourierShape):
        raise SeedInvalid("seed must be a FourierShape")
    problem = _Problem(spec, seed)
    current = problem.evaluate(problem.template[problem.index])
    if current is None:
        raise SeedInvalid("seed cannot be discretized with the requested node count")

    if spec.subproblem == "lp":
        current, status, it, history = _run_lp(spec, problem, current)
    else:
        current, status, it, history = _run_qp(spec, problem, current)
    _log.info("p=%d %s after %d iterations, value %.12g", spec.p, status, it, current.value)

    shape = current.shape
    if spec.mode == "full":
        shape = gauge_rotation(shape)
    shape = shape.scaled(math.sqrt(math.pi / area(shape)))
    return OptimizationRun(
        spec=spec,
        seed=seed,
        shape=shape,
        status=status,
        value=current.value,
        window_values=current.values.tolist(),
        spectrum_window=_spectrum_window(shape, spec.p, spec.n_nodes),
        history=history,
        iterations=it,
        evaluations=problem.evaluations,
        visited=problem.visited,
        bound_margins=problem.bound_margins,
    )


def _run_lp(spec: ProblemSpec, problem: _Problem, current: _Evaluation):
    radius = spec.initial_radius
    history = [_record(0, current, radius, True)]
    status = "MaxIters"
    accepted = 0
    it = 0
    for it in range(1, spec.max_iters + 1):
        step, predicted = _lp_step(current, radius)
        if step is None:
            status = "Stalled"
            break
        if predicted <= spec.stat_tol * (1 + abs(current.value)):
            status = "Converged"
            break
        trial = problem.evaluate(current.x + step)
        step_norm = float(np.abs(step).max())
        ok = False
        if trial is None:
            radius = 0.25 * step_norm
        else:
            ratio = (trial.value - current.value) / predicted
            ok = trial.value > current.value
            if ratio < 0.25:
                radius = 0.5 * step_norm
            elif ratio > 0.75 and step_norm >= 0.99 * radius:
                radius = min(2 * radius, spec.max_radius)
            if ok:
                current = trial
                accepted += 1
        history.append(_record(it, current, radius, ok))
        if radius < spec.step_tol:
            status = "Converged" if accepted else "Stalled"
            break
    return current, status, it, history


def _procrustes(a: _Evaluation, b: _Evaluation) -> np.ndarray:
    """Orthogonal map between the window eigenbases of two nearby iterates."""
    w = a.spectrum.grid.weights
    overlap = a.traces.T @ (w[:, None] * b.traces)
    U, _, Vt = np.linalg.svd(overlap)
    return U @ Vt


def _lagrangian_gradient(ev: _Evaluation, W: np.ndarray) -> np.ndarray:
    return np.einsum("ab,iab->i", W, ev.mats)


def _run_qp(spec: ProblemSpec, problem: _Problem, current: _Evaluation):
    nfree = current.x.size
    # initial curvature sized so the first step is about initial_radius
    scale = max(float(np.abs(current.grads).max()), 1e-12) / spec.initial_radius
    H = scale * np.eye(nfree)
    damping = 0.0
    history = [_record(0, current, spec.initial_radius, True)]
    status = "MaxIters"
    accepted = rejected_run = 0
    it = 0
    for it in range(1, spec.max_iters + 1):
        step, W, predicted = _qp_step(current, H, damping)
        step_norm = float(np.abs(step).max())
        if predicted <= spec.stat_tol * (1 + abs(current.value)):
            status = "Converged"
            break
        if step_norm > spec.max_radius:
            damping = max(2 * damping, scale * 1e-3)
            continue
        trial = problem.evaluate(current.x + step)
        ok = False
        if trial is None:
            damping = max(4 * damping, scale * 1e-3)
        else:
            ratio = (trial.value - current.value) / predicted
            R = _procrustes(current, trial)
            y = _lagrangian_gradient(current, W) - _lagrangian_gradient(trial, R.T @ W @ R)
            H = _damped_bfgs(H, step, y)
            if ratio < 0.25:
                damping = max(4 * damping, scale * 1e-3)
            elif ratio > 0.75:
                damping = damping / 4 if damping > scale * 1e-6 else 0.0
            if trial.value > current.value:
                current = trial
                ok = True
                accepted += 1
        rejected_run = 0 if ok else rejected_run + 1
        history.append(_record(it, current, step_norm, ok))
        if step_norm < spec.step_tol:
            status = "Converged" if accepted else "Stalled"
            break
        if rejected_run >= 40:
            status = "Stalled"
            break
    return current, status, it, history


def _record(it: int, ev: _Evaluation, radius: float, accepted: bool) -> dict:
    return {
        "iter": it,
        "value": ev.value,
        "window": ev.values.tolist(),
        "radius": radius,
        "accepted": accepted,
        "x": ev.x.tolist(),
    }


def optimize_restarts(spec: ProblemSpec, n_restarts: int = 5, rng=None, seeds=None) -> tuple[OptimizationRun, list]:
    """Run :func:`optimize` from several seeds and return ``(best, all_runs)``.

    Random seeds are drawn from ``rng`` unless ``seeds`` is given.
    """
    rng = np.random.default_rng(rng)
    if seeds is None:
        if spec.mode == "symmetric":
            seeds = [interp_seed(spec.p)]
        else:
            seeds = [random_seed(spec.m_max, rng) for _ in range(n_restarts)]
    runs = [optimize(spec, s) for s in seeds]
    best = max(runs, key=lambda r: r.value)
    return best, runs


def verify_conjecture(run: OptimizationRun, rel_tol: float = 1e-4) -> dict:
    """Summarize the structure of an optimized shape.

    Returns the multiplicity cluster containing ``Lambda_p``, the gap
    ``Lambda_p - Lambda_{p-1}``, and two relative residuals: coefficient
    energy outside the ``p``-fold pattern, and sine energy after rotating
    to the best candidate symmetry axis.
    """
    p = run.spec.p
    window = run.spectrum_window
    js = sorted(window)
    lam = np.array([window[j] for j in js])
    clusters = [[js[i] for i in c] for c in multiplicity_clusters(lam, rel_tol)]
    cluster_p = next(c for c in clusters if p in c)
    gap = window[p] - window[p - 1] if (p - 1) in window else float("nan")

    shape = run.shape
    k = np.arange(1, shape.m + 1)
    energy = shape.a[1:] ** 2 + shape.b**2
    total = math.sqrt(energy.sum())
    if total == 0:
        pfold = axis = 0.0
    else:
        pfold = math.sqrt(energy[k % p != 0].sum()) / total
        axis = min(
            np.linalg.norm(shape.rotated(phi).b) / total for phi in _axis_candidates(shape)
        )
    return {
        "p": p,
        "clusters": clusters,
        "cluster_p": cluster_p,
        "multiplicity": len(cluster_p),
        "expected_multiplicity": expected_multiplicity(p),
        "gap": gap,
        "pfold_residual": pfold,
        "axis_residual": float(axis),
    }


def _axis_candidates(shape: FourierShape) -> list[float]:
    amp = np.hypot(shape.a[1:], shape.b)
    k = int(np.argmax(amp)) + 1
    base = math.atan2(-shape.b[k - 1], shape.a[k]) / k
    return [base + i * math.pi / k for i in range(2 * k)]


def bound_report(shape: FourierShape, n: int = 256, count: int = 13) -> dict:
    """Hersch-Payne-Schiffer and isoperimetric checks for one shape."""
    sp = steklov_spectrum(shape, max(n, 3 * count + 1 + (3 * count + 1) % 2), count)
    L = perimeter(shape)
    A = area(shape)
    js = np.arange(1, count)
    hps = sp.lambdas[1:] * L - 2 * np.pi * js
    return {
        "hps_margin": float(hps.max()),
        "isoperimetric_margin": float(4 * np.pi * A - L**2),
    }
