"""Per-robot controller optimization.

A Gaussian-process surrogate (Matern 5/2 kernel, fixed length scale 0.2 on
normalized inputs) drives an Upper-Confidence-Bound search over the unit
box of controller parameters.  The search is warm-started from the robot's
evolved parameters, which count as the first evaluation of the budget.
Outputs are standardized per run (centered by mean, scaled by standard
deviation when positive) so the fixed kernel settings stay meaningful
across fitness scales.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

DEFAULT_BETA = 3.0
DEFAULT_CANDIDATES = 1024
MAX_JITTER = 1e-2

SQRT5 = math.sqrt(5.0)


class IllConditionedError(Exception):
    """Gram matrix stayed indefinite through the whole jitter escalation."""


class EvaluationFailed(Exception):
    """The fitness callable raised (or returned a non-finite value); the
    evaluations completed so far are attached."""

    def __init__(self, message, history):
        super().__init__(message)
        self.history = history


@dataclass
class KernelConfig:
    length_scale: float = 0.2
    signal_variance: float = 1.0
    observation_noise: float = 1e-6

    def __post_init__(self):
        if self.length_scale <= 0 or self.signal_variance <= 0:
            raise ValueError("length_scale and signal_variance must be positive")
        if self.observation_noise < 0:
            raise ValueError("observation_noise must be non-negative")


def matern52(x, y, k: KernelConfig | None = None) -> float:
    """Matern 5/2 covariance of two points."""
    k = k or KernelConfig()
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError("dimension mismatch")
    r = float(np.linalg.norm(x - y))
    s = SQRT5 * r / k.length_scale
    return k.signal_variance * (1.0 + s + s * s / 3.0) * math.exp(-s)


def _kernel_matrix(X: np.ndarray, Y: np.ndarray, k: KernelConfig) -> np.ndarray:
    """Covariance matrix of two point sets via a single GEMM."""
    sq = (np.sum(X * X, axis=1)[:, None] + np.sum(Y * Y, axis=1)[None, :]
          - 2.0 * (X @ Y.T))
    np.maximum(sq, 0.0, out=sq)
    s = np.sqrt(sq) * (SQRT5 / k.length_scale)
    return k.signal_variance * (1.0 + s + s * s / 3.0) * np.exp(-s)


@dataclass
class GaussianProcessState:
    inputs: np.ndarray          # (n, d) in [0,1]^d
    outputs: np.ndarray         # (n,) raw fitness values
    kernel: KernelConfig
    mean: float                 # standardization center
    scale: float                # standardization scale (1 when output std is 0)
    chol: np.ndarray            # (n, n) lower Cholesky of K + jitter I
    alpha: np.ndarray           # (n,) solve of standardized residuals
    jitter: float               # noise level that made the factorization succeed

    @property
    def dim(self) -> int:
        return self.inputs.shape[1]


def gp_fit(observations, kernel: KernelConfig | None = None) -> GaussianProcessState:
    """Fit the surrogate to (point, fitness) observations.

    Factorization retries with doubled observation noise up to 1e-2 before
    giving up, which keeps duplicate points harmless.
    """
    kernel = kernel or KernelConfig()
    if not observations:
        raise ValueError("need at least one observation")
    X = np.asarray([p for p, _ in observations], dtype=float)
    y = np.asarray([v for _, v in observations], dtype=float)
    if X.ndim != 2:
        raise ValueError("points must share a common dimension")
    if X.size and (X.min() < -1e-9 or X.max() > 1.0 + 1e-9):
        raise ValueError("points must lie in the unit box")
    mean = float(y.mean())
    std = float(y.std())
    scale = std if std > 0.0 else 1.0
    resid = (y - mean) / scale
    K = _kernel_matrix(X, X, kernel)
    n = K.shape[0]
    jitter = kernel.observation_noise
    while True:
        try:
            chol = np.linalg.cholesky(K + jitter * np.eye(n))
            break
        except np.linalg.LinAlgError:
            nxt = jitter * 2.0 if jitter > 0.0 else 1e-10
            if nxt > MAX_JITTER:
                raise IllConditionedError(
                    f"Cholesky failed with jitter escalated to {jitter!r}") from None
            jitter = nxt
    z = solve_triangular(chol, resid, lower=True, check_finite=False)
    alpha = solve_triangular(chol.T, z, lower=False, check_finite=False)
    return GaussianProcessState(X, y, kernel, mean, scale, chol, alpha, jitter)


def gp_predict(gp: GaussianProcessState, x):
    """Posterior mean and standard deviation at one point or a batch.

    A (d,) point returns floats; an (m, d) batch returns (m,) arrays.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = x[None, :] if single else x
    if pts.shape[1] != gp.dim:
        raise ValueError("dimension mismatch")
    kstar = _kernel_matrix(pts, gp.inputs, gp.kernel)
    mu = gp.mean + gp.scale * (kstar @ gp.alpha)
    v = solve_triangular(gp.chol, kstar.T, lower=True, check_finite=False)
    var = gp.kernel.signal_variance - np.sum(v * v, axis=0)
    sigma = gp.scale * np.sqrt(np.maximum(var, 0.0))
    if single:
        return float(mu[0]), float(sigma[0])
    return mu, sigma


def ucb(mu, sigma, beta: float = DEFAULT_BETA):
    """Upper confidence bound acquisition value(s)."""
    return mu + beta * sigma


def propose_next(gp: GaussianProcessState, dim: int, rng: np.random.Generator,
                 n_candidates: int = DEFAULT_CANDIDATES,
                 beta: float = DEFAULT_BETA) -> np.ndarray:
    """Acquisition argmax over a fresh batch of uniform candidates (ties go
    to the lowest candidate index)."""
    if n_candidates < 1:
        raise ValueError("need at least one candidate")
    cands = rng.random((n_candidates, dim))
    mu, sigma = gp_predict(gp, cands)
    return cands[int(np.argmax(ucb(mu, sigma, beta)))].copy()


@dataclass
class LearnResult:
    best_params: np.ndarray
    best_fitness: float
    history: list = field(default_factory=list)   # (params, fitness) in order
    evaluations_used: int = 0


def optimize(evaluate, initial, budget: int, dim: int, rng: np.random.Generator,
             kernel: KernelConfig | None = None,
             n_candidates: int = DEFAULT_CANDIDATES,
             beta: float = DEFAULT_BETA) -> LearnResult:
    """Budgeted maximization of a black-box fitness over [0,1]^dim.

    Evaluation 1 is exactly ``initial``.  Joint-less robots (dim 0) have a
    single meaningful point, so they consume one evaluation regardless of
    budget.
    """
    if budget < 1:
        raise ValueError("budget must be at least 1")
    initial = np.asarray(initial, dtype=float).copy()
    if initial.shape != (dim,):
        raise ValueError(f"initial point must have dimension {dim}")
    kernel = kernel or KernelConfig()
    history: list = []

    def step(params: np.ndarray) -> None:
        try:
            value = float(evaluate(params))
        except Exception as exc:
            raise EvaluationFailed(f"evaluation {len(history) + 1} failed: {exc}",
                                   history) from exc
        if not math.isfinite(value):
            raise EvaluationFailed(
                f"evaluation {len(history) + 1} returned non-finite {value!r}", history)
        history.append((params, value))

    step(initial)
    if dim > 0:
        while len(history) < budget:
            gp = gp_fit(history, kernel)
            step(propose_next(gp, dim, rng, n_candidates, beta))
    best_params, best_fitness = max(history, key=lambda h: h[1])
    return LearnResult(best_params.copy(), best_fitness, history, len(history))


@dataclass
class CalibrationResult:
    budgets: np.ndarray         # (B,) evaluation budgets 1..max_budget
    mean_fraction: np.ndarray   # (B,) mean fraction of potential reached
    n_robots: int               # robots contributing (zero-potential ones drop)


def calibrate_budget(robots, evaluator, max_budget: int,
                     master_seed: int = 0,
                     kernel: KernelConfig | None = None) -> CalibrationResult:
    """Fraction-of-potential curve over evaluation budgets.

    Each robot gets one optimize run to max_budget with a private stream
    derived from (master_seed, robot index); a budget-b prefix's best is
    compared to the run's final best after shifting fitness to be
    non-negative per run.  Robots whose run never improves on its minimum
    carry no signal and are dropped.
    """
    if max_budget < 1:
        raise ValueError("max_budget must be at least 1")
    budgets = np.arange(1, max_budget + 1)
    fractions = []
    for index, ph in enumerate(robots):
        rng = np.random.default_rng(np.random.SeedSequence((master_seed, index)))
        result = optimize(lambda p, ph=ph: evaluator(ph, p), ph.initial_params,
                          max_budget, 2 * ph.n_param_sets, rng, kernel)
        values = np.array([v for _, v in result.history])
        best_by = np.maximum.accumulate(
            np.pad(values, (0, max_budget - values.size), constant_values=values.min()))
        lo = values.min()
        potential = best_by[-1] - lo
        if potential <= 0.0:
            continue
        fractions.append((best_by - lo) / potential)
    stacked = (np.vstack(fractions) if fractions
               else np.zeros((0, max_budget)))
    mean = stacked.mean(axis=0) if len(fractions) else np.full(max_budget, np.nan)
    return CalibrationResult(budgets, mean, len(fractions))


def write_calibration_csv(result: CalibrationResult, path) -> None:
    with open(path, "w") as fh:
        fh.write("budget,mean_fraction\n")
        for b, f in zip(result.budgets, result.mean_fraction):
            fh.write(f"{int(b)},{float(f)!r}\n")


def write_history_csv(rows, path) -> None:
    """Learning-history export: rows of (robot_id, LearnResult).

    Parameter vectors vary in length across robots, so the params column
    count follows the widest robot; short rows leave trailing columns empty.
    """
    rows = list(rows)
    width = max((r.history[0][0].size for _, r in rows), default=0)
    with open(path, "w") as fh:
        cols = ",".join(f"param_{i}" for i in range(width))
        fh.write(f"robot_id,eval_index{',' + cols if cols else ''},fitness\n")
        for robot_id, result in rows:
            for index, (params, fitness) in enumerate(result.history, start=1):
                vals = [repr(float(p)) for p in params]
                vals += [""] * (width - len(vals))
                tail = "," + ",".join(vals) if width else ""
                fh.write(f"{robot_id},{index}{tail},{fitness!r}\n")
