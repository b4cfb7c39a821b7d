"""Deterministic convex solvers for sparse logistic regression and weighted lasso.

Two problems are solved by cyclic coordinate descent:

* l1-penalized logistic regression (no intercept term; generate or center
  your data accordingly),
      min_b  -(1/n) sum_i [y_i x_i'b - log(1 + exp(x_i'b))] + lam ||b||_1
* per-sample-weighted lasso,
      min_b  (1/n) sum_i w_i (t_i - a_i'b)^2 + lam ||b||_1

plus K-fold cross-validation over a descending regularization grid with
warm starts.  Fits are pure functions of their inputs; a single fit is
single-threaded, so callers may parallelize across fits freely.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import DegenerateWeightsError, InvalidInputError, NonConvergenceWarning

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 10_000
DEFAULT_N_LAMBDAS = 30
DEFAULT_LAMBDA_MIN_RATIO = 1e-3
# With p > n the data is typically linearly separable and logistic fits in
# the bottom decades of the path diverge in norm; stop the grid higher.
LOGISTIC_LAMBDA_MIN_RATIO = 1e-2
DEFAULT_N_FOLDS = 5
# Fold fits only rank lambdas; they run lighter than final fits, and the
# winner is refit at full precision by the caller.
DEFAULT_CV_TOL = 1e-6
DEFAULT_CV_MAX_ITER = 100
# A fold's path stops once a fit saturates (support > this fraction of the
# training rows) or stalls at the sweep cap; smaller lambdas score +inf.
CV_DENSITY_LIMIT = 0.6

SCORING_DEVIANCE = "deviance"
SCORING_SQUARED_ERROR = "squared_error"


def _as_float_matrix(X, name: str) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise InvalidInputError(f"{name} must be a 2-d array, got ndim={X.ndim}")
    if not np.all(np.isfinite(X)):
        raise InvalidInputError(f"{name} contains non-finite values")
    return X


def _as_float_vector(v, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise InvalidInputError(f"{name} must be a 1-d array, got ndim={v.ndim}")
    if not np.all(np.isfinite(v)):
        raise InvalidInputError(f"{name} contains non-finite values")
    return v


@dataclass
class Dataset:
    """Dense design matrix (rows = samples) with a binary response."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.X = _as_float_matrix(self.X, "X")
        self.y = _as_float_vector(self.y, "y")
        n, p = self.X.shape
        if n < 2:
            raise InvalidInputError(f"need at least 2 samples, got {n}")
        if p < 1:
            raise InvalidInputError("need at least 1 variable")
        if self.y.shape[0] != n:
            raise InvalidInputError(
                f"X has {n} rows but y has {self.y.shape[0]} entries"
            )
        if not np.all((self.y == 0.0) | (self.y == 1.0)):
            raise InvalidInputError("y entries must be exactly 0 or 1")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass
class FittedModel:
    """Sparse coefficient vector with the regularization it was fit at."""

    coefficients: np.ndarray
    lam: float
    objective_value: float
    n_iterations: int
    converged: bool

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.coefficients)


@dataclass
class WeightedLassoProblem:
    """One column regressed on the rest under logistic-curvature weights."""

    targets: np.ndarray
    predictors: np.ndarray
    weights: np.ndarray
    lambda_dx: float

    def __post_init__(self):
        self.targets = _as_float_vector(self.targets, "targets")
        self.predictors = _as_float_matrix(self.predictors, "predictors")
        self.weights = _as_float_vector(self.weights, "weights")
        n = self.targets.shape[0]
        if self.predictors.shape[0] != n or self.weights.shape[0] != n:
            raise InvalidInputError("targets, predictors and weights disagree on n")
        if np.any(self.weights < 0.0) or np.any(self.weights > 0.25 + 1e-12):
            raise InvalidInputError("weights must lie in [0, 0.25]")
        if self.lambda_dx < 0.0:
            raise InvalidInputError("lambda_dx must be nonnegative")

    @property
    def n(self) -> int:
        return self.targets.shape[0]


@dataclass
class CvPlan:
    """K-fold cross-validation plan over a strictly descending lambda grid."""

    lambda_grid: np.ndarray
    n_folds: int = DEFAULT_N_FOLDS
    scoring: str = SCORING_DEVIANCE

    def __post_init__(self):
        self.lambda_grid = _as_float_vector(np.atleast_1d(self.lambda_grid), "lambda_grid")
        if self.lambda_grid.size == 0:
            raise InvalidInputError("lambda_grid must be nonempty")
        if np.any(self.lambda_grid < 0.0):
            raise InvalidInputError("lambda_grid entries must be nonnegative")
        if self.lambda_grid.size > 1 and not np.all(np.diff(self.lambda_grid) < 0.0):
            raise InvalidInputError("lambda_grid must be strictly descending")
        if self.n_folds < 2:
            raise InvalidInputError("n_folds must be at least 2")
        if self.scoring not in (SCORING_DEVIANCE, SCORING_SQUARED_ERROR):
            raise InvalidInputError(f"unknown scoring {self.scoring!r}")


def sigmoid(t):
    """Logistic function 1 / (1 + e^-t), overflow-safe, elementwise."""
    t = np.asarray(t, dtype=np.float64)
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    q = np.exp(t[~pos])
    out[~pos] = q / (1.0 + q)
    if out.ndim == 0:
        return float(out)
    return out


def sigmoid_weight(t):
    """Logistic curvature weight e^t / (1 + e^t)^2, elementwise.

    Equals g(t) * (1 - g(t)) for the logistic g; even in t, peaks at 0.25
    for t = 0 and saturates smoothly toward 0 in both tails.
    """
    t = np.asarray(t, dtype=np.float64)
    q = np.exp(-np.abs(t))
    out = q / np.square(1.0 + q)
    if out.ndim == 0:
        return float(out)
    return out


def logistic_objective(X, y, beta, lam: float) -> float:
    """Penalized logistic objective: mean negative log-likelihood + lam * l1."""
    eta = X @ beta
    nll = float(np.mean(np.logaddexp(0.0, eta) - y * eta))
    return nll + lam * float(np.sum(np.abs(beta)))


def logistic_gradient(X, y, beta) -> np.ndarray:
    """Gradient of the (unpenalized) mean negative log-likelihood."""
    eta = X @ beta
    return X.T @ (sigmoid(eta) - y) / X.shape[0]


def weighted_lasso_objective(problem: WeightedLassoProblem, beta) -> float:
    r = problem.targets - problem.predictors @ beta
    n = problem.n
    return float(np.sum(problem.weights * r * r) / n) + problem.lambda_dx * float(
        np.sum(np.abs(beta))
    )


def weighted_lasso_gradient(problem: WeightedLassoProblem, beta) -> np.ndarray:
    """Gradient of the smooth part (1/n) sum_i w_i (t_i - a_i'b)^2."""
    r = problem.targets - problem.predictors @ beta
    return -2.0 * (problem.predictors.T @ (problem.weights * r)) / problem.n


def lambda_max_logistic(X, y) -> float:
    """Smallest lambda at which the logistic-lasso solution is all zero."""
    n = X.shape[0]
    return float(np.max(np.abs(X.T @ (np.asarray(y) - 0.5))) / n)


def lambda_max_weighted(targets, predictors, weights) -> float:
    """Smallest lambda at which the weighted-lasso solution is all zero."""
    if predictors.shape[1] == 0:
        return 0.0
    n = targets.shape[0]
    return float(np.max(np.abs(predictors.T @ (weights * targets))) * 2.0 / n)


def default_lambda_grid(
    lam_max: float,
    n_lambdas: int = DEFAULT_N_LAMBDAS,
    min_ratio: float = DEFAULT_LAMBDA_MIN_RATIO,
) -> np.ndarray:
    """Log-spaced descending grid from lam_max down to min_ratio * lam_max."""
    if lam_max <= 0.0:
        # degenerate input (e.g. constant target); a single zero suffices
        return np.array([0.0])
    return np.geomspace(lam_max, lam_max * min_ratio, n_lambdas)


def fit_sparse_logistic(
    data: Dataset,
    lam: float,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    beta_init: np.ndarray | None = None,
    objective_history: list | None = None,
) -> FittedModel:
    """Fit the l1-penalized logistic regression (no intercept).

    The returned coefficients satisfy the subgradient stationarity
    conditions up to solver tolerance: active coordinates have
    |grad_j| = lam, inactive ones |grad_j| <= lam.  If ``max_iter`` sweeps
    pass without the largest coordinate move dropping to ``tol``, a
    NonConvergenceWarning is issued and the model is flagged
    ``converged=False``.  Pass a list as ``objective_history`` to collect
    the per-sweep objective values.
    """
    if lam < 0.0:
        raise InvalidInputError("lam must be nonnegative")
    if tol <= 0.0:
        raise InvalidInputError("tol must be positive")
    XF = np.asfortranarray(data.X)
    beta = (
        np.zeros(data.p)
        if beta_init is None
        else np.array(beta_init, dtype=np.float64, copy=True)
    )
    objectives = np.empty(max_iter)
    sweeps, converged = _kernels.logistic_cd(
        XF, data.y, float(lam), float(tol), int(max_iter), beta, objectives
    )
    if objective_history is not None:
        objective_history.extend(objectives[:sweeps].tolist())
    if not converged:
        warnings.warn(
            f"logistic coordinate descent hit max_iter={max_iter}",
            NonConvergenceWarning,
        )
    return FittedModel(
        coefficients=beta,
        lam=float(lam),
        objective_value=float(objectives[sweeps - 1]) if sweeps else np.inf,
        n_iterations=int(sweeps),
        converged=bool(converged),
    )


def fit_weighted_lasso(
    problem: WeightedLassoProblem,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    beta_init: np.ndarray | None = None,
    objective_history: list | None = None,
) -> np.ndarray:
    """Solve the weighted lasso; returns the coefficient vector.

    Raises DegenerateWeightsError when every weight is below 1e-12, which
    signals that the upstream logistic fit drove all predictions to
    saturation.  Non-convergence is flagged with a warning.
    """
    if tol <= 0.0:
        raise InvalidInputError("tol must be positive")
    if np.all(problem.weights < 1e-12):
        raise DegenerateWeightsError("all curvature weights are numerically zero")
    p = problem.predictors.shape[1]
    beta = (
        np.zeros(p)
        if beta_init is None
        else np.array(beta_init, dtype=np.float64, copy=True)
    )
    if p == 0:
        return beta
    AF = np.asfortranarray(problem.predictors)
    objectives = np.empty(max_iter)
    sweeps, converged = _kernels.weighted_lasso_cd(
        AF,
        problem.targets,
        problem.weights,
        float(problem.lambda_dx),
        float(tol),
        int(max_iter),
        beta,
        objectives,
    )
    if objective_history is not None:
        objective_history.extend(objectives[:sweeps].tolist())
    if not converged:
        warnings.warn(
            f"weighted lasso coordinate descent hit max_iter={max_iter}",
            NonConvergenceWarning,
        )
    return beta


def stratified_folds(y: np.ndarray, n_folds: int, rng: np.random.Generator):
    """Deterministic class-stratified K-fold assignment.

    Each class's indices are shuffled with ``rng`` (class 0 first) and dealt
    round-robin to folds; fold index sets are returned sorted.
    """
    folds: list[list[int]] = [[] for _ in range(n_folds)]
    for cls in (0.0, 1.0):
        idx = np.flatnonzero(y == cls)
        idx = idx[rng.permutation(idx.size)]
        for pos, i in enumerate(idx):
            folds[pos % n_folds].append(int(i))
    return [np.array(sorted(f), dtype=np.intp) for f in folds]


def plain_folds(n: int, n_folds: int, rng: np.random.Generator):
    """Deterministic unstratified K-fold assignment (shuffled, round-robin)."""
    perm = rng.permutation(n)
    folds: list[list[int]] = [[] for _ in range(n_folds)]
    for pos, i in enumerate(perm):
        folds[pos % n_folds].append(int(i))
    return [np.array(sorted(f), dtype=np.intp) for f in folds]


def _logistic_path(XF, y, grid, tol, max_iter, density_limit=None):
    """Warm-started coefficient path along a descending lambda grid.

    Returns (coefficients, n_valid).  With a density limit, the path stops
    once a fit saturates (support exceeds that fraction of the rows) or
    stalls at the sweep cap; only the first ``n_valid`` rows are usable.
    """
    n, p = XF.shape
    beta = np.zeros(p)
    objectives = np.empty(max_iter)
    out = np.zeros((grid.size, p))
    dfmax = p + 1 if density_limit is None else int(density_limit * n) + 1
    n_valid = 0
    for k, lam in enumerate(grid):
        _, converged = _kernels.logistic_cd(
            XF, y, float(lam), tol, max_iter, beta, objectives
        )
        out[k] = beta
        n_valid = k + 1
        if density_limit is not None and (
            not converged or np.count_nonzero(beta) > dfmax
        ):
            break
    return out, n_valid


def _weighted_path(AF, target, w, grid, tol, max_iter, density_limit=None):
    n, p = AF.shape
    beta = np.zeros(p)
    objectives = np.empty(max_iter)
    out = np.zeros((grid.size, p))
    dfmax = p + 1 if density_limit is None else int(density_limit * n) + 1
    n_valid = 0
    for k, lam in enumerate(grid):
        _, converged = _kernels.weighted_lasso_cd(
            AF, target, w, float(lam), tol, max_iter, beta, objectives
        )
        out[k] = beta
        n_valid = k + 1
        if density_limit is not None and (
            not converged or np.count_nonzero(beta) > dfmax
        ):
            break
    return out, n_valid


def cross_validate(
    fit_kind: str,
    data,
    plan: CvPlan,
    seed: int,
    tol: float = DEFAULT_CV_TOL,
    max_iter: int = DEFAULT_CV_MAX_ITER,
):
    """Select the regularization level by K-fold cross-validation.

    ``fit_kind`` is "logistic" (``data`` is a Dataset; folds stratified by
    class; held-out mean deviance) or "weighted_lasso" (``data`` is a
    WeightedLassoProblem; plain folds; held-out weighted squared error).
    Fold fits warm-start along the descending grid and run at the lighter
    CV tolerance; refit the winner at full precision for downstream use.
    Returns ``(best_lambda, curve)`` where ``curve[k] = (lambda_k,
    mean_score_k)``.  Ties (exactly equal mean scores) resolve toward the
    larger lambda, i.e. the sparser model.
    """
    rng = np.random.default_rng(seed)
    grid = plan.lambda_grid
    if fit_kind == "logistic":
        if not isinstance(data, Dataset):
            raise InvalidInputError("logistic cross-validation expects a Dataset")
        folds = stratified_folds(data.y, plan.n_folds, rng)
        for f in folds:
            if f.size == 0 or np.unique(data.y[f]).size < 2:
                raise InvalidInputError(
                    "a CV fold contains a single class; reduce n_folds"
                )
        XF = np.asfortranarray(data.X)
        scores = np.zeros(grid.size)
        for f in folds:
            mask = np.ones(data.n, dtype=bool)
            mask[f] = False
            path, n_valid = _logistic_path(
                np.asfortranarray(data.X[mask]), data.y[mask], grid, tol,
                max_iter, density_limit=CV_DENSITY_LIMIT,
            )
            Xte, yte = XF[f], data.y[f]
            for k in range(grid.size):
                if k < n_valid:
                    eta = Xte @ path[k]
                    scores[k] += _kernels.logistic_deviance(eta, yte)
                else:
                    scores[k] = np.inf
        scores /= len(folds)
    elif fit_kind == "weighted_lasso":
        if not isinstance(data, WeightedLassoProblem):
            raise InvalidInputError(
                "weighted_lasso cross-validation expects a WeightedLassoProblem"
            )
        folds = plain_folds(data.n, plan.n_folds, rng)
        scores = np.zeros(grid.size)
        for f in folds:
            mask = np.ones(data.n, dtype=bool)
            mask[f] = False
            path, n_valid = _weighted_path(
                np.asfortranarray(data.predictors[mask]),
                data.targets[mask],
                data.weights[mask],
                grid,
                tol,
                max_iter,
                density_limit=CV_DENSITY_LIMIT,
            )
            Ate, tte, wte = data.predictors[f], data.targets[f], data.weights[f]
            for k in range(grid.size):
                if k < n_valid:
                    r = tte - Ate @ path[k]
                    scores[k] += float(np.mean(wte * r * r))
                else:
                    scores[k] = np.inf
        scores /= len(folds)
    else:
        raise InvalidInputError(f"unknown fit_kind {fit_kind!r}")

    best = 0
    for k in range(1, grid.size):
        if scores[k] < scores[best]:  # strict: ties keep the larger lambda
            best = k
    curve = np.column_stack([grid, scores])
    return float(grid[best]), curve
