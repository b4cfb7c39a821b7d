"""Decorrelated-score conditional randomization test for sparse logistic models.

The procedure (``crt_logit``) fits a cross-validated logistic lasso, keeps
its support as a screening set, and for each screened variable j:

1. x-distillation: weighted lasso of column j on the remaining columns,
   with per-sample weights given by the logistic curvature at the full
   fit's linear predictor;
2. y-distillation: the full fit's coefficients with entry j removed;
3. normalizes the resulting score by the empirical partial Fisher
   information and converts the statistic to a two-sided normal p-value.

Variables outside the screening set get p-value 1.  All per-variable work
is seeded from (seed, j), so serial and parallel runs agree exactly.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import (
    DegenerateFisherInfoError,
    InvalidInputError,
    NonFiniteError,
)
from .solvers import (
    DEFAULT_MAX_ITER,
    DEFAULT_N_FOLDS,
    DEFAULT_N_LAMBDAS,
    DEFAULT_TOL,
    LOGISTIC_LAMBDA_MIN_RATIO,
    CvPlan,
    Dataset,
    FittedModel,
    WeightedLassoProblem,
    cross_validate,
    default_lambda_grid,
    fit_sparse_logistic,
    fit_weighted_lasso,
    lambda_max_logistic,
    lambda_max_weighted,
    sigmoid,
    sigmoid_weight,
)

EPS_FISHER_INFO = 1e-10

STRATEGY_CV = "cv"
STRATEGY_FIXED = "fixed"
STRATEGY_UNIVERSAL = "universal"
_STRATEGIES = (STRATEGY_CV, STRATEGY_FIXED, STRATEGY_UNIVERSAL)


def universal_lambda(n: int, p: int) -> float:
    """Theory-backed regularization level sqrt(log(p) / n)."""
    return math.sqrt(math.log(p) / n)


@dataclass
class DistillationPair:
    """Distillation outputs for one variable."""

    beta_dx: np.ndarray
    beta_dy: np.ndarray
    lambda_dx: float
    variable_index: int


@dataclass
class VariableResult:
    """Per-variable outcome: statistic, Fisher information and p-value.

    ``statistic`` and ``fisher_info`` are None for variables that were not
    tested (screened out) or whose Fisher information was degenerate; those
    variables carry p_value 1.
    """

    index: int
    screened_in: bool
    statistic: float | None
    fisher_info: float | None
    p_value: float
    degenerate: bool = False


@dataclass
class InferenceConfig:
    """Knobs for ``crt_logit`` (and the distilled baseline ``dcrt``).

    ``lambda_strategy`` picks the regularization of the logistic fits,
    ``lambda_dx_strategy`` that of the x-distillations: "cv" (K-fold
    cross-validation, the default), "fixed" (use ``lambda_value`` /
    ``lambda_dx_value``), or "universal" (sqrt(log p / n)).
    """

    lambda_strategy: str = STRATEGY_CV
    lambda_value: float | None = None
    lambda_dx_strategy: str = STRATEGY_CV
    lambda_dx_value: float | None = None
    screening: bool = True
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    n_folds: int = DEFAULT_N_FOLDS
    n_lambdas: int = DEFAULT_N_LAMBDAS

    def __post_init__(self):
        if self.lambda_strategy not in _STRATEGIES:
            raise InvalidInputError(f"unknown lambda_strategy {self.lambda_strategy!r}")
        if self.lambda_dx_strategy not in _STRATEGIES:
            raise InvalidInputError(
                f"unknown lambda_dx_strategy {self.lambda_dx_strategy!r}"
            )
        if self.lambda_strategy == STRATEGY_FIXED and self.lambda_value is None:
            raise InvalidInputError("lambda_strategy 'fixed' needs lambda_value")
        if self.lambda_dx_strategy == STRATEGY_FIXED and self.lambda_dx_value is None:
            raise InvalidInputError("lambda_dx_strategy 'fixed' needs lambda_dx_value")


def child_seed(seed: int, index: int) -> np.random.SeedSequence:
    """Deterministic per-variable seed stream, independent of schedule."""
    return np.random.SeedSequence([int(seed), int(index)])


def screening_set(model: FittedModel) -> np.ndarray:
    """Indices of the nonzero coefficients of a fitted model."""
    return np.flatnonzero(model.coefficients)


def distill_x(
    data: Dataset,
    j: int,
    beta_hat: np.ndarray,
    lambda_dx: float,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> np.ndarray:
    """Weighted-lasso distillation of column j onto the remaining columns.

    Weights are the logistic curvature at the full fit's linear predictor,
    so directions the logistic model has saturated contribute nothing.
    """
    problem = build_distillation_problem(data, j, beta_hat, lambda_dx)
    return fit_weighted_lasso(problem, tol=tol, max_iter=max_iter)


def build_distillation_problem(
    data: Dataset, j: int, beta_hat: np.ndarray, lambda_dx: float
) -> WeightedLassoProblem:
    if not 0 <= j < data.p:
        raise IndexError(f"variable index {j} out of range [0, {data.p})")
    weights = sigmoid_weight(data.X @ beta_hat)
    return WeightedLassoProblem(
        targets=data.X[:, j],
        predictors=np.delete(data.X, j, axis=1),
        weights=np.atleast_1d(weights),
        lambda_dx=lambda_dx,
    )


def distill_y(beta_hat: np.ndarray, j: int) -> np.ndarray:
    """Coefficient vector with entry j removed, order preserved."""
    beta_hat = np.asarray(beta_hat, dtype=np.float64)
    if not 0 <= j < beta_hat.shape[0]:
        raise IndexError(f"index {j} out of range [0, {beta_hat.shape[0]})")
    return np.delete(beta_hat, j)


def partial_fisher_info(
    data: Dataset, j: int, beta_hat: np.ndarray, beta_dx: np.ndarray
) -> float:
    """Empirical partial Fisher information of variable j.

    (1/n) sum_i w_i (X_ij - X_i,-j beta_dx) X_ij with the logistic
    curvature weights w_i.  Raises DegenerateFisherInfoError when the
    result is at most EPS_FISHER_INFO: the column was distilled (almost)
    perfectly and the normalized statistic is undefined.
    """
    weights = sigmoid_weight(data.X @ beta_hat)
    col = data.X[:, j]
    resid = col - np.delete(data.X, j, axis=1) @ beta_dx
    info = float(np.mean(weights * resid * col))
    if info <= EPS_FISHER_INFO:
        raise DegenerateFisherInfoError(
            f"partial Fisher information {info:.3e} <= {EPS_FISHER_INFO:.0e} "
            f"for variable {j}"
        )
    return info


def decorrelated_statistic(
    data: Dataset, j: int, pair: DistillationPair, fisher_info: float
) -> float:
    """Decorrelated score statistic for variable j.

    -n^(-1/2) I^(-1/2) sum_i [y_i - g(X_i,-j beta_dy)] [X_ij - X_i,-j beta_dx]
    """
    if fisher_info <= EPS_FISHER_INFO:
        raise DegenerateFisherInfoError("fisher_info must exceed EPS_FISHER_INFO")
    X_rest = np.delete(data.X, j, axis=1)
    y_resid = data.y - sigmoid(X_rest @ pair.beta_dy)
    x_resid = data.X[:, j] - X_rest @ pair.beta_dx
    stat = -float(y_resid @ x_resid) / math.sqrt(data.n * fisher_info)
    if not math.isfinite(stat):
        raise NonFiniteError(f"statistic for variable {j} is not finite")
    return stat


def two_sided_pvalue(t: float) -> float:
    """Two-sided standard normal p-value, 2 * (1 - Phi(|t|))."""
    if not math.isfinite(t):
        raise InvalidInputError("statistic must be finite")
    return float(2.0 * ndtr(-abs(t)))


def resolve_lambda(
    config: InferenceConfig, data: Dataset, seed_seq: np.random.SeedSequence
) -> float:
    """Regularization for the full logistic fit per the configured strategy."""
    if config.lambda_strategy == STRATEGY_FIXED:
        return float(config.lambda_value)
    if config.lambda_strategy == STRATEGY_UNIVERSAL:
        return universal_lambda(data.n, data.p)
    grid = default_lambda_grid(
        lambda_max_logistic(data.X, data.y),
        config.n_lambdas,
        min_ratio=LOGISTIC_LAMBDA_MIN_RATIO,
    )
    plan = CvPlan(lambda_grid=grid, n_folds=config.n_folds)
    best, _ = cross_validate("logistic", data, plan, seed_seq)
    return best


def _resolve_lambda_dx(
    config: InferenceConfig,
    problem: WeightedLassoProblem,
    data: Dataset,
    seed_seq: np.random.SeedSequence,
) -> float:
    if config.lambda_dx_strategy == STRATEGY_FIXED:
        return float(config.lambda_dx_value)
    if config.lambda_dx_strategy == STRATEGY_UNIVERSAL:
        return universal_lambda(data.n, data.p)
    lam_max = lambda_max_weighted(problem.targets, problem.predictors, problem.weights)
    grid = default_lambda_grid(lam_max, config.n_lambdas)
    plan = CvPlan(lambda_grid=grid, scoring="squared_error", n_folds=config.n_folds)
    best, _ = cross_validate("weighted_lasso", problem, plan, seed_seq)
    return best


def _not_tested(j: int, screened: bool) -> VariableResult:
    return VariableResult(
        index=j, screened_in=screened, statistic=None, fisher_info=None, p_value=1.0
    )


def crt_logit(
    data: Dataset,
    config: InferenceConfig | None = None,
    seed: int = 0,
    variables=None,
    n_threads: int = 1,
) -> list[VariableResult]:
    """Run the decorrelated-score CRT; returns one VariableResult per column.

    ``variables`` optionally restricts testing to a subset of indices
    (untested variables are reported with p-value 1); ``n_threads``
    parallelizes the per-variable loop without changing any output.
    """
    if config is None:
        config = InferenceConfig()
    lam = resolve_lambda(config, data, child_seed(seed, data.p))
    model = fit_sparse_logistic(
        data, lam, tol=config.tol, max_iter=config.max_iter
    )
    if config.screening:
        support_set = set(screening_set(model).tolist())
    else:
        support_set = set(range(data.p))
    tested = set(support_set)
    if variables is not None:
        requested = {int(j) for j in variables}
        bad = [j for j in requested if not 0 <= j < data.p]
        if bad:
            raise IndexError(f"variable indices out of range: {sorted(bad)}")
        tested &= requested

    beta_hat = model.coefficients

    def run_variable(j: int) -> VariableResult:
        problem = build_distillation_problem(data, j, beta_hat, 0.0)
        lam_dx = _resolve_lambda_dx(config, problem, data, child_seed(seed, j))
        problem.lambda_dx = lam_dx
        beta_dx = fit_weighted_lasso(
            problem, tol=config.tol, max_iter=config.max_iter
        )
        pair = DistillationPair(
            beta_dx=beta_dx,
            beta_dy=distill_y(beta_hat, j),
            lambda_dx=lam_dx,
            variable_index=j,
        )
        try:
            info = partial_fisher_info(data, j, beta_hat, beta_dx)
        except DegenerateFisherInfoError:
            return VariableResult(
                index=j,
                screened_in=True,
                statistic=None,
                fisher_info=None,
                p_value=1.0,
                degenerate=True,
            )
        stat = decorrelated_statistic(data, j, pair, info)
        return VariableResult(
            index=j,
            screened_in=True,
            statistic=stat,
            fisher_info=info,
            p_value=two_sided_pvalue(stat),
        )

    ordered = sorted(tested)
    if n_threads > 1 and len(ordered) > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            computed = list(pool.map(run_variable, ordered))
    else:
        computed = [run_variable(j) for j in ordered]

    by_index = {r.index: r for r in computed}
    return [
        by_index.get(j, _not_tested(j, j in support_set))
        for j in range(data.p)
    ]
