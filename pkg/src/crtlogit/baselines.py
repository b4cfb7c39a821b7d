"""Baseline conditional randomization tests to compare against.

* ``dcrt`` -- lasso-distillation CRT with the linear-residual cosine
  statistic.  The residual y - X_{-j} beta_dy is computed literally on the
  binary response even though beta_dy comes from a logistic fit; that
  mismatch is the known weakness of the method in classification settings
  and is reproduced here on purpose.
* ``vanilla_crt`` -- resampling CRT: refit the logistic lasso B times per
  variable with the column replaced by a conditional draw.
* ``hrt`` -- holdout randomization test: fit once on a train split, score
  held-out log-likelihood under B resampled copies of each test column.

Conditional draws use a Gaussian model with lasso conditional mean and
homoscedastic residual standard deviation.  RNG streams are derived from
(seed, variable, resample) so outputs do not depend on scheduling.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DegenerateResidualError, InvalidInputError, SplitError
from .inference import (
    InferenceConfig,
    VariableResult,
    _not_tested,
    child_seed,
    resolve_lambda,
    screening_set,
    two_sided_pvalue,
)
from .solvers import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    CvPlan,
    Dataset,
    WeightedLassoProblem,
    cross_validate,
    default_lambda_grid,
    fit_sparse_logistic,
    fit_weighted_lasso,
    lambda_max_logistic,
    lambda_max_weighted,
    sigmoid,
)

EPS_RESIDUAL_NORM = 1e-12

STAT_LASSO_LOGISTIC_COEFFICIENT = "lasso_logistic_coefficient"


@dataclass
class ConditionalSampler:
    """Gaussian conditional model of one column given the others."""

    mean_weights: np.ndarray
    residual_sd: float

    def draw(self, predictors: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """One synthetic copy of the modeled column given ``predictors``."""
        mean = predictors @ self.mean_weights
        return mean + self.residual_sd * rng.standard_normal(predictors.shape[0])


@dataclass
class ResamplingConfig:
    """Resampling knobs shared by the vanilla CRT and the HRT."""

    n_resamples: int = 100
    seed: int = 0
    holdout_fraction: float = 0.5

    def __post_init__(self):
        if self.n_resamples < 1:
            raise InvalidInputError("n_resamples must be at least 1")
        if not 0.0 < self.holdout_fraction < 1.0:
            raise InvalidInputError("holdout_fraction must be in (0, 1)")


def dcrt_statistic(
    data: Dataset, j: int, beta_dy_full: np.ndarray, beta_dx: np.ndarray
) -> float:
    """Normalized inner product of the two linear distillation residuals.

    sqrt(n) <y - X_{-j} b_dy, x_j - X_{-j} b_dx> / (||y - X_{-j} b_dy||
    ||x_j - X_{-j} b_dx||); equals sqrt(n) times the sample cosine of the
    residuals, so |T| <= sqrt(n).
    """
    X_rest = np.delete(data.X, j, axis=1)
    y_resid = data.y - X_rest @ beta_dy_full
    x_resid = data.X[:, j] - X_rest @ beta_dx
    ny = float(np.linalg.norm(y_resid))
    nx = float(np.linalg.norm(x_resid))
    if ny <= EPS_RESIDUAL_NORM or nx <= EPS_RESIDUAL_NORM:
        raise DegenerateResidualError(
            f"residual norm below {EPS_RESIDUAL_NORM:.0e} for variable {j}"
        )
    return math.sqrt(data.n) * float(y_resid @ x_resid) / (ny * nx)


def _fit_logistic_cv(
    data: Dataset, config: InferenceConfig, seed_seq
) -> tuple[np.ndarray, float]:
    lam = resolve_lambda(config, data, seed_seq)
    model = fit_sparse_logistic(data, lam, tol=config.tol, max_iter=config.max_iter)
    return model.coefficients, lam


def _plain_lasso(
    data_X: np.ndarray,
    j: int,
    lambda_dx: float | None,
    config: InferenceConfig,
    seed_seq,
) -> tuple[np.ndarray, np.ndarray]:
    """Unweighted lasso of column j on the rest; returns (coefs, residual)."""
    target = data_X[:, j]
    predictors = np.delete(data_X, j, axis=1)
    weights = np.full(target.shape[0], 0.25)
    problem = WeightedLassoProblem(
        targets=target, predictors=predictors, weights=weights, lambda_dx=0.0
    )
    if lambda_dx is None:
        if config.lambda_dx_strategy == "fixed":
            lambda_dx = float(config.lambda_dx_value)
        elif config.lambda_dx_strategy == "universal":
            lambda_dx = math.sqrt(math.log(data_X.shape[1]) / data_X.shape[0])
        else:
            lam_max = lambda_max_weighted(target, predictors, weights)
            grid = default_lambda_grid(lam_max, config.n_lambdas)
            plan = CvPlan(lambda_grid=grid, scoring="squared_error",
                          n_folds=config.n_folds)
            lambda_dx, _ = cross_validate("weighted_lasso", problem, plan, seed_seq)
    problem.lambda_dx = float(lambda_dx)
    coefs = fit_weighted_lasso(problem, tol=config.tol, max_iter=config.max_iter)
    return coefs, target - predictors @ coefs


def dcrt(
    data: Dataset,
    config: InferenceConfig | None = None,
    seed: int = 0,
    variables=None,
    n_threads: int = 1,
) -> list[VariableResult]:
    """Lasso-distillation CRT; returns one VariableResult per column.

    For each screened variable: a logistic-lasso fit of y on the other
    columns (y-distillation), an unweighted lasso of the column on the
    other columns (x-distillation), and the linear-residual statistic.
    """
    if config is None:
        config = InferenceConfig()
    lam = resolve_lambda(config, data, child_seed(seed, data.p))
    model = fit_sparse_logistic(data, lam, tol=config.tol, max_iter=config.max_iter)
    if config.screening:
        support_set = set(screening_set(model).tolist())
    else:
        support_set = set(range(data.p))
    tested = set(support_set)
    if variables is not None:
        requested = {int(j) for j in variables}
        bad = [jj for jj in requested if not 0 <= jj < data.p]
        if bad:
            raise IndexError(f"variable indices out of range: {sorted(bad)}")
        tested &= requested

    def run_variable(j: int) -> VariableResult:
        seq = child_seed(seed, j)
        rest = Dataset(X=np.delete(data.X, j, axis=1), y=data.y)
        beta_dy, _ = _fit_logistic_cv(rest, config, seq)
        beta_dx, _ = _plain_lasso(data.X, j, None, config, seq)
        try:
            stat = dcrt_statistic(data, j, beta_dy, beta_dx)
        except DegenerateResidualError:
            return VariableResult(
                index=j, screened_in=True, statistic=None, fisher_info=None,
                p_value=1.0, degenerate=True,
            )
        return VariableResult(
            index=j,
            screened_in=True,
            statistic=stat,
            fisher_info=None,
            p_value=two_sided_pvalue(stat),
        )

    ordered = sorted(tested)
    if n_threads > 1 and len(ordered) > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            computed = list(pool.map(run_variable, ordered))
    else:
        computed = [run_variable(j) for j in ordered]
    by_index = {r.index: r for r in computed}
    return [by_index.get(j, _not_tested(j, j in support_set)) for j in range(data.p)]


def fit_conditional_sampler(
    data: Dataset,
    j: int,
    lambda_dx: float,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> ConditionalSampler:
    """Gaussian conditional model of column j: lasso mean, RMS residual sd."""
    config = InferenceConfig(tol=tol, max_iter=max_iter)
    coefs, resid = _plain_lasso(data.X, j, lambda_dx, config, None)
    return ConditionalSampler(
        mean_weights=coefs,
        residual_sd=float(np.sqrt(np.mean(resid * resid))),
    )


def _cv_sampler(data_X, j, config, seed_seq) -> ConditionalSampler:
    coefs, resid = _plain_lasso(data_X, j, None, config, seed_seq)
    return ConditionalSampler(
        mean_weights=coefs,
        residual_sd=float(np.sqrt(np.mean(resid * resid))),
    )


def vanilla_crt(
    data: Dataset,
    config: ResamplingConfig,
    statistic: str = STAT_LASSO_LOGISTIC_COEFFICIENT,
    variables=None,
    n_threads: int = 1,
    fit_config: InferenceConfig | None = None,
) -> list[VariableResult]:
    """Resampling CRT with the |lasso coefficient| importance statistic.

    The logistic lasso is cross-validated once on the original data; every
    resample refits at that same regularization (re-tuning per resample
    would multiply the already dominant cost).  Empirical p-values use the
    add-one estimator (1 + #{resampled stat >= observed}) / (1 + B), so
    the smallest attainable p-value is 1 / (1 + B).
    """
    if statistic != STAT_LASSO_LOGISTIC_COEFFICIENT:
        raise InvalidInputError(f"unknown statistic {statistic!r}")
    if fit_config is None:
        fit_config = InferenceConfig()
    seed = config.seed
    beta_hat, lam = _fit_logistic_cv(data, fit_config, child_seed(seed, data.p))

    tested = set(range(data.p))
    if variables is not None:
        requested = {int(j) for j in variables}
        bad = [jj for jj in requested if not 0 <= jj < data.p]
        if bad:
            raise IndexError(f"variable indices out of range: {sorted(bad)}")
        tested &= requested

    B = config.n_resamples

    def run_variable(j: int) -> VariableResult:
        t_obs = abs(beta_hat[j])
        sampler = _cv_sampler(data.X, j, fit_config, child_seed(seed, j))
        predictors = np.delete(data.X, j, axis=1)
        # one Fortran-ordered working copy per variable; only column j mutates
        X_work = np.array(data.X, order="F", copy=True)
        exceed = 0
        objectives = np.empty(fit_config.max_iter)
        for b in range(B):
            rng = np.random.default_rng(
                np.random.SeedSequence([int(seed), int(j), int(b)])
            )
            X_work[:, j] = sampler.draw(predictors, rng)
            beta = beta_hat.copy()  # warm start from the original fit
            _kernels.logistic_cd(
                X_work, data.y, float(lam),
                fit_config.tol, fit_config.max_iter, beta, objectives,
            )
            if abs(beta[j]) >= t_obs:
                exceed += 1
        p_val = (1.0 + exceed) / (1.0 + B)
        return VariableResult(
            index=j, screened_in=True, statistic=float(t_obs),
            fisher_info=None, p_value=p_val,
        )

    ordered = sorted(tested)
    if n_threads > 1 and len(ordered) > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            computed = list(pool.map(run_variable, ordered))
    else:
        computed = [run_variable(j) for j in ordered]
    by_index = {r.index: r for r in computed}
    return [by_index.get(j, _not_tested(j, False)) for j in range(data.p)]


def split_dataset(
    data: Dataset, holdout_fraction: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Class-stratified train/test index split; test gets ``holdout_fraction``."""
    train_idx: list[int] = []
    test_idx: list[int] = []
    for cls in (0.0, 1.0):
        idx = np.flatnonzero(data.y == cls)
        idx = idx[rng.permutation(idx.size)]
        n_test = int(round(holdout_fraction * idx.size))
        test_idx.extend(idx[:n_test].tolist())
        train_idx.extend(idx[n_test:].tolist())
    train = np.array(sorted(train_idx), dtype=np.intp)
    test = np.array(sorted(test_idx), dtype=np.intp)
    for part, name in ((train, "train"), (test, "test")):
        if part.size == 0 or np.unique(data.y[part]).size < 2:
            raise SplitError(f"{name} split lacks one of the response classes")
    return train, test


def hrt(
    data: Dataset,
    config: ResamplingConfig,
    variables=None,
    n_threads: int = 1,
    fit_config: InferenceConfig | None = None,
) -> list[VariableResult]:
    """Holdout randomization test.

    The model is fit (with CV) once on the train split.  The statistic is
    the held-out mean log-likelihood; resampling an informative column
    degrades it, so small p-values come from #{resampled >= observed}
    staying low.  Conditional samplers are fit on the train split only.
    """
    if fit_config is None:
        fit_config = InferenceConfig()
    seed = config.seed
    rng_split = np.random.default_rng(np.random.SeedSequence([int(seed), 2**31]))
    train, test = split_dataset(data, config.holdout_fraction, rng_split)
    data_train = Dataset(X=data.X[train], y=data.y[train])
    X_test, y_test = data.X[test], data.y[test]

    beta_hat, _ = _fit_logistic_cv(data_train, fit_config, child_seed(seed, data.p))
    eta_test = X_test @ beta_hat
    t_obs = -_kernels.logistic_deviance(eta_test, y_test)

    tested = set(range(data.p))
    if variables is not None:
        requested = {int(j) for j in variables}
        bad = [jj for jj in requested if not 0 <= jj < data.p]
        if bad:
            raise IndexError(f"variable indices out of range: {sorted(bad)}")
        tested &= requested

    B = config.n_resamples

    def run_variable(j: int) -> VariableResult:
        sampler = _cv_sampler(data_train.X, j, fit_config, child_seed(seed, j))
        predictors_test = np.delete(X_test, j, axis=1)
        col = X_test[:, j]
        bj = beta_hat[j]
        exceed = 0
        for b in range(B):
            rng = np.random.default_rng(
                np.random.SeedSequence([int(seed), int(j), int(b)])
            )
            drawn = sampler.draw(predictors_test, rng)
            eta_b = eta_test + (drawn - col) * bj
            t_b = -_kernels.logistic_deviance(eta_b, y_test)
            if t_b >= t_obs:
                exceed += 1
        p_val = (1.0 + exceed) / (1.0 + B)
        return VariableResult(
            index=j, screened_in=True, statistic=float(t_obs),
            fisher_info=None, p_value=p_val,
        )

    ordered = sorted(tested)
    if n_threads > 1 and len(ordered) > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            computed = list(pool.map(run_variable, ordered))
    else:
        computed = [run_variable(j) for j in ordered]
    by_index = {r.index: r for r in computed}
    return [by_index.get(j, _not_tested(j, False)) for j in range(data.p)]
