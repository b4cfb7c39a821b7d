"""Synthetic data generation and replicated experiments.

Rows of the design are i.i.d. Gaussian with an AR(1) Toeplitz covariance
(rho^|a-b|); the response is Bernoulli through the logistic link applied to
the linear signal plus an extra Gaussian noise term whose magnitude is set
by the signal-to-noise ratio.  Experiments (null-statistic quantiles,
FDR/power sweeps, regularization heatmap, runtime bench) are pure functions
of their configuration: replicate r uses seed ``config.seed + r`` and cell
results depend only on (seed, cell index), so reruns reproduce identical
tables no matter how work is scheduled.
"""

from __future__ import annotations

import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtri

from .baselines import ResamplingConfig, dcrt, hrt, vanilla_crt
from .errors import CholeskyError, InvalidInputError
from .inference import InferenceConfig, crt_logit, universal_lambda
from .multiple_testing import GroundTruth, bh_select, by_select, score_selection
from .solvers import Dataset, sigmoid

PLACEMENT_EQUISPACED = "fixed_equispaced"
PLACEMENT_RANDOM = "random"

METHOD_CRT_LOGIT = "crt-logit"
METHOD_DCRT = "dcrt"
METHOD_CRT = "crt"
METHOD_HRT = "hrt"
METHOD_CRT_LOGIT_NOSCREEN = "crt-logit-noscreen"
METHOD_DCRT_NOSCREEN = "dcrt-noscreen"

SWEEP_METHODS = (METHOD_CRT_LOGIT, METHOD_DCRT, METHOD_CRT, METHOD_HRT)
BENCH_METHODS = (
    METHOD_CRT_LOGIT,
    METHOD_CRT_LOGIT_NOSCREEN,
    METHOD_DCRT,
    METHOD_DCRT_NOSCREEN,
    METHOD_CRT,
    METHOD_HRT,
)


@dataclass
class SimulationConfig:
    """Parameters of one synthetic scenario."""

    n: int = 400
    p: int = 600
    rho: float = 0.5
    snr: float = 2.0
    sparsity: float = 0.04
    signal_magnitude: float = 2.0
    seed: int = 0
    support_placement: str = PLACEMENT_RANDOM

    def __post_init__(self):
        if self.n < 4:
            raise InvalidInputError("n must be at least 4")
        if self.p < 1:
            raise InvalidInputError("p must be at least 1")
        if not 0.0 <= self.rho < 1.0:
            raise InvalidInputError("rho must lie in [0, 1)")
        if self.snr <= 0.0:
            raise InvalidInputError("snr must be positive")
        if not 0.0 < self.sparsity <= 1.0:
            raise InvalidInputError("sparsity must lie in (0, 1]")
        if self.support_placement not in (PLACEMENT_EQUISPACED, PLACEMENT_RANDOM):
            raise InvalidInputError(
                f"unknown support_placement {self.support_placement!r}"
            )

    @property
    def s_star(self) -> int:
        return max(1, int(round(self.sparsity * self.p)))


@dataclass
class Replicate:
    """One synthetic dataset together with its generating quantities."""

    data: Dataset
    beta0: np.ndarray
    support: GroundTruth
    sigma: float
    xi: np.ndarray


def toeplitz_design(n: int, p: int, rho: float, seed) -> np.ndarray:
    """n i.i.d. Gaussian rows with covariance rho^|a-b| via Cholesky."""
    if not 0.0 <= rho < 1.0:
        raise InvalidInputError("rho must lie in [0, 1)")
    idx = np.arange(p)
    cov = rho ** np.abs(idx[:, None] - idx[None, :])
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise CholeskyError("Toeplitz covariance is not positive definite") from exc
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n, p)) @ chol.T


def make_beta0(config: SimulationConfig) -> tuple[np.ndarray, GroundTruth]:
    """Signal vector with s_star entries at the configured magnitude."""
    p, s = config.p, config.s_star
    if round(config.sparsity * p) < 1:
        warnings.warn(
            f"sparsity {config.sparsity} * p {p} < 1; clamping support size to 1"
        )
    if config.support_placement == PLACEMENT_EQUISPACED:
        support = (np.arange(s) * p) // s
    else:
        rng = np.random.default_rng(config.seed)
        support = np.sort(rng.choice(p, size=s, replace=False))
    beta0 = np.zeros(p)
    beta0[support] = config.signal_magnitude
    return beta0, GroundTruth(support=support)


def generate_response(X, beta0, snr: float, seed) -> tuple[np.ndarray, float]:
    """Bernoulli response through the noisy logistic link; returns (y, sigma)."""
    y, sigma, _ = _generate_response_full(X, beta0, snr, seed)
    return y, sigma


def _generate_response_full(X, beta0, snr, seed):
    if snr <= 0.0:
        raise InvalidInputError("snr must be positive")
    n = X.shape[0]
    signal = X @ beta0
    sigma = float(np.linalg.norm(signal) / (np.sqrt(n) * snr))
    rng = np.random.default_rng(seed)
    xi = rng.standard_normal(n)
    probs = sigmoid(signal + sigma * xi)
    y = (rng.random(n) < probs).astype(np.float64)
    return y, sigma, xi


def make_replicate(config: SimulationConfig, replicate_index: int = 0) -> Replicate:
    """Replicate ``replicate_index`` of a scenario (seeded seed + index)."""
    rep_seed = config.seed + replicate_index
    rep_config = replace(config, seed=rep_seed)
    X = toeplitz_design(
        config.n, config.p, config.rho, np.random.SeedSequence([rep_seed, 0])
    )
    beta0, truth = make_beta0(rep_config)
    y, sigma, xi = _generate_response_full(
        X, beta0, config.snr, np.random.SeedSequence([rep_seed, 1])
    )
    return Replicate(
        data=Dataset(X=X, y=y), beta0=beta0, support=truth, sigma=sigma, xi=xi
    )


def _run_method(
    method: str,
    data: Dataset,
    seed: int,
    inference: InferenceConfig,
    resampling: ResamplingConfig | None = None,
    variables=None,
    n_threads: int = 1,
):
    if method == METHOD_CRT_LOGIT:
        return crt_logit(data, inference, seed=seed, variables=variables,
                         n_threads=n_threads)
    if method == METHOD_CRT_LOGIT_NOSCREEN:
        cfg = replace(inference, screening=False)
        return crt_logit(data, cfg, seed=seed, variables=variables,
                         n_threads=n_threads)
    if method == METHOD_DCRT:
        return dcrt(data, inference, seed=seed, variables=variables,
                    n_threads=n_threads)
    if method == METHOD_DCRT_NOSCREEN:
        cfg = replace(inference, screening=False)
        return dcrt(data, cfg, seed=seed, variables=variables,
                    n_threads=n_threads)
    if method == METHOD_CRT:
        rs = replace(resampling or ResamplingConfig(n_resamples=500), seed=seed)
        return vanilla_crt(data, rs, variables=variables, n_threads=n_threads,
                           fit_config=inference)
    if method == METHOD_HRT:
        rs = replace(resampling or ResamplingConfig(n_resamples=500), seed=seed)
        return hrt(data, rs, variables=variables, n_threads=n_threads,
                   fit_config=inference)
    raise InvalidInputError(f"unknown method {method!r}")


def default_null_index(config: SimulationConfig) -> int:
    """A null index midway across the first gap of the equispaced support."""
    support = (np.arange(config.s_star) * config.p) // config.s_star
    if config.s_star > 1:
        gap_end = int(support[1])
    else:
        gap_end = config.p
    return int(support[0]) + max(1, (gap_end - int(support[0])) // 2)


@dataclass
class QqResult:
    """Null statistics with matching standard normal quantiles."""

    statistics: np.ndarray
    theoretical_quantiles: np.ndarray
    tracked_index: int
    method: str

    @property
    def sorted_statistics(self) -> np.ndarray:
        return np.sort(self.statistics)


def run_qq_experiment(
    config: SimulationConfig,
    method: str = METHOD_CRT_LOGIT,
    n_replicates: int = 500,
    null_index_rule="midgap",
    inference: InferenceConfig | None = None,
    n_threads: int = 1,
) -> QqResult:
    """Distribution of one tracked null statistic over fresh replicates.

    The support placement is forced to equispaced so the tracked index can
    stay fixed (and outside the support) across replicates; screening is
    disabled and only the tracked variable is tested.
    """
    if method not in (METHOD_CRT_LOGIT, METHOD_DCRT):
        raise InvalidInputError(
            f"qq experiment supports crt-logit and dcrt, got {method!r}"
        )
    config = replace(config, support_placement=PLACEMENT_EQUISPACED)
    if null_index_rule == "midgap":
        tracked = default_null_index(config)
    else:
        tracked = int(null_index_rule)
    support = (np.arange(config.s_star) * config.p) // config.s_star
    if tracked in set(support.tolist()):
        raise InvalidInputError(f"tracked index {tracked} lies in the support")
    if inference is None:
        inference = InferenceConfig()
    inference = replace(inference, screening=False)

    def one(r: int) -> float:
        rep = make_replicate(config, r)
        results = _run_method(
            method, rep.data, config.seed + r, inference, variables=[tracked]
        )
        stat = results[tracked].statistic
        if stat is None:
            raise InvalidInputError(
                f"tracked statistic degenerate in replicate {r}"
            )
        return float(stat)

    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            stats = np.array(list(pool.map(one, range(n_replicates))))
    else:
        stats = np.array([one(r) for r in range(n_replicates)])
    m = n_replicates
    theo = ndtri((np.arange(1, m + 1) - 0.5) / m)
    return QqResult(
        statistics=stats, theoretical_quantiles=theo,
        tracked_index=tracked, method=method,
    )


def _select(pvalues, alpha, procedure):
    if procedure == "by":
        return by_select(pvalues, alpha)
    return bh_select(pvalues, alpha)


def run_fdr_power_sweep(
    config: SimulationConfig,
    vary: str,
    values,
    methods=(METHOD_CRT_LOGIT, METHOD_DCRT),
    alpha: float = 0.1,
    n_replicates: int = 30,
    procedure: str = "bh",
    inference: InferenceConfig | None = None,
    resampling: ResamplingConfig | None = None,
    n_threads: int = 1,
) -> tuple[list[dict], list[dict]]:
    """FDP/power of each method across one varied scenario parameter.

    Returns (runs, summary): ``runs`` has one row per (method, value,
    replicate); ``summary`` aggregates mean FDP (the empirical FDR), mean
    power and their standard errors.  Per-cell failures are recorded as
    rows with an ``error`` field rather than aborting the sweep.
    """
    if vary not in ("n", "p", "rho", "snr", "sparsity", "signal_magnitude"):
        raise InvalidInputError(f"cannot vary {vary!r}")
    if len(values) == 0:
        raise InvalidInputError("values grid must be nonempty")
    if inference is None:
        inference = InferenceConfig()

    caster = int if vary in ("n", "p") else float
    tasks = []
    for value in values:
        cfg = replace(config, **{vary: caster(value)})
        for r in range(n_replicates):
            for method in methods:
                tasks.append((cfg, value, r, method))

    def one(task):
        cfg, value, r, method = task
        rep = make_replicate(cfg, r)
        row = {
            "method": method, "parameter": vary, "value": value, "replicate": r,
        }
        try:
            results = _run_method(method, rep.data, cfg.seed + r, inference,
                                  resampling=resampling)
            pvalues = np.array([res.p_value for res in results])
            report = _select(pvalues, alpha, procedure)
            fdp, power = score_selection(report, rep.support)
            row.update(fdp=fdp, power=power, n_selected=report.k_hat, error="")
        except Exception as exc:  # noqa: BLE001 - per-cell failures stay rows
            row.update(fdp=np.nan, power=np.nan, n_selected=0, error=str(exc))
        return row

    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            runs = list(pool.map(one, tasks))
    else:
        runs = [one(t) for t in tasks]

    summary: list[dict] = []
    for value in values:
        for method in methods:
            sel = [
                row for row in runs
                if row["method"] == method and row["value"] == value
                and row["error"] == ""
            ]
            fdps = np.array([row["fdp"] for row in sel])
            powers = np.array([row["power"] for row in sel if row["power"] is not None])
            summary.append({
                "method": method,
                "parameter": vary,
                "value": value,
                "n_runs": len(sel),
                "mean_fdp": float(np.mean(fdps)) if len(sel) else np.nan,
                "se_fdp": _standard_error(fdps),
                "mean_power": float(np.mean(powers)) if powers.size else np.nan,
                "se_power": _standard_error(powers),
            })
    return runs, summary


def _standard_error(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.size <= 1:
        return 0.0
    return float(np.std(x, ddof=1) / np.sqrt(x.size))


def run_lambda_heatmap(
    config: SimulationConfig,
    lambda_multipliers,
    n_grid=None,
    alpha: float = 0.1,
    n_replicates: int = 10,
    inference: InferenceConfig | None = None,
    procedure: str = "bh",
    n_threads: int = 1,
) -> list[dict]:
    """FDR/power surface over fixed x-distillation regularization levels.

    Each cell runs the decorrelated-score CRT with the x-distillation
    penalty pinned at multiplier * sqrt(log p / n); the main logistic fit
    keeps its configured strategy.  Cell replicates are seeded from
    (config.seed, cell index, replicate).
    """
    multipliers = np.asarray(list(lambda_multipliers), dtype=np.float64)
    if multipliers.size == 0:
        raise InvalidInputError("lambda_multipliers must be nonempty")
    n_values = [config.n] if n_grid is None else [int(v) for v in n_grid]
    if inference is None:
        inference = InferenceConfig()
    cells: list[dict] = []
    tasks = []
    cell_index = 0
    for n_val in n_values:
        for mult in multipliers:
            tasks.append((cell_index, n_val, float(mult)))
            cell_index += 1

    def one(task):
        cell_idx, n_val, mult = task
        cfg = replace(config, n=n_val)
        lam_dx = mult * universal_lambda(n_val, config.p)
        inf = replace(
            inference, lambda_dx_strategy="fixed", lambda_dx_value=lam_dx
        )
        fdps, powers = [], []
        for r in range(n_replicates):
            rep_seed = int(
                np.random.SeedSequence([config.seed, cell_idx, r]).generate_state(1)[0]
            )
            rep = make_replicate(replace(cfg, seed=rep_seed), 0)
            results = crt_logit(rep.data, inf, seed=rep_seed)
            pvalues = np.array([res.p_value for res in results])
            report = _select(pvalues, alpha, procedure)
            fdp, power = score_selection(report, rep.support)
            fdps.append(fdp)
            powers.append(power)
        return {
            "cell": cell_idx,
            "n": n_val,
            "multiplier": mult,
            "lambda_dx": lam_dx,
            "n_replicates": n_replicates,
            "fdr": float(np.mean(fdps)),
            "se_fdr": _standard_error(np.array(fdps)),
            "power": float(np.mean(powers)),
            "se_power": _standard_error(np.array(powers)),
        }

    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            cells = list(pool.map(one, tasks))
    else:
        cells = [one(t) for t in tasks]
    return cells


def run_runtime_bench(
    config: SimulationConfig,
    methods=BENCH_METHODS,
    n_replicates: int = 1,
    b_resamples: int = 500,
    inference: InferenceConfig | None = None,
    n_threads: int = 1,
) -> list[dict]:
    """Wall-clock time of one full inference per method (mean and se)."""
    for method in methods:
        if method not in BENCH_METHODS:
            raise InvalidInputError(f"unknown bench method {method!r}")
    if inference is None:
        inference = InferenceConfig()
    resampling = ResamplingConfig(n_resamples=b_resamples)
    rows: list[dict] = []
    times: dict[str, list[float]] = {m: [] for m in methods}
    for r in range(n_replicates):
        rep = make_replicate(config, r)
        for method in methods:
            start = time.perf_counter()
            _run_method(method, rep.data, config.seed + r, inference,
                        resampling=resampling, n_threads=n_threads)
            times[method].append(time.perf_counter() - start)
    for method in methods:
        t = np.array(times[method])
        rows.append({
            "method": method,
            "n_replicates": n_replicates,
            "b_resamples": b_resamples if method in (METHOD_CRT, METHOD_HRT) else 0,
            "mean_seconds": float(np.mean(t)),
            "se_seconds": _standard_error(t),
        })
    return rows
