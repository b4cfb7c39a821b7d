"""Command-line interface.

Subcommands: ``infer`` (run one of the tests on CSV data and emit a JSON
result document plus a flat CSV), ``simulate`` (write one synthetic
dataset), and the experiment commands ``qq``, ``sweep``, ``lambda-heatmap``
and ``bench``, which write tidy CSV tables, an aggregated summary and
rendered figures.  Exit codes: 0 success, 2 malformed input or invalid
flags, 3 dimension mismatch between the design and the response.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from pathlib import Path

import numpy as np

from .baselines import ResamplingConfig, dcrt, hrt, vanilla_crt
from .errors import CrtLogitError, InvalidInputError
from .inference import InferenceConfig, crt_logit
from .multiple_testing import GroundTruth, bh_select, by_select
from .report import (
    build_result_document,
    fmt_float,
    write_result_csv,
    write_result_json,
    write_rows_csv,
)
from .simulation import (
    BENCH_METHODS,
    SWEEP_METHODS,
    SimulationConfig,
    make_replicate,
    run_fdr_power_sweep,
    run_lambda_heatmap,
    run_qq_experiment,
    run_runtime_bench,
)

THREADS_ENV_VAR = "CRT_LOGIT_THREADS"

INFER_METHODS = ("crt-logit", "dcrt", "crt", "hrt")


class InputFormatError(Exception):
    """Malformed input file (exit code 2)."""


class DimensionMismatchError(Exception):
    """Design/response shapes disagree (exit code 3)."""


def read_matrix_csv(path, header: bool = False) -> np.ndarray:
    """Parse a numeric CSV; raises InputFormatError with line numbers."""
    rows: list[list[float]] = []
    width = None
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise InputFormatError(f"{path}: {exc.strerror}") from exc
    with fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if header and lineno == 1:
                continue
            if not row:
                continue
            values = []
            for cell in row:
                text = cell.strip()
                if text == "":
                    raise InputFormatError(
                        f"{path}: line {lineno}: empty cell (missing values are rejected)"
                    )
                try:
                    value = float(text)
                except ValueError:
                    raise InputFormatError(
                        f"{path}: line {lineno}: {text!r} is not a number"
                    ) from None
                if not math.isfinite(value):
                    raise InputFormatError(
                        f"{path}: line {lineno}: non-finite value {text!r}"
                    )
                values.append(value)
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise InputFormatError(
                    f"{path}: line {lineno}: expected {width} columns, got {len(values)}"
                )
            rows.append(values)
    if not rows:
        raise InputFormatError(f"{path}: no data rows")
    return np.array(rows, dtype=np.float64)


def read_response_csv(path, header: bool = False) -> np.ndarray:
    y = read_matrix_csv(path, header=header)
    if y.shape[1] != 1:
        raise InputFormatError(
            f"{path}: expected a single column, got {y.shape[1]}"
        )
    y = y[:, 0]
    bad = np.flatnonzero((y != 0.0) & (y != 1.0))
    if bad.size:
        offset = 2 if header else 1
        raise InputFormatError(
            f"{path}: line {bad[0] + offset}: response entries must be 0 or 1"
        )
    return y


def read_support_csv(path) -> GroundTruth:
    values = read_matrix_csv(path)
    idx = values[:, 0]
    if np.any(idx != np.round(idx)):
        raise InputFormatError(f"{path}: support indices must be integers")
    return GroundTruth(support=idx.astype(np.intp))


def resolve_threads(value: int | None) -> int:
    if value is not None:
        return max(1, int(value))
    env = os.environ.get(THREADS_ENV_VAR)
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise InvalidInputError(
                f"{THREADS_ENV_VAR}={env!r} is not an integer"
            ) from exc
    return os.cpu_count() or 1


def _add_inference_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--lambda-strategy", default="cv",
                        choices=("cv", "fixed", "universal"),
                        help="regularization of the logistic fits")
    parser.add_argument("--lambda-value", type=float, default=None,
                        help="value used when --lambda-strategy fixed")
    parser.add_argument("--lambda-dx-strategy", default="cv",
                        choices=("cv", "fixed", "universal"),
                        help="regularization of the x-distillations")
    parser.add_argument("--lambda-dx-value", type=float, default=None,
                        help="value used when --lambda-dx-strategy fixed")
    parser.add_argument("--no-screening", action="store_true",
                        help="test every variable instead of the lasso support")


def _inference_config(args) -> InferenceConfig:
    return InferenceConfig(
        lambda_strategy=args.lambda_strategy,
        lambda_value=args.lambda_value,
        lambda_dx_strategy=args.lambda_dx_strategy,
        lambda_dx_value=args.lambda_dx_value,
        screening=not args.no_screening,
    )


def _add_simulation_flags(parser: argparse.ArgumentParser, n=400, p=600) -> None:
    parser.add_argument("--n", type=int, default=n, help="number of samples")
    parser.add_argument("--p", type=int, default=p, help="number of variables")
    parser.add_argument("--rho", type=float, default=0.5,
                        help="Toeplitz neighbor correlation")
    parser.add_argument("--snr", type=float, default=2.0, help="signal-to-noise ratio")
    parser.add_argument("--sparsity", type=float, default=0.04,
                        help="fraction of nonzero signal coefficients")
    parser.add_argument("--signal-magnitude", type=float, default=2.0)
    parser.add_argument("--placement", default="random",
                        choices=("random", "fixed_equispaced"))


def _simulation_config(args) -> SimulationConfig:
    return SimulationConfig(
        n=args.n, p=args.p, rho=args.rho, snr=args.snr, sparsity=args.sparsity,
        signal_magnitude=args.signal_magnitude, seed=args.seed,
        support_placement=args.placement,
    )


def _outdir(args) -> Path:
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise InvalidInputError(f"cannot parse {text!r} as floats") from exc


def cmd_infer(args) -> int:
    X = read_matrix_csv(args.x, header=args.header)
    y = read_response_csv(args.y, header=args.header)
    if y.shape[0] != X.shape[0]:
        raise DimensionMismatchError(
            f"X has {X.shape[0]} rows but y has {y.shape[0]} entries"
        )
    data_kwargs = dict(X=X, y=y)
    from .solvers import Dataset

    data = Dataset(**data_kwargs)
    threads = resolve_threads(args.threads)
    inference = _inference_config(args)
    if args.method == "crt-logit":
        results = crt_logit(data, inference, seed=args.seed, n_threads=threads)
    elif args.method == "dcrt":
        results = dcrt(data, inference, seed=args.seed, n_threads=threads)
    elif args.method == "crt":
        rs = ResamplingConfig(n_resamples=args.resamples, seed=args.seed,
                              holdout_fraction=args.holdout_fraction)
        results = vanilla_crt(data, rs, n_threads=threads, fit_config=inference)
    else:
        rs = ResamplingConfig(n_resamples=args.resamples, seed=args.seed,
                              holdout_fraction=args.holdout_fraction)
        results = hrt(data, rs, n_threads=threads, fit_config=inference)

    pvalues = np.array([r.p_value for r in results])
    select = by_select if args.fdr_procedure == "by" else bh_select
    selection = select(pvalues, args.alpha)
    truth = read_support_csv(args.truth) if args.truth else None
    config_echo = {
        "x": str(args.x),
        "y": str(args.y),
        "header": bool(args.header),
        "method": args.method,
        "alpha": args.alpha,
        "fdr_procedure": args.fdr_procedure,
        "seed": args.seed,
        "resamples": args.resamples,
        "holdout_fraction": args.holdout_fraction,
        "lambda_strategy": args.lambda_strategy,
        "lambda_value": args.lambda_value,
        "lambda_dx_strategy": args.lambda_dx_strategy,
        "lambda_dx_value": args.lambda_dx_value,
        "screening": not args.no_screening,
    }
    doc = build_result_document(args.method, results, selection, config_echo, truth)
    out_json = Path(args.out)
    out_json.parent.mkdir(parents=True, exist_ok=True)
    write_result_json(doc, out_json)
    write_result_csv(doc, out_json.with_suffix(".csv"))
    print(f"wrote {out_json} and {out_json.with_suffix('.csv')} "
          f"({selection.k_hat} selected at alpha={args.alpha})")
    return 0


def cmd_simulate(args) -> int:
    config = _simulation_config(args)
    rep = make_replicate(config, 0)
    out = _outdir(args)
    with open(out / "X.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in rep.data.X:
            writer.writerow([fmt_float(v) for v in row])
    with open(out / "y.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        for v in rep.data.y:
            writer.writerow([int(v)])
    with open(out / "beta0.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        for v in rep.beta0:
            writer.writerow([fmt_float(v)])
    with open(out / "support.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        for j in rep.support.support:
            writer.writerow([int(j)])
    print(f"wrote X.csv, y.csv, beta0.csv, support.csv to {out} "
          f"(sigma={rep.sigma:.6g})")
    return 0


def cmd_qq(args) -> int:
    config = _simulation_config(args)
    threads = resolve_threads(args.threads)
    inference = _inference_config(args)
    rule = "midgap" if args.null_index is None else args.null_index
    result = run_qq_experiment(
        config, method=args.method, n_replicates=args.replicates,
        null_index_rule=rule, inference=inference, n_threads=threads,
    )
    out = _outdir(args)
    ranks = np.argsort(np.argsort(result.statistics, kind="stable"), kind="stable")
    rows = [
        {
            "replicate": r,
            "statistic": float(result.statistics[r]),
            "rank": int(ranks[r]),
            "theoretical_quantile": float(result.theoretical_quantiles[ranks[r]]),
        }
        for r in range(result.statistics.size)
    ]
    write_rows_csv(rows, ["replicate", "statistic", "rank", "theoretical_quantile"],
                   out / "qq_runs.csv")
    from scipy.stats import kstest

    ks = kstest(result.statistics, "norm")
    summary = [{
        "method": args.method,
        "tracked_index": result.tracked_index,
        "n_replicates": result.statistics.size,
        "mean": float(np.mean(result.statistics)),
        "variance": float(np.var(result.statistics, ddof=1)),
        "ks_statistic": float(ks.statistic),
        "ks_pvalue": float(ks.pvalue),
    }]
    write_rows_csv(summary, list(summary[0].keys()), out / "qq_summary.csv")
    if not args.no_plots:
        from .plots import qq_plot

        qq_plot(result, out / f"qq_{args.method}.png")
    print(f"wrote qq tables to {out} (KS={ks.statistic:.4f}, p={ks.pvalue:.4g})")
    return 0


def cmd_sweep(args) -> int:
    config = _simulation_config(args)
    threads = resolve_threads(args.threads)
    inference = _inference_config(args)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in SWEEP_METHODS:
            raise InvalidInputError(f"unknown sweep method {m!r}")
    values = _parse_floats(args.values)
    resampling = ResamplingConfig(n_resamples=args.resamples)
    runs, summary = run_fdr_power_sweep(
        config, args.vary, values, methods=methods, alpha=args.alpha,
        n_replicates=args.replicates, procedure=args.fdr_procedure,
        inference=inference, resampling=resampling, n_threads=threads,
    )
    out = _outdir(args)
    write_rows_csv(
        runs,
        ["method", "parameter", "value", "replicate", "fdp", "power",
         "n_selected", "error"],
        out / "sweep_runs.csv",
    )
    write_rows_csv(
        summary,
        ["method", "parameter", "value", "n_runs", "mean_fdp", "se_fdp",
         "mean_power", "se_power"],
        out / "sweep_summary.csv",
    )
    if not args.no_plots:
        from .plots import sweep_plot

        sweep_plot(summary, args.vary, args.alpha, out / "sweep.png")
    print(f"wrote sweep tables to {out}")
    return 0


def cmd_lambda_heatmap(args) -> int:
    config = _simulation_config(args)
    threads = resolve_threads(args.threads)
    inference = _inference_config(args)
    multipliers = _parse_floats(args.multipliers)
    n_values = [int(v) for v in _parse_floats(args.n_values)] if args.n_values else None
    cells = run_lambda_heatmap(
        config, multipliers, n_grid=n_values, alpha=args.alpha,
        n_replicates=args.replicates, inference=inference, n_threads=threads,
        procedure=args.fdr_procedure,
    )
    out = _outdir(args)
    write_rows_csv(
        cells,
        ["cell", "n", "multiplier", "lambda_dx", "n_replicates", "fdr",
         "se_fdr", "power", "se_power"],
        out / "lambda_heatmap.csv",
    )
    if not args.no_plots:
        from .plots import heatmap_plot

        heatmap_plot(cells, out / "lambda_heatmap.png")
    print(f"wrote heatmap tables to {out}")
    return 0


def cmd_bench(args) -> int:
    config = _simulation_config(args)
    threads = resolve_threads(args.threads)
    inference = _inference_config(args)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in BENCH_METHODS:
            raise InvalidInputError(f"unknown bench method {m!r}")
    rows = run_runtime_bench(
        config, methods=methods, n_replicates=args.replicates,
        b_resamples=args.resamples, inference=inference, n_threads=threads,
    )
    out = _outdir(args)
    write_rows_csv(
        rows,
        ["method", "n_replicates", "b_resamples", "mean_seconds", "se_seconds"],
        out / "bench.csv",
    )
    if not args.no_plots:
        from .plots import bench_plot

        bench_plot(rows, out / "bench.png")
    for row in rows:
        print(f"{row['method']}: {row['mean_seconds']:.3f}s "
              f"(se {row['se_seconds']:.3f})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crtlogit",
        description="Conditional randomization tests for sparse logistic "
                    "regression with FDR-controlled selection.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=None,
                       help=f"worker threads (default: {THREADS_ENV_VAR} or all cores)")

    p_infer = sub.add_parser("infer", help="run a test on CSV data")
    p_infer.add_argument("--x", required=True, help="design matrix CSV (rows=samples)")
    p_infer.add_argument("--y", required=True, help="response CSV, single 0/1 column")
    p_infer.add_argument("--header", action="store_true",
                         help="input CSVs carry a header row")
    p_infer.add_argument("--method", default="crt-logit", choices=INFER_METHODS)
    p_infer.add_argument("--alpha", type=float, default=0.1)
    p_infer.add_argument("--fdr-procedure", default="bh", choices=("bh", "by"))
    p_infer.add_argument("--out", required=True, help="output JSON path")
    p_infer.add_argument("--resamples", type=int, default=500,
                         help="resampling budget for crt/hrt")
    p_infer.add_argument("--holdout-fraction", type=float, default=0.5)
    p_infer.add_argument("--truth", default=None,
                         help="optional CSV of true support indices for scoring")
    _add_inference_flags(p_infer)
    common(p_infer)
    p_infer.set_defaults(func=cmd_infer)

    p_sim = sub.add_parser("simulate", help="write one synthetic dataset")
    _add_simulation_flags(p_sim)
    p_sim.add_argument("--outdir", required=True)
    common(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_qq = sub.add_parser("qq", help="null-statistic quantiles vs standard normal")
    _add_simulation_flags(p_qq, n=400, p=400)
    p_qq.add_argument("--method", default="crt-logit", choices=("crt-logit", "dcrt"))
    p_qq.add_argument("--replicates", type=int, default=500)
    p_qq.add_argument("--null-index", type=int, default=None,
                      help="tracked null variable (default: first support gap)")
    p_qq.add_argument("--outdir", required=True)
    p_qq.add_argument("--no-plots", action="store_true")
    _add_inference_flags(p_qq)
    common(p_qq)
    p_qq.set_defaults(func=cmd_qq)

    p_sweep = sub.add_parser("sweep", help="FDR/power across a parameter grid")
    _add_simulation_flags(p_sweep)
    p_sweep.add_argument("--vary", required=True,
                         choices=("n", "p", "rho", "snr", "sparsity"))
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated grid, e.g. 0.2,0.5,0.8")
    p_sweep.add_argument("--methods", default="crt-logit,dcrt")
    p_sweep.add_argument("--alpha", type=float, default=0.1)
    p_sweep.add_argument("--fdr-procedure", default="bh", choices=("bh", "by"))
    p_sweep.add_argument("--replicates", type=int, default=30)
    p_sweep.add_argument("--resamples", type=int, default=500,
                         help="resampling budget for crt/hrt")
    p_sweep.add_argument("--outdir", required=True)
    p_sweep.add_argument("--no-plots", action="store_true")
    _add_inference_flags(p_sweep)
    common(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_heat = sub.add_parser("lambda-heatmap",
                            help="FDR/power over x-distillation penalties")
    _add_simulation_flags(p_heat, n=400, p=400)
    p_heat.add_argument("--multipliers", default="0.01,0.0464,0.215,1.0,4.64,10.0",
                        help="multipliers of sqrt(log p / n)")
    p_heat.add_argument("--n-values", default=None,
                        help="comma-separated n grid (default: --n)")
    p_heat.add_argument("--alpha", type=float, default=0.1)
    p_heat.add_argument("--fdr-procedure", default="bh", choices=("bh", "by"))
    p_heat.add_argument("--replicates", type=int, default=10)
    p_heat.add_argument("--outdir", required=True)
    p_heat.add_argument("--no-plots", action="store_true")
    _add_inference_flags(p_heat)
    common(p_heat)
    p_heat.set_defaults(func=cmd_lambda_heatmap)

    p_bench = sub.add_parser("bench", help="wall-clock time per method")
    _add_simulation_flags(p_bench)
    p_bench.add_argument("--methods",
                         default="crt-logit,crt-logit-noscreen,dcrt,crt,hrt")
    p_bench.add_argument("--replicates", type=int, default=1)
    p_bench.add_argument("--resamples", type=int, default=500)
    p_bench.add_argument("--outdir", required=True)
    p_bench.add_argument("--no-plots", action="store_true")
    _add_inference_flags(p_bench)
    common(p_bench)
    p_bench.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DimensionMismatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (InvalidInputError, CrtLogitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
