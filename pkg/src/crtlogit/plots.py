"""Figure rendering for the experiment commands.

Each function takes already-computed experiment output and writes one PNG
next to the delimited tables.  Rendering is always non-interactive.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_METHOD_COLORS = {
    "crt-logit": "tab:green",
    "dcrt": "tab:orange",
    "crt": "tab:blue",
    "hrt": "tab:purple",
    "crt-logit-noscreen": "tab:olive",
    "dcrt-noscreen": "tab:red",
}


def _color(method: str):
    return _METHOD_COLORS.get(method, "tab:gray")


def qq_plot(qq_result, path) -> None:
    """Empirical null-statistic quantiles against standard normal quantiles."""
    fig, ax = plt.subplots(figsize=(5, 5))
    theo = qq_result.theoretical_quantiles
    ax.scatter(theo, qq_result.sorted_statistics, s=8,
               color=_color(qq_result.method), label=qq_result.method)
    lo = min(theo.min(), qq_result.sorted_statistics.min())
    hi = max(theo.max(), qq_result.sorted_statistics.max())
    ax.plot([lo, hi], [lo, hi], color="k", lw=0.8, ls="--")
    ax.set_xlabel("standard normal quantile")
    ax.set_ylabel("empirical statistic quantile")
    ax.set_title(
        f"null statistic, variable {qq_result.tracked_index} "
        f"({qq_result.statistics.size} replicates)"
    )
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def sweep_plot(summary_rows, vary: str, alpha: float, path) -> None:
    """Two panels: empirical FDR and average power against the varied knob."""
    methods = sorted({row["method"] for row in summary_rows})
    fig, (ax_fdr, ax_pow) = plt.subplots(1, 2, figsize=(9, 4), sharex=True)
    for method in methods:
        rows = sorted(
            (r for r in summary_rows if r["method"] == method),
            key=lambda r: r["value"],
        )
        x = [r["value"] for r in rows]
        ax_fdr.errorbar(x, [r["mean_fdp"] for r in rows],
                        yerr=[r["se_fdp"] for r in rows],
                        marker="o", capsize=2, label=method, color=_color(method))
        ax_pow.errorbar(x, [r["mean_power"] for r in rows],
                        yerr=[r["se_power"] for r in rows],
                        marker="o", capsize=2, label=method, color=_color(method))
    ax_fdr.axhline(alpha, color="k", lw=0.8, ls="--")
    ax_fdr.set_xlabel(vary)
    ax_pow.set_xlabel(vary)
    ax_fdr.set_ylabel("empirical FDR")
    ax_pow.set_ylabel("average power")
    ax_fdr.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def heatmap_plot(cells, path) -> None:
    """FDR and power surfaces over (n, regularization multiplier)."""
    n_values = sorted({c["n"] for c in cells})
    multipliers = sorted({c["multiplier"] for c in cells})
    fdr = np.full((len(n_values), len(multipliers)), np.nan)
    power = np.full_like(fdr, np.nan)
    for c in cells:
        i = n_values.index(c["n"])
        j = multipliers.index(c["multiplier"])
        fdr[i, j] = c["fdr"]
        power[i, j] = c["power"]
    fig, axes = plt.subplots(1, 2, figsize=(10, 3 + 0.4 * len(n_values)))
    for ax, grid, title in ((axes[0], fdr, "FDR"), (axes[1], power, "power")):
        im = ax.imshow(grid, aspect="auto", origin="lower", cmap="viridis",
                       vmin=0.0, vmax=max(1e-9, np.nanmax(grid)))
        ax.set_xticks(range(len(multipliers)))
        ax.set_xticklabels([f"{np.log10(m):.1f}" for m in multipliers])
        ax.set_yticks(range(len(n_values)))
        ax.set_yticklabels([str(v) for v in n_values])
        ax.set_xlabel("log10 multiplier of sqrt(log p / n)")
        ax.set_ylabel("n")
        ax.set_title(title)
        fig.colorbar(im, ax=ax)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def bench_plot(rows, path) -> None:
    """Horizontal bars of mean wall-time per method (log scale)."""
    rows = sorted(rows, key=lambda r: r["mean_seconds"])
    fig, ax = plt.subplots(figsize=(7, 0.6 * len(rows) + 1.5))
    names = [r["method"] for r in rows]
    ax.barh(names, [r["mean_seconds"] for r in rows],
            xerr=[r["se_seconds"] for r in rows],
            color=[_color(m) for m in names])
    ax.set_xscale("log")
    ax.set_xlabel("mean seconds per inference")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
