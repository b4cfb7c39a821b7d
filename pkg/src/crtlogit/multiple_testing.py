"""Step-up false-discovery-rate procedures and selection scoring.

Both procedures sort the p-values ascending and find the largest k whose
k-th smallest p-value sits under a linear threshold: k * alpha / p for
Benjamini-Hochberg, k * alpha / (p * H_p) with the harmonic sum H_p for
Benjamini-Yekutieli (valid under arbitrary dependence).  Everything tied
with the k-th p-value is selected, which never changes the selection size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

PROCEDURE_BH = "bh"
PROCEDURE_BY = "by"


@dataclass
class SelectionReport:
    """Outcome of a step-up selection at level alpha."""

    selected: np.ndarray
    alpha: float
    procedure: str
    k_hat: int


@dataclass
class GroundTruth:
    """Known support of the signal coefficients (for synthetic scoring)."""

    support: np.ndarray

    def __post_init__(self):
        self.support = np.unique(np.asarray(self.support, dtype=np.intp))


def _check_pvalues(pvalues) -> np.ndarray:
    p = np.asarray(pvalues, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise InvalidInputError("pvalues must be a nonempty 1-d array")
    if not np.all(np.isfinite(p)) or np.any(p < 0.0) or np.any(p > 1.0):
        raise InvalidInputError("pvalues must lie in [0, 1]")
    return p


def _step_up(pvalues, alpha: float, denom_scale: float, procedure: str) -> SelectionReport:
    p = _check_pvalues(pvalues)
    if not 0.0 <= alpha < 1.0:
        raise InvalidInputError("alpha must lie in [0, 1)")
    m = p.size
    order = np.argsort(p, kind="stable")
    sorted_p = p[order]
    thresholds = alpha * np.arange(1, m + 1) / (m * denom_scale)
    passing = np.flatnonzero(sorted_p <= thresholds)
    if passing.size == 0:
        selected = np.array([], dtype=np.intp)
    else:
        k_hat = int(passing[-1]) + 1
        cutoff = sorted_p[k_hat - 1]
        selected = np.sort(np.flatnonzero(p <= cutoff))
    return SelectionReport(
        selected=selected, alpha=float(alpha), procedure=procedure,
        k_hat=int(selected.size),
    )


def bh_select(pvalues, alpha: float) -> SelectionReport:
    """Benjamini-Hochberg step-up selection at level alpha."""
    return _step_up(pvalues, alpha, 1.0, PROCEDURE_BH)


def by_select(pvalues, alpha: float) -> SelectionReport:
    """Benjamini-Yekutieli step-up selection (harmonic-sum correction)."""
    m = np.asarray(pvalues).size
    harmonic = float(np.sum(1.0 / np.arange(1, m + 1)))
    return _step_up(pvalues, alpha, harmonic, PROCEDURE_BY)


def score_selection(
    report: SelectionReport, truth: GroundTruth
) -> tuple[float, float | None]:
    """False discovery proportion and power of a selection.

    fdp = |selected \\ support| / max(|selected|, 1); power is
    |selected & support| / |support|, or None when the support is empty.
    """
    selected = set(report.selected.tolist())
    support = set(truth.support.tolist())
    n_sel = len(selected)
    false_hits = len(selected - support)
    fdp = false_hits / max(n_sel, 1)
    if not support:
        return float(fdp), None
    power = len(selected & support) / len(support)
    return float(fdp), float(power)
