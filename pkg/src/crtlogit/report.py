"""Machine-readable result documents and delimited-table output.

The JSON document (schema version "1") carries one record per variable
plus the selection summary and, when a ground-truth support was supplied,
FDP/power scoring.  CSV floats are printed with 17 significant digits so
re-parsing reproduces them bit for bit; JSON floats use Python's exact
shortest round-trip representation.
"""

from __future__ import annotations

import csv
import json
from typing import Sequence

from .inference import VariableResult
from .multiple_testing import GroundTruth, SelectionReport, score_selection

SCHEMA_VERSION = "1"

RECORD_FIELDS = (
    "index",
    "statistic",
    "fisher_info",
    "p_value",
    "screened_in",
    "selected",
    "degenerate",
)


def fmt_float(x) -> str:
    """17-significant-digit decimal form (round-trips float64 exactly)."""
    if x is None:
        return ""
    return format(float(x), ".17g")


def build_result_document(
    method: str,
    results: Sequence[VariableResult],
    selection: SelectionReport,
    config_echo: dict,
    truth: GroundTruth | None = None,
) -> dict:
    selected = set(selection.selected.tolist())
    records = [
        {
            "index": r.index,
            "statistic": r.statistic,
            "fisher_info": r.fisher_info,
            "p_value": r.p_value,
            "screened_in": r.screened_in,
            "selected": r.index in selected,
            "degenerate": r.degenerate,
        }
        for r in results
    ]
    doc = {
        "schema_version": SCHEMA_VERSION,
        "method": method,
        "config": config_echo,
        "n_variables": len(records),
        "records": records,
        "selection": {
            "procedure": selection.procedure,
            "alpha": selection.alpha,
            "k_hat": selection.k_hat,
            "selected_indices": [int(j) for j in selection.selected],
        },
    }
    if truth is not None:
        fdp, power = score_selection(selection, truth)
        doc["scoring"] = {"fdp": fdp, "power": power}
    return doc


def write_result_json(doc: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def write_result_csv(doc: dict, path) -> None:
    """Flat per-variable table mirroring the JSON records."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RECORD_FIELDS)
        for rec in doc["records"]:
            writer.writerow([
                rec["index"],
                fmt_float(rec["statistic"]),
                fmt_float(rec["fisher_info"]),
                fmt_float(rec["p_value"]),
                int(rec["screened_in"]),
                int(rec["selected"]),
                int(rec["degenerate"]),
            ])


def write_rows_csv(rows: Sequence[dict], fieldnames: Sequence[str], path) -> None:
    """Tidy CSV with a header row; floats at 17 significant digits."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(fieldnames)
        for row in rows:
            out = []
            for name in fieldnames:
                value = row.get(name, "")
                if isinstance(value, float):
                    value = fmt_float(value)
                out.append(value)
            writer.writerow(out)
