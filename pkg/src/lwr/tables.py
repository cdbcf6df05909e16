"""Render protocol summaries in the shape of the published result tables.

Baseline columns hold published reference numbers, marked ``literature``.
They are never computed here.

* ``table1``: one row per classification dataset. Columns are the error
  without rejection (fraction 0) and with rejection at the dataset's
  reference fraction.
* ``table2``: one row per rejection fraction 0, 0.1, ..., 0.5 (MSE).
* ``table3``: one row per held-out group plus a ``Mean`` row, one column per
  rejection fraction (RMSE).
"""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path

from .protocols import ProtocolSummary

# (fraction rejected, DHL mean, DHL std, CHR mean, CHR std)
TABLE1_LITERATURE = {
    "australian": (0.17, 0.35, 0.10, 0.07, 0.02),
    "haberman": (0.44, 0.25, 0.11, 0.10, 0.05),
}
# SelectiveNet MSE on Concrete by fraction rejected
TABLE2_LITERATURE = {0.0: 38.45, 0.1: 35.35, 0.2: 30.48, 0.3: 27.94, 0.4: 27.12, 0.5: 26.81}
STANDARD_FRACTIONS = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5)
LAYOUTS = ("table1", "table2", "table3")


class TableError(ValueError):
    """The summary cannot fill the requested layout."""


def _fmt(value) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def _index(summary: ProtocolSummary, fraction: float) -> int:
    for j, f in enumerate(summary.fractions):
        if math.isclose(f, fraction, abs_tol=1e-12):
            return j
    raise TableError(f"summary lacks rejection fraction {fraction:g} (has {summary.fractions})")


def _metric(summary: ProtocolSummary, metric: str) -> dict:
    if metric not in summary.learned:
        raise TableError(f"summary lacks metric {metric!r} (has {sorted(summary.learned)})")
    return summary.learned[metric]


def _check_nonempty(summary):
    if not isinstance(summary, ProtocolSummary):
        raise TableError(f"expected a ProtocolSummary, got {type(summary).__name__}")
    if summary.n_folds == 0 or not summary.fractions or not summary.learned:
        raise TableError("summary is empty")


def _csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _table1(summaries) -> str:
    rows = [["dataset", "fraction_rejected",
             "dhl_literature_mean", "dhl_literature_std", "chr_literature_mean", "chr_literature_std",
             "ours_without_rejection_mean", "ours_without_rejection_std",
             "ours_with_rejection_mean", "ours_with_rejection_std"]]
    for name, summary in summaries.items():
        _check_nonempty(summary)
        stats = _metric(summary, "error")
        lit = TABLE1_LITERATURE.get(str(name).lower())
        if lit is not None:
            fraction = lit[0]
        else:
            nonzero = [f for f in summary.fractions if f > 0]
            if not nonzero:
                raise TableError(f"{name}: no nonzero rejection fraction to report")
            fraction = nonzero[-1]
        j0, j = _index(summary, 0.0), _index(summary, fraction)
        lit_cols = list(lit[1:]) if lit is not None else [None] * 4
        rows.append([name, f"{fraction:g}", *lit_cols,
                     stats["mean"][j0], stats["std"][j0], stats["mean"][j], stats["std"][j]])
    return _csv(rows)


def _table2(summary: ProtocolSummary) -> str:
    _check_nonempty(summary)
    stats = _metric(summary, "mse")
    rows = [["fraction_rejected", "selectivenet_literature_mse", "ours_mse_mean", "ours_mse_std"]]
    for f in STANDARD_FRACTIONS:
        j = _index(summary, f)
        rows.append([f"{f:g}", TABLE2_LITERATURE[f], stats["mean"][j], stats["std"][j]])
    return _csv(rows)


def _table3(summary: ProtocolSummary) -> str:
    _check_nonempty(summary)
    stats = _metric(summary, "rmse")
    if not summary.per_group:
        raise TableError("table3 needs a leave-one-group-out summary")
    cols = [_index(summary, f) for f in STANDARD_FRACTIONS]
    rows = [["group", *(f"{f:g}" for f in STANDARD_FRACTIONS)]]
    for group, values in summary.per_group.items():
        rows.append([group, *(values["rmse"][j] for j in cols)])
    rows.append(["Mean", *(stats["mean"][j] for j in cols)])
    return _csv(rows)


def emit_table(summary, layout: str) -> str:
    """CSV text for ``layout``.

    ``table1`` accepts one summary or a ``{dataset: summary}`` mapping; a bare
    summary is labelled with its protocol's dataset name.
    """
    if layout == "table1":
        if isinstance(summary, ProtocolSummary):
            summary = {summary.protocol.get("dataset", "dataset"): summary}
        if not summary:
            raise TableError("summary is empty")
        return _table1(dict(summary))
    if layout == "table2":
        return _table2(summary)
    if layout == "table3":
        return _table3(summary)
    raise TableError(f"unknown table layout {layout!r}; expected one of {LAYOUTS}")


def write_table(path, summary, layout: str) -> str:
    """Render first, then write, so a failing render leaves no file behind."""
    text = emit_table(summary, layout)
    Path(path).write_text(text)
    return text
