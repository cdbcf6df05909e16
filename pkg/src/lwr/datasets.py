"""Fetch the UCI benchmark files into a local data directory.

The files are not redistributed with the package. Each dataset is tried from
the UCI archive first, then from Python packages that mirror it:

* Haberman: UCI ``haberman.data``; fallback ``keel_ds`` (KEEL copy).
* Australian credit: UCI Statlog ``australian.dat``; fallback ``keel_ds``.
  The KEEL copy drops decimal points from continuous attributes (``22.08``
  is stored as ``2208.0``), which changes their scale but not row count,
  column order or labels.
* Concrete strength: ``rdatasets`` (``modeldata::concrete``, same 1030 rows
  and 8 inputs as the UCI spreadsheet).

Output files match the bundled schemas: ``haberman.csv`` (age, year, nodes,
status 1/2), ``australian.csv`` (A1..A14, class 0/1), ``concrete.csv`` with a
header.
"""

from __future__ import annotations

import csv
import logging
import urllib.request
from importlib import util as importlib_util
from pathlib import Path

log = logging.getLogger(__name__)

UCI_URLS = {
    "haberman": "https://archive.ics.uci.edu/ml/machine-learning-databases/haberman/haberman.data",
    "australian": "https://archive.ics.uci.edu/ml/machine-learning-databases/statlog/australian/australian.dat",
}

CONCRETE_COLUMNS = ["cement", "blast_furnace_slag", "fly_ash", "water", "superplasticizer",
                    "coarse_aggregate", "fine_aggregate", "age", "compressive_strength"]


def _download(url: str, timeout: float = 20.0) -> str | None:
    try:
        with urllib.request.urlopen(url, timeout=timeout) as resp:
            return resp.read().decode("utf-8")
    except Exception as exc:  # network is optional
        log.info("download of %s failed: %s", url, exc)
        return None


def _package_file(package: str, relpath: str) -> str | None:
    spec = importlib_util.find_spec(package)
    if spec is None or not spec.submodule_search_locations:
        return None
    path = Path(list(spec.submodule_search_locations)[0]) / relpath
    return path.read_text() if path.exists() else None


def _write_rows(path: Path, rows, header=None):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if header:
            writer.writerow(header)
        writer.writerows(rows)


def _keel_rows(text: str):
    return [[c.strip() for c in line.split(",")] for line in text.splitlines()
            if line.strip() and not line.startswith("@")]


def fetch_haberman(dest: Path) -> str:
    text = _download(UCI_URLS["haberman"])
    if text is not None:
        rows = [line.split(",") for line in text.split() if line.strip()]
        _write_rows(dest / "haberman.csv", rows)
        return "uci"
    text = _package_file("keel_ds", "data/imbalanced/raw/haberman.dat")
    if text is None:
        raise RuntimeError("haberman: UCI unreachable and keel_ds is not installed")
    # KEEL 'positive' is the minority class: died within five years (UCI status 2)
    status = {"negative": "1", "positive": "2"}
    rows = [r[:3] + [status[r[3]]] for r in _keel_rows(text)]
    _write_rows(dest / "haberman.csv", rows)
    return "keel_ds"


def fetch_australian(dest: Path) -> str:
    text = _download(UCI_URLS["australian"])
    if text is not None:
        rows = [line.split() for line in text.splitlines() if line.strip()]
        _write_rows(dest / "australian.csv", rows)
        return "uci"
    text = _package_file("keel_ds", "data/balanced/raw/australian.dat")
    if text is None:
        raise RuntimeError("australian: UCI unreachable and keel_ds is not installed")
    _write_rows(dest / "australian.csv", _keel_rows(text))
    return "keel_ds"


def fetch_concrete(dest: Path) -> str:
    if importlib_util.find_spec("rdatasets") is None:
        raise RuntimeError("concrete: install 'rdatasets' (pip install artifact[data])")
    import rdatasets

    frame = rdatasets.data("modeldata", "concrete")
    rows = [[repr(float(v)) if not float(v).is_integer() else str(int(v)) for v in rec]
            for rec in frame[CONCRETE_COLUMNS].itertuples(index=False)]
    _write_rows(dest / "concrete.csv", rows, header=CONCRETE_COLUMNS)
    return "rdatasets"


FETCHERS = {"haberman": fetch_haberman, "australian": fetch_australian, "concrete": fetch_concrete}


def fetch_all(dest="data", names=None, overwrite: bool = False) -> dict:
    """Materialize the benchmark CSVs; returns ``{name: source}``."""
    dest = Path(dest)
    dest.mkdir(parents=True, exist_ok=True)
    sources = {}
    for name in names or FETCHERS:
        if (dest / f"{name}.csv").exists() and not overwrite:
            sources[name] = "cached"
            continue
        sources[name] = FETCHERS[name](dest)
    return sources
