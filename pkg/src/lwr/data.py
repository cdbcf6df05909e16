"""Datasets: container, synthetic generators and schema-driven CSV ingestion.

CSV conventions: UTF-8, comma separated, optional header row, decimal-point
reals, no missing values. A schema is a small JSON object::

    {
      "path": "data/haberman.csv",
      "has_header": false,
      "task": "classification",
      "label_column": 3,
      "label_mapping": {"1": 1, "2": -1},
      "group_column": null,
      "feature_columns": null
    }

``label_column``/``group_column``/``feature_columns`` take header names or
0-based indices. ``feature_columns: null`` means every column that is not the
label or group. ``label_mapping`` is required for classification and maps raw
cell text to ``+1``/``-1``; numeric cells match regardless of formatting
(``"1"`` and ``"1.0"`` are the same key). A relative ``path`` is resolved
against the schema file's directory, then the working directory.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .numerics import RandomStream, sample_normal

BUNDLED_SCHEMAS = ("haberman", "australian", "concrete")


class DataError(ValueError):
    """Malformed or inconsistent input data."""


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    groups: np.ndarray | None = None
    name: str = "dataset"
    task: str = "classification"

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(-1, 1) if X.size else X.reshape(0, 0)
        y = np.asarray(self.y, dtype=np.float64).reshape(-1)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        if X.shape[0] != y.shape[0]:
            raise DataError(f"{X.shape[0]} feature rows but {y.shape[0]} targets")
        if self.groups is not None:
            groups = np.asarray(self.groups).astype(str)
            if groups.shape != (X.shape[0],):
                raise DataError(f"{groups.shape[0]} group labels for {X.shape[0]} rows")
            object.__setattr__(self, "groups", groups)
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise DataError(f"{self.name}: non-finite values")
        if self.task not in ("classification", "regression"):
            raise DataError(f"unknown task {self.task!r}")
        if self.task == "classification" and np.any((y != 1.0) & (y != -1.0)):
            raise DataError(f"{self.name}: classification labels must be -1/+1")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.intp)
        groups = None if self.groups is None else self.groups[idx]
        return replace(self, X=self.X[idx], y=self.y[idx], groups=groups)


def split_rows(data: Dataset, first, second=None) -> tuple[Dataset, Dataset]:
    """Row subsets for two disjoint index sets.

    ``second`` defaults to every row not in ``first``.
    """
    def checked(name, idx):
        idx = np.asarray(idx, dtype=np.intp).reshape(-1)
        if idx.size and (idx.min() < 0 or idx.max() >= data.n):
            raise DataError(f"{name} index set out of range for {data.n} rows")
        if np.unique(idx).size != idx.size:
            raise DataError(f"{name} index set has repeated rows")
        return idx

    first = checked("first", first)
    if second is None:
        mask = np.ones(data.n, dtype=bool)
        mask[first] = False
        second = np.flatnonzero(mask)
    second = checked("second", second)
    overlap = np.intersect1d(first, second)
    if overlap.size:
        raise DataError(f"index sets overlap on rows {overlap[:10].tolist()}")
    return data.subset(first), data.subset(second)


def gen_synthetic_gaussian(
    rng: RandomStream,
    n_per_class: int = 200,
    center_pos=(-0.5, -0.5),
    center_neg=(0.5, 0.5),
    sigma: float = 1.0,
    name: str = "synthetic",
) -> Dataset:
    """Two isotropic Gaussian blobs labelled +1 (``center_pos``) and -1."""
    if not sigma > 0:
        raise DataError(f"sigma must be > 0, got {sigma}")
    if n_per_class < 1:
        raise DataError(f"n_per_class must be >= 1, got {n_per_class}")
    center_pos = np.asarray(center_pos, dtype=np.float64)
    center_neg = np.asarray(center_neg, dtype=np.float64)
    d = center_pos.shape[0]
    pos = center_pos + sample_normal(rng, n_per_class * d, 0.0, sigma).reshape(n_per_class, d)
    neg = center_neg + sample_normal(rng, n_per_class * d, 0.0, sigma).reshape(n_per_class, d)
    X = np.vstack([pos, neg])
    y = np.r_[np.ones(n_per_class), -np.ones(n_per_class)]
    return Dataset(X, y, name=name)


def gen_grouped_regression(
    rng: RandomStream,
    groups=("2004", "2005", "2006", "2007", "2008", "2009"),
    n_per_group: int = 120,
    d: int = 4,
    name: str = "grouped-synthetic",
) -> Dataset:
    """Grouped nonlinear regression with input-dependent noise.

    ``y = 10 sin(x0) + 4 x1^2 + 3 x1 x2 + offset(group) + noise`` with noise
    std 1 inside ``|x3| < 1`` and 8 outside, so a rejector has something to
    find.
    """
    if d < 4:
        raise DataError("grouped regression needs d >= 4")
    parts_X, parts_y, parts_g = [], [], []
    for k, g in enumerate(groups):
        X = sample_normal(rng, n_per_group * d).reshape(n_per_group, d)
        noise_std = np.where(np.abs(X[:, 3]) < 1.0, 1.0, 8.0)
        noise = sample_normal(rng, n_per_group) * noise_std
        offset = 0.5 * (k - (len(groups) - 1) / 2.0)
        y = 10.0 * np.sin(X[:, 0]) + 4.0 * X[:, 1] ** 2 + 3.0 * X[:, 1] * X[:, 2] + offset + noise
        parts_X.append(X)
        parts_y.append(y)
        parts_g.extend([str(g)] * n_per_group)
    return Dataset(np.vstack(parts_X), np.concatenate(parts_y), np.array(parts_g), name=name, task="regression")


@dataclass
class CsvSchema:
    path: str
    has_header: bool = False
    task: str = "classification"
    label_column: str | int = -1
    label_mapping: dict | None = None
    group_column: str | int | None = None
    feature_columns: list | None = None
    name: str | None = None
    base_dir: str | None = field(default=None, repr=False)

    @classmethod
    def from_dict(cls, obj: dict, base_dir=None) -> "CsvSchema":
        known = {k: obj[k] for k in ("path", "has_header", "task", "label_column", "label_mapping",
                                     "group_column", "feature_columns", "name") if k in obj}
        return cls(**known, base_dir=None if base_dir is None else str(base_dir))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "path": self.path,
            "has_header": self.has_header,
            "task": self.task,
            "label_column": self.label_column,
            "label_mapping": self.label_mapping,
            "group_column": self.group_column,
            "feature_columns": self.feature_columns,
        }

    def resolved_path(self) -> Path:
        p = Path(self.path)
        if not p.is_absolute() and self.base_dir is not None and (Path(self.base_dir) / p).exists():
            return Path(self.base_dir) / p
        return p


def load_schema(name_or_path, data_dir=None) -> CsvSchema:
    """Load a schema file, or a bundled schema by name.

    Bundled schemas point at ``<data_dir>/<name>.csv``; ``data_dir`` defaults
    to ``./data``.
    """
    name_or_path = str(name_or_path)
    if name_or_path in BUNDLED_SCHEMAS:
        text = resources.files("lwr").joinpath("schemas", f"{name_or_path}.json").read_text()
        schema = CsvSchema.from_dict(json.loads(text))
        schema.path = str(Path(data_dir or "data") / Path(schema.path).name)
        return schema
    path = Path(name_or_path)
    if not path.exists():
        raise DataError(f"schema file not found: {path}")
    return CsvSchema.from_dict(json.loads(path.read_text()), base_dir=path.parent)


def _label_key(raw: str) -> str:
    raw = raw.strip()
    try:
        value = float(raw)
    except ValueError:
        return raw
    if math.isfinite(value) and value == int(value):
        return str(int(value))
    return repr(value)


def _column_index(spec, header, n_cols, what) -> int:
    if isinstance(spec, str) and not spec.lstrip("-").isdigit():
        if header is None:
            raise DataError(f"{what} {spec!r} given by name but the file has no header")
        if spec not in header:
            raise DataError(f"{what} {spec!r} not in header {header}")
        return header.index(spec)
    idx = int(spec)
    if idx < 0:
        idx += n_cols
    if not 0 <= idx < n_cols:
        raise DataError(f"{what} index {spec} out of range for {n_cols} columns")
    return idx


def load_csv_dataset(schema: CsvSchema) -> Dataset:
    path = schema.resolved_path()
    if not path.exists():
        raise DataError(f"data file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row and any(cell.strip() for cell in row)]
    header = None
    if schema.has_header:
        if not rows:
            raise DataError(f"{path}: empty file")
        header = [h.strip() for h in rows[0]]
        rows = rows[1:]
    if not rows:
        raise DataError(f"{path}: no data rows")
    n_cols = len(header) if header is not None else len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != n_cols:
            raise DataError(f"{path}: row {i + 1} has {len(row)} cells, expected {n_cols}")

    label_idx = _column_index(schema.label_column, header, n_cols, "label column")
    group_idx = None
    if schema.group_column is not None:
        group_idx = _column_index(schema.group_column, header, n_cols, "group column")
    if schema.feature_columns is None:
        feat_idx = [j for j in range(n_cols) if j not in (label_idx, group_idx)]
    else:
        feat_idx = [_column_index(c, header, n_cols, "feature column") for c in schema.feature_columns]
        if label_idx in feat_idx:
            raise DataError("label column is listed among the feature columns")

    X = np.empty((len(rows), len(feat_idx)))
    for i, row in enumerate(rows):
        for k, j in enumerate(feat_idx):
            cell = row[j].strip()
            try:
                X[i, k] = float(cell)
            except ValueError:
                raise DataError(f"{path}: non-numeric feature {cell!r} at row {i + 1}, column {j}") from None

    raw_labels = [row[label_idx] for row in rows]
    if schema.task == "classification":
        if not schema.label_mapping:
            raise DataError("classification schemas need a label_mapping")
        mapping = {_label_key(str(k)): float(v) for k, v in schema.label_mapping.items()}
        keys = [_label_key(v) for v in raw_labels]
        unmapped = sorted(set(keys) - set(mapping))
        if unmapped:
            raise DataError(f"{path}: label values not covered by the mapping: {unmapped}")
        y = np.array([mapping[k] for k in keys])
    else:
        try:
            y = np.array([float(v) for v in raw_labels])
        except ValueError as exc:
            raise DataError(f"{path}: non-numeric regression target ({exc})") from None

    groups = None
    if group_idx is not None:
        groups = np.array([row[group_idx].strip() for row in rows])
    return Dataset(X, y, groups, name=schema.name or path.stem, task=schema.task)
