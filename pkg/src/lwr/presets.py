"""Experiment configurations and the bundled presets.

An experiment config is a JSON object; every key is optional except
``dataset`` and ``protocol``::

    {
      "name": "concrete",
      "dataset": {"source": "csv", "schema": "concrete"},
      "predictor": [[64, "relu"], [32, "relu"]],
      "rejector": [[64, "tanh"], [32, "tanh"]],
      "train": {"c": 0.25, "loss": "squared_error", "epochs": 500, "batch_size": 32},
      "standardize_features": true,
      "standardize_targets": null,
      "rff_dim": null,
      "rff_gamma": null,
      "protocol": {"name": "split", "train_fraction": 0.9, "repeats": 20},
      "fractions": [0, 0.1, 0.2, 0.3, 0.4, 0.5],
      "metrics": ["mse", "rmse"],
      "table": "table2",
      "random_trials": 200,
      "seed": 0,
      "boundary": null
    }

Dataset sources:

* ``{"source": "csv", "schema": <bundled name or schema path>, "path": <optional CSV override>}``
* ``{"source": "synthetic", "n_per_class", "sigma", "center_pos", "center_neg", "task"}``
* ``{"source": "grouped_synthetic", "groups", "n_per_group", "d"}``

Protocols: ``kfold`` (``k``, ``repeats``), ``split`` (``train_fraction``,
``repeats``), ``logo`` (leave one group out), ``fresh`` (``repeats``
independent synthetic train/test draws; synthetic sources only).

``predictor``/``rejector`` list hidden layers as ``[width, activation]``; the
final 1-unit linear layer is implicit, so ``[]`` is a linear model.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path

from .data import BUNDLED_SCHEMAS, CsvSchema, DataError, load_schema
from .metrics import METRICS
from .protocols import PipelineConfig
from .tables import LAYOUTS
from .trainer import TrainConfig

PROTOCOLS = ("kfold", "split", "logo", "fresh")
SOURCES = ("csv", "synthetic", "grouped_synthetic")
STANDARD_FRACTIONS = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5]


@dataclass
class ExperimentConfig:
    name: str
    dataset: dict
    protocol: dict
    predictor: list = field(default_factory=list)
    rejector: list = field(default_factory=lambda: [[2, "tanh"]])
    train: TrainConfig = field(default_factory=TrainConfig)
    standardize_features: bool = True
    standardize_targets: bool | None = None
    rff_dim: int | None = None
    rff_gamma: float | None = None
    fractions: list = field(default_factory=lambda: list(STANDARD_FRACTIONS))
    metrics: list = field(default_factory=lambda: ["error"])
    table: str | None = None
    random_trials: int = 200
    seed: int = 0
    boundary: dict | None = None

    def __post_init__(self):
        if isinstance(self.train, dict):
            self.train = TrainConfig.from_dict(self.train)
        self.predictor = [[int(w), str(a)] for w, a in self.predictor]
        self.rejector = [[int(w), str(a)] for w, a in self.rejector]
        self.fractions = [float(f) for f in self.fractions]
        self.validate()

    def validate(self):
        source = self.dataset.get("source")
        if source not in SOURCES:
            raise ValueError(f"dataset source must be one of {SOURCES}, got {source!r}")
        proto = self.protocol.get("name")
        if proto not in PROTOCOLS:
            raise ValueError(f"protocol must be one of {PROTOCOLS}, got {proto!r}")
        if proto == "fresh" and source != "synthetic":
            raise ValueError("the fresh protocol needs a synthetic dataset source")
        if not self.fractions:
            raise ValueError("at least one rejection fraction is required")
        for f in self.fractions:
            if not 0.0 <= f <= 1.0:
                raise ValueError(f"rejection fraction must lie in [0, 1], got {f}")
        if any(b <= a for a, b in zip(self.fractions, self.fractions[1:])):
            raise ValueError("fractions must be strictly increasing")
        for m in self.metrics:
            if m not in METRICS:
                raise ValueError(f"unknown metric {m!r}; expected one of {sorted(METRICS)}")
        if self.table is not None and self.table not in LAYOUTS:
            raise ValueError(f"unknown table layout {self.table!r}")
        if self.random_trials < 0:
            raise ValueError("random_trials must be >= 0")
        if self.rff_dim is not None and self.rff_dim < 1:
            raise ValueError(f"rff_dim must be >= 1, got {self.rff_dim}")
        if self.rff_gamma is not None and not self.rff_gamma > 0:
            raise ValueError(f"rff gamma must be > 0, got {self.rff_gamma}")

    def pipeline(self) -> PipelineConfig:
        return PipelineConfig(self.predictor, self.rejector, self.train, self.standardize_features,
                              self.standardize_targets, self.rff_dim, self.rff_gamma)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "dataset": self.dataset,
            "predictor": self.predictor,
            "rejector": self.rejector,
            "train": self.train.to_dict(),
            "standardize_features": self.standardize_features,
            "standardize_targets": self.standardize_targets,
            "rff_dim": self.rff_dim,
            "rff_gamma": self.rff_gamma,
            "protocol": self.protocol,
            "fractions": self.fractions,
            "metrics": self.metrics,
            "table": self.table,
            "random_trials": self.random_trials,
            "seed": self.seed,
            "boundary": self.boundary,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        obj = copy.deepcopy(obj)
        unknown = set(obj) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown experiment config keys: {sorted(unknown)}")
        for key in ("name", "dataset", "protocol"):
            if key not in obj:
                if key == "name":
                    obj["name"] = "experiment"
                else:
                    raise ValueError(f"experiment config needs a {key!r} entry")
        return cls(**obj)


def resolve_schema(dataset: dict, data_dir=None) -> CsvSchema:
    """The CSV schema of a ``csv`` dataset entry, with any path override applied."""
    if "schema" in dataset and dataset["schema"] is not None:
        schema = load_schema(dataset["schema"], data_dir)
    elif "path" in dataset:
        schema = CsvSchema(path=str(dataset["path"]), has_header=True, task="regression")
    else:
        raise DataError("csv dataset entry needs a 'schema' or a 'path'")
    if dataset.get("path"):
        schema.path = str(dataset["path"])
        schema.base_dir = None
    if dataset.get("group_column") is not None:
        schema.group_column = dataset["group_column"]
    if dataset.get("label_column") is not None:
        schema.label_column = dataset["label_column"]
    return schema


_SYNTH = {"source": "synthetic", "n_per_class": 200, "sigma": 1.0,
          "center_pos": [-0.5, -0.5], "center_neg": [0.5, 0.5]}
_BOUNDARY = {"x_range": [-3.0, 3.0], "y_range": [-3.0, 3.0], "steps": 61}

PRESETS = {
    "synth-cls": {
        "name": "synth-cls",
        "dataset": {**_SYNTH, "task": "classification"},
        "predictor": [],
        "rejector": [[2, "tanh"]],
        "train": {"c": 0.75, "loss": "hinge", "epochs": 1000, "batch_size": None, "learning_rate": 0.01},
        "standardize_features": False,
        "protocol": {"name": "fresh", "repeats": 10},
        "fractions": STANDARD_FRACTIONS,
        "metrics": ["auc", "error"],
        "boundary": _BOUNDARY,
    },
    "synth-reg": {
        "name": "synth-reg",
        "dataset": {**_SYNTH, "task": "regression"},
        "predictor": [],
        "rejector": [[2, "tanh"]],
        "train": {"c": 0.75, "loss": {"name": "epsilon_insensitive", "epsilon": 0.1}, "epochs": 1000,
                  "batch_size": None, "learning_rate": 0.01},
        "standardize_features": False,
        "standardize_targets": False,
        "protocol": {"name": "fresh", "repeats": 10},
        "fractions": STANDARD_FRACTIONS,
        "metrics": ["auc", "mse"],
        "boundary": _BOUNDARY,
    },
    "haberman": {
        "name": "haberman",
        "dataset": {"source": "csv", "schema": "haberman"},
        "predictor": [[6, "relu"]],
        "rejector": [[32, "tanh"], [64, "tanh"]],
        "train": {"c": 2.0, "loss": "hinge", "epochs": 500, "batch_size": 32},
        "protocol": {"name": "kfold", "k": 5, "repeats": 10},
        "fractions": [0.0, 0.44],
        "metrics": ["error"],
        "table": "table1",
    },
    "australian": {
        "name": "australian",
        "dataset": {"source": "csv", "schema": "australian"},
        "predictor": [],
        "rejector": [[64, "tanh"]],
        "train": {"c": 2.0, "loss": "hinge", "epochs": 500, "batch_size": 32},
        "protocol": {"name": "kfold", "k": 5, "repeats": 10},
        "fractions": [0.0, 0.17],
        "metrics": ["error"],
        "table": "table1",
    },
    "concrete": {
        "name": "concrete",
        "dataset": {"source": "csv", "schema": "concrete"},
        "predictor": [[64, "relu"], [32, "relu"]],
        "rejector": [[64, "tanh"], [32, "tanh"]],
        "train": {"c": 0.25, "loss": "squared_error", "epochs": 500, "batch_size": 32},
        "protocol": {"name": "split", "train_fraction": 0.9, "repeats": 20},
        "fractions": STANDARD_FRACTIONS,
        "metrics": ["mse", "rmse"],
        "table": "table2",
        "random_trials": 50,
    },
    "grouped-reg": {
        "name": "grouped-reg",
        "dataset": {"source": "grouped_synthetic", "n_per_group": 120, "d": 4,
                    "groups": ["2004", "2005", "2006", "2007", "2008", "2009"]},
        "predictor": [],
        "rejector": [],
        "train": {"c": 0.5, "loss": {"name": "epsilon_insensitive", "epsilon": 0.1}, "epochs": 300,
                  "batch_size": 32},
        "rff_dim": 1024,
        "protocol": {"name": "logo"},
        "fractions": STANDARD_FRACTIONS,
        "metrics": ["rmse", "mse"],
        "table": "table3",
        "random_trials": 50,
    },
}

HEATMAP_DEFAULTS = {"c": 2.0, "r_range": [-2.0, 2.0, 101], "l_range": [0.0, 4.0, 101]}
PRESET_NAMES = (*PRESETS, "heatmap")


def load_experiment(name_or_path) -> ExperimentConfig:
    """A bundled preset by name, or an experiment config JSON file."""
    name_or_path = str(name_or_path)
    if name_or_path in PRESETS:
        return ExperimentConfig.from_dict(PRESETS[name_or_path])
    path = Path(name_or_path)
    if not path.exists():
        raise FileNotFoundError(
            f"{name_or_path!r} is neither a preset ({', '.join(PRESET_NAMES)}) nor a config file")
    try:
        obj = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: invalid JSON ({exc})") from None
    dataset = obj.get("dataset", {})
    if dataset.get("source") == "csv":
        for key in ("schema", "path"):
            value = dataset.get(key)
            if value and value not in BUNDLED_SCHEMAS and not Path(value).is_absolute() and (path.parent / value).exists():
                dataset[key] = str(path.parent / value)
    return ExperimentConfig.from_dict(obj)
