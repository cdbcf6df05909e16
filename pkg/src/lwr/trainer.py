"""Joint training of the predictor and the rejector.

Each minibatch computes ``h(x)``, ``l(h(x), y)``, ``r(x)`` and the meta-loss
subgradients, then backpropagates ``dL/dl * dl/dh`` through the predictor and
``dL/dr`` through the rejector. Both networks take one optimizer step per
batch, each with its own optimizer state. The gradient is that of the batch
mean meta-loss.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .data import Dataset
from .features import RffMap, Standardizer
from .losses import DEFAULT_C, HINGE_LOSS, PredictionLossKind, check_hinge_labels
from .nn import MlpModel, MlpSpec, backward, build_mlp, forward_batch, init_optimizer, optimizer_step
from .numerics import RandomStream

MODEL_FORMAT = "lwr.rejective-model"
MODEL_VERSION = 1


@dataclass
class TrainConfig:
    c: float = DEFAULT_C
    loss: PredictionLossKind = HINGE_LOSS
    epochs: int = 500
    batch_size: int | None = 32  # None: full batch
    optimizer: str = "adam"
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    momentum: float = 0.0
    seed: int = 0

    def __post_init__(self):
        self.loss = PredictionLossKind.parse(self.loss)
        if not self.c > 0:
            raise ValueError(f"rejection cost c must be > 0, got {self.c}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")

    def optimizer_kwargs(self) -> dict:
        if self.optimizer == "adam":
            return {"beta1": self.beta1, "beta2": self.beta2, "eps": self.adam_eps}
        return {"momentum": self.momentum}

    def to_dict(self) -> dict:
        out = asdict(self)
        out["loss"] = self.loss.to_dict()
        return out

    @classmethod
    def from_dict(cls, obj) -> "TrainConfig":
        return cls(**obj)


@dataclass
class FeatureTransform:
    """Optional standardization followed by an optional random Fourier map."""

    input_dim: int
    standardizer: Standardizer | None = None
    rff: RffMap | None = None

    @property
    def output_dim(self) -> int:
        return self.rff.dim if self.rff is not None else self.input_dim

    def apply(self, X) -> np.ndarray:
        Z = np.asarray(X, dtype=np.float64)
        if Z.shape[-1] != self.input_dim:
            raise ValueError(f"expected {self.input_dim} raw features, got shape {Z.shape}")
        if self.standardizer is not None:
            Z = self.standardizer.apply(Z)
        if self.rff is not None:
            Z = self.rff.apply(Z)
        return Z

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "standardizer": None if self.standardizer is None else self.standardizer.to_dict(),
            "rff": None if self.rff is None else self.rff.to_dict(),
        }

    @classmethod
    def from_dict(cls, obj) -> "FeatureTransform":
        return cls(
            int(obj["input_dim"]),
            None if obj["standardizer"] is None else Standardizer.from_dict(obj["standardizer"]),
            None if obj["rff"] is None else RffMap.from_dict(obj["rff"]),
        )


@dataclass
class RejectiveModel:
    predictor: MlpModel
    rejector: MlpModel
    feature_transform: FeatureTransform | None = None
    target_transform: Standardizer | None = None
    train_config: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        dim = self.transformed_dim
        for name, net in (("predictor", self.predictor), ("rejector", self.rejector)):
            if net.spec.input_dim != dim:
                raise ValueError(f"{name} expects {net.spec.input_dim} inputs but features have {dim}")

    @property
    def raw_dim(self) -> int:
        if self.feature_transform is not None:
            return self.feature_transform.input_dim
        return self.predictor.spec.input_dim

    @property
    def transformed_dim(self) -> int:
        if self.feature_transform is not None:
            return self.feature_transform.output_dim
        return self.predictor.spec.input_dim

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.raw_dim:
            raise ValueError(f"expected rows of {self.raw_dim} raw features, got shape {X.shape}")
        return X if self.feature_transform is None else self.feature_transform.apply(X)

    def scale_targets(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=np.float64)
        if self.target_transform is None:
            return y
        return (y - self.target_transform.mean[0]) / self.target_transform.std[0]

    def unscale_predictions(self, h) -> np.ndarray:
        if self.target_transform is None:
            return h
        return h * self.target_transform.std[0] + self.target_transform.mean[0]

    def predict_batch(self, X) -> tuple[np.ndarray, np.ndarray]:
        """``(h, r)`` for each row; ``h`` is in original target units."""
        Z = self.transform(X)
        h = self.predictor.scores(Z)
        r = self.rejector.scores(Z)
        return self.unscale_predictions(h), r

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "predictor": self.predictor.to_dict(),
            "rejector": self.rejector.to_dict(),
            "feature_transform": None if self.feature_transform is None else self.feature_transform.to_dict(),
            "target_transform": None if self.target_transform is None else self.target_transform.to_dict(),
            "train_config": self.train_config.to_dict(),
        }

    @classmethod
    def from_dict(cls, obj) -> "RejectiveModel":
        if obj.get("format") != MODEL_FORMAT or obj.get("version") != MODEL_VERSION:
            raise ValueError(f"not a {MODEL_FORMAT} v{MODEL_VERSION} document")
        ft = obj["feature_transform"]
        tt = obj["target_transform"]
        return cls(
            MlpModel.from_dict(obj["predictor"]),
            MlpModel.from_dict(obj["rejector"]),
            None if ft is None else FeatureTransform.from_dict(ft),
            None if tt is None else Standardizer.from_dict(tt),
            TrainConfig.from_dict(obj["train_config"]),
        )


def save_model(model: RejectiveModel, path) -> None:
    Path(path).write_text(json.dumps(model.to_dict()))


def load_model(path) -> RejectiveModel:
    return RejectiveModel.from_dict(json.loads(Path(path).read_text()))


def predict(model: RejectiveModel, x) -> tuple[float, float]:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"expected one feature vector, got shape {x.shape}")
    h, r = model.predict_batch(x.reshape(1, -1))
    return float(h[0]), float(r[0])


def _loss_terms(model: RejectiveModel, Z, t):
    cfg = model.train_config
    h_out, _, _ = kernels.mlp_forward(model.predictor.weights, model.predictor.biases, model.predictor.acts, Z)
    r_out, _, _ = kernels.mlp_forward(model.rejector.weights, model.rejector.biases, model.rejector.acts, Z)
    l, _ = kernels.prediction_loss(cfg.loss.code, h_out, t, cfg.loss.epsilon)
    value, _, _, _ = kernels.meta_loss(l, r_out, cfg.c)
    return np.asarray(value)


def epoch_loss(model: RejectiveModel, data: Dataset) -> float:
    """Mean meta-loss over ``data``; no parameters change."""
    if data.d != model.raw_dim:
        raise ValueError(f"data has {data.d} features, model expects {model.raw_dim}")
    if data.n == 0:
        raise ValueError("empty dataset")
    if model.train_config.loss.code == HINGE_LOSS.code:
        check_hinge_labels(data.y)
    return float(np.mean(_loss_terms(model, model.transform(data.X), model.scale_targets(data.y))))


def train_joint(
    data: Dataset,
    h_spec: MlpSpec,
    r_spec: MlpSpec,
    cfg: TrainConfig,
    feature_transform: FeatureTransform | None = None,
    target_transform: Standardizer | None = None,
    callback=None,
) -> tuple[RejectiveModel, list[float]]:
    """Minimize the summed meta-loss over ``data``.

    Transforms are applied as given; fit them on the training rows beforehand.
    Returns the model and the mean meta-loss of every epoch. ``callback`` is
    called as ``callback(epoch, model)`` after each epoch.
    """
    if data.n == 0:
        raise ValueError("cannot train on an empty dataset")
    if cfg.loss.code == HINGE_LOSS.code:
        check_hinge_labels(data.y)
    rng = RandomStream(cfg.seed)
    model = RejectiveModel(
        build_mlp(h_spec, rng.child(1)),
        build_mlp(r_spec, rng.child(2)),
        feature_transform,
        target_transform,
        cfg,
    )
    Z = np.ascontiguousarray(model.transform(data.X))
    t = np.ascontiguousarray(model.scale_targets(data.y))
    h_net, r_net = model.predictor, model.rejector
    opt_h = init_optimizer(h_net, cfg.optimizer, cfg.learning_rate, **cfg.optimizer_kwargs())
    opt_r = init_optimizer(r_net, cfg.optimizer, cfg.learning_rate, **cfg.optimizer_kwargs())
    n = data.n
    batch = n if cfg.batch_size is None else min(cfg.batch_size, n)
    loss_code, eps, c = cfg.loss.code, cfg.loss.epsilon, float(cfg.c)

    trace = []
    for epoch in range(cfg.epochs):
        order = rng.child(3, epoch).permutation(n) if batch < n else np.arange(n)
        total = 0.0
        for b, start in enumerate(range(0, n, batch)):
            idx = order[start:start + batch]
            Zb, tb = (Z, t) if batch == n else (Z[idx], t[idx])
            h_out, h_cache = forward_batch(h_net, Zb)
            r_out, r_cache = forward_batch(r_net, Zb)
            l, dl_dh = kernels.prediction_loss(loss_code, h_out, tb, eps)
            value, d_l, d_r, _ = kernels.meta_loss(l, r_out, c)
            batch_sum = float(np.sum(value))
            if not math.isfinite(batch_sum):
                raise FloatingPointError(f"non-finite meta-loss at epoch {epoch}, batch {b}")
            m = float(len(idx))
            g_h = backward(h_net, h_cache, np.asarray(d_l) * np.asarray(dl_dh) / m)
            g_r = backward(r_net, r_cache, np.asarray(d_r) / m)
            try:
                optimizer_step(h_net, g_h, opt_h)
                optimizer_step(r_net, g_r, opt_r)
            except FloatingPointError as exc:
                raise FloatingPointError(f"{exc} at epoch {epoch}, batch {b}") from None
            total += batch_sum
        trace.append(total / n)
        if callback is not None:
            callback(epoch, model)
    return model, trace
