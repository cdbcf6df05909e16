"""Small feed-forward networks with exact backpropagation.

The networks here only ever emit one real score (the predictor's ``h(x)`` or
the rejector's ``r(x)``), so every :class:`MlpSpec` ends in a single linear
unit. Gradients are taken of ``upstream * score`` for an externally supplied
``upstream``; the caller chains the loss derivative in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .numerics import RandomStream, sample_uniform

ACTIVATIONS = {"linear": 0, "tanh": 1, "relu": 2}


@dataclass(frozen=True)
class LayerSpec:
    input_dim: int
    output_dim: int
    activation: str = "linear"

    def __post_init__(self):
        if self.input_dim < 1 or self.output_dim < 1:
            raise ValueError(f"layer dims must be >= 1, got {self.input_dim}->{self.output_dim}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}; expected one of {sorted(ACTIVATIONS)}")


@dataclass(frozen=True)
class MlpSpec:
    layers: tuple[LayerSpec, ...]

    def __post_init__(self):
        layers = tuple(self.layers)
        object.__setattr__(self, "layers", layers)
        if not layers:
            raise ValueError("an MLP needs at least one layer")
        for k in range(len(layers) - 1):
            if layers[k].output_dim != layers[k + 1].input_dim:
                raise ValueError(
                    f"layer {k} outputs {layers[k].output_dim} but layer {k + 1} "
                    f"expects {layers[k + 1].input_dim}"
                )
        last = layers[-1]
        if last.output_dim != 1 or last.activation != "linear":
            raise ValueError("the final layer must have one linear output unit")

    @classmethod
    def from_hidden(cls, input_dim: int, hidden=()) -> "MlpSpec":
        """Build from ``[(width, activation), ...]`` hidden layers plus a linear output."""
        layers = []
        fan_in = input_dim
        for width, act in hidden:
            layers.append(LayerSpec(fan_in, int(width), act))
            fan_in = int(width)
        layers.append(LayerSpec(fan_in, 1, "linear"))
        return cls(tuple(layers))

    @property
    def input_dim(self) -> int:
        return self.layers[0].input_dim

    @property
    def acts(self) -> tuple[int, ...]:
        return tuple(ACTIVATIONS[layer.activation] for layer in self.layers)

    def describe(self) -> str:
        return ", ".join(f"{l.input_dim}->{l.output_dim} {l.activation}" for l in self.layers)

    def to_dict(self) -> list:
        return [[l.input_dim, l.output_dim, l.activation] for l in self.layers]

    @classmethod
    def from_dict(cls, obj) -> "MlpSpec":
        return cls(tuple(LayerSpec(int(a), int(b), str(act)) for a, b, act in obj))


@dataclass
class MlpModel:
    spec: MlpSpec
    weights: list
    biases: list

    def __post_init__(self):
        if len(self.weights) != len(self.spec.layers) or len(self.biases) != len(self.spec.layers):
            raise ValueError("parameter lists do not match the number of layers")
        for k, (layer, W, b) in enumerate(zip(self.spec.layers, self.weights, self.biases)):
            if W.shape != (layer.output_dim, layer.input_dim) or b.shape != (layer.output_dim,):
                raise ValueError(
                    f"layer {k}: weight {W.shape} / bias {b.shape} do not match "
                    f"{layer.input_dim}->{layer.output_dim}"
                )

    @property
    def acts(self):
        return self.spec.acts

    def copy(self) -> "MlpModel":
        return MlpModel(self.spec, [W.copy() for W in self.weights], [b.copy() for b in self.biases])

    def n_params(self) -> int:
        return sum(W.size + b.size for W, b in zip(self.weights, self.biases))

    def scores(self, X) -> np.ndarray:
        """Forward pass over a batch without keeping intermediates."""
        out, _, _ = kernels.mlp_forward(self.weights, self.biases, self.acts, X)
        return out

    def to_dict(self) -> dict:
        return {
            "layers": self.spec.to_dict(),
            "weights": [W.tolist() for W in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_dict(cls, obj) -> "MlpModel":
        spec = MlpSpec.from_dict(obj["layers"])
        weights = [np.array(W, dtype=np.float64).reshape(l.output_dim, l.input_dim)
                   for W, l in zip(obj["weights"], spec.layers)]
        biases = [np.array(b, dtype=np.float64).reshape(l.output_dim)
                  for b, l in zip(obj["biases"], spec.layers)]
        return cls(spec, weights, biases)


@dataclass
class ForwardCache:
    pres: list
    posts: list

    @property
    def inputs(self) -> np.ndarray:
        return self.posts[0]


@dataclass
class Gradients:
    weights: list
    biases: list

    def flat(self) -> np.ndarray:
        return np.concatenate([np.r_[W.ravel(), b] for W, b in zip(self.weights, self.biases)])


def glorot_bound(fan_in: int, fan_out: int) -> float:
    return math.sqrt(6.0 / (fan_in + fan_out))


def build_mlp(spec: MlpSpec, rng: RandomStream) -> MlpModel:
    """Glorot-uniform weights, zero biases."""
    weights, biases = [], []
    for layer in spec.layers:
        bound = glorot_bound(layer.input_dim, layer.output_dim)
        W = sample_uniform(rng, layer.output_dim * layer.input_dim, -bound, bound)
        weights.append(W.reshape(layer.output_dim, layer.input_dim))
        biases.append(np.zeros(layer.output_dim))
    return MlpModel(spec, weights, biases)


def forward_batch(model: MlpModel, X) -> tuple[np.ndarray, ForwardCache]:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.spec.input_dim:
        raise ValueError(f"input shape {X.shape} does not match network input dim {model.spec.input_dim}")
    out, pres, posts = kernels.mlp_forward(model.weights, model.biases, model.acts, X)
    return out, ForwardCache(pres, posts)


def forward(model: MlpModel, x) -> tuple[float, ForwardCache]:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != model.spec.input_dim:
        raise ValueError(f"input shape {x.shape} does not match network input dim {model.spec.input_dim}")
    out, cache = forward_batch(model, x.reshape(1, -1))
    return float(out[0]), cache


def backward(model: MlpModel, cache: ForwardCache, dL_dscore) -> Gradients:
    """Gradients of ``sum(dL_dscore * score)`` for the batch held in ``cache``.

    ``dL_dscore`` is a scalar for a single-example cache or one value per row.
    """
    if len(cache.pres) != len(model.spec.layers) or any(
        z.shape[1] != layer.output_dim for z, layer in zip(cache.pres, model.spec.layers)
    ) or cache.inputs.shape[1] != model.spec.input_dim:
        raise ValueError("forward cache was not produced by this model")
    upstream = np.broadcast_to(np.asarray(dL_dscore, dtype=np.float64), (cache.inputs.shape[0],))
    d_weights, d_biases = kernels.mlp_backward(model.weights, model.acts, cache.pres, cache.posts, upstream)
    return Gradients(d_weights, d_biases)


@dataclass
class OptimizerState:
    """Optimizer settings plus per-parameter accumulators.

    ``adam``: ``m <- b1 m + (1-b1) g``, ``v <- b2 v + (1-b2) g^2``,
    ``p <- p - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)``.
    ``sgd``: ``buf <- momentum buf + g``, ``p <- p - lr buf`` (plain step when
    momentum is 0).
    """

    method: str = "adam"
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    momentum: float = 0.0
    step: int = 0
    first: list = field(default_factory=list)
    second: list = field(default_factory=list)

    def __post_init__(self):
        if self.method not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.method!r}")
        if not self.learning_rate > 0:
            raise ValueError(f"learning rate must be > 0, got {self.learning_rate}")


def init_optimizer(model: MlpModel, method: str = "adam", learning_rate: float = 1e-3, **kwargs) -> OptimizerState:
    params = [p for pair in zip(model.weights, model.biases) for p in pair]
    state = OptimizerState(method=method, learning_rate=learning_rate, **kwargs)
    state.first = [np.zeros_like(p) for p in params]
    state.second = [np.zeros_like(p) for p in params] if method == "adam" else []
    return state


def optimizer_step(model: MlpModel, grads: Gradients, state: OptimizerState):
    """Apply one update in place; returns ``(model, state)`` for chaining."""
    for k, (dW, db) in enumerate(zip(grads.weights, grads.biases)):
        if not (np.all(np.isfinite(dW)) and np.all(np.isfinite(db))):
            raise FloatingPointError(f"non-finite gradient in layer {k}")
    params = [p for pair in zip(model.weights, model.biases) for p in pair]
    flat_grads = [g for pair in zip(grads.weights, grads.biases) for g in pair]
    if len(state.first) != len(params) or any(a.shape != p.shape for a, p in zip(state.first, params)):
        raise ValueError("optimizer state does not match the model's parameter shapes")
    state.step += 1
    for i, (p, g) in enumerate(zip(params, flat_grads)):
        if state.method == "adam":
            kernels.adam_step(p, g, state.first[i], state.second[i], state.learning_rate,
                              state.beta1, state.beta2, state.eps, state.step)
        else:
            kernels.sgd_step(p, g, state.first[i], state.learning_rate, state.momentum)
    return model, state
