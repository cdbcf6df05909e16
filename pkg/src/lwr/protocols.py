"""Evaluation protocols: repeated stratified k-fold, repeated random splits,
leave-one-group-out, and fresh synthetic draws.

Every fold fits its feature/target transforms on its own training rows, trains
one rejective model with a seed derived from ``(seed, repeat, fold)``, and
scores the held-out rows at every requested rejection fraction. The "without
rejection" number is the fraction-0 value of that same model.

Summaries report, per metric and fraction, the mean and the sample standard
deviation (``ddof=1``) over all fold-level values.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .data import Dataset, DataError, gen_synthetic_gaussian, split_rows
from .features import fit_standardizer, median_heuristic_gamma, sample_rff
from .metrics import MetricError, ScoredBatch, accept_mask, accepted_metric, risk_coverage_curve
from .nn import MlpSpec
from .numerics import RandomStream, derive_seed
from .trainer import FeatureTransform, RejectiveModel, TrainConfig, train_joint


@dataclass
class PipelineConfig:
    """Everything needed to fit one rejective model on a training split."""

    predictor_hidden: list = field(default_factory=list)
    rejector_hidden: list = field(default_factory=lambda: [(2, "tanh")])
    train: TrainConfig = field(default_factory=TrainConfig)
    standardize_features: bool = True
    standardize_targets: bool | None = None  # None: only for regression
    rff_dim: int | None = None
    rff_gamma: float | None = None  # None: median heuristic on training rows

    def __post_init__(self):
        if isinstance(self.train, dict):
            self.train = TrainConfig.from_dict(self.train)
        self.predictor_hidden = [(int(w), str(a)) for w, a in self.predictor_hidden]
        self.rejector_hidden = [(int(w), str(a)) for w, a in self.rejector_hidden]

    def to_dict(self) -> dict:
        out = asdict(self)
        out["train"] = self.train.to_dict()
        out["predictor_hidden"] = [list(x) for x in self.predictor_hidden]
        out["rejector_hidden"] = [list(x) for x in self.rejector_hidden]
        return out

    @classmethod
    def from_dict(cls, obj) -> "PipelineConfig":
        return cls(**obj)


def fit_pipeline(train: Dataset, cfg: PipelineConfig, seed: int) -> tuple[RejectiveModel, list]:
    """Fit transforms on ``train`` only, then train the predictor/rejector pair."""
    standardizer = fit_standardizer(train.X) if cfg.standardize_features else None
    rff = None
    if cfg.rff_dim:
        base = standardizer.apply(train.X) if standardizer is not None else train.X
        gamma = cfg.rff_gamma if cfg.rff_gamma else median_heuristic_gamma(base)
        rff = sample_rff(train.d, int(cfg.rff_dim), gamma, RandomStream(seed, (7,)))
    transform = None
    if standardizer is not None or rff is not None:
        transform = FeatureTransform(train.d, standardizer, rff)
    dim = transform.output_dim if transform is not None else train.d

    scale_targets = cfg.standardize_targets
    if scale_targets is None:
        scale_targets = train.task == "regression"
    target_transform = fit_standardizer(train.y[:, None]) if scale_targets else None

    h_spec = MlpSpec.from_hidden(dim, cfg.predictor_hidden)
    r_spec = MlpSpec.from_hidden(dim, cfg.rejector_hidden)
    train_cfg = TrainConfig.from_dict({**cfg.train.to_dict(), "seed": seed})
    return train_joint(train, h_spec, r_spec, train_cfg, transform, target_transform)


@dataclass
class FoldResult:
    repeat: int
    fold: int
    group: str | None
    n_train: int
    n_test: int
    fractions: list
    learned: dict  # metric -> value per fraction
    random: dict  # metric -> value per fraction (random-rejection baseline)
    accepted: dict  # metric -> value over r > 0 (None when undefined)
    accepted_fraction: float
    final_train_loss: float | None = None
    test_rows: list | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        out = asdict(self)
        out.pop("test_rows")
        return out


def evaluate_model(
    model: RejectiveModel,
    test: Dataset,
    fractions,
    metrics,
    random_trials: int = 200,
    seed: int = 0,
) -> tuple[dict, dict, dict, float, ScoredBatch]:
    h, r = model.predict_batch(test.X)
    batch = ScoredBatch(h, r, test.y)
    learned, random = {}, {}
    for metric in metrics:
        learned[metric] = risk_coverage_curve(batch, fractions, metric, "learned").values
        if random_trials:
            random[metric] = risk_coverage_curve(batch, fractions, metric, "random", random_trials, seed).values
    accepted = {metric: accepted_metric(batch, metric) for metric in metrics}
    return learned, random, accepted, float(np.mean(accept_mask(r))), batch


def _run_fold(data, train_idx, test_idx, pipeline, fractions, metrics, seed, random_trials,
              repeat, fold, group=None, keep_rows=False):
    train, test = split_rows(data, train_idx, test_idx)
    if test.n == 0:
        raise DataError(f"repeat {repeat} fold {fold}: empty test set")
    model, trace = fit_pipeline(train, pipeline, seed)
    try:
        learned, random, accepted, acc_frac, _ = evaluate_model(
            model, test, fractions, metrics, random_trials, derive_seed(seed, 1))
    except MetricError as exc:
        raise MetricError(f"repeat {repeat} fold {fold}: {exc}") from None
    return FoldResult(
        repeat, fold, group, train.n, test.n, list(fractions), learned, random, accepted, acc_frac,
        trace[-1] if trace else None, sorted(int(i) for i in test_idx) if keep_rows else None,
    )


@dataclass
class ProtocolSummary:
    protocol: dict
    seed: int
    fractions: list
    metrics: list
    n_folds: int
    learned: dict  # metric -> {"mean": [...], "std": [...]}
    random: dict
    accepted: dict  # metric -> {"mean", "std", "n_defined"}
    accepted_fraction: dict
    per_group: dict | None = None  # group -> metric -> values per fraction

    def to_dict(self) -> dict:
        return asdict(self)

    def mean(self, metric: str, fraction: float, mode: str = "learned") -> float:
        table = self.learned if mode == "learned" else self.random
        for f, v in zip(self.fractions, table[metric]["mean"]):
            if math.isclose(f, fraction, abs_tol=1e-12):
                return v
        raise KeyError(f"fraction {fraction} not in summary")


def _mean_std(values) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    std = float(np.std(arr, ddof=1)) if arr.size > 1 else 0.0
    return float(np.mean(arr)), std


def summarize(folds: list[FoldResult], protocol: dict, seed: int, metrics) -> ProtocolSummary:
    if not folds:
        raise ValueError("no folds to summarize")
    fractions = folds[0].fractions
    learned, random, accepted = {}, {}, {}
    for metric in metrics:
        per_fraction = np.array([f.learned[metric] for f in folds])
        stats = [_mean_std(per_fraction[:, j]) for j in range(len(fractions))]
        learned[metric] = {"mean": [s[0] for s in stats], "std": [s[1] for s in stats]}
        if all(metric in f.random for f in folds):
            per_fraction = np.array([f.random[metric] for f in folds])
            stats = [_mean_std(per_fraction[:, j]) for j in range(len(fractions))]
            random[metric] = {"mean": [s[0] for s in stats], "std": [s[1] for s in stats]}
        defined = [f.accepted[metric] for f in folds if f.accepted[metric] is not None]
        if defined:
            m, s = _mean_std(defined)
            accepted[metric] = {"mean": m, "std": s, "n_defined": len(defined)}
        else:
            accepted[metric] = {"mean": None, "std": None, "n_defined": 0}
    m, s = _mean_std([f.accepted_fraction for f in folds])
    per_group = None
    if all(f.group is not None for f in folds):
        per_group = {f.group: {metric: list(f.learned[metric]) for metric in metrics} for f in folds}
    return ProtocolSummary(protocol, seed, list(fractions), list(metrics), len(folds),
                           learned, random, accepted, {"mean": m, "std": s}, per_group)


def stratified_folds(y, k: int, rng: RandomStream, stratify: bool = True) -> list[np.ndarray]:
    """Partition ``range(len(y))`` into ``k`` folds.

    Stratified: each class is shuffled and dealt round-robin, continuing the
    deal across classes so fold sizes differ by at most one.
    """
    n = len(y)
    assign = np.empty(n, dtype=np.intp)
    if stratify:
        offset = 0
        for cls in np.unique(y):
            members = np.flatnonzero(y == cls)
            if members.size < k:
                raise DataError(f"class {cls:g} has {members.size} members, fewer than k={k}")
            members = members[rng.permutation(members.size)]
            assign[members] = (offset + np.arange(members.size)) % k
            offset += members.size
    else:
        if n < k:
            raise DataError(f"{n} rows cannot fill k={k} folds")
        assign[rng.permutation(n)] = np.arange(n) % k
    return [np.flatnonzero(assign == f) for f in range(k)]


def kfold_repeated(
    data: Dataset,
    k: int,
    repeats: int,
    pipeline: PipelineConfig,
    fractions,
    metrics,
    seed: int = 0,
    random_trials: int = 200,
    keep_rows: bool = False,
) -> tuple[ProtocolSummary, list[FoldResult]]:
    if k < 2 or repeats < 1:
        raise ValueError(f"need k >= 2 and repeats >= 1, got k={k}, repeats={repeats}")
    stratify = data.task == "classification"
    folds = []
    for rep in range(repeats):
        parts = stratified_folds(data.y, k, RandomStream(seed, (rep,)), stratify)
        for f, test_idx in enumerate(parts):
            train_idx = np.concatenate([p for g, p in enumerate(parts) if g != f])
            folds.append(_run_fold(data, train_idx, test_idx, pipeline, fractions, metrics,
                                   derive_seed(seed, rep, f), random_trials, rep, f, keep_rows=keep_rows))
    descriptor = {"name": "kfold", "dataset": data.name, "k": k, "repeats": repeats, "stratified": stratify}
    return summarize(folds, descriptor, seed, metrics), folds


def split_indices(n: int, train_fraction: float, rng: RandomStream) -> tuple[np.ndarray, np.ndarray]:
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    n_train = int(math.floor(train_fraction * n + 0.5))
    if n_train >= n:
        raise DataError(f"train_fraction {train_fraction} leaves no test rows out of {n}")
    if n_train < 2:
        raise DataError(f"train_fraction {train_fraction} leaves fewer than 2 training rows")
    perm = rng.permutation(n)
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def repeated_split(
    data: Dataset,
    train_fraction: float,
    repeats: int,
    pipeline: PipelineConfig,
    fractions,
    metrics,
    seed: int = 0,
    random_trials: int = 200,
    keep_rows: bool = False,
) -> tuple[ProtocolSummary, list[FoldResult]]:
    if repeats < 1:
        raise ValueError(f"repeats must be >= 1, got {repeats}")
    folds = []
    for rep in range(repeats):
        train_idx, test_idx = split_indices(data.n, train_fraction, RandomStream(seed, (rep,)))
        folds.append(_run_fold(data, train_idx, test_idx, pipeline, fractions, metrics,
                               derive_seed(seed, rep, 0), random_trials, rep, 0, keep_rows=keep_rows))
    descriptor = {"name": "split", "dataset": data.name, "train_fraction": train_fraction, "repeats": repeats}
    return summarize(folds, descriptor, seed, metrics), folds


def group_order(groups) -> list[str]:
    """Distinct group keys, numerically sorted when they all parse as numbers."""
    keys = sorted(set(groups.tolist()))
    try:
        return sorted(keys, key=float)
    except ValueError:
        return keys


def leave_one_group_out(
    data: Dataset,
    pipeline: PipelineConfig,
    fractions,
    metrics,
    seed: int = 0,
    random_trials: int = 200,
    keep_rows: bool = False,
) -> tuple[ProtocolSummary, list[FoldResult]]:
    if data.groups is None:
        raise DataError("leave-one-group-out needs group labels")
    keys = group_order(data.groups)
    if len(keys) < 2:
        raise DataError(f"leave-one-group-out needs >= 2 groups, got {len(keys)}")
    folds = []
    for f, key in enumerate(keys):
        test_idx = np.flatnonzero(data.groups == key)
        train_idx = np.flatnonzero(data.groups != key)
        folds.append(_run_fold(data, train_idx, test_idx, pipeline, fractions, metrics,
                               derive_seed(seed, 0, f), random_trials, 0, f, group=key, keep_rows=keep_rows))
    descriptor = {"name": "logo", "dataset": data.name, "groups": keys}
    return summarize(folds, descriptor, seed, metrics), folds


def fresh_draws(
    generator: dict,
    repeats: int,
    pipeline: PipelineConfig,
    fractions,
    metrics,
    seed: int = 0,
    random_trials: int = 200,
    task: str = "classification",
) -> tuple[ProtocolSummary, list[FoldResult], list]:
    """Train on one synthetic draw and test on an independent one, per repeat.

    Returns the per-repeat models as a third element for boundary plotting.
    """
    folds, models = [], []
    for rep in range(repeats):
        train = gen_synthetic_gaussian(RandomStream(seed, (rep, 0)), **generator)
        test = gen_synthetic_gaussian(RandomStream(seed, (rep, 1)), **generator)
        if task == "regression":
            train = Dataset(train.X, train.y, name=train.name, task="regression")
            test = Dataset(test.X, test.y, name=test.name, task="regression")
        fold_seed = derive_seed(seed, rep, 0)
        model, trace = fit_pipeline(train, pipeline, fold_seed)
        learned, random, accepted, acc_frac, _ = evaluate_model(
            model, test, fractions, metrics, random_trials, derive_seed(fold_seed, 1))
        folds.append(FoldResult(rep, 0, None, train.n, test.n, list(fractions), learned, random,
                                accepted, acc_frac, trace[-1] if trace else None))
        models.append(model)
    descriptor = {"name": "fresh", "dataset": "synthetic", "repeats": repeats, "generator": {k: list(v) if isinstance(v, tuple) else v
                                                                     for k, v in generator.items()}}
    return summarize(folds, descriptor, seed, metrics), folds, models
