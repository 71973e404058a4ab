"""Experiment harness: configuration, single runs, grid search and curve output.

Two experiment families share one config type. The logistic family
(``GD``, ``WhiteGD``, ``NGD``, ``WhiteNGD``) trains a single sigm neuron on a
two-class problem; the MLP family (``SGD``, ``ADAM``, ``RNGD``) trains a relu
network with a softmax head. Every run is deterministic given its seed.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import data as rdata
from .estimators import NaturalLogisticRegression, RelativeMLPClassifier

LOGISTIC_METHODS = ("GD", "WhiteGD", "NGD", "WhiteNGD")
MLP_METHODS = ("SGD", "ADAM", "RNGD")
DATASETS = ("synth", "mnist", "idx")

# fall-backs filled in per model family when a field is left as None
_DEFAULTS = {
    "logistic": dict(classes=(3, 5), subset_size=2000, train_fraction=0.5, lr=1.0,
                     lr_grid=(1e-2, 1e-1, 1.0, 10.0, 100.0), momentum_grid=(0.0, 0.8),
                     epochs=100, batch_size=None),
    "mlp": dict(classes=None, subset_size=10000, train_fraction=1.0, lr=1e-2,
                lr_grid=(1e-3, 1e-2, 1e-1), momentum_grid=(0.0,), epochs=5, batch_size=64),
}


class ConfigError(ValueError):
    pass


def _tuple(v):
    if v is None:
        return None
    if isinstance(v, (list, tuple)):
        return tuple(v)
    return (v,)


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat experiment settings; every field can be set from a JSON file.

    Fields left as ``None`` take the defaults of the model family. For the
    logistic model ``batch_size=None`` means full-batch training. A
    ``train_fraction`` of 1 trains on the whole subset.
    """

    method: str = "WhiteNGD"
    model: str | None = None
    hidden_sizes: tuple = (32, 32)
    dataset: str = "synth"
    classes: tuple | None = None
    subset_size: int | None = None
    train_fraction: float | None = None
    synth_n: int = 2000
    synth_dim: int = 100
    synth_separation: float = 6.0
    data_dir: str | None = None
    images_path: str | None = None
    labels_path: str | None = None
    lr: float | None = None
    momentum: float = 0.0
    lr_grid: tuple | None = None
    momentum_grid: tuple | None = None
    epochs: int | None = None
    batch_size: int | None = None
    refresh_period: int = 100
    decay: float = 0.995
    eps_rel: float = 1e-2
    omega: float = 0.1
    seed: int = 0
    repeats: int = 1
    smooth_window: int = 10
    tau: float = 0.5
    max_cost: float = 1e6
    _filled: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        if self.method in LOGISTIC_METHODS:
            family = "logistic"
        elif self.method in MLP_METHODS:
            family = "mlp"
        else:
            raise ConfigError(f"unknown method {self.method!r}")
        model = self.model or family
        if model != family:
            raise ConfigError(f"method {self.method} cannot train a {model} model")
        filled = [] if self.model else ["model"]
        object.__setattr__(self, "model", model)
        for key, value in _DEFAULTS[model].items():
            if getattr(self, key) is None and value is not None:
                object.__setattr__(self, key, value)
                filled.append(key)
        object.__setattr__(self, "_filled", tuple(filled))
        for key in ("hidden_sizes", "classes", "lr_grid", "momentum_grid"):
            object.__setattr__(self, key, _tuple(getattr(self, key)))
        self._validate()

    def _validate(self):
        if self.dataset not in DATASETS:
            raise ConfigError(f"unknown dataset {self.dataset!r}")
        if not self.lr_grid or not self.momentum_grid:
            raise ConfigError("learning-rate and momentum grids must be nonempty")
        if self.model == "logistic" and self.dataset != "synth" and len(self.classes or ()) != 2:
            raise ConfigError("the logistic model needs exactly two classes")
        if not 0.0 < self.train_fraction <= 1.0:
            raise ConfigError("train_fraction must lie in (0, 1]")
        if self.epochs < 1 or self.repeats < 1 or self.smooth_window < 1:
            raise ConfigError("epochs, repeats and smooth_window must be positive")
        if self.batch_size is not None and self.batch_size < 1:
            raise ConfigError("batch_size must be positive")
        if self.dataset == "idx" and not (self.images_path and self.labels_path):
            raise ConfigError("the idx dataset needs images_path and labels_path")
        if not 0.0 < self.tau <= 1.0:
            raise ConfigError("tau must lie in (0, 1]")

    @classmethod
    def from_dict(cls, values):
        names = {f.name for f in dataclasses.fields(cls) if not f.name.startswith("_")}
        unknown = set(values) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**values)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            values = json.load(fh)
        if not isinstance(values, dict):
            raise ConfigError("config file must hold a JSON object")
        return cls.from_dict(values)

    def to_dict(self):
        """Field values as given, with family defaults left unresolved."""
        out = {}
        for f in dataclasses.fields(self):
            if f.name.startswith("_"):
                continue
            v = None if f.name in self._filled else getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out

    def resolved(self):
        out = {f.name: getattr(self, f.name) for f in dataclasses.fields(self) if not f.name.startswith("_")}
        return {k: list(v) if isinstance(v, tuple) else v for k, v in out.items()}

    def replace(self, **changes):
        values = self.to_dict()
        values.update({k: v for k, v in changes.items() if v is not None})
        return ExperimentConfig.from_dict(values)


@dataclass
class RunRecord:
    """Outcome of one seeded run.

    ``costs`` holds the training cost of every iteration that completed; a
    diverged run stops at ``diverged_at`` and keeps only the costs before it.
    """

    config: dict
    seed: int
    costs: np.ndarray
    epoch_errors: np.ndarray
    epoch_times: np.ndarray
    final_cost: float
    diverged: bool = False
    diverged_at: int | None = None
    clamped: bool = False
    retained_dims: int | None = None

    @property
    def iterations(self):
        return int(self.costs.size)

    def summary(self):
        return {
            "seed": self.seed,
            "iterations": self.iterations,
            "final_cost": self.final_cost,
            "final_error": float(self.epoch_errors[-1]) if self.epoch_errors.size else None,
            "diverged": self.diverged,
            "diverged_at": self.diverged_at,
            "clamped": self.clamped,
            "retained_dims": self.retained_dims,
            "epoch_times": [float(t) for t in self.epoch_times],
            "config": self.config,
        }


def load_dataset(config, seed):
    """Training split selected by ``config`` for the run with ``seed``."""
    if config.dataset == "synth":
        ds = rdata.synth_blobs(config.synth_n, config.synth_dim, config.synth_separation, seed)
    else:
        if config.dataset == "mnist":
            ds = rdata.load_mnist("train", config.data_dir)
        else:
            ds = rdata.load_idx(config.images_path, config.labels_path)
        if config.model == "logistic":
            ds = rdata.binary_subset(ds, *config.classes)
        elif config.classes:
            ds = ds.subset(np.flatnonzero(np.isin(ds.labels, config.classes)))
        if config.subset_size is not None and config.subset_size < len(ds):
            pick = np.random.default_rng([seed, 1]).choice(len(ds), config.subset_size, replace=False)
            ds = ds.subset(np.sort(pick))
        elif config.subset_size is not None and config.subset_size > len(ds):
            raise ConfigError(f"subset_size {config.subset_size} exceeds the {len(ds)} available samples")
    if config.train_fraction < 1.0:
        ds, _ = rdata.train_test_split(ds, rdata.SplitSpec(config.train_fraction, seed))
    return ds


def _estimator(config, seed):
    lr, m = config.lr, config.momentum
    if config.model == "logistic":
        return NaturalLogisticRegression(
            method="ngd" if config.method.endswith("NGD") else "gd",
            whiten=config.method.startswith("White"), lr=lr, momentum=m, epochs=config.epochs,
            batch_size=config.batch_size, eps_rel=config.eps_rel, random_state=seed,
            max_cost=config.max_cost)
    return RelativeMLPClassifier(
        hidden_layer_sizes=config.hidden_sizes, optimizer=config.method.lower(), lr=lr, momentum=m,
        epochs=config.epochs, batch_size=config.batch_size or 64,
        refresh_period=config.refresh_period, decay=config.decay, eps_rel=config.eps_rel,
        omega=config.omega, random_state=seed, max_cost=config.max_cost)


def run(config, seed=None, dataset=None):
    """Train once with ``seed`` (default ``config.seed``) and record the curves."""
    seed = config.seed if seed is None else int(seed)
    ds = load_dataset(config, seed) if dataset is None else dataset
    est = _estimator(config, seed)
    est.fit(ds.features, ds.labels)
    costs = est.cost_curve_
    if est.diverged_:
        costs = costs[:est.diverged_at_]
    whitener = getattr(est, "whitener_", None)
    return RunRecord(
        config=config.resolved(), seed=seed, costs=np.asarray(costs, dtype=float),
        epoch_errors=est.epoch_error_, epoch_times=est.epoch_time_,
        final_cost=float(est.final_cost_), diverged=bool(est.diverged_),
        diverged_at=est.diverged_at_, clamped=bool(est.clamped_),
        retained_dims=None if whitener is None else int(whitener.n_components_))


@dataclass
class GridCell:
    lr: float
    momentum: float
    records: list

    @property
    def valid(self):
        return not any(r.diverged for r in self.records)

    @property
    def mean_costs(self):
        """Pointwise average of the cost curves over repeats (valid cells only)."""
        if not self.valid:
            return None
        return np.mean(np.stack([r.costs for r in self.records]), axis=0)

    @property
    def final_cost(self):
        return float(np.mean([r.final_cost for r in self.records])) if self.valid else math.nan

    @property
    def clamped(self):
        return any(r.clamped for r in self.records)

    def row(self):
        return {"lr": self.lr, "momentum": self.momentum, "final_cost": self.final_cost,
                "valid": self.valid, "clamped": self.clamped}


@dataclass
class GridResult:
    cells: list
    best: GridCell | None

    def table(self):
        return [c.row() for c in self.cells]


def select_best(cells):
    """Lowest mean final cost among valid cells; ties go to the smaller lr, then momentum."""
    valid = [c for c in cells if c.valid]
    if not valid:
        return None
    return min(valid, key=lambda c: (c.final_cost, c.lr, c.momentum))


def run_grid(config, datasets=None):
    """Run every ``(lr, momentum)`` cell ``config.repeats`` times with seeds ``seed, seed+1, ...``.

    ``datasets`` may map a seed to a pre-loaded training set so that repeated
    cells do not reload it.
    """
    seeds = [config.seed + r for r in range(config.repeats)]
    datasets = dict(datasets or {})
    for s in seeds:
        if s not in datasets:
            datasets[s] = load_dataset(config, s)
    cells = []
    for lr in config.lr_grid:
        for m in config.momentum_grid:
            cfg = config.replace(lr=float(lr), momentum=float(m))
            cells.append(GridCell(float(lr), float(m), [run(cfg, s, datasets[s]) for s in seeds]))
    return GridResult(cells, select_best(cells))


def tau_sharp_ratio(costs, tau, M=None):
    """Mean and standard deviation of the cost over the last ``ceil(tau * M)`` iterations.

    ``costs`` is a cost array or a :class:`RunRecord`; ``M`` defaults to its length.
    """
    if isinstance(costs, RunRecord):
        costs = costs.costs
    costs = np.asarray(costs, dtype=float)
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"tau must lie in (0, 1], got {tau}")
    M = costs.size if M is None else int(M)
    k = math.ceil(tau * M)
    if k < 1 or costs.size < k:
        raise ValueError(f"need at least {k} iterations, the trace has {costs.size}")
    tail = costs[-k:]
    return float(tail.mean()), float(tail.std())


def smooth(costs, window=10):
    """Means over non-overlapping windows, repeated so the result aligns with ``costs``."""
    costs = np.asarray(costs, dtype=float)
    if window < 1:
        raise ValueError("window must be at least 1")
    out = np.empty_like(costs)
    for i in range(0, costs.size, window):
        out[i:i + window] = costs[i:i + window].mean()
    return out


def emit_curves(costs, path, smooth_window=10):
    """Write ``iteration,cost,smoothed_cost`` rows; floats are written with ``repr``."""
    if isinstance(costs, RunRecord):
        costs = costs.costs
    costs = np.asarray(costs, dtype=float)
    sm = smooth(costs, smooth_window)
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", "cost", "smoothed_cost"])
        for i, (c, s) in enumerate(zip(costs, sm)):
            w.writerow([i, repr(float(c)), repr(float(s))])
    return path


def read_curves(path):
    """Parse a file written by :func:`emit_curves` into ``(costs, smoothed)``."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return (np.array([float(r["cost"]) for r in rows]),
            np.array([float(r["smoothed_cost"]) for r in rows]))
