"""Experiment pipelines behind the command-line interface.

A run loads a feature CSV, optionally subsamples it, splits it into folds and,
per fold, fits the discretizer on the training rows, encodes both sides,
trains classical and/or online models and predicts the test rows. Test
predictions of all folds are concatenated in original row order, smoothed
(binary problems only) and scored.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import data as data_mod
from . import encoding as enc
from . import eval as ev
from . import hypervector as hv
from . import model as mdl
from . import reference as ref

SPLITS = ("single", "tscv", "loso")
BACKENDS = ("packed", "naive")
TRAIN_MODES = ("classical", "online", "both")
SWEEP_AXES = ("dim", "batch")
BENCH_STAGES = ("encode", "train_classical", "train_online", "predict")

SEED_ENV = "HYPERVEC_SEED"


class ConfigError(ValueError):
    """Invalid experiment configuration (a usage error)."""


class BackendMismatch(RuntimeError):
    """Packed and naive backends disagreed on an output."""


@dataclass
class ExperimentConfig:
    data: str = ""
    label_column: str = "label"
    segment_column: str = "segment"
    dim: int = 10240
    bins: int = 10
    generation: str = "random"
    binding: str = "id_level"
    metric: str = "hamming"
    gamma: float = 1.0
    batch_size: int = 1
    train_mode: str = "both"
    split: str = "single"
    test_fraction: float = 0.2
    subsample_factor: int | None = None
    minority_class: int = 1
    positive_class: int = 1
    smooth_window: int = 11
    seed: int | None = None
    backend: str = "packed"
    threads: int = 1
    out: str = "results"

    def __post_init__(self):
        if self.seed is None:
            env = os.environ.get(SEED_ENV)
            try:
                self.seed = int(env) if env else 0
            except ValueError:
                raise ConfigError(f"{SEED_ENV}={env!r} is not an integer") from None
        self.validate()

    def validate(self) -> None:
        checks = [
            (self.generation in enc.GENERATION_STRATEGIES, f"unknown generation {self.generation!r}"),
            (self.binding in enc.BINDING_STRATEGIES, f"unknown binding {self.binding!r}"),
            (self.metric in mdl.METRICS, f"unknown metric {self.metric!r}"),
            (self.split in SPLITS, f"unknown split {self.split!r}"),
            (self.backend in BACKENDS, f"unknown backend {self.backend!r}"),
            (self.train_mode in TRAIN_MODES, f"unknown train mode {self.train_mode!r}"),
            (self.dim >= 1, f"dim must be >= 1, got {self.dim}"),
            (self.bins >= 2, f"bins must be >= 2, got {self.bins}"),
            (self.gamma >= 0, f"gamma must be >= 0, got {self.gamma}"),
            (self.batch_size >= 1, f"batch size must be >= 1, got {self.batch_size}"),
            (0 < self.test_fraction < 1, f"test fraction must be in (0, 1), got {self.test_fraction}"),
            (self.subsample_factor is None or self.subsample_factor >= 1,
             f"subsample factor must be >= 1, got {self.subsample_factor}"),
            (self.smooth_window >= 1 and self.smooth_window % 2 == 1,
             f"smoothing window must be odd and >= 1, got {self.smooth_window}"),
            (self.threads >= 1, f"threads must be >= 1, got {self.threads}"),
            (self.generation != "sandwich" or self.dim % 2 == 0,
             f"sandwich generation needs an even dim, got {self.dim}"),
            (self.generation != "scale_random" or 2 * (self.bins - 1) <= self.dim,
             f"dim {self.dim} too small for {self.bins} scale-random levels"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)

    @classmethod
    def from_sources(cls, path=None, **overrides) -> "ExperimentConfig":
        """Merge a JSON config file with explicit overrides (``None`` means unset)."""
        values = {}
        if path:
            try:
                values = json.loads(Path(path).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config {path}: {exc}") from None
            if not isinstance(values, dict):
                raise ConfigError(f"config {path} must hold a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        values.update({k: v for k, v in overrides.items() if v is not None})
        try:
            return cls(**values)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def public_dict(self) -> dict:
        """Config fields that influence results (excludes output path and thread count)."""
        d = dataclasses.asdict(self)
        d.pop("out")
        d.pop("threads")
        return d


# -- backends ------------------------------------------------------------------


class PackedBackend:
    name = "packed"

    def encode(self, bins, cb):
        return enc.encode_batch(bins, cb)

    def train_classical(self, H, y, n_classes, cb, cfg):
        return mdl.train_classical(H, y, n_classes, cb.tiebreak, cfg.gamma, cfg.metric, cfg.seed)

    def train_online(self, H, y, n_classes, cb, cfg):
        return mdl.train_online(
            H, y, cfg.batch_size, cfg.gamma, n_classes, cb.tiebreak, cfg.metric, cfg.seed
        )

    def predict(self, model, H):
        return mdl.predict(model, H).labels

    def dense(self, H):
        return hv.unpack(H)

    def nbytes(self, H):
        return H.nbytes


class NaiveBackend:
    name = "naive"

    def __init__(self):
        self._cache = {}

    def _dense_codebook(self, cb):
        key = id(cb)
        if key not in self._cache:
            self._cache[key] = (hv.unpack(cb.id_vectors), hv.unpack(cb.value_vectors),
                                hv.unpack(cb.tiebreak)[0])
        return self._cache[key]

    def encode(self, bins, cb):
        ids, values, tie = self._dense_codebook(cb)
        return ref.naive_encode_batch(bins, ids, values, cb.binding, tie)

    def train_classical(self, H, y, n_classes, cb, cfg):
        tie = self._dense_codebook(cb)[2]
        return ref.naive_train_classical(H, y, n_classes, tie, cfg.gamma, cfg.metric)

    def train_online(self, H, y, n_classes, cb, cfg):
        tie = self._dense_codebook(cb)[2]
        return ref.naive_train_online(H, y, n_classes, tie, cfg.batch_size, cfg.gamma, cfg.metric)

    def predict(self, model, H):
        return ref.naive_predict(model, H)[0]

    def dense(self, H):
        return H

    def nbytes(self, H):
        return H.nbytes


def make_backend(name: str):
    return PackedBackend() if name == "packed" else NaiveBackend()


# -- experiment ----------------------------------------------------------------


def load_dataset(cfg: ExperimentConfig) -> data_mod.Dataset:
    if not cfg.data:
        raise ConfigError("no dataset given (set 'data' or pass --data)")
    path = Path(cfg.data)
    if not path.exists():
        raise data_mod.DataError(f"dataset {path} does not exist")
    d = data_mod.load_csv(path, cfg.label_column, cfg.segment_column)
    if cfg.subsample_factor:
        d = data_mod.subsample_factor(d, cfg.minority_class, cfg.subsample_factor, cfg.seed)
    return d


def make_plan(d: data_mod.Dataset, cfg: ExperimentConfig) -> data_mod.SplitPlan:
    if cfg.split == "tscv":
        return data_mod.tscv_folds(d)
    if cfg.split == "loso":
        return data_mod.leave_one_segment_out(d)
    return data_mod.holdout_split(d, cfg.test_fraction)


def _modes(cfg) -> list[str]:
    return ["classical", "online"] if cfg.train_mode == "both" else [cfg.train_mode]


def _run_fold(d, fold, cb, cfg, backend, n_classes):
    train, test = fold
    timer = ev.Timer()
    disc = enc.fit_discretizer(d.X[train], cfg.bins)
    H_train = timer.run("encode", backend.encode, enc.discretize(d.X[train], disc), cb)
    H_test = timer.run("encode", backend.encode, enc.discretize(d.X[test], disc), cb)
    preds = {}
    for mode in _modes(cfg):
        trainer = backend.train_classical if mode == "classical" else backend.train_online
        model = timer.run(f"train_{mode}", trainer, H_train, d.y[train], n_classes, cb, cfg)
        preds[mode] = timer.run("predict", backend.predict, model, H_test)
    return test, preds, timer.timings


@dataclass
class ExperimentResult:
    n_folds: int
    test_index: np.ndarray
    truth: np.ndarray
    raw: dict
    smoothed: dict
    reports: dict
    timings: dict
    smoothing_applied: bool

    def metrics_dict(self, cfg) -> dict:
        return {
            "config": cfg.public_dict(),
            "folds": self.n_folds,
            "n_test": int(len(self.test_index)),
            "smoothing_applied": self.smoothing_applied,
            "modes": {m: r.to_dict(with_timings=False) for m, r in self.reports.items()},
        }


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> ExperimentResult:
    d = load_dataset(cfg)
    plan = make_plan(d, cfg)
    n_classes = d.n_classes
    cb = enc.build_codebook(d.n_features, cfg.bins, cfg.dim, cfg.generation, cfg.binding, cfg.seed)
    backend = make_backend(cfg.backend)
    cb.bound_table()  # build before worker threads share it

    def work(fold):
        return _run_fold(d, fold, cb, cfg, backend, n_classes)

    if cfg.threads > 1 and len(plan) > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            outputs = list(pool.map(work, plan.folds))
    else:
        outputs = [work(f) for f in plan.folds]

    timings: dict[str, float] = {}
    for _, _, t in outputs:
        for k, v in t.items():
            timings[k] = timings.get(k, 0.0) + v
    test_index = np.concatenate([o[0] for o in outputs])
    order = np.argsort(test_index, kind="stable")
    test_index = test_index[order]
    truth = d.y[test_index]
    binary = n_classes <= 2
    raw, smoothed, reports = {}, {}, {}
    for mode in _modes(cfg):
        pred = np.concatenate([o[1][mode] for o in outputs])[order]
        raw[mode] = pred
        sm = ev.smooth_labels(pred, cfg.smooth_window) if binary else pred
        smoothed[mode] = sm
        report = ev.sample_metrics(sm, truth, cfg.positive_class)
        report.episodes = ev.episode_metrics(sm, truth, cfg.positive_class)
        report.timings = dict(timings)
        reports[mode] = report
    result = ExperimentResult(len(plan), test_index, truth, raw, smoothed, reports, timings, binary)
    if write:
        write_outputs(result, d, plan, cfg)
    return result


def write_outputs(result: ExperimentResult, d, plan, cfg) -> None:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    modes = list(result.raw)
    with (out / "predictions.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        header = ["index"] + (["segment"] if d.segments is not None else []) + ["truth"]
        for m in modes:
            header += [f"pred_{m}", f"smoothed_{m}"]
        w.writerow(header)
        for k, i in enumerate(result.test_index):
            row = [int(i)] + ([int(d.segments[i])] if d.segments is not None else [])
            row.append(int(result.truth[k]))
            for m in modes:
                row += [int(result.raw[m][k]), int(result.smoothed[m][k])]
            w.writerow(row)
    (out / "metrics.json").write_text(
        json.dumps(result.metrics_dict(cfg), sort_keys=True, indent=2) + "\n"
    )
    (out / "timings.json").write_text(json.dumps(result.timings, sort_keys=True, indent=2) + "\n")
    (out / "folds.json").write_text(plan.to_json() + "\n")
    for m in modes:
        report = result.reports[m]
        (out / f"report_{m}.csv").write_text(report.to_csv_row())


# -- sweep -----------------------------------------------------------------------

SWEEP_COLUMNS = ["axis", "value", "mode", "accuracy", "f1", "time_encode",
                 "time_train_classical", "time_train_online", "time_predict", "status"]


def run_sweep(cfg: ExperimentConfig, axis: str, values) -> list[dict]:
    """One experiment per value; failed runs are recorded and the sweep continues.

    The batch axis always trains online (batch size has no effect on classical training).
    """
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}")
    values = [int(v) for v in values]
    if len(values) < 2:
        raise ConfigError("a sweep needs at least two values")
    rows = []
    for v in values:
        field = "dim" if axis == "dim" else "batch_size"
        changes = {field: v, "out": str(Path(cfg.out) / f"{axis}_{v}")}
        if axis == "batch":
            changes["train_mode"] = "online"
        try:
            sub = cfg.replace(**changes)
            sub.validate()
            result = run_experiment(sub)
        except Exception as exc:  # noqa: BLE001 - recorded per row, sweep continues
            rows.append({"axis": axis, "value": v, "mode": "", "status": f"failed: {exc}"})
            continue
        for mode, report in result.reports.items():
            row = {"axis": axis, "value": v, "mode": mode, "accuracy": report.accuracy,
                   "f1": report.f1, "status": "ok"}
            for stage in ("encode", "train_classical", "train_online", "predict"):
                row[f"time_{stage}"] = result.timings.get(stage)
            rows.append(row)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    with (out / f"sweep_{axis}.csv").open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: ("" if row.get(k) is None else row.get(k, "")) for k in SWEEP_COLUMNS})
    return rows


# -- bench -----------------------------------------------------------------------


def _bench_backend(backend, d, fold, cb, cfg, n_classes):
    train, test = fold
    timer = ev.Timer()
    disc = enc.fit_discretizer(d.X[train], cfg.bins)
    bins_train = enc.discretize(d.X[train], disc)
    bins_test = enc.discretize(d.X[test], disc)
    H_train = timer.run("encode", backend.encode, bins_train, cb)
    H_test = timer.run("encode", backend.encode, bins_test, cb)
    classical = timer.run("train_classical", backend.train_classical, H_train, d.y[train], n_classes, cb, cfg)
    online = timer.run("train_online", backend.train_online, H_train, d.y[train], n_classes, cb, cfg)
    pred = timer.run("predict", backend.predict, classical, H_test)
    return {
        "timings": timer.timings,
        "encoded": backend.dense(H_train),
        "labels_classical": np.asarray(pred),
        "labels_online": np.asarray(backend.predict(online, H_test)),
        "bytes": backend.nbytes(H_train),
    }


def run_bench(cfg: ExperimentConfig) -> dict:
    """Time every stage on both backends and insist on identical outputs."""
    d = load_dataset(cfg)
    fold = make_plan(d, cfg).folds[0]
    cb = enc.build_codebook(d.n_features, cfg.bins, cfg.dim, cfg.generation, cfg.binding, cfg.seed)
    packed = _bench_backend(PackedBackend(), d, fold, cb, cfg, d.n_classes)
    naive = _bench_backend(NaiveBackend(), d, fold, cb, cfg, d.n_classes)
    for key in ("encoded", "labels_classical", "labels_online"):
        if not np.array_equal(packed[key], naive[key]):
            n_bad = int(np.count_nonzero(packed[key] != naive[key]))
            raise BackendMismatch(f"backends disagree on {key} ({n_bad} mismatching entries)")
    stages = {}
    for stage in BENCH_STAGES:
        p, n = packed["timings"][stage], naive["timings"][stage]
        stages[stage] = {"packed_s": p, "naive_s": n, "speedup": n / p if p > 0 else None}
    report = {
        "dim": cfg.dim,
        "n_train": int(len(fold[0])),
        "n_test": int(len(fold[1])),
        "labels_identical": True,
        "stages": stages,
        "memory": {
            "packed_bytes": int(packed["bytes"]),
            "naive_bytes": int(naive["bytes"]),
            "ratio": naive["bytes"] / packed["bytes"] if packed["bytes"] else None,
        },
    }
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "bench.json").write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
    with (out / "bench.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["stage", "packed_s", "naive_s", "speedup"])
        for stage, s in stages.items():
            w.writerow([stage, s["packed_s"], s["naive_s"], s["speedup"]])
    return report
