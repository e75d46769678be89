"""Feature-matrix datasets, imbalance subsampling and cross-validation splits."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class DataError(ValueError):
    """Malformed or inconsistent input data."""


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    segments: np.ndarray | None = None
    sample_period: float | None = None
    feature_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        if self.X.ndim != 2:
            raise DataError(f"X must be 2-D, got shape {self.X.shape}")
        if self.y.shape != (self.X.shape[0],):
            raise DataError(f"{self.X.shape[0]} rows but {self.y.shape[0]} labels")
        if len(self.y) and self.y.min() < 0:
            raise DataError("labels must be non-negative integers")
        if self.segments is not None:
            self.segments = np.asarray(self.segments, dtype=np.int64)
            if self.segments.shape != self.y.shape:
                raise DataError("segment ids must have one entry per row")
            if np.any(np.diff(self.segments) < 0):
                bad = int(np.flatnonzero(np.diff(self.segments) < 0)[0]) + 1
                raise DataError(f"segment ids must be non-decreasing (row {bad})")
        if not self.feature_names:
            self.feature_names = [f"f{i}" for i in range(self.X.shape[1])]

    def __len__(self):
        return len(self.y)

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def n_classes(self) -> int:
        return int(self.y.max()) + 1 if len(self.y) else 0

    def subset(self, index) -> "Dataset":
        index = np.asarray(index)
        return Dataset(
            self.X[index],
            self.y[index],
            None if self.segments is None else self.segments[index],
            self.sample_period,
            list(self.feature_names),
        )


def load_csv(path, label_column="label", segment_column: str | None = "segment") -> Dataset:
    """Read a headed CSV of numeric features.

    ``segment_column`` is optional: when the header lacks it the dataset simply
    has no segments. Passing ``None`` ignores any such column.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if label_column not in header:
            raise DataError(f"{path}: label column {label_column!r} not in header {header}")
        label_idx = header.index(label_column)
        seg_idx = header.index(segment_column) if segment_column in header else None
        feat_idx = [i for i in range(len(header)) if i not in (label_idx, seg_idx)]
        rows, labels, segs = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}"
                )
            try:
                values = [float(row[i]) for i in feat_idx]
            except ValueError:
                col = next(i for i in feat_idx if not _is_float(row[i]))
                raise DataError(
                    f"{path}:{lineno}: non-numeric value {row[col]!r} in column {header[col]!r}"
                ) from None
            if not all(math.isfinite(v) for v in values):
                col = next(i for i in feat_idx if not math.isfinite(float(row[i])))
                raise DataError(
                    f"{path}:{lineno}: non-finite value {row[col]!r} in column {header[col]!r}"
                )
            rows.append(values)
            labels.append(_as_int(row[label_idx], path, lineno, label_column))
            if seg_idx is not None:
                segs.append(_as_int(row[seg_idx], path, lineno, segment_column))
    if not rows:
        raise DataError(f"{path}: no data rows")
    try:
        return Dataset(
            np.array(rows, dtype=np.float64),
            np.array(labels, dtype=np.int64),
            np.array(segs, dtype=np.int64) if seg_idx is not None else None,
            feature_names=[header[i] for i in feat_idx],
        )
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from None


def _is_float(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def _as_int(s: str, path, lineno, column) -> int:
    try:
        v = float(s)
    except ValueError:
        raise DataError(f"{path}:{lineno}: non-numeric value {s!r} in column {column!r}") from None
    if not v.is_integer():
        raise DataError(f"{path}:{lineno}: column {column!r} must hold integers, got {s!r}")
    return int(v)


def write_csv(d: Dataset, path, label_column="label", segment_column="segment") -> None:
    """Write ``d`` with 15 significant digits per feature value."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        header = list(d.feature_names) + [label_column]
        if d.segments is not None:
            header.append(segment_column)
        w.writerow(header)
        for i in range(len(d)):
            row = [f"{v:.15g}" for v in d.X[i]] + [int(d.y[i])]
            if d.segments is not None:
                row.append(int(d.segments[i]))
            w.writerow(row)


# -- splits --------------------------------------------------------------------


@dataclass
class SplitPlan:
    kind: str
    folds: list[tuple[np.ndarray, np.ndarray]]

    def __len__(self):
        return len(self.folds)

    def to_json(self) -> str:
        return json.dumps(
            {
                "kind": self.kind,
                "folds": [
                    {"train": tr.tolist(), "test": te.tolist()} for tr, te in self.folds
                ],
            }
        )


def _segment_ids(d: Dataset) -> np.ndarray:
    if d.segments is None:
        raise DataError("dataset has no segment ids")
    return np.unique(d.segments)


def tscv_folds(d: Dataset) -> SplitPlan:
    """Time-series split: segment k is tested after training on all earlier segments."""
    ids = _segment_ids(d)
    if len(ids) < 2:
        raise DataError(f"time-series split needs >= 2 segments, got {len(ids)}")
    folds = []
    for k in range(1, len(ids)):
        train = np.flatnonzero(d.segments < ids[k])
        test = np.flatnonzero(d.segments == ids[k])
        folds.append((train, test))
    return SplitPlan("tscv", folds)


def leave_one_segment_out(d: Dataset) -> SplitPlan:
    ids = _segment_ids(d)
    if len(ids) < 2:
        raise DataError(f"leave-one-segment-out needs >= 2 segments, got {len(ids)}")
    folds = [
        (np.flatnonzero(d.segments != s), np.flatnonzero(d.segments == s)) for s in ids
    ]
    return SplitPlan("loso", folds)


def holdout_split(d: Dataset, test_fraction: float = 0.2) -> SplitPlan:
    """Single fold: the last ``test_fraction`` of rows is the test set."""
    if not 0 < test_fraction < 1:
        raise DataError(f"test_fraction must be in (0, 1), got {test_fraction}")
    n = len(d)
    n_test = max(1, int(round(n * test_fraction)))
    if n_test >= n:
        raise DataError(f"{n} rows are too few for a holdout split")
    idx = np.arange(n)
    return SplitPlan("single", [(idx[: n - n_test], idx[n - n_test :])])


def subsample_factor(d: Dataset, minority_class: int, factor: int, seed: int = 0) -> Dataset:
    """Keep every minority sample plus ``factor`` times as many other samples.

    The other samples are drawn without replacement; when there are not enough
    of them all are kept. Row order is preserved.
    """
    if factor < 1:
        raise DataError(f"factor must be >= 1, got {factor}")
    minority = np.flatnonzero(d.y == minority_class)
    if len(minority) == 0:
        raise DataError(f"minority class {minority_class} not present")
    majority = np.flatnonzero(d.y != minority_class)
    k = min(factor * len(minority), len(majority))
    picked = np.random.default_rng(seed).choice(majority, size=k, replace=False)
    return d.subset(np.sort(np.concatenate([minority, picked])))


# -- synthetic data --------------------------------------------------------------


def make_synthetic(
    n_samples: int = 5000,
    n_features: int = 30,
    n_classes: int = 5,
    noise: float = 0.25,
    n_segments: int | None = None,
    seed: int = 0,
) -> Dataset:
    """Classes with distinct per-feature centres in [0, 1] plus Gaussian noise.

    Each class draws its own centre for every feature, so the distribution of
    discretized bins differs by class. ``noise`` is the standard deviation in
    the same unit as the centre range.
    """
    rng = np.random.default_rng(seed)
    centres = rng.uniform(0.0, 1.0, size=(n_classes, n_features))
    y = rng.integers(0, n_classes, size=n_samples)
    X = centres[y] + rng.normal(0.0, noise, size=(n_samples, n_features))
    segments = None
    if n_segments:
        segments = np.minimum(np.arange(n_samples) * n_segments // n_samples, n_segments - 1)
    return Dataset(X, y, segments)
