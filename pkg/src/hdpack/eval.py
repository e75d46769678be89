"""Label smoothing, detection metrics and stage timing."""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np


def smooth_labels(labels, window: int) -> np.ndarray:
    """Centered majority filter over a binary sequence.

    The window is clipped at the sequence ends, so edge windows can tie; ties
    resolve to 1.
    """
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be odd and >= 1, got {window}")
    labels = np.asarray(labels, dtype=np.int64)
    n = len(labels)
    if window == 1 or n == 0:
        return labels.copy()
    half = window // 2
    csum = np.concatenate([[0], np.cumsum(labels)])
    idx = np.arange(n)
    lo = np.maximum(idx - half, 0)
    hi = np.minimum(idx + half + 1, n)
    ones = csum[hi] - csum[lo]
    return (2 * ones >= hi - lo).astype(np.int64)


def _ratio(num: int, den: int) -> float | None:
    return num / den if den else None


@dataclass
class EpisodeCounts:
    detected: int
    total: int
    false_positive: int

    @property
    def sensitivity(self) -> float | None:
        return _ratio(self.detected, self.total)

    @property
    def precision(self) -> float | None:
        return _ratio(self.detected, self.detected + self.false_positive)

    @property
    def f1(self) -> float | None:
        return _f1(self.precision, self.sensitivity)


def _f1(ppv, tpr):
    if ppv is None or tpr is None or ppv + tpr == 0:
        return None
    return 2 * ppv * tpr / (ppv + tpr)


@dataclass
class EvalReport:
    """Confusion counts for the positive class plus derived ratios.

    Ratios whose denominator is zero are ``None`` rather than 0.
    """

    tp: int
    fp: int
    tn: int
    fn: int
    accuracy: float
    tpr: float | None
    ppv: float | None
    f1: float | None
    episodes: EpisodeCounts | None = None
    timings: dict[str, float] = field(default_factory=dict)

    def to_dict(self, with_timings: bool = True) -> dict:
        d = asdict(self)
        if self.episodes is not None:
            d["episodes"].update(
                sensitivity=self.episodes.sensitivity,
                precision=self.episodes.precision,
                f1=self.episodes.f1,
            )
        if not with_timings:
            d.pop("timings")
        return d

    def to_json(self, with_timings: bool = True) -> str:
        return json.dumps(self.to_dict(with_timings), sort_keys=True, indent=2)

    def csv_fields(self) -> dict:
        row = {k: getattr(self, k) for k in ("tp", "fp", "tn", "fn", "accuracy", "tpr", "ppv", "f1")}
        if self.episodes is not None:
            row.update(
                episodes_detected=self.episodes.detected,
                episodes_total=self.episodes.total,
                episodes_false_positive=self.episodes.false_positive,
            )
        row.update({f"time_{k}": v for k, v in sorted(self.timings.items())})
        return row

    def to_csv_row(self) -> str:
        row = self.csv_fields()
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(row), lineterminator="\n")
        w.writeheader()
        w.writerow({k: "" if v is None else v for k, v in row.items()})
        return buf.getvalue()


def sample_metrics(pred, truth, positive_class: int = 1) -> EvalReport:
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise ValueError(f"length mismatch: {pred.shape} vs {truth.shape}")
    p = pred == positive_class
    t = truth == positive_class
    tp = int(np.count_nonzero(p & t))
    fp = int(np.count_nonzero(p & ~t))
    fn = int(np.count_nonzero(~p & t))
    tn = int(np.count_nonzero(~p & ~t))
    n = len(pred)
    accuracy = float(np.count_nonzero(pred == truth) / n) if n else 0.0
    tpr = _ratio(tp, tp + fn)
    ppv = _ratio(tp, tp + fp)
    return EvalReport(tp, fp, tn, fn, accuracy, tpr, ppv, _f1(ppv, tpr))


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Half-open [start, end) intervals of consecutive True values."""
    padded = np.concatenate([[False], mask, [False]]).astype(np.int8)
    edges = np.flatnonzero(np.diff(padded))
    return list(zip(edges[::2].tolist(), edges[1::2].tolist()))


def episode_metrics(pred, truth, positive_class: int = 1) -> EpisodeCounts:
    """An episode is a maximal run of positive truth labels.

    It counts as detected when at least one prediction inside it is positive.
    A false-positive episode is a maximal run of positive predictions that
    touches no truth episode.
    """
    p = np.asarray(pred) == positive_class
    t = np.asarray(truth) == positive_class
    truth_runs = _runs(t)
    detected = sum(1 for a, b in truth_runs if p[a:b].any())
    false_pos = sum(1 for a, b in _runs(p) if not t[a:b].any())
    return EpisodeCounts(detected, len(truth_runs), false_pos)


class Timer:
    """Collects monotonic wall-clock durations per named stage."""

    def __init__(self):
        self.timings: dict[str, float] = {}

    def run(self, stage: str, thunk, *args, **kwargs):
        t0 = time.perf_counter()
        result = thunk(*args, **kwargs)
        self.timings[stage] = self.timings.get(stage, 0.0) + time.perf_counter() - t0
        return result


def time_stage(stage: str, thunk, timings: dict | None = None):
    """Run ``thunk()`` and return ``(result, seconds)``, recording into ``timings``."""
    t0 = time.perf_counter()
    result = thunk()
    elapsed = time.perf_counter() - t0
    if timings is not None:
        timings[stage] = timings.get(stage, 0.0) + elapsed
    return result, elapsed
