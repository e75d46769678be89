"""Class-vector models: classical single-pass and online (weighted) training.

Every class keeps a real-valued accumulator and a running total of the
positive weights folded into it. The binary class vector is the majority
binarization of that accumulator: bit j is set when ``acc[j] > total / 2``,
with exact ties taken from the model's tiebreak vector. Classical training
uses weight 1.0 per sample, so this reduces to ordinary majority voting.

Online training, for a sample H of true class C predicted as W against a
frozen snapshot::

    acc[C] += delta_C * H                 (every sample)
    acc[W] -= gamma * (1 - delta_W) * H   (only when W != C)

where ``delta`` is the normalized Hamming distance to the class vector (or
``(1 - cosine) / 2`` against the accumulator when the metric is cosine).
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import hypervector as hv
from .encoding import default_tiebreak
from .hypervector import PackedBitMatrix

METRICS = ("hamming", "cosine")

_MODEL_MAGIC = b"HDMD"


@dataclass(eq=False)
class HDModel:
    accumulators: np.ndarray  # (C, D) float64
    weight_totals: np.ndarray  # (C,) float64, running positive weight per class
    sample_counts: np.ndarray  # (C,) int64
    class_vectors: PackedBitMatrix
    tiebreak: PackedBitMatrix
    gamma: float = 1.0
    metric: str = "hamming"
    seed: int = 0
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.gamma < 0:
            raise ValueError(f"learning rate must be >= 0, got {self.gamma}")

    @property
    def n_classes(self) -> int:
        return self.accumulators.shape[0]

    @property
    def dim(self) -> int:
        return self.accumulators.shape[1]

    @property
    def empty_classes(self) -> np.ndarray:
        """Indices of classes that never received a sample (their vector is the tiebreak)."""
        return np.flatnonzero(self.sample_counts == 0)

    def binarized(self, classes=None) -> np.ndarray:
        """Packed words of the majority binarization of the given classes."""
        idx = np.arange(self.n_classes) if classes is None else np.asarray(classes)
        bits = hv.majority_bits(
            self.accumulators[idx], self.weight_totals[idx], hv.unpack(self.tiebreak)[0]
        )
        return hv._pack_bool(bits, self.dim)

    def rebinarize(self, classes=None) -> None:
        idx = np.arange(self.n_classes) if classes is None else np.asarray(classes)
        if len(idx):
            self.class_vectors.words[idx] = self.binarized(idx)

    def copy(self) -> "HDModel":
        return HDModel(
            self.accumulators.copy(),
            self.weight_totals.copy(),
            self.sample_counts.copy(),
            PackedBitMatrix(self.n_classes, self.dim, self.class_vectors.words.copy()),
            self.tiebreak,
            self.gamma,
            self.metric,
            self.seed,
            dict(self.provenance),
        )


@dataclass
class Predictions:
    """Labels plus per-class scores (distance for Hamming, similarity for cosine)."""

    labels: np.ndarray
    scores: np.ndarray
    metric: str


def hamming_distance(a: PackedBitMatrix, b: PackedBitMatrix) -> float:
    if a.dim != b.dim:
        raise ValueError(f"dim mismatch: {a.dim} vs {b.dim}")
    return int(np.bitwise_count(a.words[0] ^ b.words[0]).sum()) / a.dim


def cosine_similarity(a, b: PackedBitMatrix) -> float:
    """Cosine between a real/count row and the 0/1 unpacking of a packed row."""
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    if a.shape[0] != b.dim:
        raise ValueError(f"dim mismatch: {a.shape[0]} vs {b.dim}")
    ones = hv.unpack(b)[0].astype(bool)
    nb = int(ones.sum())
    na = float(np.sqrt(a @ a))
    if na == 0 or nb == 0:
        raise ValueError("cosine similarity undefined for an all-zero vector")
    return float(a[ones].sum() / (na * np.sqrt(nb)))


def _cosine_scores(acc: np.ndarray, queries: PackedBitMatrix, chunk: int = 1024) -> np.ndarray:
    """(n, C) cosine similarities; 0.0 where either side is all-zero."""
    norms = np.sqrt(np.einsum("cd,cd->c", acc, acc))
    out = np.zeros((queries.rows, acc.shape[0]))
    for start in range(0, queries.rows, chunk):
        dense = hv.unpack(queries.take(np.arange(start, min(start + chunk, queries.rows))))
        qn = np.sqrt(dense.sum(axis=1, dtype=np.int64).astype(np.float64))
        dots = dense.astype(np.float64) @ acc.T
        denom = qn[:, None] * norms[None, :]
        with np.errstate(invalid="ignore", divide="ignore"):
            out[start : start + len(dense)] = np.where(denom > 0, dots / denom, 0.0)
    return out


def scores(model: HDModel, queries: PackedBitMatrix, reference=None) -> np.ndarray:
    """Per-class scores of ``queries``; ``reference`` overrides the class state
    (packed class vectors for Hamming, accumulators for cosine)."""
    if queries.dim != model.dim:
        raise ValueError(f"dim mismatch: model {model.dim}, queries {queries.dim}")
    if model.metric == "hamming":
        ref = model.class_vectors if reference is None else reference
        return hv.hamming_counts(queries, ref) / model.dim
    acc = model.accumulators if reference is None else reference
    return _cosine_scores(acc, queries)


def _best(s: np.ndarray, metric: str) -> np.ndarray:
    # argmin/argmax return the first occurrence, i.e. the lowest class index on ties
    return np.argmin(s, axis=1) if metric == "hamming" else np.argmax(s, axis=1)


def predict(model: HDModel, queries: PackedBitMatrix) -> Predictions:
    s = scores(model, queries)
    return Predictions(_best(s, model.metric), s, model.metric)


def _new_model(n_classes, dim, tiebreak, gamma, metric, seed) -> HDModel:
    return HDModel(
        np.zeros((n_classes, dim)),
        np.zeros(n_classes),
        np.zeros(n_classes, np.int64),
        hv.zeros(n_classes, dim),
        tiebreak,
        float(gamma),
        metric,
        int(seed),
    )


def _check_labels(labels, n_rows: int, n_classes: int | None) -> tuple[np.ndarray, int]:
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (n_rows,):
        raise ValueError(f"expected {n_rows} labels, got shape {labels.shape}")
    if n_rows and labels.min() < 0:
        raise ValueError("labels must be non-negative")
    if n_classes is None:
        n_classes = int(labels.max()) + 1 if n_rows else 0
    elif n_rows and labels.max() >= n_classes:
        raise ValueError(f"label {labels.max()} >= class count {n_classes}")
    return labels, n_classes


def _accumulate_classical(model: HDModel, encoded: PackedBitMatrix, labels: np.ndarray) -> None:
    for c in np.unique(labels):
        rows = encoded.words[labels == c]
        model.accumulators[c] += hv.stacked_vertical_sum(rows, model.dim)
        model.sample_counts[c] += len(rows)
        model.weight_totals[c] += len(rows)


def train_classical(
    encoded: PackedBitMatrix,
    labels,
    n_classes: int | None = None,
    tiebreak: PackedBitMatrix | None = None,
    gamma: float = 1.0,
    metric: str = "hamming",
    seed: int = 0,
) -> HDModel:
    """Single-pass accumulation of each class's samples, then majority binarization.

    Classes without samples get the tiebreak vector and show up in
    ``model.empty_classes``.
    """
    labels, n_classes = _check_labels(labels, encoded.rows, n_classes)
    if tiebreak is None:
        tiebreak = default_tiebreak(encoded.dim, seed)
    model = _new_model(n_classes, encoded.dim, tiebreak, gamma, metric, seed)
    _accumulate_classical(model, encoded, labels)
    model.rebinarize()
    return model


def online_update(model: HDModel, batch: PackedBitMatrix, labels, frozen=None) -> HDModel:
    """Apply the weighted online rule for one batch, in place, and return the model.

    All predictions inside the batch are made against ``frozen`` (default: a
    snapshot of the model taken on entry). Touched classes are re-binarized
    once at the end of the batch.
    """
    labels, _ = _check_labels(labels, batch.rows, model.n_classes)
    if batch.rows == 0:
        return model
    if frozen is None:
        frozen = model.class_vectors.take(np.arange(model.n_classes)) if model.metric == "hamming" \
            else model.accumulators.copy()
    s = scores(model, batch, frozen)
    pred = _best(s, model.metric)
    dist = s if model.metric == "hamming" else (1.0 - s) / 2.0

    dense = hv.unpack(batch).astype(np.float64)
    # fixed sample order keeps the floating-point sums reproducible
    for i, (c, w) in enumerate(zip(labels, pred)):
        model.accumulators[c] += dist[i, c] * dense[i]
        model.weight_totals[c] += dist[i, c]
        if w != c:
            model.accumulators[w] -= model.gamma * (1.0 - dist[i, w]) * dense[i]
    touched = np.union1d(labels, pred)
    model.rebinarize(touched)
    return model


def train_online(
    encoded: PackedBitMatrix,
    labels,
    batch_size: int = 1,
    gamma: float = 1.0,
    n_classes: int | None = None,
    tiebreak: PackedBitMatrix | None = None,
    metric: str = "hamming",
    seed: int = 0,
) -> HDModel:
    """Online training with class vectors refreshed after every ``batch_size`` samples.

    The first batch is accumulated classically (a distance to an empty model
    is undefined); every later batch goes through :func:`online_update`.
    """
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    labels, n_classes = _check_labels(labels, encoded.rows, n_classes)
    model = train_classical(
        encoded.take(np.arange(min(batch_size, encoded.rows))),
        labels[:batch_size],
        n_classes,
        tiebreak,
        gamma,
        metric,
        seed,
    )
    for start in range(batch_size, encoded.rows, batch_size):
        sl = np.arange(start, min(start + batch_size, encoded.rows))
        online_update(model, encoded.take(sl), labels[sl])
    model.sample_counts = np.bincount(labels, minlength=n_classes).astype(np.int64)
    return model


# -- serialization -------------------------------------------------------------


def model_header(model: HDModel) -> dict:
    return {
        "classes": model.n_classes,
        "dim": model.dim,
        "gamma": model.gamma,
        "metric": model.metric,
        "seed": model.seed,
        "provenance": model.provenance,
        "weight_totals": model.weight_totals.tolist(),
        "sample_counts": model.sample_counts.tolist(),
    }


def model_to_bytes(model: HDModel) -> bytes:
    header = json.dumps(model_header(model), sort_keys=True).encode()
    return b"".join(
        [
            _MODEL_MAGIC,
            struct.pack("<I", len(header)),
            header,
            hv.to_bytes(model.class_vectors),
            hv.to_bytes(model.tiebreak),
            model.accumulators.astype("<f8").tobytes(),
        ]
    )


def model_from_bytes(buf: bytes) -> HDModel:
    if buf[:4] != _MODEL_MAGIC:
        raise ValueError("not a model file")
    (hlen,) = struct.unpack_from("<I", buf, 4)
    h = json.loads(buf[8 : 8 + hlen])
    class_vectors, offset = hv.from_bytes(buf, 8 + hlen)
    tiebreak, offset = hv.from_bytes(buf, offset)
    C, D = h["classes"], h["dim"]
    if len(buf) - offset != C * D * 8:
        raise ValueError("model accumulator payload has the wrong size")
    acc = np.frombuffer(buf, "<f8", count=C * D, offset=offset).astype(np.float64).reshape(C, D)
    return HDModel(
        acc,
        np.array(h["weight_totals"], np.float64),
        np.array(h["sample_counts"], np.int64),
        class_vectors,
        tiebreak,
        h["gamma"],
        h["metric"],
        h["seed"],
        h["provenance"],
    )


def save_model(model: HDModel, path) -> None:
    Path(path).write_bytes(model_to_bytes(model))


def load_model(path) -> HDModel:
    return model_from_bytes(Path(path).read_bytes())
