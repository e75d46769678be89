"""Byte-per-bit reference implementations.

Every hypervector is a dense uint8 array with one byte per logical bit, the
layout a general-purpose tensor library uses for booleans. Nothing here packs
bits or uses word-level tricks, so a bug cannot be shared with the packed
kernels. These functions double as the unpacked CPU baseline in benchmarks.

Bipolar (-1/+1) hypervectors are only supported here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _dense(x) -> np.ndarray:
    arr = np.asarray(x, dtype=np.uint8)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D bit matrix, got shape {arr.shape}")
    if np.any(arr > 1):
        raise ValueError("dense bit matrix must contain only 0/1")
    return arr


def naive_xor(a, b) -> np.ndarray:
    a, b = _dense(a), _dense(b)
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"dim mismatch: {a.shape[1]} vs {b.shape[1]}")
    if b.shape[0] not in (a.shape[0], 1):
        raise ValueError(f"row mismatch: {a.shape[0]} vs {b.shape[0]}")
    return (a != b).astype(np.uint8)


def naive_rotate(a, shift: int) -> np.ndarray:
    a = _dense(a)
    return np.roll(a, shift % a.shape[1], axis=1)


def naive_hsum(a) -> np.ndarray:
    return _dense(a).sum(axis=1, dtype=np.int64)


def naive_vsum(a, dim: int | None = None) -> np.ndarray:
    a = np.asarray(a, dtype=np.uint8)
    if a.size == 0:
        return np.zeros(dim if dim is not None else a.shape[-1], np.int64)
    return _dense(a).sum(axis=0, dtype=np.int64)


def naive_transpose(a) -> np.ndarray:
    return np.ascontiguousarray(_dense(a).T)


def naive_majority(counts, n: int, tiebreak) -> np.ndarray:
    """Majority vote of per-position counts out of ``n``, ties from ``tiebreak``."""
    counts = np.asarray(counts)
    tiebreak = np.asarray(tiebreak, dtype=np.uint8).reshape(-1)
    if np.any(counts < 0) or np.any(counts > n):
        raise ValueError(f"counts must lie in [0, {n}]")
    return np.where(2 * counts == n, tiebreak, (2 * counts > n).astype(np.uint8))


def naive_weighted_majority(acc, total, tiebreak) -> np.ndarray:
    acc = np.asarray(acc, dtype=np.float64)
    tiebreak = np.asarray(tiebreak, dtype=np.uint8).reshape(-1)
    return np.where(2 * acc == total, tiebreak, (2 * acc > total).astype(np.uint8))


def naive_hamming(a, b) -> float:
    a, b = _dense(a)[0], _dense(b)[0]
    if a.shape != b.shape:
        raise ValueError(f"dim mismatch: {a.shape[0]} vs {b.shape[0]}")
    return float(np.count_nonzero(a != b)) / a.shape[0]


def naive_cosine(acc, b) -> float:
    acc = np.asarray(acc, dtype=np.float64).reshape(-1)
    b = _dense(b)[0].astype(np.float64)
    na, nb = np.sqrt(acc @ acc), np.sqrt(b @ b)
    if na == 0 or nb == 0:
        raise ValueError("cosine similarity undefined for an all-zero vector")
    return float(acc @ b / (na * nb))


# -- encoding ----------------------------------------------------------------


def naive_encode(bins, id_dense, value_dense, binding: str, tiebreak) -> np.ndarray:
    """Encode one bin-index vector from dense codebook matrices."""
    bins = np.asarray(bins)
    n_features = len(bins)
    dim = value_dense.shape[1]
    if binding == "appending":
        seg = dim // n_features
        out = np.zeros(dim, np.uint8)
        for f, b in enumerate(bins):
            out[f * seg : (f + 1) * seg] = value_dense[b, :seg]
        return out
    if binding == "id_level":
        rows = [naive_xor(id_dense[f], value_dense[b])[0] for f, b in enumerate(bins)]
    elif binding == "permutation":
        rows = [naive_rotate(value_dense[b], f)[0] for f, b in enumerate(bins)]
    else:
        raise ValueError(f"unknown binding {binding!r}")
    return naive_majority(naive_vsum(np.stack(rows)), n_features, tiebreak)


def naive_bound_table(id_dense, value_dense, binding: str) -> np.ndarray:
    """(F, B, D) dense rows contributed by each (feature, bin) pair."""
    F = id_dense.shape[0]
    if binding == "id_level":
        return (id_dense[:, None, :] != value_dense[None, :, :]).astype(np.uint8)
    if binding == "permutation":
        return np.stack([naive_rotate(value_dense, f) for f in range(F)])
    raise ValueError(f"no bound table for binding {binding!r}")


def naive_encode_batch(X, id_dense, value_dense, binding: str, tiebreak, chunk: int = 256) -> np.ndarray:
    X = np.asarray(X)
    n_features = id_dense.shape[0]
    dim = value_dense.shape[1]
    if binding == "appending":
        return np.stack([naive_encode(x, id_dense, value_dense, binding, tiebreak) for x in X]) \
            if len(X) else np.zeros((0, dim), np.uint8)
    table = naive_bound_table(id_dense, value_dense, binding)
    out = np.empty((len(X), dim), np.uint8)
    for start in range(0, len(X), chunk):
        rows = table[np.arange(n_features), X[start : start + chunk]]  # (k, F, D)
        counts = rows.sum(axis=1, dtype=np.int64)
        out[start : start + chunk] = naive_majority(counts, n_features, tiebreak)
    return out


# -- training and prediction -------------------------------------------------


@dataclass
class NaiveModel:
    """Dense counterpart of :class:`hdpack.model.HDModel`."""

    accumulators: np.ndarray  # (C, D) float64
    weight_totals: np.ndarray  # (C,) float64
    class_vectors: np.ndarray  # (C, D) uint8
    tiebreak: np.ndarray  # (D,) uint8
    gamma: float = 1.0
    metric: str = "hamming"
    sample_counts: np.ndarray = field(default=None)

    def rebinarize(self, classes=None):
        classes = range(len(self.accumulators)) if classes is None else classes
        for c in classes:
            self.class_vectors[c] = naive_weighted_majority(
                self.accumulators[c], self.weight_totals[c], self.tiebreak
            )


def naive_train_classical(encoded, labels, n_classes: int, tiebreak, gamma=1.0, metric="hamming"):
    encoded = np.asarray(encoded, dtype=np.uint8)
    labels = np.asarray(labels)
    dim = encoded.shape[1]
    tiebreak = np.asarray(tiebreak, dtype=np.uint8).reshape(-1)
    acc = np.zeros((n_classes, dim), np.float64)
    counts = np.zeros(n_classes, np.int64)
    for row, c in zip(encoded, labels):
        acc[c] += row
        counts[c] += 1
    model = NaiveModel(
        acc,
        counts.astype(np.float64),
        np.zeros((n_classes, dim), np.uint8),
        tiebreak,
        gamma,
        metric,
        counts,
    )
    for c in range(n_classes):
        model.class_vectors[c] = naive_majority(acc[c].astype(np.int64), counts[c], tiebreak)
    return model


def naive_scores(model: NaiveModel, h) -> np.ndarray:
    """Per-class score of one dense query.

    Hamming: normalized distance to the class vector. Cosine: similarity to the
    class accumulator, 0.0 where it is undefined (all-zero vector).
    """
    n_classes = len(model.accumulators)
    out = np.empty(n_classes)
    for c in range(n_classes):
        if model.metric == "hamming":
            out[c] = naive_hamming(h, model.class_vectors[c])
        else:
            try:
                out[c] = naive_cosine(model.accumulators[c], h)
            except ValueError:
                out[c] = 0.0
    return out


def _best(scores, metric) -> int:
    return int(np.argmin(scores) if metric == "hamming" else np.argmax(scores))


def _as_distance(scores, metric) -> np.ndarray:
    return scores if metric == "hamming" else (1.0 - scores) / 2.0


def naive_online_update(model: NaiveModel, batch, labels, frozen) -> NaiveModel:
    """Apply the weighted online rule to one batch against a frozen snapshot.

    ``frozen`` is a (C, D) dense copy of the class vectors taken at batch start
    (or of the accumulators when the metric is cosine).
    """
    batch = np.asarray(batch, dtype=np.uint8)
    if len(batch) == 0:
        return model
    snap = NaiveModel(
        model.accumulators if model.metric == "hamming" else np.asarray(frozen, np.float64),
        model.weight_totals,
        np.asarray(frozen, np.uint8) if model.metric == "hamming" else model.class_vectors,
        model.tiebreak,
        model.gamma,
        model.metric,
    )
    touched = set()
    for h, c in zip(batch, labels):
        scores = naive_scores(snap, h)
        w = _best(scores, model.metric)
        dist = _as_distance(scores, model.metric)
        model.accumulators[c] += dist[c] * h
        model.weight_totals[c] += dist[c]
        touched.add(int(c))
        if w != c:
            model.accumulators[w] -= model.gamma * (1.0 - dist[w]) * h
            touched.add(w)
    model.rebinarize(sorted(touched))
    return model


def naive_train_online(encoded, labels, n_classes, tiebreak, batch_size=1, gamma=1.0, metric="hamming"):
    encoded = np.asarray(encoded, dtype=np.uint8)
    labels = np.asarray(labels)
    model = naive_train_classical(
        encoded[:batch_size], labels[:batch_size], n_classes, tiebreak, gamma, metric
    )
    model.sample_counts = np.bincount(labels, minlength=n_classes)
    for start in range(batch_size, len(encoded), batch_size):
        frozen = (model.class_vectors if metric == "hamming" else model.accumulators).copy()
        naive_online_update(
            model, encoded[start : start + batch_size], labels[start : start + batch_size], frozen
        )
    return model


def naive_predict(model: NaiveModel, queries) -> tuple[np.ndarray, np.ndarray]:
    """Labels and per-class scores; ties resolve to the lowest class index."""
    queries = np.asarray(queries, dtype=np.uint8)
    n_classes, dim = model.class_vectors.shape
    scores = np.empty((len(queries), n_classes))
    if model.metric == "hamming":
        for c in range(n_classes):
            scores[:, c] = np.count_nonzero(queries != model.class_vectors[c], axis=1) / dim
        return np.argmin(scores, axis=1), scores
    for i, q in enumerate(queries):
        scores[i] = naive_scores(model, q)
    return np.argmax(scores, axis=1), scores


# -- bipolar flavour -----------------------------------------------------------


def to_bipolar(bits) -> np.ndarray:
    """Map 0 -> +1 and 1 -> -1, so that XOR becomes elementwise multiplication."""
    return 1 - 2 * np.asarray(bits, dtype=np.int8)


def from_bipolar(x) -> np.ndarray:
    return (np.asarray(x) < 0).astype(np.uint8)


def bipolar_bind(a, b) -> np.ndarray:
    return np.asarray(a, np.int8) * np.asarray(b, np.int8)


def bipolar_bundle(rows, tiebreak) -> np.ndarray:
    """Sign of the column sums, with zero sums taking the tiebreak value."""
    s = np.asarray(rows, np.int64).sum(axis=0)
    return np.where(s == 0, np.asarray(tiebreak, np.int8), np.sign(s)).astype(np.int8)
