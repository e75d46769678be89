"""Feature discretization, codebook generation and datapoint encoding.

A datapoint with F features is first mapped to F bin indices. Each feature f
then contributes one D-bit row built from its ID hypervector and the Value
hypervector of its bin, and the rows are bundled by majority vote:

* ``id_level``    -- rows are ``ID_f xor V[bin_f]``
* ``permutation`` -- rows are ``V[bin_f]`` rotated by ``f`` positions
* ``appending``   -- no bundling; segment f of the output (``D // F`` bits)
  is the first ``D // F`` bits of ``V[bin_f]``, trailing bits are zero
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import hypervector as hv
from .hypervector import PackedBitMatrix

GENERATION_STRATEGIES = ("random", "scale_random", "sandwich")
BINDING_STRATEGIES = ("id_level", "permutation", "appending")

# rows bundled per chunk in encode_batch; bounds the (chunk, F, W) word buffer
_CHUNK_WORDS = 1 << 22

# independent generator streams derived from one codebook seed
_STREAM_ID, _STREAM_VALUE, _STREAM_TIEBREAK = 1, 2, 3


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, stream])


def generate_random(count: int, dim: int, seed=None, rng=None) -> PackedBitMatrix:
    """``count`` hypervectors with i.i.d. fair bits."""
    if count < 1 or dim < 1:
        raise ValueError(f"count and dim must be >= 1, got {count}, {dim}")
    rng = rng if rng is not None else np.random.default_rng(seed)
    words = rng.integers(0, 1 << 32, size=(count, hv.words_per_row(dim)), dtype=np.uint32)
    words[:, -1] &= hv.padding_mask(dim)
    return PackedBitMatrix(count, dim, words)


def default_tiebreak(dim: int, seed: int) -> PackedBitMatrix:
    """The tiebreak row a codebook or model built from ``seed`` uses."""
    return generate_random(1, dim, rng=_rng(seed, _STREAM_TIEBREAK))


def scale_flip_quota(bins: int, dim: int) -> int:
    return dim // (2 * (bins - 1))


def generate_scale_random(bins: int, dim: int, seed=None, rng=None) -> PackedBitMatrix:
    """Value vectors whose pairwise distance grows linearly with bin distance.

    V_0 is random; V_{k+1} flips ``dim // (2 * (bins - 1))`` fresh positions of
    V_k, so V_0 and V_{bins-1} end up roughly D/2 apart.
    """
    if bins < 2:
        raise ValueError(f"bins must be >= 2, got {bins}")
    if 2 * (bins - 1) > dim:
        raise ValueError(f"dim={dim} too small for {bins} scale-random levels")
    rng = rng if rng is not None else np.random.default_rng(seed)
    quota = scale_flip_quota(bins, dim)
    base = hv.unpack(generate_random(1, dim, rng=rng))[0]
    order = rng.permutation(dim)
    dense = np.empty((bins, dim), np.uint8)
    dense[0] = base
    for k in range(1, bins):
        dense[k] = dense[k - 1]
        flip = order[(k - 1) * quota : k * quota]
        dense[k, flip] ^= 1
    return hv.pack(dense)


def generate_sandwich(bins: int, dim: int, seed=None, rng=None) -> PackedBitMatrix:
    """Even levels random; odd level 2i+1 takes its low half from level 2i and
    its high half from level 2i+2 (random when 2i+2 does not exist)."""
    if bins < 2:
        raise ValueError(f"bins must be >= 2, got {bins}")
    if dim % 2:
        raise ValueError(f"sandwich generation needs an even dim, got {dim}")
    rng = rng if rng is not None else np.random.default_rng(seed)
    half = dim // 2
    dense = hv.unpack(generate_random(bins, dim, rng=rng))
    for k in range(1, bins, 2):
        dense[k, :half] = dense[k - 1, :half]
        if k + 1 < bins:
            dense[k, half:] = dense[k + 1, half:]
    return hv.pack(dense)


# -- discretizer ---------------------------------------------------------------


@dataclass
class Discretizer:
    minimum: np.ndarray
    maximum: np.ndarray
    bins: int

    def __post_init__(self):
        self.minimum = np.asarray(self.minimum, dtype=np.float64)
        self.maximum = np.asarray(self.maximum, dtype=np.float64)
        if self.bins < 2:
            raise ValueError(f"bins must be >= 2, got {self.bins}")
        if self.minimum.shape != self.maximum.shape or self.minimum.ndim != 1:
            raise ValueError("minimum and maximum must be 1-D arrays of equal length")
        if np.any(self.minimum > self.maximum):
            raise ValueError("minimum exceeds maximum for some feature")

    @property
    def n_features(self) -> int:
        return len(self.minimum)

    @property
    def degenerate(self) -> np.ndarray:
        return self.minimum == self.maximum

    def to_json(self) -> str:
        return json.dumps(
            {"bins": self.bins, "min": self.minimum.tolist(), "max": self.maximum.tolist()},
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "Discretizer":
        d = json.loads(text)
        return cls(np.array(d["min"], float), np.array(d["max"], float), int(d["bins"]))


def fit_discretizer(train, bins: int) -> Discretizer:
    train = np.asarray(train, dtype=np.float64)
    if train.ndim != 2 or train.shape[0] == 0 or train.shape[1] == 0:
        raise ValueError(f"cannot fit a discretizer on an empty matrix (shape {train.shape})")
    return Discretizer(train.min(axis=0), train.max(axis=0), bins)


def discretize(x, d: Discretizer) -> np.ndarray:
    """Map raw values (a length-F vector or an (n, F) matrix) to bin indices.

    Out-of-range values clamp to the edge bins; constant features map to bin 0.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != d.n_features:
        raise ValueError(f"expected {d.n_features} features, got {x.shape[-1]}")
    span = d.maximum - d.minimum
    safe = np.where(span > 0, span, 1.0)
    with np.errstate(invalid="ignore"):
        scaled = np.floor((x - d.minimum) / safe * d.bins)
    idx = np.clip(scaled, 0, d.bins - 1).astype(np.int64)
    return np.where(span > 0, idx, 0)


# -- codebook ------------------------------------------------------------------


@dataclass(eq=False)
class Codebook:
    id_vectors: PackedBitMatrix
    value_vectors: PackedBitMatrix
    tiebreak: PackedBitMatrix
    generation: str
    binding: str
    seed: int
    _bound_table: np.ndarray | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.value_vectors.dim

    @property
    def n_features(self) -> int:
        return self.id_vectors.rows

    @property
    def bins(self) -> int:
        return self.value_vectors.rows

    def header(self) -> dict:
        return {
            "generation": self.generation,
            "binding": self.binding,
            "seed": int(self.seed),
            "features": self.n_features,
            "bins": self.bins,
            "dim": self.dim,
        }

    def bound_table(self) -> np.ndarray:
        """(F, B, W) words: the row each (feature, bin) pair contributes to the bundle."""
        if self._bound_table is None:
            F, B, W = self.n_features, self.bins, hv.words_per_row(self.dim)
            table = np.empty((F, B, W), np.uint32)
            for f in range(F):
                if self.binding == "id_level":
                    table[f] = self.value_vectors.words ^ self.id_vectors.words[f]
                else:
                    table[f] = hv.rotate(self.value_vectors, f).words
            self._bound_table = table
        return self._bound_table

    def __eq__(self, other):
        if not isinstance(other, Codebook):
            return NotImplemented
        return (
            self.header() == other.header()
            and self.id_vectors == other.id_vectors
            and self.value_vectors == other.value_vectors
            and self.tiebreak == other.tiebreak
        )


def build_codebook(
    n_features: int,
    bins: int,
    dim: int,
    generation: str = "random",
    binding: str = "id_level",
    seed: int = 0,
) -> Codebook:
    """Deterministically generate the ID, Value and tiebreak hypervectors."""
    if generation not in GENERATION_STRATEGIES:
        raise ValueError(f"unknown generation strategy {generation!r}")
    if binding not in BINDING_STRATEGIES:
        raise ValueError(f"unknown binding strategy {binding!r}")
    if binding == "appending" and n_features > dim:
        raise ValueError(f"appending needs dim >= feature count ({dim} < {n_features})")
    ids = generate_random(n_features, dim, rng=_rng(seed, _STREAM_ID))
    value_rng = _rng(seed, _STREAM_VALUE)
    if generation == "random":
        values = generate_random(bins, dim, rng=value_rng)
    elif generation == "scale_random":
        values = generate_scale_random(bins, dim, rng=value_rng)
    else:
        values = generate_sandwich(bins, dim, rng=value_rng)
    tiebreak = default_tiebreak(dim, seed)
    return Codebook(ids, values, tiebreak, generation, binding, int(seed))


_CB_MAGIC = b"HVCB"


def save_codebook(cb: Codebook, path) -> None:
    """JSON header (length-prefixed) followed by ID, Value and tiebreak containers."""
    header = json.dumps(cb.header(), sort_keys=True).encode()
    body = b"".join(hv.to_bytes(m) for m in (cb.id_vectors, cb.value_vectors, cb.tiebreak))
    Path(path).write_bytes(_CB_MAGIC + struct.pack("<I", len(header)) + header + body)


def load_codebook(path) -> Codebook:
    buf = Path(path).read_bytes()
    if buf[:4] != _CB_MAGIC:
        raise ValueError(f"{path}: not a codebook file")
    (hlen,) = struct.unpack_from("<I", buf, 4)
    header = json.loads(buf[8 : 8 + hlen])
    offset = 8 + hlen
    mats = []
    for _ in range(3):
        m, offset = hv.from_bytes(buf, offset)
        mats.append(m)
    return Codebook(*mats, header["generation"], header["binding"], header["seed"])


# -- encoding ------------------------------------------------------------------


def _check_bins(X: np.ndarray, cb: Codebook) -> np.ndarray:
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[1] != cb.n_features:
        raise ValueError(f"expected bin indices of shape (n, {cb.n_features}), got {X.shape}")
    if X.size and (X.min() < 0 or X.max() >= cb.bins):
        raise ValueError(f"bin index out of range [0, {cb.bins})")
    return X.astype(np.int64, copy=False)


def _encode_appending(X: np.ndarray, cb: Codebook) -> np.ndarray:
    F, dim = cb.n_features, cb.dim
    seg = dim // F
    values = hv.unpack(cb.value_vectors)[:, :seg]  # (B, seg)
    dense = np.zeros((len(X), dim), np.uint8)
    dense[:, : F * seg] = values[X].reshape(len(X), F * seg)
    return hv._pack_bool(dense, dim)


def encode_batch(X, cb: Codebook, tiebreak: PackedBitMatrix | None = None) -> PackedBitMatrix:
    """Encode an (n, F) matrix of bin indices into n packed hypervectors."""
    X = _check_bins(X, cb)
    n, dim = len(X), cb.dim
    W = hv.words_per_row(dim)
    if cb.binding == "appending":
        return PackedBitMatrix(n, dim, _encode_appending(X, cb))
    tiebreak = cb.tiebreak if tiebreak is None else tiebreak
    if tiebreak.rows != 1 or tiebreak.dim != dim:
        raise ValueError("tiebreak must be a single row of the codebook's dim")
    table = cb.bound_table()
    features = np.arange(cb.n_features)
    out = np.empty((n, W), np.uint32)
    chunk = max(1, _CHUNK_WORDS // (cb.n_features * W))
    for start in range(0, n, chunk):
        rows = table[features, X[start : start + chunk]]  # (k, F, W)
        out[start : start + chunk] = hv.bundle_majority(rows, dim, tiebreak.words[0])
    return PackedBitMatrix(n, dim, out)


def encode(x, cb: Codebook, tiebreak: PackedBitMatrix | None = None) -> PackedBitMatrix:
    """Encode a single bin-index vector into a 1xD hypervector."""
    return encode_batch(np.asarray(x)[None, :], cb, tiebreak)
