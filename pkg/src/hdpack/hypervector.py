"""Bit-packed hypervector kernels.

Layout: row-major, 32-bit little-endian words, LSB-first. Logical bit ``j`` of
a row lives in word ``j // 32`` at in-word position ``j % 32``. Bits at
positions ``>= dim`` in the last word of a row are always zero.

Vertical summation goes through a word-level tiled bit transpose followed by a
popcount. Bundling, which only needs the majority bit, skips the counts and
adds rows as bit planes instead. Neither path materialises a byte-per-bit array.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

WORD_BITS = 32
# side of the square bit tile transposed in registers (one word per tile row)
TILE = WORD_BITS

_MAGIC = b"HVPB"
_VERSION = 1
_HEADER = struct.Struct("<4sHQQ")

# (shift, mask selecting the low half of every 2*shift-bit block)
_SWAP_STAGES = (
    (16, np.uint32(0x0000FFFF)),
    (8, np.uint32(0x00FF00FF)),
    (4, np.uint32(0x0F0F0F0F)),
    (2, np.uint32(0x33333333)),
    (1, np.uint32(0x55555555)),
)


def words_per_row(dim: int) -> int:
    return (dim + WORD_BITS - 1) // WORD_BITS


def padding_mask(dim: int) -> np.uint32:
    """Mask of the valid bits in the last word of a ``dim``-bit row."""
    rem = dim % WORD_BITS
    if rem == 0:
        return np.uint32(0xFFFFFFFF)
    return np.uint32((1 << rem) - 1)


@dataclass(frozen=True, eq=False)
class PackedBitMatrix:
    """``rows`` hypervectors of ``dim`` bits, stored as a (rows, words) uint32 array."""

    rows: int
    dim: int
    words: np.ndarray

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.rows < 0:
            raise ValueError(f"rows must be >= 0, got {self.rows}")
        expected = (self.rows, words_per_row(self.dim))
        if self.words.dtype != np.uint32 or self.words.shape != expected:
            raise ValueError(
                f"words must be uint32 with shape {expected}, "
                f"got {self.words.dtype} {self.words.shape}"
            )

    @property
    def nbytes(self) -> int:
        return self.rows * words_per_row(self.dim) * 4

    def row(self, i: int) -> "PackedBitMatrix":
        return PackedBitMatrix(1, self.dim, self.words[i : i + 1].copy())

    def take(self, index) -> "PackedBitMatrix":
        words = self.words[np.asarray(index)]
        return PackedBitMatrix(words.shape[0], self.dim, np.ascontiguousarray(words))

    def padding_is_zero(self) -> bool:
        if self.rows == 0:
            return True
        return not np.any(self.words[:, -1] & ~padding_mask(self.dim))

    def __eq__(self, other):
        if not isinstance(other, PackedBitMatrix):
            return NotImplemented
        return (
            self.rows == other.rows
            and self.dim == other.dim
            and np.array_equal(self.words, other.words)
        )

    def __repr__(self):
        return f"PackedBitMatrix(rows={self.rows}, dim={self.dim})"


def zeros(rows: int, dim: int) -> PackedBitMatrix:
    return PackedBitMatrix(rows, dim, np.zeros((rows, words_per_row(dim)), np.uint32))


def vstack(parts: list[PackedBitMatrix]) -> PackedBitMatrix:
    dims = {p.dim for p in parts}
    if len(dims) != 1:
        raise ValueError(f"cannot stack matrices of different dims {sorted(dims)}")
    words = np.concatenate([p.words for p in parts], axis=0)
    return PackedBitMatrix(words.shape[0], dims.pop(), words)


def _pack_bool(bits: np.ndarray, dim: int) -> np.ndarray:
    """Pack a (..., dim) boolean/0-1 array into (..., words) uint32 without validation."""
    nwords = words_per_row(dim)
    packed = np.packbits(bits.astype(bool, copy=False), axis=-1, bitorder="little")
    pad = nwords * 4 - packed.shape[-1]
    if pad:
        widths = [(0, 0)] * (packed.ndim - 1) + [(0, pad)]
        packed = np.pad(packed, widths)
    return np.ascontiguousarray(packed).view("<u4").astype(np.uint32, copy=False)


def _unpack_words(words: np.ndarray, dim: int) -> np.ndarray:
    as_bytes = np.ascontiguousarray(words, dtype="<u4").view(np.uint8)
    return np.unpackbits(as_bytes, axis=-1, count=dim, bitorder="little")


def pack(bits) -> PackedBitMatrix:
    """Pack a dense (n, D) matrix of 0/1 values.

    Raises ValueError if the input is not 2-D or holds anything other than 0/1.
    """
    arr = np.asarray(bits)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D bit matrix, got shape {arr.shape}")
    if arr.shape[1] < 1:
        raise ValueError("bit matrix must have at least one column")
    if arr.dtype != bool:
        bad = (arr != 0) & (arr != 1)
        if np.any(bad):
            r, c = np.argwhere(bad)[0]
            raise ValueError(f"non-binary entry {arr[r, c]!r} at row {r}, column {c}")
    n, dim = arr.shape
    return PackedBitMatrix(n, dim, _pack_bool(arr, dim))


def unpack(m: PackedBitMatrix) -> np.ndarray:
    """Return the dense (rows, dim) uint8 0/1 matrix."""
    return _unpack_words(m.words, m.dim)


def xor_bind(a: PackedBitMatrix, b: PackedBitMatrix) -> PackedBitMatrix:
    """Bitwise XOR. ``b`` may be a single row, broadcast across ``a``."""
    if a.dim != b.dim:
        raise ValueError(f"dim mismatch: {a.dim} vs {b.dim}")
    if b.rows != a.rows and b.rows != 1:
        raise ValueError(f"row mismatch: {a.rows} vs {b.rows} (only 1-row broadcast allowed)")
    return PackedBitMatrix(a.rows, a.dim, np.bitwise_xor(a.words, b.words))


def _shift_up(words: np.ndarray, s: int) -> np.ndarray:
    """Move every logical bit j to j + s (bits pushed past the last word are lost)."""
    q, r = divmod(s, WORD_BITS)
    nwords = words.shape[-1]
    out = np.zeros_like(words)
    if q >= nwords:
        return out
    out[..., q:] = words[..., : nwords - q]
    if r:
        carry = np.zeros_like(out)
        carry[..., 1:] = out[..., :-1] >> np.uint32(WORD_BITS - r)
        out = (out << np.uint32(r)) | carry
    return out


def _shift_down(words: np.ndarray, s: int) -> np.ndarray:
    """Move every logical bit j to j - s (bits below zero are lost)."""
    q, r = divmod(s, WORD_BITS)
    nwords = words.shape[-1]
    out = np.zeros_like(words)
    if q >= nwords:
        return out
    out[..., : nwords - q] = words[..., q:]
    if r:
        carry = np.zeros_like(out)
        carry[..., :-1] = out[..., 1:] << np.uint32(WORD_BITS - r)
        out = (out >> np.uint32(r)) | carry
    return out


def rotate(m: PackedBitMatrix, shift: int) -> PackedBitMatrix:
    """Circularly rotate each row by ``shift`` positions over its ``dim`` logical bits.

    Bit j moves to (j + shift) mod dim.
    """
    s = shift % m.dim
    if s == 0 or m.rows == 0:
        return PackedBitMatrix(m.rows, m.dim, m.words.copy())
    words = _shift_up(m.words, s) | _shift_down(m.words, m.dim - s)
    words[:, -1] &= padding_mask(m.dim)
    return PackedBitMatrix(m.rows, m.dim, words)


def popcount(words: np.ndarray) -> np.ndarray:
    """Per-word popcount as int64."""
    return np.bitwise_count(words).astype(np.int64)


def horizontal_sum(m: PackedBitMatrix) -> np.ndarray:
    """Exact number of set bits in each row (padding bits are zero by invariant)."""
    if m.rows == 0:
        return np.zeros(0, np.int64)
    return np.bitwise_count(m.words).sum(axis=1, dtype=np.int64)


def _transpose_tiles(tiles: np.ndarray) -> np.ndarray:
    """Transpose 32x32 bit tiles held along the last axis (shape (..., 32)), in place.

    Before: bit c of tiles[..., r] is element (r, c). After: bit r of tiles[..., c].
    Five masked swap stages, each exchanging the off-diagonal blocks of every
    2s x 2s sub-block.
    """
    lead = tiles.shape[:-1]
    for s, mask in _SWAP_STAGES:
        blocks = tiles.reshape(*lead, TILE // (2 * s), 2, s)
        lo = blocks[..., 0, :]
        hi = blocks[..., 1, :]
        t = ((lo >> np.uint32(s)) ^ hi) & mask
        lo ^= t << np.uint32(s)
        hi ^= t
    return tiles


def _to_tiles(words: np.ndarray) -> tuple[np.ndarray, int]:
    """Reshape (..., R, W) words into (..., Rb, W, 32) tiles, zero-padding R."""
    *lead, nrows, nwords = words.shape
    nblocks = max(1, -(-nrows // TILE))
    pad = nblocks * TILE - nrows
    if pad:
        widths = [(0, 0)] * len(lead) + [(0, pad), (0, 0)]
        words = np.pad(words, widths)
    tiles = words.reshape(*lead, nblocks, TILE, nwords).swapaxes(-1, -2)
    # always copy: the tiles are transposed in place and a single-word swap
    # can already be contiguous, i.e. a view of the caller's words
    return tiles.copy(), nblocks


def transpose(m: PackedBitMatrix) -> PackedBitMatrix:
    """Exact bit transpose: result has rows=dim, dim=rows.

    A zero-row input has no valid transposed width, so ``rows`` must be >= 1.
    """
    if m.rows == 0:
        raise ValueError("cannot transpose a matrix with zero rows")
    tiles, nblocks = _to_tiles(m.words)  # (Rb, W, 32)
    _transpose_tiles(tiles)
    # tiles[b, w, k] now holds output row w*32 + k, output word b
    out = tiles.transpose(1, 2, 0).reshape(-1, nblocks)[: m.dim]
    out = np.ascontiguousarray(out)
    out_words = words_per_row(m.rows)
    if out.shape[1] != out_words:
        out = np.ascontiguousarray(out[:, :out_words])
    return PackedBitMatrix(m.dim, m.rows, out)


def stacked_vertical_sum(words: np.ndarray, dim: int) -> np.ndarray:
    """Column bit counts of a stack of packed matrices.

    ``words`` has shape (..., R, W); the result has shape (..., dim) and holds,
    for each leading index, how many of the R rows have bit j set.
    """
    tiles, _ = _to_tiles(words)  # (..., Rb, W, 32)
    _transpose_tiles(tiles)
    counts = np.bitwise_count(tiles).sum(axis=-3, dtype=np.int64)  # (..., W, 32)
    counts = counts.reshape(*counts.shape[:-2], -1)
    return counts[..., :dim]


def vertical_sum(m: PackedBitMatrix) -> np.ndarray:
    """Number of rows with bit j set, for every position j."""
    if m.rows == 0:
        return np.zeros(m.dim, np.int64)
    return stacked_vertical_sum(m.words, m.dim)


def bundle_majority(words: np.ndarray, dim: int, tiebreak: np.ndarray) -> np.ndarray:
    """Majority of the R rows of each (..., R, W) stack, computed word-parallel.

    Row counts are accumulated as binary bit planes (a ripple-carry adder over
    whole words), then compared against R // 2 plane by plane, so no per-bit
    counts are ever materialised. ``tiebreak`` is a (W,) word row used where
    the count is exactly R / 2. Returns (..., W) packed words.
    """
    n_rows = words.shape[-2]
    planes: list[np.ndarray] = []
    for r in range(n_rows):
        carry = words[..., r, :]
        for i in range(len(planes)):
            planes[i], carry = planes[i] ^ carry, planes[i] & carry
        # after r+1 rows the count fits in (r+1).bit_length() planes, so a
        # carry out of the top plane is only possible when one is missing
        if len(planes) < (r + 1).bit_length():
            planes.append(carry.copy())
    threshold = n_rows // 2
    gt = np.zeros_like(planes[0])
    eq = np.full_like(planes[0], 0xFFFFFFFF)
    for i in reversed(range(len(planes))):
        if (threshold >> i) & 1:
            eq &= planes[i]
        else:
            gt |= eq & planes[i]
            eq &= ~planes[i]
    out = gt if n_rows % 2 else gt | (eq & tiebreak)
    out[..., -1] &= padding_mask(dim)
    return out


def majority_bits(counts, totals, tiebreak_bits: np.ndarray) -> np.ndarray:
    """Dense majority vote: 1 where 2*count > total, tiebreak bit where equal.

    ``counts`` has shape (..., D); ``totals`` broadcasts against its leading axes.
    Works for integer counts and for real-valued weighted accumulators.
    """
    counts = np.asarray(counts)
    totals = np.asarray(totals)
    if totals.ndim:
        totals = totals[..., None]
    doubled = 2 * counts
    bits = doubled > totals
    return np.where(doubled == totals, tiebreak_bits.astype(bool), bits)


def majority_binarize(counts, n: int, tiebreak: PackedBitMatrix) -> PackedBitMatrix:
    """Binarize bit counts accumulated over ``n`` rows into a single 1xD hypervector."""
    counts = np.asarray(counts)
    if counts.ndim != 1:
        raise ValueError(f"counts must be 1-D, got shape {counts.shape}")
    if tiebreak.rows != 1 or tiebreak.dim != counts.shape[0]:
        raise ValueError(
            f"tiebreak must be 1x{counts.shape[0]}, got {tiebreak.rows}x{tiebreak.dim}"
        )
    if np.any(counts < 0) or np.any(counts > n):
        raise ValueError(f"counts must lie in [0, {n}]")
    bits = majority_bits(counts, n, unpack(tiebreak)[0])
    return PackedBitMatrix(1, tiebreak.dim, _pack_bool(bits[None, :], tiebreak.dim))


def hamming_counts(queries: PackedBitMatrix, refs: PackedBitMatrix) -> np.ndarray:
    """(n_queries, n_refs) matrix of differing-bit counts."""
    if queries.dim != refs.dim:
        raise ValueError(f"dim mismatch: {queries.dim} vs {refs.dim}")
    out = np.empty((queries.rows, refs.rows), np.int64)
    for j in range(refs.rows):
        out[:, j] = np.bitwise_count(queries.words ^ refs.words[j]).sum(axis=1, dtype=np.int64)
    return out


# -- serialization ---------------------------------------------------------


def to_bytes(m: PackedBitMatrix) -> bytes:
    header = _HEADER.pack(_MAGIC, _VERSION, m.rows, m.dim)
    return header + m.words.astype("<u4", copy=False).tobytes()


def from_bytes(buf: bytes, offset: int = 0) -> tuple[PackedBitMatrix, int]:
    """Parse one container starting at ``offset``; return it and the end offset."""
    if len(buf) - offset < _HEADER.size:
        raise ValueError("truncated packed-matrix header")
    magic, version, rows, dim = _HEADER.unpack_from(buf, offset)
    if magic != _MAGIC:
        raise ValueError(f"bad magic {magic!r}, expected {_MAGIC!r}")
    if version != _VERSION:
        raise ValueError(f"unsupported container version {version}")
    start = offset + _HEADER.size
    end = start + rows * words_per_row(dim) * 4
    if len(buf) < end:
        raise ValueError("truncated packed-matrix payload")
    words = np.frombuffer(buf, dtype="<u4", count=rows * words_per_row(dim), offset=start)
    m = PackedBitMatrix(rows, dim, words.astype(np.uint32).reshape(rows, words_per_row(dim)))
    if not m.padding_is_zero():
        raise ValueError("container has non-zero padding bits")
    return m, end


def save(m: PackedBitMatrix, path) -> None:
    Path(path).write_bytes(to_bytes(m))


def load(path) -> PackedBitMatrix:
    buf = Path(path).read_bytes()
    m, end = from_bytes(buf)
    if end != len(buf):
        raise ValueError(f"{path}: {len(buf) - end} trailing bytes after container")
    return m


def write_dense_csv(m: PackedBitMatrix, path) -> None:
    np.savetxt(path, unpack(m), fmt="%d", delimiter=",")


def read_dense_csv(path) -> PackedBitMatrix:
    arr = np.loadtxt(path, delimiter=",", dtype=np.int64, ndmin=2)
    return pack(arr)
