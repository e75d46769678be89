import numpy as np
import pytest

from hdpack import hypervector as hv
from hdpack import model as mdl
from hdpack import reference as ref

from conftest import EDGE_DIMS, random_bits


@pytest.mark.parametrize("dim", EDGE_DIMS)
def test_kernels_agree_at_edge_dims(rng, dim):
    n = int(rng.integers(1, 40))
    a, b = random_bits(rng, n, dim), random_bits(rng, n, dim)
    pa, pb = hv.pack(a), hv.pack(b)
    shift = int(rng.integers(0, 2 * dim))
    np.testing.assert_array_equal(hv.unpack(hv.xor_bind(pa, pb)), ref.naive_xor(a, b))
    np.testing.assert_array_equal(hv.unpack(hv.rotate(pa, shift)), ref.naive_rotate(a, shift))
    np.testing.assert_array_equal(hv.horizontal_sum(pa), ref.naive_hsum(a))
    np.testing.assert_array_equal(hv.vertical_sum(pa), ref.naive_vsum(a))
    np.testing.assert_array_equal(hv.unpack(hv.transpose(pa)), ref.naive_transpose(a))
    tie = random_bits(rng, 1, dim)
    counts = a.sum(axis=0)
    np.testing.assert_array_equal(
        hv.unpack(hv.majority_binarize(counts, n, hv.pack(tie)))[0],
        ref.naive_majority(counts, n, tie),
    )
    assert mdl.hamming_distance(pa.row(0), pb.row(0)) == ref.naive_hamming(a[0], b[0])


def test_naive_hamming_self_is_zero(rng):
    a = random_bits(rng, 1, 77)
    assert ref.naive_hamming(a, a) == 0.0


def test_naive_classical_one_hot_samples():
    samples = np.eye(4, dtype=np.uint8)
    m = ref.naive_train_classical(samples, [0, 1, 2, 3], 4, np.zeros(4, np.uint8))
    np.testing.assert_array_equal(m.class_vectors, samples)


def test_naive_rejects_non_binary():
    with pytest.raises(ValueError):
        ref.naive_xor([[0, 2]], [[0, 1]])


def test_naive_majority_rejects_bad_counts():
    with pytest.raises(ValueError):
        ref.naive_majority([-1, 0], 2, [0, 0])


def test_naive_cosine_undefined_on_zero_vector():
    with pytest.raises(ValueError):
        ref.naive_cosine(np.zeros(5), [[1, 0, 1, 0, 0]])


def test_dense_footprint_is_eight_times_packed(rng):
    bits = random_bits(rng, 10, 1024)
    assert bits.nbytes == 8 * hv.pack(bits).nbytes


def test_bipolar_bind_matches_xor(rng):
    a, b = random_bits(rng, 1, 500)[0], random_bits(rng, 1, 500)[0]
    out = ref.from_bipolar(ref.bipolar_bind(ref.to_bipolar(a), ref.to_bipolar(b)))
    np.testing.assert_array_equal(out, a ^ b)


def test_bipolar_bundle_matches_majority(rng):
    rows = random_bits(rng, 6, 400)
    tie = random_bits(rng, 1, 400)[0]
    # bit 1 is -1 in bipolar form, so a zero sum maps to the tiebreak bit's sign
    bundled = ref.bipolar_bundle(ref.to_bipolar(rows), ref.to_bipolar(tie))
    np.testing.assert_array_equal(
        ref.from_bipolar(bundled), ref.naive_majority(rows.sum(axis=0), 6, tie)
    )
