import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hdpack import data as dm


def write(path, text):
    path.write_text(text)
    return path


def seg_dataset(segments):
    segments = np.asarray(segments)
    n = len(segments)
    return dm.Dataset(np.zeros((n, 2)), np.zeros(n, int), segments)


# -- loading ----------------------------------------------------------------------


def test_load_three_rows(tmp_path):
    p = write(tmp_path / "a.csv", "x,y,label\n1,2,0\n3,4,1\n5,6,0\n")
    d = dm.load_csv(p)
    assert len(d) == 3 and d.n_features == 2 and d.segments is None
    assert d.X.tolist() == [[1, 2], [3, 4], [5, 6]] and d.y.tolist() == [0, 1, 0]
    assert d.feature_names == ["x", "y"]


def test_load_segments(tmp_path):
    p = write(tmp_path / "a.csv", "segment,x,label\n0,1.5,0\n0,2.5,1\n1,3.5,1\n")
    d = dm.load_csv(p)
    assert d.segments.tolist() == [0, 0, 1] and d.n_features == 1


def test_custom_column_names(tmp_path):
    p = write(tmp_path / "a.csv", "x,cls,hour\n1,0,0\n2,1,1\n")
    d = dm.load_csv(p, label_column="cls", segment_column="hour")
    assert d.y.tolist() == [0, 1] and d.segments.tolist() == [0, 1]


@pytest.mark.parametrize(
    "text,pattern",
    [
        ("x,label\n1,0\n2\n", r":3: expected 2 fields"),
        ("x,label\n1,0\nabc,1\n", r":3: non-numeric value 'abc' in column 'x'"),
        ("x,label\n1,0\nnan,1\n", r":3: non-finite"),
        ("x,label\n1,0.5\n", r":2: column 'label' must hold integers"),
        ("x,y\n1,0\n", r"label column 'label' not in header"),
        ("", r"empty file"),
        ("x,label\n", r"no data rows"),
        ("x,label,segment\n1,0,1\n1,0,0\n", r"non-decreasing"),
        ("x,label\n1,-1\n", r"non-negative"),
    ],
)
def test_load_errors(tmp_path, text, pattern):
    p = write(tmp_path / "bad.csv", text)
    with pytest.raises(dm.DataError, match=pattern):
        dm.load_csv(p)


def test_roundtrip_10k(tmp_path):
    d = dm.make_synthetic(10000, 6, 3, n_segments=5, seed=1)
    dm.write_csv(d, tmp_path / "s.csv")
    back = dm.load_csv(tmp_path / "s.csv")
    expect = np.array([[float(f"{v:.15g}") for v in row] for row in d.X])
    np.testing.assert_array_equal(back.X, expect)
    np.testing.assert_allclose(back.X, d.X, rtol=1e-14, atol=0)
    np.testing.assert_array_equal(back.y, d.y)
    np.testing.assert_array_equal(back.segments, d.segments)


# -- splits -------------------------------------------------------------------------


def test_tscv_three_segments():
    plan = dm.tscv_folds(seg_dataset([0, 0, 1, 1, 2]))
    assert [(tr.tolist(), te.tolist()) for tr, te in plan.folds] == [
        ([0, 1], [2, 3]),
        ([0, 1, 2, 3], [4]),
    ]


def test_tscv_two_segments_one_fold():
    assert len(dm.tscv_folds(seg_dataset([0, 1]))) == 1


def test_tscv_24_segments_grow():
    segs = np.repeat(np.arange(24), 3)
    d = seg_dataset(segs)
    plan = dm.tscv_folds(d)
    assert len(plan) == 23
    prev = set()
    for k, (tr, te) in enumerate(plan.folds, start=1):
        assert set(d.segments[te]) == {k}
        assert d.segments[tr].max() < k
        assert set(tr) > prev
        prev = set(tr)


def test_tscv_errors():
    with pytest.raises(dm.DataError):
        dm.tscv_folds(dm.Dataset(np.zeros((2, 1)), [0, 1]))
    with pytest.raises(dm.DataError):
        dm.tscv_folds(seg_dataset([3, 3]))


def test_loso_three_segments():
    d = seg_dataset([0, 1, 1, 2])
    plan = dm.leave_one_segment_out(d)
    assert len(plan) == 3
    for s, (tr, te) in enumerate(plan.folds):
        assert set(d.segments[te]) == {s} and s not in set(d.segments[tr])
        assert sorted(tr.tolist() + te.tolist()) == list(range(4))


def test_loso_fold_sizes_40_segments(rng):
    sizes = rng.integers(1, 30, size=40)
    d = seg_dataset(np.repeat(np.arange(40), sizes))
    plan = dm.leave_one_segment_out(d)
    counts = {}
    for s in d.segments:
        counts[int(s)] = counts.get(int(s), 0) + 1
    for s, (tr, te) in enumerate(plan.folds):
        assert len(te) == counts[s] and len(tr) == len(d) - counts[s]


def test_loso_needs_two_segments():
    with pytest.raises(dm.DataError):
        dm.leave_one_segment_out(seg_dataset([0, 0]))


def test_holdout_takes_the_tail():
    d = seg_dataset(np.zeros(10, int))
    (tr, te), = dm.holdout_split(d, 0.2).folds
    assert tr.tolist() == list(range(8)) and te.tolist() == [8, 9]


def test_plan_json_is_auditable():
    import json

    doc = json.loads(dm.tscv_folds(seg_dataset([0, 1, 2])).to_json())
    assert doc["kind"] == "tscv" and doc["folds"][1] == {"train": [0, 1], "test": [2]}


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 5), min_size=2, max_size=60))
def test_prop_folds_disjoint(raw):
    segs = np.sort(np.array(raw))
    if len(np.unique(segs)) < 2:
        return
    d = seg_dataset(segs)
    for plan in (dm.tscv_folds(d), dm.leave_one_segment_out(d)):
        for tr, te in plan.folds:
            assert not set(tr) & set(te)
            if plan.kind == "tscv":
                assert d.segments[tr].max() < d.segments[te].min()


# -- subsampling ------------------------------------------------------------------------


def imbalanced(n_min, n_maj, seed=0):
    y = np.zeros(n_min + n_maj, int)
    y[np.random.default_rng(seed).choice(len(y), n_min, replace=False)] = 1
    return dm.Dataset(np.arange(len(y), dtype=float)[:, None], y)


def test_factor_ten():
    out = dm.subsample_factor(imbalanced(10, 500), 1, 10, seed=3)
    assert len(out) == 110 and int((out.y == 1).sum()) == 10
    assert np.all(np.diff(out.X[:, 0]) > 0)


def test_factor_clamps():
    out = dm.subsample_factor(imbalanced(10, 50), 1, 10, seed=3)
    assert len(out) == 60


def test_subsample_is_seeded():
    d = imbalanced(10, 500)
    a = dm.subsample_factor(d, 1, 10, seed=5)
    b = dm.subsample_factor(d, 1, 10, seed=5)
    np.testing.assert_array_equal(a.X, b.X)


def test_subsample_errors():
    with pytest.raises(dm.DataError):
        dm.subsample_factor(imbalanced(10, 20), 2, 10)
    with pytest.raises(dm.DataError):
        dm.subsample_factor(imbalanced(10, 20), 1, 0)
