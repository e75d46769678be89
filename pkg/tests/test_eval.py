import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hdpack import eval as ev


def scalar_smooth(labels, window):
    half, n = window // 2, len(labels)
    out = []
    for i in range(n):
        w = labels[max(0, i - half) : min(n, i + half + 1)]
        out.append(1 if 2 * sum(w) >= len(w) else 0)
    return out


def scalar_episodes(pred, truth):
    def runs(seq):
        out, start = [], None
        for i, v in enumerate(list(seq) + [0]):
            if v and start is None:
                start = i
            elif not v and start is not None:
                out.append((start, i))
                start = None
        return out

    t_runs, p_runs = runs(truth), runs(pred)
    detected = sum(1 for a, b in t_runs if any(pred[a:b]))
    fp = sum(1 for a, b in p_runs if not any(truth[a:b]))
    return detected, len(t_runs), fp


# -- smoothing ------------------------------------------------------------------------


def test_window_one_is_identity():
    x = [0, 1, 1, 0, 1]
    assert ev.smooth_labels(x, 1).tolist() == x


def test_constant_sequences_unchanged():
    assert ev.smooth_labels([1] * 9, 5).tolist() == [1] * 9
    assert ev.smooth_labels([0] * 9, 5).tolist() == [0] * 9


def test_window_three_clipped_edges():
    # the first window is [0, 1], a tie, which resolves to 1
    assert ev.smooth_labels([0, 1, 0, 1, 1, 1, 0], 3).tolist() == [1, 0, 1, 1, 1, 1, 1]


def test_even_window_rejected():
    with pytest.raises(ValueError):
        ev.smooth_labels([0, 1], 4)


@settings(max_examples=80, deadline=None)
@given(st.lists(st.integers(0, 1), max_size=80), st.integers(0, 10))
def test_prop_smoothing_matches_scalar(labels, k):
    window = 2 * k + 1
    out = ev.smooth_labels(labels, window)
    assert len(out) == len(labels)
    assert out.tolist() == scalar_smooth(labels, window)


# -- sample metrics ------------------------------------------------------------------------


def test_confusion_arithmetic():
    truth = np.array([1] * 10 + [0] * 90)
    pred = np.array([1] * 8 + [0] * 2 + [1] * 2 + [0] * 88)
    r = ev.sample_metrics(pred, truth)
    assert (r.tp, r.fp, r.fn, r.tn) == (8, 2, 2, 88)
    assert r.tpr == pytest.approx(0.8) and r.ppv == pytest.approx(0.8) and r.f1 == pytest.approx(0.8)
    assert r.accuracy == pytest.approx(0.96)


def test_perfect_prediction():
    y = np.array([0, 1, 1, 0])
    r = ev.sample_metrics(y, y)
    assert r.accuracy == 1.0 and r.f1 == 1.0


def test_undefined_ratios_are_absent():
    r = ev.sample_metrics([0, 0, 0], [0, 0, 0])
    assert r.tpr is None and r.ppv is None and r.f1 is None
    assert json.loads(r.to_json())["f1"] is None
    assert r.to_csv_row().splitlines()[1].endswith(",,,")


def test_metrics_scalar_counts(rng):
    pred = rng.integers(0, 2, size=10000)
    truth = rng.integers(0, 2, size=10000)
    tp = fp = fn = tn = 0
    for p, t in zip(pred, truth):
        if p and t:
            tp += 1
        elif p:
            fp += 1
        elif t:
            fn += 1
        else:
            tn += 1
    r = ev.sample_metrics(pred, truth)
    assert (r.tp, r.fp, r.fn, r.tn) == (tp, fp, fn, tn)
    assert r.f1 == pytest.approx(2 * tp / (2 * tp + fp + fn))


def test_fp_fn_swap_symmetry():
    a = ev.sample_metrics([1, 1, 1, 0, 0], [1, 1, 0, 1, 0])
    b = ev.sample_metrics([1, 1, 0, 1, 0], [1, 1, 1, 0, 0])
    assert a.fp == a.fn == b.fp == b.fn and a.f1 == b.f1


def test_length_mismatch():
    with pytest.raises(ValueError):
        ev.sample_metrics([0, 1], [0])


# -- episodes ----------------------------------------------------------------------------------


def test_one_sample_overlap_detects():
    e = ev.episode_metrics([0, 0, 1, 0, 0], [0, 1, 1, 1, 0])
    assert (e.detected, e.total, e.false_positive) == (1, 1, 0)


def test_all_zero_predictions():
    e = ev.episode_metrics([0] * 6, [1, 1, 0, 0, 1, 0])
    assert (e.detected, e.total, e.false_positive) == (0, 2, 0)
    assert e.sensitivity == 0.0 and e.precision is None


def test_episodes_scalar_scan(rng):
    for _ in range(50):
        pred = (rng.random(200) < 0.1).astype(int)
        truth = (rng.random(200) < 0.1).astype(int)
        e = ev.episode_metrics(pred, truth)
        assert (e.detected, e.total, e.false_positive) == scalar_episodes(pred.tolist(), truth.tolist())
        assert 0 <= e.detected <= e.total


# -- timing ---------------------------------------------------------------------------------------


def test_time_noop():
    _, seconds = ev.time_stage("noop", lambda: None)
    assert 0 <= seconds < 1e-3


def test_time_two_stages_and_report():
    timings = {}
    ev.time_stage("encode", lambda: sum(range(1000)), timings)
    ev.time_stage("predict", lambda: None, timings)
    assert set(timings) == {"encode", "predict"}
    t = ev.Timer()
    assert t.run("a", lambda x: x + 1, 1) == 2
    t.run("a", lambda: None)
    assert list(t.timings) == ["a"]
    r = ev.sample_metrics([1], [1])
    r.timings = timings
    assert "time_encode" in r.csv_fields()
    assert "timings" not in r.to_dict(with_timings=False)
