import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from csmkit import errors
from csmkit.dtw import DtwResult, dtw_distance, dtw_writer_stats, normalize_for_dtw, writer_dtw_summary
from csmkit.errors import CsmError
from oracles import dtw_bruteforce, warping_paths
from synth import char_from_xy, make_sentence, sample_from_chars

small = st.lists(st.tuples(st.integers(0, 2), st.integers(0, 2)), min_size=1, max_size=5)
points = st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=1, max_size=12)


def test_path_count_is_delannoy():
    assert [len(warping_paths(n, n)) for n in range(1, 6)] == [1, 3, 13, 63, 321]


def test_identity_and_single_point():
    a = np.random.default_rng(0).normal(size=(7, 2))
    r = dtw_distance(a, a)
    assert (r.raw, r.normalized) == (0.0, 0.0)
    r = dtw_distance([(0, 0)], [(3, 4)])
    assert (r.raw, r.normalized, r.gt_point_count) == (5.0, 5.0, 1)


def test_normalized_uses_gt_length():
    r = dtw_distance([(0, 0), (0, 0), (0, 0), (0, 0)], [(1, 0)])
    assert r.raw == 4.0 and r.normalized == 1.0
    s = dtw_distance([(1, 0)], [(0, 0), (0, 0), (0, 0), (0, 0)])
    assert s.raw == 4.0 and s.normalized == 4.0


def test_accepts_samples_and_points():
    s = make_sentence(np.random.default_rng(1), text="ab")
    assert dtw_distance(s, s.all_points()).raw == 0.0


def test_empty_sequence():
    with pytest.raises(CsmError) as exc:
        dtw_distance([], [(0, 0)])
    assert exc.value.code == errors.EMPTY_SEQUENCE


@settings(max_examples=300)
@given(small, small)
def test_matches_bruteforce(a, b):
    assert dtw_distance(a, b).raw == dtw_bruteforce(a, b)


@given(points, points)
def test_symmetric_raw(a, b):
    assert dtw_distance(a, b).raw == pytest.approx(dtw_distance(b, a).raw, rel=1e-12, abs=1e-12)


@given(points, points)
def test_normalized_exact(a, b):
    r = dtw_distance(a, b)
    assert r.raw >= 0 and r.normalized == r.raw / len(a)


@given(points, points)
def test_append_copy_bound(a, b):
    base = dtw_distance(a, b).raw
    extended = dtw_distance(a + [a[-1]], b).raw
    nearest = min(np.hypot(a[-1][0] - x, a[-1][1] - y) for x, y in b)
    assert base - 1e-9 <= extended
    assert extended <= base + np.hypot(a[-1][0] - b[-1][0], a[-1][1] - b[-1][1]) + 1e-9
    assert nearest <= np.hypot(a[-1][0] - b[-1][0], a[-1][1] - b[-1][1])


def test_normalize_for_dtw():
    c = char_from_xy("a", [(1, 3), (5, 5)])
    out = normalize_for_dtw(sample_from_chars("a", [c]))
    xy = out.xy()
    assert xy.min(axis=0).tolist() == [0, 0] and xy.max(axis=0).tolist() == [2, 1]
    again = normalize_for_dtw(out)
    np.testing.assert_allclose(again.xy(), xy, atol=1e-9)
    flat = sample_from_chars("a", [char_from_xy("a", [(0, 1), (3, 1)])])
    with pytest.raises(CsmError) as exc:
        normalize_for_dtw(flat)
    assert exc.value.code == errors.ZERO_HEIGHT


def test_normalize_keeps_orientation():
    s = make_sentence(np.random.default_rng(2), text="slanted", slope=0.3)
    out = normalize_for_dtw(s)
    k = 1 / np.ptp(s.xy()[:, 1])
    np.testing.assert_allclose(np.diff(out.xy(), axis=0), np.diff(s.xy(), axis=0) * k, atol=1e-12)


def result(norm, n=1):
    return DtwResult(norm * n, norm, n)


def test_writer_stats():
    one = dtw_writer_stats({"w": [result(1.0), result(3.0)]})
    assert (one.dtw_norm, one.std) == (2.0, 1.0)
    single = dtw_writer_stats({"a": [result(1.0)], "b": [result(2.0)]})
    assert single.std == 0.0 and single.dtw_norm == 1.5
    assert writer_dtw_summary([result(1.0, 2), result(3.0, 2)]) == (2.0, 4.0, 1.0)
    with pytest.raises(CsmError):
        dtw_writer_stats({})
