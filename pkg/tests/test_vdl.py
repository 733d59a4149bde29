import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from csmkit import errors
from csmkit.errors import CsmError
from csmkit.vdl import (
    BoundaryOffsets,
    VdlWeights,
    VerticalStats,
    boundary_offsets,
    sentence_vdl,
    vdl_loss,
    vertical_stats,
)
from synth import char_from_xy, make_sentence, perturb, sample_from_chars

GT_DE = BoundaryOffsets(d_cen=0.103238, d_top=0.336806, d_bot=-0.031129)
PRED_DE = BoundaryOffsets(d_cen=0.019994, d_top=0.195319, d_bot=-0.079883)


def column(ys):
    return char_from_xy("a", [(0.0, y) for y in ys])


def test_vertical_stats_examples():
    assert vertical_stats(column([0, 0, 1, 1]), 0.5) == VerticalStats(0.5, 1.0, 0.0)
    assert vertical_stats(column([0.3])) == VerticalStats(0.3, 0.3, 0.3)
    st_ = vertical_stats(column([0, 0.25, 0.5, 0.75, 1]), 0.2)
    assert (st_.top, st_.bottom, st_.centroid) == (1.0, 0.0, 0.5)


def test_vertical_stats_orientation():
    up = vertical_stats(column([0, 1, 2, 3]), 0.25)
    down = vertical_stats(column([0, 1, 2, 3]), 0.25, y_up=False)
    assert up.bottom <= up.centroid <= up.top
    assert (down.top, down.bottom) == (up.bottom, up.top)


def test_vertical_stats_errors():
    with pytest.raises(CsmError) as exc:
        vertical_stats(char_from_xy("a", []))
    assert exc.value.code == errors.EMPTY_CHARACTER
    with pytest.raises(CsmError):
        vertical_stats(column([0, 1]), 0.0)


def test_boundary_offsets():
    s = VerticalStats(0.1, 0.5, -0.2)
    assert boundary_offsets(s, s) == BoundaryOffsets(0.0, 0.0, 0.0)
    assert boundary_offsets(s, VerticalStats(0.3, 0.5, -0.2)).d_cen == pytest.approx(0.2)


def test_worked_example():
    assert vdl_loss([GT_DE], [PRED_DE]) == pytest.approx(0.036255, abs=1e-5)


def test_loss_simple_cases():
    assert vdl_loss([GT_DE, PRED_DE], [GT_DE, PRED_DE]) == 0.0
    assert vdl_loss([BoundaryOffsets(0, 0, 0)], [BoundaryOffsets(0.1, 0, 0)]) == pytest.approx(0.02)
    with pytest.raises(CsmError) as exc:
        vdl_loss([GT_DE], [])
    assert exc.value.code == errors.LENGTH_MISMATCH
    with pytest.raises(CsmError) as exc:
        vdl_loss([], [])
    assert exc.value.code == errors.EMPTY_BOUNDARY_SET


def test_weights_validation():
    with pytest.raises(CsmError):
        VdlWeights(w_top=-1)


offsets = st.builds(BoundaryOffsets, *(st.floats(-2, 2),) * 3)


@given(st.lists(st.tuples(offsets, offsets), min_size=1, max_size=10))
def test_loss_non_negative_zero_iff_equal(pairs):
    g, p = zip(*pairs)
    loss = vdl_loss(g, p)
    assert loss >= 0
    assert (loss == 0) == all(a == b for a, b in pairs) or loss < 1e-300


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(-5, 5), st.floats(0.1, 10))
def test_sentence_translation_and_scale(seed, dy, k):
    rng = np.random.default_rng(seed)
    gt = make_sentence(rng, text="vertical drift")
    pred = perturb(gt, rng, noise=0.05)
    base, rows = sentence_vdl(gt, pred)
    assert [r.index for r in rows] == sorted(r.index for r in rows)
    shifted, _ = sentence_vdl(gt.map_xy(lambda a: a + [0, dy]), pred)
    assert shifted == pytest.approx(base, abs=1e-9)
    scaled, _ = sentence_vdl(gt.map_xy(lambda a: a * [1, k]), pred.map_xy(lambda a: a * [1, k]))
    assert scaled == pytest.approx(k * k * base, rel=1e-9, abs=1e-9)


def test_sentence_rows_sum_to_loss():
    rng = np.random.default_rng(5)
    gt = make_sentence(rng, text="ab cd")
    pred = perturb(gt, rng)
    loss, rows = sentence_vdl(gt, pred)
    assert [r.index for r in rows] == [1, 4]
    assert loss == pytest.approx(sum(r.contribution for r in rows) / len(rows))


def test_sentence_without_boundaries():
    s = sample_from_chars("a b", [column([0, 1]), char_from_xy(" ", []), column([0, 2])])
    with pytest.raises(CsmError) as exc:
        sentence_vdl(s, s)
    assert exc.value.code == errors.EMPTY_BOUNDARY_SET
