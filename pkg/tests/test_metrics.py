import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from csmkit import errors
from csmkit.boundaries import AdjacentBoundary, WordGapBoundary
from csmkit.errors import CsmError
from csmkit.metrics import (
    CursiveCounts,
    WriterScores,
    cre_writer,
    f1_cursive_writer,
    gap_similarity,
    kgs_writer,
    macro_aggregate,
    mask_without_positives,
    mean_csm_difference,
    rank_sign_agreement,
    score_writer,
    sentence_rates,
    sss_writer,
)
from oracles import f1_bruteforce

gaps = st.floats(-5, 5, allow_nan=False)
positive_gaps = st.floats(0.01, 5)


def adj(gt_gap=0.1, pred_gap=0.1, gt_c=0, pred_c=0, index=1):
    return AdjacentBoundary(index, gt_c, pred_c, gt_gap, pred_gap)


def scores(wid="w", f1=0.5, cre=0.5, kgs=0.5, sss=0.5):
    return WriterScores(wid, f1, cre, kgs, sss)


# --- F1 -------------------------------------------------------------------


def test_f1_both_zero_is_one():
    assert f1_cursive_writer(CursiveCounts(0, 0, 0), 0, 0) == 1.0


def test_f1_two_thirds():
    assert abs(f1_cursive_writer(CursiveCounts(1, 1, 0), 1, 2) - 2 / 3) < 1e-5


def test_f1_zero_recall():
    assert f1_cursive_writer(CursiveCounts(0, 0, 3), 3, 0) == 0.0


def test_f1_one_side_zero_uses_formula():
    assert f1_cursive_writer(CursiveCounts(0, 2, 0), 0, 2) == 0.0


def test_f1_inconsistent_totals():
    with pytest.raises(CsmError):
        f1_cursive_writer(CursiveCounts(1, 0, 0), 2, 1)


def test_counts_negative():
    with pytest.raises(CsmError):
        CursiveCounts(-1, 0, 0)


@settings(max_examples=200)
@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), max_size=60))
def test_f1_matches_confusion_oracle(labels):
    bounds = [adj(gt_c=g, pred_c=p) for g, p in labels]
    counts = CursiveCounts.from_boundaries(bounds)
    got = f1_cursive_writer(counts, sum(g for g, _ in labels), sum(p for _, p in labels))
    assert got == pytest.approx(f1_bruteforce([g for g, _ in labels], [p for _, p in labels]), abs=1e-9)
    assert 0.0 <= got <= 1.0


def test_counts_pool_additively():
    a = CursiveCounts.from_boundaries([adj(gt_c=1, pred_c=1), adj(gt_c=0, pred_c=1)])
    b = CursiveCounts.from_boundaries([adj(gt_c=1, pred_c=0)])
    assert a + b == CursiveCounts(1, 1, 1)


# --- CRE ------------------------------------------------------------------


def test_cre_ten_sentence_example():
    rng = np.random.default_rng(0)
    diffs = np.full(10, 0.0656)
    gt = rng.uniform(0.2, 0.6, 10)
    signs = np.array([1, -1] * 5)
    pairs = list(zip(gt, gt + signs * diffs))
    assert cre_writer(pairs) == pytest.approx(0.9344, abs=1e-4)


def test_cre_identical_and_clipped():
    assert cre_writer([(0.3, 0.3), (0.7, 0.7)]) == 1.0
    assert cre_writer([(0.0, 1.0)] * 4) == 0.0


def test_cre_needs_sentences():
    with pytest.raises(CsmError):
        cre_writer([])


def test_sentence_rates_empty_boundary_set():
    assert sentence_rates([]) == (0.0, 0.0)
    r, rh = sentence_rates([adj(gt_c=1, pred_c=0), adj(gt_c=1, pred_c=1)])
    assert r == pytest.approx(1.0, abs=1e-6) and rh == pytest.approx(0.5, abs=1e-6)


@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=1, max_size=20), st.randoms())
def test_cre_order_invariant(pairs, rnd):
    shuffled = list(pairs)
    rnd.shuffle(shuffled)
    assert cre_writer(shuffled) == pytest.approx(cre_writer(pairs), abs=1e-12)
    assert 0.0 <= cre_writer(pairs) <= 1.0


# --- gap similarity -------------------------------------------------------


def test_gap_similarity_examples():
    assert gap_similarity(-0.1, -0.3) == 0.5
    assert gap_similarity(0.094, 0.222) == pytest.approx(0.4234, abs=5e-4)
    assert gap_similarity(0.37, 0.37) == pytest.approx(1.0, abs=1e-9)


def test_gap_similarity_one_overlap():
    # clamped overlap vs. a positive gap: heavily penalized but still positive
    s = gap_similarity(-0.2, 0.1)
    assert 0 < s < 0.5 * 1e-4


@pytest.mark.parametrize("bad", [math.nan, math.inf])
def test_gap_similarity_rejects_nonfinite(bad):
    with pytest.raises(CsmError):
        gap_similarity(bad, 0.1)


def test_gap_similarity_rho_domain():
    with pytest.raises(CsmError):
        gap_similarity(0.1, 0.1, rho=0.0)


@given(gaps, gaps)
def test_gap_similarity_range_and_symmetry(g, p):
    s = gap_similarity(g, p)
    assert 0.0 < s <= 1.0
    assert s == pytest.approx(gap_similarity(p, g), rel=1e-12)


@given(positive_gaps, positive_gaps, st.floats(0.1, 10))
def test_gap_similarity_scale_invariant(g, p, k):
    diff = abs(gap_similarity(k * g, k * p) - gap_similarity(g, p))
    if k * min(g, p) >= 0.01:
        assert diff < 1e-4
    # epsilon shifts the log ratio by at most 2*eps/(k*min(g, p)) <= 2e-3
    assert diff < 2e-3


# --- KGS / SSS ------------------------------------------------------------


def test_kgs_mean():
    bounds = [adj(-0.1, -0.2), adj(0.2, 0.2)]
    assert kgs_writer(bounds) == pytest.approx(0.75, abs=1e-6)
    assert kgs_writer([adj(0.094, 0.222)]) == pytest.approx(0.4234, abs=5e-4)
    assert kgs_writer([]) is None


def test_sss_examples():
    assert sss_writer([WordGapBoundary(1, 3, 0.094, 0.222)]) == pytest.approx(0.4234, abs=5e-4)
    assert sss_writer([]) is None
    equal = [WordGapBoundary(1, 3, w, w) for w in (0.1, 0.4, 2.0)]
    assert sss_writer(equal) == pytest.approx(1.0, abs=1e-6)


@given(st.lists(st.tuples(gaps, gaps), min_size=1, max_size=30), st.randoms())
def test_kgs_sss_order_invariant(pairs, rnd):
    bounds = [adj(g, p) for g, p in pairs]
    words = [WordGapBoundary(1, 3, g, p) for g, p in pairs]
    shuffled_b, shuffled_w = list(bounds), list(words)
    rnd.shuffle(shuffled_b)
    rnd.shuffle(shuffled_w)
    assert kgs_writer(shuffled_b) == kgs_writer(bounds)  # fsum is order-exact
    assert sss_writer(shuffled_w) == sss_writer(words)
    assert 0.0 <= kgs_writer(bounds) <= 1.0


# --- writer scoring and aggregation --------------------------------------


def test_score_writer_undefined_cases():
    empty = score_writer("w", [([], [])])
    assert (empty.f1_cursive, empty.cre, empty.kgs, empty.sss) == (None, None, None, None)
    only_adj = score_writer("w", [([adj(gt_c=1, pred_c=1)], [])])
    assert only_adj.sss is None and only_adj.kgs == pytest.approx(1.0, abs=1e-6)
    assert only_adj.f1_cursive == pytest.approx(1.0, abs=1e-5)


def test_mask_without_positives():
    plain = [score_writer(w, [([adj(), adj()], [])]) for w in "ab"]
    assert plain[0].f1_cursive == 1.0  # both-zero convention at writer level
    masked = mask_without_positives(plain)
    assert all(w.f1_cursive is None and w.cre is None and w.kgs is not None for w in masked)
    mixed = plain + [score_writer("c", [([adj(gt_c=1)], [])])]
    assert mask_without_positives(mixed) == mixed


def test_macro_examples():
    macro = macro_aggregate([scores("a", kgs=0.4, sss=None), scores("b", kgs=0.6, sss=0.7)])
    assert macro.kgs == pytest.approx(0.5)
    assert macro.sss == 0.7 and macro.writer_counts["sss"] == 1
    single = scores("a", 0.1, 0.2, 0.3, 0.4)
    m = macro_aggregate([single])
    assert (m.f1_cursive, m.cre, m.kgs, m.sss) == (0.1, 0.2, 0.3, 0.4)


def test_macro_all_undefined_and_empty():
    m = macro_aggregate([scores(sss=None)])
    assert m.sss is None and m.writer_counts["sss"] == 0
    with pytest.raises(CsmError):
        macro_aggregate([])


@given(st.floats(0, 1), st.floats(0, 1), st.integers(1, 20))
def test_macro_identical_writers(a, b, w):
    m = macro_aggregate([scores(str(i), a, b, a, b) for i in range(w)])
    assert m.f1_cursive == pytest.approx(a, abs=1e-12) and m.cre == pytest.approx(b, abs=1e-12)


def test_mean_csm_difference():
    a = scores(f1=0.5, cre=0.6, kgs=0.7, sss=0.8)
    b = scores(f1=0.4, cre=0.4, kgs=0.4, sss=0.4)
    assert mean_csm_difference(a, b) == pytest.approx(0.25)
    assert mean_csm_difference(a, a) == 0
    with pytest.raises(CsmError) as exc:
        mean_csm_difference(a, scores(sss=None))
    assert exc.value.code == errors.COMPONENT_UNDEFINED


def test_rank_sign_agreement():
    assert rank_sign_agreement([(0.1, 1), (-0.2, -1)]) == 1.0
    items = [(0.1, 1)] * 11 + [(0.1, -1), (-0.1, 1)]
    assert rank_sign_agreement(items) == pytest.approx(0.846, abs=1e-3)
    assert rank_sign_agreement([(0.0, 1), (0.1, 1)]) == 0.5
    with pytest.raises(CsmError):
        rank_sign_agreement([(0.1, 0)])
    with pytest.raises(CsmError):
        rank_sign_agreement([])


def test_pooled_f1_is_not_mean_of_sentence_f1():
    # one sentence perfect, one with a single false positive
    s1 = [adj(gt_c=1, pred_c=1)] * 3
    s2 = [adj(gt_c=0, pred_c=1)]
    w = score_writer("w", [(s1, []), (s2, [])])
    assert w.f1_cursive == pytest.approx(f1_bruteforce([1, 1, 1, 0], [1, 1, 1, 1]), abs=1e-9)


def test_random_writer_split_oracle():
    rnd = random.Random(7)
    labels = [(rnd.randint(0, 1), rnd.randint(0, 1), rnd.randrange(20)) for _ in range(1000)]
    for w in range(20):
        mine = [(g, p) for g, p, ww in labels if ww == w]
        sc = score_writer(str(w), [([adj(gt_c=g, pred_c=p) for g, p in mine], [])])
        assert sc.f1_cursive == pytest.approx(f1_bruteforce(*zip(*mine)), abs=1e-9)
