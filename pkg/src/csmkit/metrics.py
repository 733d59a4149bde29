"""Connectivity and Spacing Metrics: F1_cursive, CRE, KGS and SSS.

Scores live in [0, 1]; ``None`` marks a metric that is undefined for a writer
(reported as ``--``). Writer-level values are macro-averaged with equal
weight per writer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from statistics import fmean
from typing import Iterable, Sequence

from csmkit import errors
from csmkit.boundaries import AdjacentBoundary, WordGapBoundary
from csmkit.errors import CsmError

EPSILON = 1e-6
RHO = 0.5
METRICS = ("f1_cursive", "cre", "kgs", "sss")


@dataclass(frozen=True)
class CursiveCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn) < 0:
            raise CsmError(errors.INVALID_ARGUMENT, "confusion counts must be non-negative")

    def __add__(self, other: CursiveCounts) -> CursiveCounts:
        return CursiveCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)

    @classmethod
    def from_boundaries(cls, boundaries: Iterable[AdjacentBoundary]) -> CursiveCounts:
        tp = fp = fn = 0
        for b in boundaries:
            if b.pred_cursive and b.gt_cursive:
                tp += 1
            elif b.pred_cursive:
                fp += 1
            elif b.gt_cursive:
                fn += 1
        return cls(tp, fp, fn)


@dataclass(frozen=True)
class WriterScores:
    writer_id: str
    f1_cursive: float | None
    cre: float | None
    kgs: float | None
    sss: float | None
    n_sentences: int = 0
    n_boundaries: int = 0
    n_word_gaps: int = 0
    counts: CursiveCounts = field(default_factory=CursiveCounts)

    @property
    def gt_positives(self) -> int:
        return self.counts.tp + self.counts.fn

    @property
    def pred_positives(self) -> int:
        return self.counts.tp + self.counts.fp


@dataclass(frozen=True)
class MacroReport:
    """Writer-macro means over the writers for which each metric is defined."""

    f1_cursive: float | None
    cre: float | None
    kgs: float | None
    sss: float | None
    writer_counts: dict[str, int]
    writers: tuple[WriterScores, ...]
    epsilon: float = EPSILON


def f1_cursive_writer(
    counts: CursiveCounts, gt_positive_total: int, pred_positive_total: int, epsilon: float = EPSILON
) -> float:
    """Writer-level F1 of the CURSIVE_EOC class from pooled counts.

    Returns exactly 1.0 when neither side has a positive boundary.
    """
    if counts.tp + counts.fn != gt_positive_total or counts.tp + counts.fp != pred_positive_total:
        raise CsmError(errors.INVALID_ARGUMENT, f"counts {counts} inconsistent with positive totals")
    if gt_positive_total == 0 and pred_positive_total == 0:
        return 1.0
    prec = counts.tp / (counts.tp + counts.fp + epsilon)
    rec = counts.tp / (counts.tp + counts.fn + epsilon)
    return 2 * prec * rec / (prec + rec + epsilon)


def sentence_rates(boundaries: Sequence[AdjacentBoundary], epsilon: float = EPSILON) -> tuple[float, float]:
    """GT and predicted cursive rates of one sentence.

    A sentence without adjacent boundaries yields (0, 0).
    """
    denom = len(boundaries) + epsilon
    return sum(b.gt_cursive for b in boundaries) / denom, sum(b.pred_cursive for b in boundaries) / denom


def cre_writer(sentence_rates: Sequence[tuple[float, float]]) -> float:
    """``max(0, 1 - MAE)`` of per-sentence (GT, predicted) cursive rates."""
    if not sentence_rates:
        raise CsmError(errors.INVALID_ARGUMENT, "CRE needs at least one sentence")
    mae = fmean(abs(pred - gt) for gt, pred in sentence_rates)
    return max(0.0, 1.0 - mae)


def gap_similarity(gt_gap: float, pred_gap: float, rho: float = RHO, epsilon: float = EPSILON) -> float:
    """Overlap-penalized symmetric log-ratio similarity of two gaps.

    Negative gaps (overlaps) are clamped to zero and, if either side
    overlaps, the score is multiplied by ``rho``.
    """
    if not (math.isfinite(gt_gap) and math.isfinite(pred_gap)):
        raise CsmError(errors.INVALID_ARGUMENT, "gaps must be finite")
    if not 0 < rho <= 1:
        raise CsmError(errors.INVALID_ARGUMENT, f"rho must be in (0, 1], got {rho}")
    penalty = rho if (gt_gap < 0 or pred_gap < 0) else 1.0
    ratio = (max(pred_gap, 0.0) + epsilon) / (max(gt_gap, 0.0) + epsilon)
    return penalty * math.exp(-abs(math.log(ratio)))


def _mean_similarity(pairs: Sequence[tuple[float, float]], rho: float, epsilon: float) -> float | None:
    if not pairs:
        return None
    return math.fsum(gap_similarity(g, p, rho, epsilon) for g, p in pairs) / (len(pairs) + epsilon)


def kgs_writer(boundaries: Sequence[AdjacentBoundary], rho: float = RHO, epsilon: float = EPSILON) -> float | None:
    """Kerning Gap Similarity pooled over all of a writer's adjacent boundaries."""
    return _mean_similarity([(b.gt_gap, b.pred_gap) for b in boundaries], rho, epsilon)


def sss_writer(gaps: Sequence[WordGapBoundary], rho: float = RHO, epsilon: float = EPSILON) -> float | None:
    """Space Spacing Similarity pooled over all of a writer's word gaps."""
    return _mean_similarity([(g.gt_width, g.pred_width) for g in gaps], rho, epsilon)


def score_writer(
    writer_id: str,
    sentences: Sequence[tuple[Sequence[AdjacentBoundary], Sequence[WordGapBoundary]]],
    rho: float = RHO,
    epsilon: float = EPSILON,
) -> WriterScores:
    """All four metrics for one writer.

    Args:
        writer_id: Writer identifier carried into the result.
        sentences: One ``(adjacent_boundaries, word_gaps)`` pair per sentence.
    """
    adjacent = [b for adj, _ in sentences for b in adj]
    gaps = [g for _, gp in sentences for g in gp]
    counts = CursiveCounts.from_boundaries(adjacent)
    if adjacent:
        f1 = f1_cursive_writer(counts, counts.tp + counts.fn, counts.tp + counts.fp, epsilon)
        cre = cre_writer([sentence_rates(adj, epsilon) for adj, _ in sentences])
    else:
        f1 = cre = None
    return WriterScores(
        writer_id=writer_id,
        f1_cursive=f1,
        cre=cre,
        kgs=kgs_writer(adjacent, rho, epsilon),
        sss=sss_writer(gaps, rho, epsilon),
        n_sentences=len(sentences),
        n_boundaries=len(adjacent),
        n_word_gaps=len(gaps),
        counts=counts,
    )


def mask_without_positives(per_writer: Sequence[WriterScores]) -> list[WriterScores]:
    """Mark F1_cursive and CRE undefined when no writer has any cursive positive.

    Without a single CURSIVE_EOC boundary on either side (e.g. Chinese
    text) both metrics are vacuous.
    """
    if any(w.gt_positives or w.pred_positives for w in per_writer):
        return list(per_writer)
    return [replace(w, f1_cursive=None, cre=None) for w in per_writer]


def macro_aggregate(per_writer: Sequence[WriterScores], epsilon: float = EPSILON) -> MacroReport:
    """Equal-weight mean across writers, skipping writers where a metric is undefined."""
    if not per_writer:
        raise CsmError(errors.INVALID_ARGUMENT, "macro aggregation needs at least one writer")
    means = {}
    counts = {}
    for name in METRICS:
        values = [getattr(w, name) for w in per_writer if getattr(w, name) is not None]
        means[name] = fmean(values) if values else None
        counts[name] = len(values)
    return MacroReport(**means, writer_counts=counts, writers=tuple(per_writer), epsilon=epsilon)


def mean_csm_difference(a: WriterScores | MacroReport, b: WriterScores | MacroReport) -> float:
    """Mean of the four component differences ``a - b``."""
    diffs = []
    for name in METRICS:
        va, vb = getattr(a, name), getattr(b, name)
        if va is None or vb is None:
            raise CsmError(errors.COMPONENT_UNDEFINED, f"{name} is undefined")
        diffs.append(va - vb)
    return sum(diffs) / 4


def rank_sign_agreement(items: Sequence[tuple[float, int]]) -> float:
    """Fraction of items whose metric difference has the human-preferred sign.

    A zero difference never agrees.
    """
    if not items:
        raise CsmError(errors.INVALID_ARGUMENT, "no items")
    agree = 0
    for diff, direction in items:
        if direction not in (1, -1):
            raise CsmError(errors.INVALID_ARGUMENT, f"human direction must be +1 or -1, got {direction}")
        if diff != 0 and math.copysign(1, diff) == direction:
            agree += 1
    return agree / len(items)
