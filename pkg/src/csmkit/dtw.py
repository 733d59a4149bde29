"""Dynamic time warping between GT and predicted sentence trajectories."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from statistics import fmean, pstdev
from typing import Mapping, Sequence

import numpy as np

from csmkit import errors
from csmkit.errors import CsmError
from csmkit.model import SentenceSample


@dataclass(frozen=True)
class DtwResult:
    raw: float
    normalized: float
    gt_point_count: int


@dataclass(frozen=True)
class DtwStats:
    """Writer-macro DTW summary (means of per-writer means / population stds)."""

    dtw_norm: float
    dtw_raw: float
    std: float
    n_writers: int


def normalize_for_dtw(sample: SentenceSample) -> SentenceSample:
    """Translate the bbox minimum to the origin and scale both axes to unit height.

    No rotation is applied. Unlike :func:`csmkit.preprocess.normalize_height`
    this always recomputes, so GT and prediction go through identical arithmetic.
    """
    sample.require_absolute()
    xy = sample.xy()
    if len(xy) == 0:
        raise CsmError(errors.ZERO_HEIGHT, f"{sample.key} has no points")
    lo = xy.min(axis=0)
    height = float(xy[:, 1].max() - lo[1])
    if height <= 0:
        raise CsmError(errors.ZERO_HEIGHT, f"{sample.key} has zero vertical extent")
    return sample.map_xy(lambda a: (a - lo) / height)


def _as_xy(seq) -> np.ndarray:
    if isinstance(seq, SentenceSample):
        return seq.xy()
    if isinstance(seq, np.ndarray):
        return seq.reshape(-1, 2).astype(float)
    return np.array([(p.x, p.y) if hasattr(p, "x") else (p[0], p[1]) for p in seq], dtype=float).reshape(-1, 2)


def dtw_distance(gt, pred) -> DtwResult:
    """Accumulated Euclidean cost of the optimal warping path.

    Steps (1,0), (0,1) and (1,1) with unit weights; the path is anchored at
    both starts and both ends. Accepts samples, ``(n, 2)`` arrays or
    sequences of points. Pen states are ignored.
    """
    a = _as_xy(gt)
    b = _as_xy(pred)
    if len(a) == 0 or len(b) == 0:
        raise CsmError(errors.EMPTY_SEQUENCE, "DTW needs two non-empty sequences")
    bx, by = b[:, 0], b[:, 1]
    m = len(b)
    prev = list(itertools.accumulate(np.hypot(bx - a[0, 0], by - a[0, 1]).tolist()))
    # rolling rows: memory is O(len(pred))
    for i in range(1, len(a)):
        row = np.hypot(bx - a[i, 0], by - a[i, 1]).tolist()
        cur = [0.0] * m
        left = row[0] + prev[0]
        cur[0] = left
        for j in range(1, m):
            diag = prev[j - 1]
            up = prev[j]
            best = diag if diag < up else up
            if left < best:
                best = left
            left = row[j] + best
            cur[j] = left
        prev = cur
    raw = prev[-1]
    return DtwResult(raw=raw, normalized=raw / len(a), gt_point_count=len(a))


def dtw_writer_stats(per_writer: Mapping[str, Sequence[DtwResult]]) -> DtwStats:
    """Macro-average per-writer DTW means and population std of DTW_norm."""
    if not per_writer:
        raise CsmError(errors.INVALID_ARGUMENT, "no writers")
    norms, raws, stds = [], [], []
    for writer, results in per_writer.items():
        if not results:
            raise CsmError(errors.INVALID_ARGUMENT, f"writer {writer} has no sentences")
        values = [r.normalized for r in results]
        norms.append(fmean(values))
        raws.append(fmean(r.raw for r in results))
        stds.append(pstdev(values))
    return DtwStats(fmean(norms), fmean(raws), fmean(stds), len(per_writer))


def writer_dtw_summary(results: Sequence[DtwResult]) -> tuple[float, float, float]:
    """(mean DTW_norm, mean DTW_raw, population std of DTW_norm) for one writer."""
    values = [r.normalized for r in results]
    return fmean(values), fmean(r.raw for r in results), pstdev(values)
