"""Vertical Drift Loss as an offline diagnostic.

For every adjacent character boundary the vertical offsets of the
centroid, top band and bottom band from the previous to the current
character are compared between GT and prediction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from csmkit import errors
from csmkit.boundaries import adjacent_boundaries
from csmkit.errors import CsmError
from csmkit.model import CharacterTrajectory, SentenceSample

BAND_FRACTION = 0.1


@dataclass(frozen=True)
class VerticalStats:
    centroid: float
    top: float
    bottom: float


@dataclass(frozen=True)
class BoundaryOffsets:
    d_cen: float
    d_top: float
    d_bot: float


@dataclass(frozen=True)
class VdlWeights:
    w_cen: float = 2.0
    w_top: float = 1.0
    w_bot: float = 1.0

    def __post_init__(self):
        if min(self.w_cen, self.w_top, self.w_bot) < 0:
            raise CsmError(errors.INVALID_ARGUMENT, "VDL weights must be non-negative")


@dataclass(frozen=True)
class VdlBoundaryRow:
    index: int
    delta_cen: float
    delta_top: float
    delta_bot: float
    contribution: float


def vertical_stats(char: CharacterTrajectory, band_fraction: float = BAND_FRACTION, y_up: bool = True) -> VerticalStats:
    """Centroid and top/bottom band means of a character's y values.

    Each band holds the ``band_fraction`` most extreme points (at least one).
    With ``y_up=False`` (screen coordinates) the top band is the smallest y.
    """
    if not char.points:
        raise CsmError(errors.EMPTY_CHARACTER, f"character {char.glyph!r} has no points")
    if not 0 < band_fraction <= 0.5:
        raise CsmError(errors.INVALID_ARGUMENT, f"band_fraction must be in (0, 0.5], got {band_fraction}")
    ys = np.sort(np.array([p.y for p in char.points], dtype=float))
    k = max(1, math.floor(band_fraction * len(ys) + 1e-9))
    low, high = float(ys[:k].mean()), float(ys[-k:].mean())
    top, bottom = (high, low) if y_up else (low, high)
    return VerticalStats(float(ys.mean()), top, bottom)


def boundary_offsets(prev: VerticalStats, curr: VerticalStats) -> BoundaryOffsets:
    return BoundaryOffsets(curr.centroid - prev.centroid, curr.top - prev.top, curr.bottom - prev.bottom)


def _terms(gt: BoundaryOffsets, pred: BoundaryOffsets, w: VdlWeights) -> tuple[float, float, float, float]:
    dc = pred.d_cen - gt.d_cen
    dt = pred.d_top - gt.d_top
    db = pred.d_bot - gt.d_bot
    return dc, dt, db, w.w_cen * dc * dc + w.w_top * dt * dt + w.w_bot * db * db


def vdl_loss(
    gt_offsets: Sequence[BoundaryOffsets], pred_offsets: Sequence[BoundaryOffsets], weights: VdlWeights = VdlWeights()
) -> float:
    """Mean weighted squared offset mismatch over boundaries."""
    if len(gt_offsets) != len(pred_offsets):
        raise CsmError(errors.LENGTH_MISMATCH, f"{len(gt_offsets)} GT vs {len(pred_offsets)} predicted boundaries")
    if not gt_offsets:
        raise CsmError(errors.EMPTY_BOUNDARY_SET, "no boundaries")
    return math.fsum(_terms(g, p, weights)[3] for g, p in zip(gt_offsets, pred_offsets)) / len(gt_offsets)


def sentence_offsets(sample: SentenceSample, band_fraction: float = BAND_FRACTION, y_up: bool = True) -> dict[int, BoundaryOffsets]:
    """Offsets for every adjacent non-space boundary, keyed by boundary position."""
    sample.require_absolute()
    stats = {}

    def get(pos):
        if pos not in stats:
            stats[pos] = vertical_stats(sample.characters[pos - 1], band_fraction, y_up)
        return stats[pos]

    return {s: boundary_offsets(get(s), get(s + 1)) for s in adjacent_boundaries(sample.text)}


def sentence_vdl(
    gt: SentenceSample,
    pred: SentenceSample,
    weights: VdlWeights = VdlWeights(),
    band_fraction: float = BAND_FRACTION,
    y_up: bool = True,
) -> tuple[float, list[VdlBoundaryRow]]:
    """VDL of one GT/prediction sentence pair plus per-boundary diagnostic rows."""
    if gt.text != pred.text:
        raise CsmError(errors.TEXT_MISMATCH, f"{gt.key}: GT text {gt.text!r} != prediction text {pred.text!r}")
    g = sentence_offsets(gt, band_fraction, y_up)
    p = sentence_offsets(pred, band_fraction, y_up)
    if not g:
        raise CsmError(errors.EMPTY_BOUNDARY_SET, f"{gt.key} has no adjacent non-space boundary")
    rows = [VdlBoundaryRow(s, *_terms(g[s], p[s], weights)) for s in sorted(g)]
    return vdl_loss([g[s] for s in sorted(g)], [p[s] for s in sorted(g)], weights), rows
