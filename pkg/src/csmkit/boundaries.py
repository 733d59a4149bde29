"""Character bounds, boundary sets and cursive boundary labels.

Sentence positions are 1-based throughout: boundary ``s`` sits between
characters ``s`` and ``s + 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from csmkit import errors
from csmkit.errors import CsmError
from csmkit.model import SPACE, CharacterTrajectory, PenState, SentenceSample, TrajectoryPoint, boundary_label

TAU_CONN = 0.005


@dataclass(frozen=True)
class CharBounds:
    left: float
    right: float


@dataclass(frozen=True)
class AdjacentBoundary:
    index: int
    gt_cursive: int
    pred_cursive: int
    gt_gap: float
    pred_gap: float


@dataclass(frozen=True)
class WordGapBoundary:
    u: int
    v: int
    gt_width: float
    pred_width: float


def char_bounds(char: CharacterTrajectory) -> CharBounds:
    if not char.points:
        raise CsmError(errors.EMPTY_CHARACTER, f"character {char.glyph!r} has no points")
    xs = [p.x for p in char.points]
    return CharBounds(min(xs), max(xs))


def adjacent_boundaries(text: str) -> list[int]:
    """Positions ``s`` where neither character ``s`` nor ``s + 1`` is a space."""
    return [s for s in range(1, len(text)) if text[s - 1] != SPACE and text[s] != SPACE]


def word_gap_boundaries(text: str) -> list[tuple[int, int]]:
    """One ``(u, v)`` pair per maximal run of spaces flanked by non-space characters."""
    pairs = []
    last_non_space = None
    for pos, ch in enumerate(text, start=1):
        if ch == SPACE:
            continue
        if last_non_space is not None and pos - last_non_space > 1:
            pairs.append((last_non_space, pos))
        last_non_space = pos
    return pairs


def cursive_indicator(char: CharacterTrajectory) -> int:
    return int(boundary_label(char) is PenState.CURSIVE_EOC)


def _relabel_last(char: CharacterTrajectory, pen: PenState) -> CharacterTrajectory:
    last = char.points[-1]
    return CharacterTrajectory(char.glyph, char.points[:-1] + (TrajectoryPoint(last.x, last.y, pen),))


def mark_all_eoc(sample: SentenceSample) -> SentenceSample:
    """Label the last point of every non-space character END_OF_CHAR.

    First step for predictions that carry no explicit cursive labels.
    """
    chars = [
        c if c.is_space or c.is_empty else _relabel_last(c, PenState.END_OF_CHAR) for c in sample.characters
    ]
    return sample.with_characters(chars)


def connection_distance(sample: SentenceSample, s: int) -> float:
    """Distance from the last point of character ``s`` to the first PEN_MOVE point of ``s + 1``."""
    cur = sample.characters[s - 1]
    nxt = sample.characters[s]
    if not cur.points:
        raise CsmError(errors.EMPTY_CHARACTER, f"character {s} ({cur.glyph!r}) has no points")
    target = next((p for p in nxt.points if p.pen is PenState.PEN_MOVE), None)
    if target is None:
        raise CsmError(
            errors.MISSING_NEXT_PEN_MOVE, f"{sample.key}: character {s + 1} ({nxt.glyph!r}) has no PEN_MOVE point"
        )
    end = cur.points[-1]
    return math.hypot(end.x - target.x, end.y - target.y)


def convert_eoc_to_cursive(sample: SentenceSample, tau: float = TAU_CONN) -> SentenceSample:
    """Relabel END_OF_CHAR boundaries as CURSIVE_EOC when the pen barely moves.

    A boundary ``s`` is converted iff the connection distance is strictly
    below ``tau``. Coordinates and every other label are left untouched.
    Expects normalized absolute coordinates.
    """
    sample.require_absolute()
    chars = list(sample.characters)
    for s in adjacent_boundaries(sample.text):
        if boundary_label(chars[s - 1]) is not PenState.END_OF_CHAR:
            continue
        if connection_distance(sample, s) < tau:
            chars[s - 1] = _relabel_last(chars[s - 1], PenState.CURSIVE_EOC)
    return sample.with_characters(chars)


def _check_pair(gt: SentenceSample, pred: SentenceSample) -> None:
    if gt.text != pred.text:
        raise CsmError(errors.TEXT_MISMATCH, f"{gt.key}: GT text {gt.text!r} != prediction text {pred.text!r}")
    gt.require_absolute()
    pred.require_absolute()


def pair_adjacent(gt: SentenceSample, pred: SentenceSample) -> list[AdjacentBoundary]:
    """Cursive labels and kerning gaps of every adjacent boundary of a GT/prediction pair."""
    _check_pair(gt, pred)
    out = []
    for s in adjacent_boundaries(gt.text):
        g_l, g_r = char_bounds(gt.characters[s - 1]), char_bounds(gt.characters[s])
        p_l, p_r = char_bounds(pred.characters[s - 1]), char_bounds(pred.characters[s])
        out.append(
            AdjacentBoundary(
                index=s,
                gt_cursive=cursive_indicator(gt.characters[s - 1]),
                pred_cursive=cursive_indicator(pred.characters[s - 1]),
                gt_gap=g_r.left - g_l.right,
                pred_gap=p_r.left - p_l.right,
            )
        )
    return out


def pair_word_gaps(gt: SentenceSample, pred: SentenceSample) -> list[WordGapBoundary]:
    """Word-gap widths of every space run of a GT/prediction pair.

    Only the flanking non-space characters enter the width; space
    pseudo-segments are ignored.
    """
    _check_pair(gt, pred)
    out = []
    for u, v in word_gap_boundaries(gt.text):
        out.append(
            WordGapBoundary(
                u=u,
                v=v,
                gt_width=char_bounds(gt.characters[v - 1]).left - char_bounds(gt.characters[u - 1]).right,
                pred_width=char_bounds(pred.characters[v - 1]).left - char_bounds(pred.characters[u - 1]).right,
            )
        )
    return out
