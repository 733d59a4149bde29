"""Trajectory harmonization: coordinate conversion, deskew, resampling,
weak RDP simplification, height normalization and segmentation checks.

Every transform is a pure ``sample -> sample`` function. The fixed pipeline
order is implemented by :func:`preprocess_sample`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from csmkit import errors
from csmkit.errors import CsmError
from csmkit.model import CharacterTrajectory, CoordinateMode, PenState, SentenceSample


class SkipReason(str, Enum):
    NONE = "NONE"
    TOO_SMALL = "TOO_SMALL"
    TOO_LARGE = "TOO_LARGE"
    DISABLED = "DISABLED"


@dataclass(frozen=True)
class DeskewResult:
    angle_radians: float
    applied: bool
    skip_reason: SkipReason = SkipReason.NONE

    def __post_init__(self):
        if self.applied and self.skip_reason is not SkipReason.NONE:
            raise ValueError("an applied deskew cannot carry a skip reason")


@dataclass(frozen=True)
class PreprocessConfig:
    """Tunable thresholds of the harmonization pipeline.

    Angles are in radians; lengths are in normalized sentence units.
    """

    deskew_min_angle: float = math.radians(0.5)
    deskew_max_angle: float = math.radians(30.0)
    resample_max_points: int = 160
    rdp_epsilon: float = 0.002
    target_height: float = 1.0
    segmentation_tolerance: int = 3
    deskew_enabled: bool = True

    def __post_init__(self):
        if not 0 <= self.deskew_min_angle < self.deskew_max_angle:
            raise CsmError(errors.CONFIG_ERROR, "need 0 <= deskew_min_angle < deskew_max_angle")
        if self.resample_max_points < 2:
            raise CsmError(errors.CONFIG_ERROR, "resample_max_points must be >= 2")
        if not self.target_height > 0:
            raise CsmError(errors.CONFIG_ERROR, "target_height must be > 0")
        if self.rdp_epsilon < 0:
            raise CsmError(errors.CONFIG_ERROR, "rdp_epsilon must be >= 0")
        if self.segmentation_tolerance < 0:
            raise CsmError(errors.CONFIG_ERROR, "segmentation_tolerance must be >= 0")


# --------------------------------------------------------------------------- #
# Coordinate conversion

def delta_to_absolute(sample: SentenceSample) -> SentenceSample:
    """Cumulative-sum a delta-mode sample into absolute coordinates.

    The running sum starts at the origin and continues across character
    boundaries, so point ``k`` of the sentence sits at the sum of deltas
    ``1..k``.
    """
    if sample.coordinate_mode is CoordinateMode.ABSOLUTE:
        raise CsmError(errors.ALREADY_ABSOLUTE, f"{sample.key} is already absolute")
    out = sample.map_xy(lambda xy: np.cumsum(xy, axis=0))
    return out.with_characters(out.characters, coordinate_mode=CoordinateMode.ABSOLUTE)


def absolute_to_delta(sample: SentenceSample) -> SentenceSample:
    """Inverse of :func:`delta_to_absolute` (first delta is taken from the origin)."""
    sample.require_absolute()
    out = sample.map_xy(lambda xy: np.diff(xy, axis=0, prepend=np.zeros((1, 2))))
    return out.with_characters(out.characters, coordinate_mode=CoordinateMode.DELTA)


# --------------------------------------------------------------------------- #
# Deskew

def fit_slope(xy: np.ndarray) -> float:
    """Least-squares slope of ``y = m x + b`` through the points."""
    if len(xy) < 2 or np.ptp(xy[:, 0]) == 0:
        raise CsmError(errors.DEGENERATE_FIT, "need at least two distinct x values to fit a line")
    x = xy[:, 0] - xy[:, 0].mean()
    y = xy[:, 1] - xy[:, 1].mean()
    return float(np.dot(x, y) / np.dot(x, x))


def rotate(xy: np.ndarray, angle: float, center: np.ndarray) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    return (xy - center) @ rot.T + center


def deskew_sentence(sample: SentenceSample, config: PreprocessConfig = PreprocessConfig()) -> tuple[SentenceSample, DeskewResult]:
    """Rotate a sentence by minus its least-squares writing angle.

    The rotation is about the sentence centroid. Angles below
    ``deskew_min_angle`` or above ``deskew_max_angle`` (in magnitude) leave the
    sample untouched.
    """
    sample.require_absolute()
    xy = sample.xy()
    theta = math.atan(fit_slope(xy))
    if abs(theta) < config.deskew_min_angle:
        return sample, DeskewResult(theta, False, SkipReason.TOO_SMALL)
    if abs(theta) > config.deskew_max_angle:
        return sample, DeskewResult(theta, False, SkipReason.TOO_LARGE)
    center = xy.mean(axis=0)
    return sample.map_xy(lambda a: rotate(a, -theta, center)), DeskewResult(theta, True)


def deskew_to_fixed_point(
    sample: SentenceSample, config: PreprocessConfig = PreprocessConfig(), max_iter: int = 25
) -> tuple[SentenceSample, DeskewResult]:
    """Repeat :func:`deskew_sentence` until the estimated angle is below the skip threshold.

    A least-squares fit is not rotation-equivariant, so one rotation leaves a
    small residual slope; iterating makes the result stable under reruns.
    The returned result carries the total applied angle, or the first step's
    skip reason if nothing was applied.
    """
    sample, first = deskew_sentence(sample, config)
    if not first.applied:
        return sample, first
    total = first.angle_radians
    for _ in range(max_iter):
        sample, step = deskew_sentence(sample, config)
        if not step.applied:
            break
        total += step.angle_radians
    return sample, DeskewResult(total, True)


# --------------------------------------------------------------------------- #
# Stroke helpers

def split_strokes(points) -> list[tuple[int, int]]:
    """Half-open index ranges of pen-down runs.

    A run closes on any point whose state is not PEN_MOVE (a lift or an
    end-of-character event).
    """
    ranges = []
    start = 0
    for i, p in enumerate(points):
        if p.pen is not PenState.PEN_MOVE:
            ranges.append((start, i + 1))
            start = i + 1
    if start < len(points):
        ranges.append((start, len(points)))
    return ranges


def polyline_length(xy: np.ndarray) -> float:
    if len(xy) < 2:
        return 0.0
    return float(np.sum(np.hypot(*np.diff(xy, axis=0).T)))


def _allocate(total: int, minimums: list[int], weights: list[float]) -> list[int]:
    """Split ``total`` into integer shares >= minimums, extras proportional to weights.

    Largest-remainder rounding; ties go to the earlier stroke.
    """
    counts = list(minimums)
    extra = total - sum(minimums)
    if extra <= 0:
        return counts
    w = np.asarray(weights, dtype=float)
    if w.sum() <= 0:
        w = np.ones_like(w)
    quota = extra * w / w.sum()
    base = np.floor(quota).astype(int)
    leftover = extra - int(base.sum())
    order = sorted(range(len(w)), key=lambda j: (-(quota[j] - base[j]), j))
    for j in order[:leftover]:
        base[j] += 1
    return [c + int(b) for c, b in zip(counts, base)]


def _resample_stroke(xy: np.ndarray, pens: list[PenState], count: int) -> tuple[np.ndarray, list[PenState]]:
    if len(xy) == 1:
        # a dot: replicate, keep its event on the final copy
        return np.repeat(xy, count, axis=0), [PenState.PEN_MOVE] * (count - 1) + [pens[-1]]
    seg = np.hypot(*np.diff(xy, axis=0).T)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    targets = np.linspace(0.0, cum[-1], count)
    out = np.column_stack([np.interp(targets, cum, xy[:, 0]), np.interp(targets, cum, xy[:, 1])])
    out[0] = xy[0]
    out[-1] = xy[-1]
    return out, [pens[0]] + [PenState.PEN_MOVE] * (count - 2) + [pens[-1]]


def resample_arclength(char: CharacterTrajectory, target_points: int) -> CharacterTrajectory:
    """Resample a character to ``target_points`` points spaced evenly by arc length.

    Points are shared among pen-down strokes in proportion to stroke length
    (at least two per multi-point stroke). Stroke start and end points, and the
    pen-state events they carry, are reproduced exactly.
    """
    if target_points < 2:
        raise CsmError(errors.INVALID_ARGUMENT, f"target_points must be >= 2, got {target_points}")
    if len(char.points) < 2:
        raise CsmError(errors.TOO_FEW_POINTS, f"character {char.glyph!r} has {len(char.points)} point(s)")
    xy = char.xy()
    pens = char.pens()
    strokes = split_strokes(char.points)
    minimums = [1 if b - a == 1 else 2 for a, b in strokes]
    if sum(minimums) > target_points:
        raise CsmError(
            errors.INVALID_ARGUMENT,
            f"{len(strokes)} strokes need at least {sum(minimums)} points, target is {target_points}",
        )
    lengths = [polyline_length(xy[a:b]) for a, b in strokes]
    counts = _allocate(target_points, minimums, lengths)

    out_xy, out_pens = [], []
    for (a, b), n in zip(strokes, counts):
        sxy, spens = _resample_stroke(xy[a:b], pens[a:b], n)
        out_xy.append(sxy)
        out_pens.extend(spens)
    return char.with_xy(np.concatenate(out_xy), out_pens)


def enforce_point_budget(char: CharacterTrajectory, max_points: int = 160) -> CharacterTrajectory:
    """Resample a character down to ``max_points`` if it is longer than that."""
    if max_points < 2:
        raise CsmError(errors.INVALID_ARGUMENT, f"max_points must be >= 2, got {max_points}")
    if len(char.points) <= max_points:
        return char
    return resample_arclength(char, max_points)


# --------------------------------------------------------------------------- #
# RDP

def perpendicular_distance(pts: np.ndarray, start: np.ndarray, end: np.ndarray) -> np.ndarray:
    """Distance of each point to the line through ``start`` and ``end``.

    Falls back to point distance when the chord is degenerate.
    """
    d = end - start
    norm = math.hypot(d[0], d[1])
    if norm == 0:
        return np.hypot(*(pts - start).T)
    return np.abs(d[0] * (start[1] - pts[:, 1]) - d[1] * (start[0] - pts[:, 0])) / norm


def rdp_mask(xy: np.ndarray, epsilon: float) -> np.ndarray:
    """Boolean keep-mask of Ramer-Douglas-Peucker over one polyline."""
    n = len(xy)
    keep = np.zeros(n, dtype=bool)
    if n == 0:
        return keep
    keep[0] = keep[-1] = True
    stack = [(0, n - 1)]
    while stack:
        a, b = stack.pop()
        if b - a < 2:
            continue
        dist = perpendicular_distance(xy[a + 1:b], xy[a], xy[b])
        k = int(np.argmax(dist))
        if dist[k] > epsilon:
            idx = a + 1 + k
            keep[idx] = True
            stack.append((a, idx))
            stack.append((idx, b))
    return keep


def rdp_simplify(char: CharacterTrajectory, epsilon: float) -> CharacterTrajectory:
    """Weak RDP simplification applied stroke by stroke.

    Stroke endpoints (and so every pen-state event) always survive.
    ``epsilon == 0`` returns the input unchanged.
    """
    if epsilon < 0:
        raise CsmError(errors.INVALID_ARGUMENT, "epsilon must be >= 0")
    if epsilon == 0 or len(char.points) < 3:
        return char
    xy = char.xy()
    keep = np.zeros(len(xy), dtype=bool)
    for a, b in split_strokes(char.points):
        keep[a:b] = rdp_mask(xy[a:b], epsilon)
    if keep.all():
        return char
    return CharacterTrajectory(char.glyph, tuple(p for p, k in zip(char.points, keep) if k))


# --------------------------------------------------------------------------- #
# Height normalization

def normalize_height(sample: SentenceSample, target_height: float = 1.0) -> SentenceSample:
    """Scale a sentence uniformly to ``target_height`` and move its bbox minimum to the origin.

    A sample that is already normalized (to within 1e-12) is returned as is,
    which keeps repeated pipeline runs bit-stable.
    """
    sample.require_absolute()
    xy = sample.xy()
    if len(xy) == 0:
        raise CsmError(errors.ZERO_HEIGHT, f"{sample.key} has no points")
    lo = xy.min(axis=0)
    height = float(xy[:, 1].max() - lo[1])
    if height <= 0:
        raise CsmError(errors.ZERO_HEIGHT, f"{sample.key} has zero vertical extent")
    scale = target_height / height
    if abs(scale - 1.0) <= 1e-12 and np.all(np.abs(lo) <= 1e-12):
        return sample
    return sample.map_xy(lambda a: (a - lo) * scale)


# --------------------------------------------------------------------------- #
# Segmentation validation

@dataclass(frozen=True)
class SegmentationVerdict:
    accepted: bool
    reason: str | None = None  # DURATION_MISMATCH | BOUNDARY_MISALIGNMENT
    boundary_index: int | None = None  # 0-based point index in the sentence
    detail: str = ""

    @property
    def label(self) -> str:
        return "ACCEPT" if self.accepted else "REJECT"


def validate_segmentation(sample: SentenceSample, raw_point_total: int, tolerance: int = 3) -> SegmentationVerdict:
    """Check that character durations partition the raw trajectory.

    Accepts iff the per-character point counts sum to ``raw_point_total`` and
    every character end implied by the cumulative counts lies within
    ``tolerance`` points of a stroke-end marker (PEN_UP, CURSIVE_EOC or
    END_OF_CHAR).
    """
    sample.require_absolute()
    total = sample.point_count
    if total != raw_point_total:
        return SegmentationVerdict(
            False, "DURATION_MISMATCH", None, f"durations sum to {total}, trajectory has {raw_point_total} points"
        )
    markers = np.array([i for i, p in enumerate(sample.all_points()) if p.pen.ends_stroke], dtype=int)
    end = 0
    for char in sample.characters:
        if char.is_empty:
            continue
        end += len(char.points)
        boundary = end - 1
        nearest = int(np.min(np.abs(markers - boundary))) if len(markers) else None
        if nearest is None or nearest > tolerance:
            return SegmentationVerdict(
                False,
                "BOUNDARY_MISALIGNMENT",
                boundary,
                "no stroke-end marker" if nearest is None else f"nearest stroke-end marker {nearest} points away",
            )
    return SegmentationVerdict(True)


# --------------------------------------------------------------------------- #
# Pipeline

PIPELINE_ORDER = ("to_absolute", "validate", "point_budget", "rdp", "deskew", "normalize_height")


@dataclass
class PreprocessOutcome:
    sample: SentenceSample | None
    verdict: SegmentationVerdict
    deskew: DeskewResult | None = None
    steps: list[str] = field(default_factory=list)

    @property
    def kept(self) -> bool:
        return self.sample is not None


def preprocess_sample(
    sample: SentenceSample, config: PreprocessConfig = PreprocessConfig(), max_rounds: int = 10
) -> PreprocessOutcome:
    """Run the harmonization pipeline on one sentence.

    Order: delta->absolute, segmentation check, per-character point budget,
    then rounds of weak RDP, deskew and height normalization until stable.
    Height normalization is always last, so the output has exactly
    ``target_height``.
    A sample that fails segmentation validation is dropped
    (``outcome.sample is None``).
    """
    steps = []
    raw_total = sample.raw_point_total if sample.raw_point_total is not None else sample.point_count
    if sample.coordinate_mode is CoordinateMode.DELTA:
        sample = delta_to_absolute(sample)
        steps.append("to_absolute")

    verdict = validate_segmentation(sample, raw_total, config.segmentation_tolerance)
    steps.append("validate")
    if not verdict.accepted:
        return PreprocessOutcome(None, verdict, None, steps)

    sample = sample.with_characters(
        [enforce_point_budget(c, config.resample_max_points) if len(c.points) >= 2 else c for c in sample.characters]
    )
    steps.append("point_budget")

    # RDP, deskew and normalization feed back into each other (RDP epsilon is
    # relative to height, the deskew fit sees the simplified points), so they
    # are repeated until a round changes nothing. A rerun on the output is
    # then a no-op.
    deskew = None
    for _ in range(max_rounds):
        before = sample
        if config.rdp_epsilon > 0:
            xy = sample.xy()
            height = float(np.ptp(xy[:, 1])) if len(xy) else 0.0
            # epsilon is in normalized units; express it in current units
            eps = config.rdp_epsilon * height / config.target_height
            if eps > 0:
                sample = sample.with_characters([rdp_simplify(c, eps) for c in sample.characters])
        if config.deskew_enabled:
            sample, step = deskew_to_fixed_point(sample, config)
        else:
            step = DeskewResult(0.0, False, SkipReason.DISABLED)
        if deskew is None or not deskew.applied:
            deskew = step
        elif step.applied:
            deskew = DeskewResult(deskew.angle_radians + step.angle_radians, True)
        sample = normalize_height(sample, config.target_height)
        if sample == before:
            break
    steps.extend(["rdp", "deskew", "normalize_height"])
    return PreprocessOutcome(sample.with_characters(sample.characters, raw_point_total=None), verdict, deskew, steps)
