"""Trajectory data model and the line-delimited JSON dataset format.

One record per line::

    {"writer_id": "w1", "sentence_id": "s1", "text": "ab",
     "coordinate_mode": "absolute",
     "characters": [{"glyph": "a", "points": [[0.0, 0.0, 0], [0.1, 0.2, 3]]},
                    {"glyph": "b", "points": [[0.3, 0.0, 0], [0.4, 0.2, 3]]}]}

Points are ``[x, y, pen]`` with ``pen`` the integer code of :class:`PenState`.
A record may carry an optional integer ``raw_point_total`` (the point count of
the trajectory before any resampling) used by segmentation validation.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field, replace
from enum import Enum, IntEnum
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from csmkit import errors
from csmkit.errors import CsmError

SPACE = " "


class PenState(IntEnum):
    PEN_MOVE = 0
    PEN_UP = 1
    CURSIVE_EOC = 2
    END_OF_CHAR = 3

    @property
    def ends_stroke(self) -> bool:
        """True for every state that closes a pen-down run."""
        return self is not PenState.PEN_MOVE


class CoordinateMode(str, Enum):
    ABSOLUTE = "absolute"
    DELTA = "delta"


@dataclass(frozen=True, slots=True)
class TrajectoryPoint:
    x: float
    y: float
    pen: PenState = PenState.PEN_MOVE


@dataclass(frozen=True)
class CharacterTrajectory:
    """Point run of one character; spaces may carry a pseudo-segment or nothing."""

    glyph: str
    points: tuple[TrajectoryPoint, ...] = ()

    def __post_init__(self):
        if not isinstance(self.points, tuple):
            object.__setattr__(self, "points", tuple(self.points))

    @property
    def is_space(self) -> bool:
        return self.glyph == SPACE

    @property
    def is_empty(self) -> bool:
        return not self.points

    def xy(self) -> np.ndarray:
        """Coordinates as an ``(n, 2)`` float array."""
        return np.array([(p.x, p.y) for p in self.points], dtype=float).reshape(-1, 2)

    def pens(self) -> list[PenState]:
        return [p.pen for p in self.points]

    def with_xy(self, xy: np.ndarray, pens: Sequence[PenState] | None = None) -> CharacterTrajectory:
        """Copy with new coordinates (and optionally new pen states)."""
        if pens is None:
            pens = self.pens()
        pts = tuple(TrajectoryPoint(float(x), float(y), PenState(pen)) for (x, y), pen in zip(xy, pens))
        return CharacterTrajectory(self.glyph, pts)


@dataclass(frozen=True)
class SentenceSample:
    writer_id: str
    sentence_id: str
    text: str
    characters: tuple[CharacterTrajectory, ...]
    coordinate_mode: CoordinateMode = CoordinateMode.ABSOLUTE
    raw_point_total: int | None = None

    def __post_init__(self):
        if not isinstance(self.characters, tuple):
            object.__setattr__(self, "characters", tuple(self.characters))
        object.__setattr__(self, "coordinate_mode", CoordinateMode(self.coordinate_mode))
        if len(self.characters) != len(self.text):
            raise CsmError(
                errors.ALIGNMENT_MISMATCH,
                f"text has {len(self.text)} characters but {len(self.characters)} runs were given",
            )

    @property
    def key(self) -> tuple[str, str]:
        return (self.writer_id, self.sentence_id)

    @property
    def point_count(self) -> int:
        return sum(len(c.points) for c in self.characters)

    def all_points(self) -> list[TrajectoryPoint]:
        return [p for c in self.characters for p in c.points]

    def xy(self) -> np.ndarray:
        return np.array([(p.x, p.y) for p in self.all_points()], dtype=float).reshape(-1, 2)

    def empty_spaces(self) -> list[int]:
        """1-based positions of space characters without a pseudo-segment."""
        return [i for i, c in enumerate(self.characters, start=1) if c.is_space and c.is_empty]

    def with_characters(self, characters: Iterable[CharacterTrajectory], **changes) -> SentenceSample:
        return replace(self, characters=tuple(characters), **changes)

    def map_xy(self, fn) -> SentenceSample:
        """Apply ``fn`` to the sentence's stacked ``(n, 2)`` coordinates.

        Pen states and the character split are kept.
        """
        xy = fn(self.xy())
        chars = []
        start = 0
        for c in self.characters:
            n = len(c.points)
            chars.append(c.with_xy(xy[start:start + n]) if n else c)
            start += n
        return self.with_characters(chars)

    def require_absolute(self) -> None:
        if self.coordinate_mode is not CoordinateMode.ABSOLUTE:
            raise CsmError(errors.DELTA_INPUT, f"{self.key} is in delta mode; convert to absolute first")


@dataclass
class Dataset:
    samples: list[SentenceSample] = field(default_factory=list)

    def __post_init__(self):
        seen = set()
        for s in self.samples:
            if s.key in seen:
                raise CsmError(errors.DUPLICATE_SAMPLE_ID, f"duplicate (writer_id, sentence_id) {s.key}")
            seen.add(s.key)

    def __len__(self):
        return len(self.samples)

    def __iter__(self) -> Iterator[SentenceSample]:
        return iter(self.samples)

    @property
    def writers(self) -> list[str]:
        return sorted({s.writer_id for s in self.samples})

    def by_writer(self) -> dict[str, list[SentenceSample]]:
        groups: dict[str, list[SentenceSample]] = defaultdict(list)
        for s in self.samples:
            groups[s.writer_id].append(s)
        return {w: sorted(groups[w], key=lambda s: s.sentence_id) for w in sorted(groups)}

    def by_key(self) -> dict[tuple[str, str], SentenceSample]:
        return {s.key: s for s in self.samples}

    def sorted(self) -> Dataset:
        return Dataset(sorted(self.samples, key=lambda s: s.key))


def boundary_label(char: CharacterTrajectory) -> PenState:
    """Boundary label of a character: the pen state of its last point."""
    if not char.points:
        raise CsmError(errors.EMPTY_CHARACTER, f"character {char.glyph!r} has no points")
    return char.points[-1].pen


# --------------------------------------------------------------------------- #
# Serialization

def _fail(line: int | None, msg: str, code: str = errors.MALFORMED_RECORD):
    raise CsmError(code, msg, line=line)


def _parse_point(raw, line) -> TrajectoryPoint:
    if not isinstance(raw, list) or len(raw) != 3:
        _fail(line, f"point must be [x, y, pen], got {raw!r}")
    x, y, pen = raw
    for v in (x, y):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            _fail(line, f"coordinate must be a number, got {v!r}")
    if not (math.isfinite(x) and math.isfinite(y)):
        _fail(line, f"non-finite coordinate ({x}, {y})", errors.NONFINITE_COORDINATE)
    if isinstance(pen, bool) or not isinstance(pen, int) or not 0 <= pen <= 3:
        _fail(line, f"pen state must be an integer in 0..3, got {pen!r}")
    return TrajectoryPoint(float(x), float(y), PenState(pen))


def record_to_sample(record: dict, line: int | None = None) -> SentenceSample:
    """Validate one decoded record and build a :class:`SentenceSample`."""
    if not isinstance(record, dict):
        _fail(line, "record must be a JSON object")
    required = ("writer_id", "sentence_id", "text", "coordinate_mode", "characters")
    missing = [k for k in required if k not in record]
    if missing:
        _fail(line, f"missing field(s) {missing}")
    unknown = set(record) - set(required) - {"raw_point_total"}
    if unknown:
        _fail(line, f"unknown field(s) {sorted(unknown)}")
    for k in ("writer_id", "sentence_id", "text"):
        if not isinstance(record[k], str):
            _fail(line, f"{k} must be a string")
    try:
        mode = CoordinateMode(record["coordinate_mode"])
    except ValueError:
        _fail(line, f"coordinate_mode must be 'absolute' or 'delta', got {record['coordinate_mode']!r}")
    raw_total = record.get("raw_point_total")
    if raw_total is not None and (isinstance(raw_total, bool) or not isinstance(raw_total, int) or raw_total < 0):
        _fail(line, "raw_point_total must be a non-negative integer")

    text = record["text"]
    chars_raw = record["characters"]
    if not isinstance(chars_raw, list):
        _fail(line, "characters must be a list")
    if len(chars_raw) != len(text):
        _fail(line, f"text has {len(text)} characters but {len(chars_raw)} runs", errors.ALIGNMENT_MISMATCH)

    chars = []
    for pos, (expected, raw) in enumerate(zip(text, chars_raw), start=1):
        if not isinstance(raw, dict) or set(raw) != {"glyph", "points"}:
            _fail(line, f"character {pos} must be an object with 'glyph' and 'points'")
        glyph = raw["glyph"]
        if not isinstance(glyph, str) or len(glyph) != 1:
            _fail(line, f"character {pos}: glyph must be a single code point")
        if glyph != expected:
            _fail(line, f"character {pos}: glyph {glyph!r} != text {expected!r}", errors.ALIGNMENT_MISMATCH)
        if not isinstance(raw["points"], list):
            _fail(line, f"character {pos}: points must be a list")
        pts = tuple(_parse_point(p, line) for p in raw["points"])
        if not pts and glyph != SPACE:
            _fail(line, f"character {pos} ({glyph!r}) has no points")
        chars.append(CharacterTrajectory(glyph, pts))

    return SentenceSample(
        writer_id=record["writer_id"],
        sentence_id=record["sentence_id"],
        text=text,
        characters=tuple(chars),
        coordinate_mode=mode,
        raw_point_total=raw_total,
    )


def parse_line(text: str, line: int | None = None) -> SentenceSample:
    try:
        record = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CsmError(errors.MALFORMED_RECORD, f"invalid JSON ({exc.msg})", line=line) from None
    return record_to_sample(record, line)


def iter_lines(path: str | Path) -> Iterator[tuple[int, str]]:
    """Yield ``(line_number, text)`` for non-blank lines of a dataset file."""
    with open(path, encoding="utf-8") as fh:
        for n, text in enumerate(fh, start=1):
            if text.strip():
                yield n, text


def load_dataset(path: str | Path, expected_mode: CoordinateMode | str | None = None) -> Dataset:
    """Load and validate a line-delimited dataset file.

    Args:
        path: Dataset file.
        expected_mode: Required coordinate mode, or None / "any" to accept both.

    Raises:
        CsmError: MALFORMED_RECORD, ALIGNMENT_MISMATCH, NONFINITE_COORDINATE or
            DUPLICATE_SAMPLE_ID, with the offending line number.
        OSError: if the file cannot be read.
    """
    if expected_mode is None or (isinstance(expected_mode, str) and expected_mode.lower() == "any"):
        expected_mode = None
    elif not isinstance(expected_mode, CoordinateMode):
        expected_mode = CoordinateMode(expected_mode.lower())
    samples = []
    seen: dict[tuple[str, str], int] = {}
    for n, text in iter_lines(path):
        sample = parse_line(text, n)
        if expected_mode is not None and sample.coordinate_mode is not expected_mode:
            raise CsmError(
                errors.MALFORMED_RECORD,
                f"expected {expected_mode.value} coordinates, got {sample.coordinate_mode.value}",
                line=n,
            )
        if sample.key in seen:
            raise CsmError(
                errors.DUPLICATE_SAMPLE_ID, f"{sample.key} already defined on line {seen[sample.key]}", line=n
            )
        seen[sample.key] = n
        samples.append(sample)
    return Dataset(samples)


def sample_to_record(sample: SentenceSample) -> dict:
    record = {
        "writer_id": sample.writer_id,
        "sentence_id": sample.sentence_id,
        "text": sample.text,
        "coordinate_mode": sample.coordinate_mode.value,
        "characters": [
            {"glyph": c.glyph, "points": [[p.x, p.y, int(p.pen)] for p in c.points]} for c in sample.characters
        ],
    }
    if sample.raw_point_total is not None:
        record["raw_point_total"] = sample.raw_point_total
    return record


def dumps_sample(sample: SentenceSample) -> str:
    # json writes floats with repr(), which round-trips bit-exactly
    return json.dumps(sample_to_record(sample), ensure_ascii=False, allow_nan=False)


def save_dataset(dataset: Dataset | Iterable[SentenceSample], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for sample in dataset:
            fh.write(dumps_sample(sample))
            fh.write("\n")
