"""SVG rendering of sentence trajectories.

Pen-down runs become ``<path>`` elements. A run ends after a PEN_UP or
END_OF_CHAR point and continues through CURSIVE_EOC, so a cursive join is
drawn as one connected path. Space pseudo-segments are never drawn.
"""

from __future__ import annotations

import re
from pathlib import Path
from xml.sax.saxutils import escape

from csmkit.model import PenState, SentenceSample, TrajectoryPoint

MARGIN = 10.0
STROKE_WIDTH = 1.5


def pen_paths(sample: SentenceSample) -> list[list[TrajectoryPoint]]:
    """Split a sentence into connected pen-down runs."""
    paths: list[list[TrajectoryPoint]] = []
    current: list[TrajectoryPoint] = []
    for char in sample.characters:
        if char.is_space:
            if current:
                paths.append(current)
                current = []
            continue
        for p in char.points:
            current.append(p)
            if p.pen in (PenState.PEN_UP, PenState.END_OF_CHAR):
                paths.append(current)
                current = []
    if current:
        paths.append(current)
    return paths


def _n(v: float) -> str:
    text = f"{v:.3f}".rstrip("0").rstrip(".")
    return "0" if text in ("-0", "") else text


def render_svg(
    sample: SentenceSample, height: float = 100.0, highlight_cursive: bool = False, y_up: bool = True
) -> str:
    """Render one absolute-mode sentence as an SVG document.

    The drawing is scaled so the sentence's vertical extent spans ``height``
    pixels, which gives every sentence the same rendered height.
    """
    sample.require_absolute()
    paths = pen_paths(sample)
    pts = [p for path in paths for p in path]
    if pts:
        xs = [p.x for p in pts]
        ys = [p.y for p in pts]
        x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    else:
        x0 = x1 = y0 = y1 = 0.0
    extent = y1 - y0
    scale = height / extent if extent > 0 else 1.0

    def tx(p: TrajectoryPoint) -> tuple[str, str]:
        x = MARGIN + (p.x - x0) * scale
        y = MARGIN + ((y1 - p.y) if y_up else (p.y - y0)) * scale
        return _n(x), _n(y)

    width = (x1 - x0) * scale + 2 * MARGIN
    total_h = height + 2 * MARGIN
    title = escape(f"{sample.writer_id}/{sample.sentence_id}: {sample.text}")
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_n(width)}" height="{_n(total_h)}" '
        f'viewBox="0 0 {_n(width)} {_n(total_h)}">',
        f"<title>{title}</title>",
        f'<g fill="none" stroke="black" stroke-width="{STROKE_WIDTH}" stroke-linecap="round" stroke-linejoin="round">',
    ]
    for path in paths:
        coords = [tx(p) for p in path]
        if len(coords) == 1:
            coords.append(coords[0])
        d = "M" + " L".join(f"{x},{y}" for x, y in coords)
        lines.append(f'<path d="{d}"/>')
    lines.append("</g>")
    if highlight_cursive:
        lines.append('<g fill="red" stroke="none">')
        for p in pts:
            if p.pen is PenState.CURSIVE_EOC:
                x, y = tx(p)
                lines.append(f'<circle class="cursive" cx="{x}" cy="{y}" r="2"/>')
        lines.append("</g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def svg_filename(sample: SentenceSample) -> str:
    safe = re.sub(r"[^A-Za-z0-9._-]+", "_", f"{sample.writer_id}__{sample.sentence_id}")
    return f"{safe}.svg"


def render_dataset(samples, out_dir: str | Path, height: float = 100.0, highlight_cursive: bool = False,
                   y_up: bool = True) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for sample in samples:
        path = out / svg_filename(sample)
        path.write_text(render_svg(sample, height, highlight_cursive, y_up), encoding="utf-8", newline="")
        written.append(path)
    return written
