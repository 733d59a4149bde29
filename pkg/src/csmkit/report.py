"""Paired GT/prediction evaluation and report emission.

Both sides are converted to absolute coordinates if needed and normalized
independently (translation + height, no rotation) before DTW and CSM are
computed. Rows are always ordered by writer_id, then sentence_id.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from csmkit import errors
from csmkit.boundaries import (
    AdjacentBoundary,
    WordGapBoundary,
    convert_eoc_to_cursive,
    mark_all_eoc,
    pair_adjacent,
    pair_word_gaps,
)
from csmkit.config import RunConfig
from csmkit.dtw import DtwResult, DtwStats, dtw_distance, dtw_writer_stats, normalize_for_dtw, writer_dtw_summary
from csmkit.errors import CsmError
from csmkit.metrics import MacroReport, WriterScores, macro_aggregate, mask_without_positives, score_writer
from csmkit.model import CoordinateMode, Dataset, SentenceSample
from csmkit.preprocess import delta_to_absolute
from csmkit.vdl import VdlBoundaryRow, sentence_vdl

UNDEFINED = "--"
CSV_COLUMNS = ("writer_id", "n_sentences", "F1_cursive", "CRE", "KGS", "SSS", "DTW_norm", "DTW_raw", "Std")


@dataclass(frozen=True)
class SentenceEval:
    writer_id: str
    sentence_id: str
    adjacent: tuple[AdjacentBoundary, ...]
    word_gaps: tuple[WordGapBoundary, ...]
    dtw: DtwResult


@dataclass(frozen=True)
class WriterRow:
    scores: WriterScores
    dtw_norm: float
    dtw_raw: float
    std: float


@dataclass(frozen=True)
class MetricReport:
    writers: tuple[WriterRow, ...]
    macro: MacroReport
    dtw: DtwStats
    sentences: tuple[SentenceEval, ...]
    config: RunConfig


def read_exclusions(path: str | Path) -> set[tuple[str, str]]:
    """Read ``writer_id,sentence_id`` keys, one per line.

    ``#`` comments and an optional ``writer_id,sentence_id`` header are skipped.
    """
    keys = set()
    with open(path, encoding="utf-8", newline="") as fh:
        for n, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
                continue
            if len(row) != 2:
                raise CsmError(errors.MALFORMED_RECORD, "exclusion rows must be writer_id,sentence_id", line=n)
            if n == 1 and [c.strip() for c in row] == ["writer_id", "sentence_id"]:
                continue
            keys.add((row[0].strip(), row[1].strip()))
    return keys


def as_absolute(sample: SentenceSample) -> SentenceSample:
    return delta_to_absolute(sample) if sample.coordinate_mode is CoordinateMode.DELTA else sample


def pair_datasets(
    gt: Dataset, pred: Dataset, exclude: Iterable[tuple[str, str]] = ()
) -> list[tuple[SentenceSample, SentenceSample]]:
    """Match GT and prediction samples by (writer_id, sentence_id).

    Excluded keys are dropped from both sides before pairing.
    """
    excluded = set(exclude)
    g = {k: s for k, s in gt.by_key().items() if k not in excluded}
    p = {k: s for k, s in pred.by_key().items() if k not in excluded}
    missing = sorted(set(g) ^ set(p))
    if missing:
        side = "prediction" if missing[0] in g else "GT"
        raise CsmError(errors.UNPAIRED_SAMPLE, f"{missing[0]} has no {side} counterpart ({len(missing)} unpaired)")
    pairs = []
    for key in sorted(g):
        if g[key].text != p[key].text:
            raise CsmError(errors.TEXT_MISMATCH, f"{key}: GT text {g[key].text!r} != prediction {p[key].text!r}")
        pairs.append((g[key], p[key]))
    return pairs


def prepare_pair(gt: SentenceSample, pred: SentenceSample, config: RunConfig) -> tuple[SentenceSample, SentenceSample]:
    """Absolute coordinates, independent normalization, optional EOC conversion."""
    gt = normalize_for_dtw(as_absolute(gt))
    pred = normalize_for_dtw(as_absolute(pred))
    if config.convert_eoc:
        pred = convert_eoc_to_cursive(mark_all_eoc(pred), config.tau_conn)
    return gt, pred


def evaluate_pair(gt: SentenceSample, pred: SentenceSample, config: RunConfig) -> SentenceEval:
    gt, pred = prepare_pair(gt, pred, config)
    return SentenceEval(
        gt.writer_id,
        gt.sentence_id,
        tuple(pair_adjacent(gt, pred)),
        tuple(pair_word_gaps(gt, pred)),
        dtw_distance(gt, pred),
    )


def _parallel_map(fn, items: Sequence, workers: int) -> list:
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        # map() preserves input order, so results do not depend on scheduling
        return list(pool.map(fn, items))


def evaluate(
    gt: Dataset,
    pred: Dataset,
    config: RunConfig = RunConfig(),
    exclude: Iterable[tuple[str, str]] = (),
    workers: int | None = None,
) -> MetricReport:
    """Evaluate a prediction dataset against its GT dataset."""
    pairs = pair_datasets(gt, pred, exclude)
    if not pairs:
        raise CsmError(errors.UNPAIRED_SAMPLE, "no sentence pairs to evaluate")
    workers = config.workers if workers is None else workers
    sentences = _parallel_map(lambda pair: evaluate_pair(*pair, config), pairs, workers)

    grouped: dict[str, list[SentenceEval]] = {}
    for s in sentences:
        grouped.setdefault(s.writer_id, []).append(s)
    scores = [
        score_writer(w, [(s.adjacent, s.word_gaps) for s in group], config.rho, config.epsilon)
        for w, group in grouped.items()
    ]
    scores = mask_without_positives(scores)
    rows = []
    for sc, group in zip(scores, grouped.values()):
        rows.append(WriterRow(sc, *writer_dtw_summary([s.dtw for s in group])))
    return MetricReport(
        writers=tuple(rows),
        macro=macro_aggregate(scores, config.epsilon),
        dtw=dtw_writer_stats({w: [s.dtw for s in group] for w, group in grouped.items()}),
        sentences=tuple(sentences),
        config=config,
    )


# --------------------------------------------------------------------------- #
# Emission

def fmt(value: float | None) -> str:
    """Six significant digits, or ``--`` for an undefined value."""
    if value is None:
        return UNDEFINED
    return f"{value:.6g}"


def _num(value: float | None) -> float | None:
    return None if value is None or not math.isfinite(value) else float(value)


def _csv_text(rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


def report_csv(report: MetricReport) -> str:
    rows: list[Sequence] = [CSV_COLUMNS]
    for r in report.writers:
        s = r.scores
        rows.append(
            (s.writer_id, s.n_sentences, fmt(s.f1_cursive), fmt(s.cre), fmt(s.kgs), fmt(s.sss),
             fmt(r.dtw_norm), fmt(r.dtw_raw), fmt(r.std))
        )
    m = report.macro
    rows.append(
        ("MACRO", sum(r.scores.n_sentences for r in report.writers), fmt(m.f1_cursive), fmt(m.cre), fmt(m.kgs),
         fmt(m.sss), fmt(report.dtw.dtw_norm), fmt(report.dtw.dtw_raw), fmt(report.dtw.std))
    )
    return _csv_text(rows)


def report_dict(report: MetricReport) -> dict:
    cfg = report.config
    writers = []
    for r in report.writers:
        s = r.scores
        writers.append({
            "writer_id": s.writer_id,
            "n_sentences": s.n_sentences,
            "n_boundaries": s.n_boundaries,
            "n_word_gaps": s.n_word_gaps,
            "tp": s.counts.tp,
            "fp": s.counts.fp,
            "fn": s.counts.fn,
            "F1_cursive": _num(s.f1_cursive),
            "CRE": _num(s.cre),
            "KGS": _num(s.kgs),
            "SSS": _num(s.sss),
            "DTW_norm": _num(r.dtw_norm),
            "DTW_raw": _num(r.dtw_raw),
            "Std": _num(r.std),
        })
    m = report.macro
    return {
        "settings": {
            "epsilon": cfg.epsilon,
            "rho": cfg.rho,
            "tau_conn": cfg.tau_conn,
            "convert_eoc": cfg.convert_eoc,
        },
        "writers": writers,
        "macro": {
            "n_writers": len(report.writers),
            "n_sentences": sum(r.scores.n_sentences for r in report.writers),
            "F1_cursive": _num(m.f1_cursive),
            "CRE": _num(m.cre),
            "KGS": _num(m.kgs),
            "SSS": _num(m.sss),
            "DTW_norm": _num(report.dtw.dtw_norm),
            "DTW_raw": _num(report.dtw.dtw_raw),
            "Std": _num(report.dtw.std),
            "writer_counts": {
                "F1_cursive": m.writer_counts["f1_cursive"],
                "CRE": m.writer_counts["cre"],
                "KGS": m.writer_counts["kgs"],
                "SSS": m.writer_counts["sss"],
            },
        },
    }


def report_json(report: MetricReport) -> str:
    return json.dumps(report_dict(report), indent=2, allow_nan=False) + "\n"


BOUNDARY_COLUMNS = ("writer_id", "sentence_id", "kind", "s", "u", "v", "gt_value", "pred_value", "gt_cursive", "pred_cursive")


def boundaries_csv(sentences: Iterable[SentenceEval]) -> str:
    """Audit rows: one per adjacent boundary (kerning gap) and word gap (width)."""
    rows: list[Sequence] = [BOUNDARY_COLUMNS]
    for s in sentences:
        for b in s.adjacent:
            rows.append((s.writer_id, s.sentence_id, "adjacent", b.index, "", "", repr(b.gt_gap), repr(b.pred_gap),
                         b.gt_cursive, b.pred_cursive))
        for g in s.word_gaps:
            rows.append((s.writer_id, s.sentence_id, "word_gap", "", g.u, g.v, repr(g.gt_width), repr(g.pred_width),
                         "", ""))
    return _csv_text(rows)


def write_report(report: MetricReport, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "report.csv": report_csv(report),
        "report.json": report_json(report),
        "boundaries.csv": boundaries_csv(report.sentences),
    }
    paths = []
    for name, text in files.items():
        path = out / name
        path.write_text(text, encoding="utf-8", newline="")
        paths.append(path)
    return paths


# --------------------------------------------------------------------------- #
# VDL diagnostic

VDL_COLUMNS = ("writer_id", "sentence_id", "boundary", "delta_cen", "delta_top", "delta_bot", "contribution")


@dataclass(frozen=True)
class VdlSentence:
    writer_id: str
    sentence_id: str
    loss: float | None
    rows: tuple[VdlBoundaryRow, ...]


def evaluate_vdl(
    gt: Dataset, pred: Dataset, config: RunConfig = RunConfig(), exclude: Iterable[tuple[str, str]] = ()
) -> list[VdlSentence]:
    """Per-sentence VDL on independently normalized pairs.

    Sentences without an adjacent non-space boundary get ``loss=None``.
    """
    out = []
    for g, p in pair_datasets(gt, pred, exclude):
        g = normalize_for_dtw(as_absolute(g))
        p = normalize_for_dtw(as_absolute(p))
        try:
            loss, rows = sentence_vdl(g, p, config.vdl_weights, config.band_fraction, config.y_up)
        except CsmError as exc:
            if exc.code != errors.EMPTY_BOUNDARY_SET:
                raise
            loss, rows = None, []
        out.append(VdlSentence(g.writer_id, g.sentence_id, loss, tuple(rows)))
    return out


def vdl_csv(results: Sequence[VdlSentence]) -> str:
    rows: list[Sequence] = [VDL_COLUMNS]
    for r in results:
        for b in r.rows:
            rows.append((r.writer_id, r.sentence_id, b.index, fmt(b.delta_cen), fmt(b.delta_top), fmt(b.delta_bot),
                         fmt(b.contribution)))
    return _csv_text(rows)


def vdl_summary(results: Sequence[VdlSentence]) -> dict:
    per_writer: dict[str, list[float]] = {}
    for r in results:
        per_writer.setdefault(r.writer_id, [])
        if r.loss is not None:
            per_writer[r.writer_id].append(r.loss)
    writer_means = {w: (sum(v) / len(v) if v else None) for w, v in per_writer.items()}
    defined = [v for v in writer_means.values() if v is not None]
    return {
        "sentences": [{"writer_id": r.writer_id, "sentence_id": r.sentence_id, "vdl": r.loss} for r in results],
        "writers": [{"writer_id": w, "vdl": v} for w, v in writer_means.items()],
        "macro": {"vdl": sum(defined) / len(defined) if defined else None, "n_writers": len(defined)},
    }
