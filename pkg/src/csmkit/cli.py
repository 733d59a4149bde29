"""Command-line front end.

Exit codes: 0 success, 1 validation or metric-domain failure,
2 I/O or format failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import sys
from pathlib import Path

from csmkit import errors
from csmkit.config import RunConfig, load_config
from csmkit.errors import CsmError
from csmkit.model import CoordinateMode, Dataset, dumps_sample, iter_lines, load_dataset, parse_line
from csmkit.preprocess import delta_to_absolute, preprocess_sample, validate_segmentation
from csmkit.render import render_dataset
from csmkit.report import evaluate, evaluate_vdl, read_exclusions, vdl_csv, vdl_summary, write_report

EXIT_OK, EXIT_DOMAIN, EXIT_IO = 0, 1, 2


def _config(args) -> RunConfig:
    cfg = load_config(args.config)
    changes = {}
    if getattr(args, "convert_eoc", False):
        changes["convert_eoc"] = True
    if getattr(args, "exclude", None):
        changes["exclude"] = args.exclude
    if getattr(args, "workers", None):
        changes["workers"] = args.workers
    if getattr(args, "highlight_cursive", False):
        changes["highlight_cursive"] = True
    return dataclasses.replace(cfg, **changes) if changes else cfg


def _say(args, msg: str) -> None:
    if not args.quiet:
        print(msg, file=sys.stderr)


VALIDATE_COLUMNS = ("line", "writer_id", "sentence_id", "verdict", "reason", "boundary_index", "empty_spaces", "detail")


def cmd_validate(args) -> int:
    cfg = _config(args)
    rows = []
    status = EXIT_OK
    seen: dict[tuple[str, str], int] = {}
    for n, text in iter_lines(args.dataset):
        try:
            sample = parse_line(text, n)
            if sample.key in seen:
                raise CsmError(errors.DUPLICATE_SAMPLE_ID, f"already defined on line {seen[sample.key]}", line=n)
        except CsmError as exc:
            rows.append((n, "", "", "ERROR", exc.code, "", "", str(exc)))
            status = EXIT_IO
            continue
        seen[sample.key] = n
        absolute = delta_to_absolute(sample) if sample.coordinate_mode is CoordinateMode.DELTA else sample
        raw_total = sample.raw_point_total if sample.raw_point_total is not None else sample.point_count
        verdict = validate_segmentation(absolute, raw_total, cfg.segmentation_tolerance)
        empty = " ".join(str(i) for i in sample.empty_spaces())
        rows.append((n, sample.writer_id, sample.sentence_id, verdict.label, verdict.reason or "",
                     "" if verdict.boundary_index is None else verdict.boundary_index, empty, verdict.detail))
        if not verdict.accepted and status == EXIT_OK:
            status = EXIT_DOMAIN
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(VALIDATE_COLUMNS)
    writer.writerows(rows)
    if args.out:
        Path(args.out).write_text(buf.getvalue(), encoding="utf-8", newline="")
    else:
        sys.stdout.write(buf.getvalue())
    bad = sum(1 for r in rows if r[3] != "ACCEPT")
    _say(args, f"{len(rows)} record(s), {bad} rejected or invalid")
    return status


def cmd_preprocess(args) -> int:
    cfg = _config(args)
    dataset = load_dataset(args.dataset)
    out = Path(args.out)
    log_path = out.with_name(out.name + ".log.jsonl")
    kept = 0
    with open(out, "w", encoding="utf-8", newline="\n") as fh, open(log_path, "w", encoding="utf-8", newline="\n") as log:
        for sample in dataset.sorted():
            outcome = preprocess_sample(sample, cfg.preprocess)
            entry = {
                "writer_id": sample.writer_id,
                "sentence_id": sample.sentence_id,
                "status": "kept" if outcome.kept else "rejected",
                "verdict": outcome.verdict.label,
                "reason": outcome.verdict.reason,
                "boundary_index": outcome.verdict.boundary_index,
                "deskew": None if outcome.deskew is None else {
                    "angle_radians": outcome.deskew.angle_radians,
                    "applied": outcome.deskew.applied,
                    "skip_reason": outcome.deskew.skip_reason.value,
                },
                "steps": outcome.steps,
            }
            log.write(json.dumps(entry) + "\n")
            if outcome.kept:
                kept += 1
                fh.write(dumps_sample(outcome.sample) + "\n")
    _say(args, f"kept {kept} of {len(dataset)} sentence(s); log at {log_path}")
    return EXIT_OK


def _exclusions(cfg: RunConfig):
    return read_exclusions(cfg.exclude) if cfg.exclude else set()


def cmd_eval(args) -> int:
    cfg = _config(args)
    gt = load_dataset(args.gt)
    pred = load_dataset(args.pred)
    report = evaluate(gt, pred, cfg, _exclusions(cfg))
    paths = write_report(report, args.out)
    _say(args, "wrote " + ", ".join(str(p) for p in paths))
    return EXIT_OK


def cmd_vdl(args) -> int:
    cfg = _config(args)
    results = evaluate_vdl(load_dataset(args.gt), load_dataset(args.pred), cfg, _exclusions(cfg))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "vdl_boundaries.csv").write_text(vdl_csv(results), encoding="utf-8", newline="")
    (out / "vdl_summary.json").write_text(json.dumps(vdl_summary(results), indent=2) + "\n", encoding="utf-8")
    _say(args, f"wrote VDL diagnostics for {len(results)} sentence(s) to {out}")
    return EXIT_OK


def cmd_render(args) -> int:
    cfg = _config(args)
    dataset: Dataset = load_dataset(args.dataset)
    samples = [delta_to_absolute(s) if s.coordinate_mode is CoordinateMode.DELTA else s for s in dataset.sorted()]
    paths = render_dataset(samples, args.out, cfg.render_height, cfg.highlight_cursive, cfg.y_up)
    _say(args, f"rendered {len(paths)} SVG file(s) to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="csmkit", description="Preprocess online handwriting datasets and score predictions against ground truth."
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="flat key = value run configuration")
    common.add_argument("--quiet", action="store_true", help="suppress progress messages")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="check dataset format and segmentation")
    p.add_argument("dataset")
    p.add_argument("--out", metavar="PATH", help="write the verdict CSV here instead of stdout")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("preprocess", parents=[common], help="run the harmonization pipeline")
    p.add_argument("dataset")
    p.add_argument("--out", metavar="PATH", required=True, help="processed dataset (a .log.jsonl sidecar is added)")
    p.set_defaults(func=cmd_preprocess)

    for name, func, helptext in (("eval", cmd_eval, "CSM + DTW report"), ("vdl", cmd_vdl, "Vertical Drift diagnostic")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--gt", metavar="PATH", required=True)
        p.add_argument("--pred", metavar="PATH", required=True)
        p.add_argument("--out", metavar="PATH", required=True, help="output directory")
        p.add_argument("--exclude", metavar="PATH", help="writer_id,sentence_id keys dropped from both sides")
        if name == "eval":
            p.add_argument("--convert-eoc", action="store_true", help="infer cursive labels on the prediction")
            p.add_argument("--workers", type=int, help="threads for per-sentence work")
        p.set_defaults(func=func)

    p = sub.add_parser("render", parents=[common], help="one SVG per sentence")
    p.add_argument("dataset")
    p.add_argument("--out", metavar="PATH", required=True, help="output directory")
    p.add_argument("--highlight-cursive", action="store_true")
    p.set_defaults(func=cmd_render)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CsmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO if exc.code in errors.FORMAT_CODES else EXIT_DOMAIN
    except OSError as exc:
        print(f"error: {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
