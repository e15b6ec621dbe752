"""Command-line entry point: ``scaleapprox analyze | song | synth``.

Exit codes: 0 success (including partial failures), 2 bad arguments,
3 unreadable or malformed input, 4 nothing could be analyzed.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import re
import sys
import warnings
from pathlib import Path

from . import __version__, report
from .corpus import (
    PipelineConfig,
    SongError,
    SongRecord,
    aggregate_retrieval,
    analyze_corpus,
    analyze_song,
    compare_tracks,
    degree_density,
    epsilon_distribution,
    load_manifest,
)
from .errors import ParseError, ScaleApproxError
from .f0_ingest import TRACK_LABELS
from .mixture import FitConfig
from .scale import KnownTuning
from .synth import generate_corpus, load_synth_spec

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_TOTAL_FAILURE = 4

WORKERS_ENV = "SCALEAPPROX_WORKERS"

log = logging.getLogger("scaleapprox")


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def _add_pipeline_options(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("pipeline")
    g.add_argument("--confidence-threshold", type=float, default=0.8,
                   help="drop frames with tracker confidence below this (default: 0.8)")
    g.add_argument("--bin-cents", type=_positive_float, default=10.0,
                   help="histogram bin width in cents (default: 10)")
    g.add_argument("--merge-radius", type=float, default=50.0,
                   help="average components closer than this many cents (default: 50)")
    g.add_argument("--range-lo", type=float, default=-200.0,
                   help="lower analysis bound in cents from the tonic (default: -200)")
    g.add_argument("--range-hi", type=float, default=1200.0,
                   help="upper analysis bound in cents from the tonic (default: 1200)")
    g.add_argument("--min-samples", type=int, default=50,
                   help="minimum retained frames per track (default: 50)")
    f = p.add_argument_group("mixture fitting")
    f.add_argument("--k-min", type=int, default=2)
    f.add_argument("--k-max", type=int, default=14)
    f.add_argument("--max-iters", type=int, default=200)
    f.add_argument("--rel-tol", type=float, default=1e-6)
    f.add_argument("--variance-floor", type=float, default=10.0,
                   help="minimum component std in cents (default: 10)")
    f.add_argument("--min-weight", type=float, default=0.01,
                   help="drop components lighter than this after fitting (default: 0.01)")
    f.add_argument("--seed", type=int, default=0, help="seed for the fitter's random fallback")


def _pipeline_config(args) -> PipelineConfig:
    fit = FitConfig(
        k_min=args.k_min,
        k_max=args.k_max,
        max_iters=args.max_iters,
        rel_tol=args.rel_tol,
        variance_floor_cents=args.variance_floor,
        min_weight=args.min_weight,
        seed=args.seed,
    )
    return PipelineConfig(
        threshold=args.confidence_threshold,
        bin_cents=args.bin_cents,
        lo=args.range_lo,
        hi=args.range_hi,
        merge_radius=args.merge_radius,
        min_samples=args.min_samples,
        fit=fit,
    )


def _config_dict(config: PipelineConfig) -> dict:
    return dataclasses.asdict(config)


def _non_defaults(config: PipelineConfig) -> dict:
    default = _flatten(_config_dict(PipelineConfig()))
    return {k: v for k, v in _flatten(_config_dict(config)).items() if default.get(k) != v}


def _flatten(d, prefix=""):
    out = {}
    for k, v in d.items():
        if isinstance(v, dict):
            out.update(_flatten(v, f"{prefix}{k}."))
        else:
            out[f"{prefix}{k}"] = v
    return out


def _safe_name(song_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]", "_", song_id)


def cmd_analyze(manifest, out_dir, config: PipelineConfig, workers: int = 1) -> int:
    try:
        records = load_manifest(manifest)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create {out_dir}: {exc}", file=sys.stderr)
        return EXIT_INPUT

    analyses, failures = analyze_corpus(records, config, workers)
    errors = [{"id": sid, "scope": "song", "error": msg} for sid, msg in failures]
    for a in analyses:
        for label in TRACK_LABELS:
            t = a.track(label)
            if not t.ok:
                errors.append({"id": a.id, "scope": label, "error": t.error})

    for a in analyses:
        report.write_text(out_dir / "songs" / f"{_safe_name(a.id)}.json", report.dumps(report.song_to_dict(a)))

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        table = aggregate_retrieval(analyses)
        eps = [epsilon_distribution(analyses, label) for label in TRACK_LABELS]
        density = {label: degree_density(analyses, label) for label in TRACK_LABELS}
        comparison = compare_tracks(analyses)

    report.write_text(out_dir / "retrieval.csv", report.retrieval_csv(table))
    report.write_text(out_dir / "epsilon.csv", report.epsilon_csv(eps))
    for label in TRACK_LABELS:
        report.write_text(out_dir / f"density_{label}.csv", report.density_csv(density[label]))
    report.write_text(out_dir / "comparison.csv", report.comparison_csv(comparison))
    report.write_text(
        out_dir / "report.json",
        report.dumps(
            {
                "retrieval": report.retrieval_to_dict(table),
                "epsilon": {d.track: report.epsilon_to_dict(d) for d in eps},
                "comparison": report.comparison_to_dict(comparison),
            }
        ),
    )
    report.write_text(out_dir / "errors.json", report.dumps(errors))

    n_ok = sum(any(a.track(l).ok for l in TRACK_LABELS) for a in analyses)
    report.write_text(
        out_dir / "run.json",
        report.dumps(
            {
                "tool": "scaleapprox",
                "version": __version__,
                "manifest": str(manifest),
                "seed": config.fit.seed,
                "config": _config_dict(config),
                "non_default_config": _non_defaults(config),
                "n_songs": len(records),
                "n_songs_analyzed": n_ok,
                "n_songs_failed": len(records) - n_ok,
                "excluded_tracks": table.excluded,
            }
        ),
    )
    for e in errors:
        log.warning("%s [%s]: %s", e["id"], e["scope"], e["error"])
    if n_ok == 0:
        print("error: no song could be analyzed", file=sys.stderr)
        return EXIT_TOTAL_FAILURE
    return EXIT_OK


def cmd_song(seperewa_csv, vocals_csv, tonic_hz, third, sixth, config: PipelineConfig) -> int:
    record = SongRecord(
        "song", Path(seperewa_csv), Path(vocals_csv), KnownTuning(tonic_hz, third, sixth)
    )
    try:
        analysis = analyze_song(record, config)
    except SongError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    sys.stdout.write(report.dumps(report.song_to_dict(analysis)))
    if not any(analysis.track(l).ok for l in TRACK_LABELS):
        return EXIT_TOTAL_FAILURE
    return EXIT_OK


def cmd_synth(spec_file, out_dir) -> int:
    try:
        specs = load_synth_spec(spec_file)
    except OSError as exc:
        print(f"error: cannot read {spec_file}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ParseError as exc:
        print(f"error: invalid synth spec: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            manifest = generate_corpus(specs, out_dir)
    except ScaleApproxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(manifest)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scaleapprox",
        description="Approximate musical scales from F0 traces and report their "
        "deviation from equal temperament.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="analyze every song in a manifest")
    p.add_argument("manifest", type=Path)
    p.add_argument("-o", "--out-dir", type=Path, required=True)
    p.add_argument("-j", "--workers", type=int, default=None,
                   help=f"worker processes (default: ${WORKERS_ENV} or 1)")
    _add_pipeline_options(p)

    p = sub.add_parser("song", help="analyze one seperewa/vocal pair and print JSON")
    p.add_argument("seperewa_csv", type=Path)
    p.add_argument("vocals_csv", type=Path)
    p.add_argument("--tonic-hz", type=_positive_float, required=True)
    p.add_argument("--third", choices=["major", "minor"], required=True)
    p.add_argument("--sixth", choices=["major", "minor"], required=True)
    _add_pipeline_options(p)

    p = sub.add_parser("synth", help="generate a synthetic corpus from a JSON spec")
    p.add_argument("spec_file", type=Path)
    p.add_argument("-o", "--out-dir", type=Path, required=True)
    return parser


def _default_workers(parser) -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        parser.error(f"{WORKERS_ENV} must be an integer, got {raw!r}")
    return n


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
    )

    if args.command == "synth":
        return cmd_synth(args.spec_file, args.out_dir)

    try:
        config = _pipeline_config(args)
    except ValueError as exc:
        parser.error(str(exc))

    if args.command == "analyze":
        workers = args.workers if args.workers is not None else _default_workers(parser)
        if workers < 1:
            parser.error("--workers must be >= 1")
        return cmd_analyze(args.manifest, args.out_dir, config, workers)
    return cmd_song(args.seperewa_csv, args.vocals_csv, args.tonic_hz, args.third, args.sixth, config)


if __name__ == "__main__":
    sys.exit(main())
