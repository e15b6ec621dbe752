"""Corpus runner and the cross-song aggregates.

Each song contributes a seperewa and a vocal track sharing one tonic.  A
track that lacks usable data is marked failed and left out of that
track's aggregates; the other track of the song still counts.
"""

from __future__ import annotations

import json
import logging
import statistics
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .errors import ParseError, ScaleApproxError
from .f0_ingest import (
    DEFAULT_BIN_CENTS,
    DEFAULT_HI,
    DEFAULT_LO,
    DEFAULT_THRESHOLD,
    MIN_SAMPLES,
    TRACK_LABELS,
    build_histogram,
    filter_confidence,
    read_f0_csv,
    to_samples,
)
from .mixture import FitConfig
from .scale import (
    ALL_DEGREES,
    DEFAULT_MERGE_RADIUS,
    DegreeClass,
    KnownTuning,
    Retrieval,
    ScaleEstimate,
    classify_retrieval,
    estimate_scale,
    expected_degrees,
)

log = logging.getLogger(__name__)


class SongError(ScaleApproxError):
    """A song could not be analyzed at all (unreadable or malformed file)."""

    def __init__(self, song_id, message):
        self.song_id = song_id
        super().__init__(f"song {song_id!r}: {message}")


@dataclass(frozen=True)
class PipelineConfig:
    threshold: float = DEFAULT_THRESHOLD
    bin_cents: float = DEFAULT_BIN_CENTS
    lo: float = DEFAULT_LO
    hi: float = DEFAULT_HI
    merge_radius: float = DEFAULT_MERGE_RADIUS
    min_samples: int = MIN_SAMPLES
    fit: FitConfig = field(default_factory=FitConfig)

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must lie in [0, 1]")
        if not self.bin_cents > 0:
            raise ValueError("bin_cents must be positive")
        if not self.lo < self.hi:
            raise ValueError("lo must be below hi")
        if not self.merge_radius >= 0:
            raise ValueError("merge_radius must be non-negative")
        if self.min_samples < 1:
            raise ValueError("min_samples must be >= 1")


@dataclass(frozen=True)
class SongRecord:
    id: str
    seperewa_trace_path: Path
    vocals_trace_path: Path
    tuning: KnownTuning

    def trace_path(self, label: str) -> Path:
        return self.seperewa_trace_path if label == "seperewa" else self.vocals_trace_path


@dataclass(frozen=True)
class TrackAnalysis:
    label: str
    estimate: Optional[ScaleEstimate] = None
    retrieval: Optional[Retrieval] = None
    n_samples: int = 0
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.estimate is not None


@dataclass(frozen=True)
class SongAnalysis:
    id: str
    tuning: KnownTuning
    seperewa: TrackAnalysis
    vocals: TrackAnalysis

    def track(self, label: str) -> TrackAnalysis:
        if label not in TRACK_LABELS:
            raise KeyError(label)
        return getattr(self, label)

    @property
    def expected(self) -> frozenset:
        return expected_degrees(self.tuning)


@dataclass(frozen=True)
class SummaryStat:
    mean: float
    std: float
    n: int


@dataclass(frozen=True)
class TrackCounts:
    """Retrieval counts of one degree on one track.

    ``retrieved``/``missing``/``n_in_tuning`` are None for degrees that no
    analyzed song's tuning contains.
    """

    n_in_tuning: Optional[int]
    retrieved: Optional[int]
    missing: Optional[int]
    unexpected: int


@dataclass(frozen=True)
class RetrievalRow:
    degree: DegreeClass
    n_in_tuning: Optional[int]
    tracks: dict


@dataclass(frozen=True)
class RetrievalTable:
    rows: list
    summary: dict
    excluded: dict


@dataclass(frozen=True)
class EpsilonDistribution:
    track: str
    values: list
    summary: Optional[SummaryStat]


@dataclass(frozen=True)
class DensityPoint:
    song_id: str
    position_cents: float
    weight: float
    degree: DegreeClass
    offset_cents: float


@dataclass(frozen=True)
class ComparisonRow:
    degree: DegreeClass
    n_songs_matched: int
    mean_distance_cents: float
    std_distance_cents: float


def mean_std(values) -> SummaryStat:
    """Mean and population (divide-by-N) standard deviation."""
    values = [float(v) for v in values]
    if not values:
        raise ValueError("mean_std of no values")
    return SummaryStat(statistics.fmean(values), statistics.pstdev(values), len(values))


def load_manifest(path) -> list[SongRecord]:
    """Read a corpus manifest; trace paths resolve against its directory."""
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ParseError(f"cannot read manifest: {exc}", path=path) from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}", path=path) from None
    return parse_manifest(obj, base_dir=path.parent, path=path)


def parse_manifest(obj, base_dir=".", path=None) -> list[SongRecord]:
    if not isinstance(obj, list):
        raise ParseError("manifest must be a JSON array", path=path)
    base_dir = Path(base_dir)
    records, seen = [], set()
    for i, entry in enumerate(obj):
        where = f"entry {i}"
        if not isinstance(entry, dict):
            raise ParseError(f"{where}: expected an object", path=path)
        for key in ("id", "seperewa_f0", "vocals_f0", "tonic_hz", "third", "sixth"):
            if key not in entry:
                raise ParseError(f"{where}: missing field {key!r}", path=path)
        sid = entry["id"]
        if not isinstance(sid, str) or not sid:
            raise ParseError(f"{where}: id must be a non-empty string", path=path)
        if sid in seen:
            raise ParseError(f"{where}: duplicate id {sid!r}", path=path)
        seen.add(sid)
        tonic = entry["tonic_hz"]
        if isinstance(tonic, bool) or not isinstance(tonic, (int, float)):
            raise ParseError(f"{where}: tonic_hz must be a number", path=path)
        try:
            tuning = KnownTuning(float(tonic), entry["third"], entry["sixth"])
        except ValueError as exc:
            raise ParseError(f"{where}: {exc}", path=path) from None
        records.append(
            SongRecord(sid, base_dir / entry["seperewa_f0"], base_dir / entry["vocals_f0"], tuning)
        )
    return records


def _analyze_track(trace, tuning, expected, config: PipelineConfig) -> TrackAnalysis:
    label = trace.source_label
    try:
        kept = filter_confidence(trace, config.threshold)
        samples = to_samples(
            kept, tuning.tonic_hz, config.bin_cents, config.lo, config.hi, config.min_samples
        )
        estimate = estimate_scale(build_histogram(samples), tuning, config.fit, config.merge_radius)
    except ScaleApproxError as exc:
        return TrackAnalysis(label, error=str(exc))
    return TrackAnalysis(
        label,
        estimate=estimate,
        retrieval=classify_retrieval(estimate.found, expected),
        n_samples=len(samples),
    )


def analyze_song(record: SongRecord, config: PipelineConfig = PipelineConfig()) -> SongAnalysis:
    """Run the whole pipeline on both tracks of one song.

    File and parse problems raise :class:`SongError`; per-track data
    shortages are recorded on the returned analysis instead.
    """
    traces = {}
    for label in TRACK_LABELS:
        try:
            traces[label] = read_f0_csv(record.trace_path(label), label)
        except OSError as exc:
            raise SongError(record.id, f"cannot read {label} trace: {exc}") from exc
        except ParseError as exc:
            raise SongError(record.id, f"bad {label} trace: {exc}") from exc
    expected = expected_degrees(record.tuning)
    tracks = {
        label: _analyze_track(traces[label], record.tuning, expected, config)
        for label in TRACK_LABELS
    }
    return SongAnalysis(record.id, record.tuning, tracks["seperewa"], tracks["vocals"])


def _analyze_or_error(record, config):
    try:
        return analyze_song(record, config), None
    except SongError as exc:
        return None, (record.id, str(exc))


def analyze_corpus(
    records: Sequence[SongRecord], config: PipelineConfig = PipelineConfig(), workers: int = 1
):
    """Analyze every song; returns ``(analyses, failures)`` both sorted by id.

    ``failures`` is a list of ``(song_id, message)`` for songs that could not
    be read.  Output does not depend on ``workers``.
    """
    records = sorted(records, key=lambda r: r.id)
    if workers > 1 and len(records) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_analyze_or_error, records, [config] * len(records)))
    else:
        results = [_analyze_or_error(r, config) for r in records]
    analyses = [a for a, _ in results if a is not None]
    failures = [e for _, e in results if e is not None]
    for sid, msg in failures:
        log.warning("%s", msg)
    return analyses, failures


def aggregate_retrieval(analyses: Sequence[SongAnalysis]) -> RetrievalTable:
    """Per-degree retrieved/missing/unexpected counts across the corpus."""
    analyses = sorted(analyses, key=lambda a: a.id)
    rows = []
    excluded = {label: sum(not a.track(label).ok for a in analyses) for label in TRACK_LABELS}
    for degree in ALL_DEGREES:
        in_tuning = [a for a in analyses if degree in a.expected]
        tracks = {}
        for label in TRACK_LABELS:
            ok = [a for a in analyses if a.track(label).ok]
            unexpected = sum(degree in a.track(label).retrieval.unexpected for a in ok)
            if in_tuning:
                n = sum(degree in a.expected for a in ok)
                retrieved = sum(degree in a.track(label).retrieval.retrieved for a in ok)
                tracks[label] = TrackCounts(n, retrieved, n - retrieved, unexpected)
            else:
                tracks[label] = TrackCounts(None, None, None, unexpected)
        rows.append(RetrievalRow(degree, len(in_tuning) or None, tracks))
    return RetrievalTable(rows, retrieval_summary(rows), excluded)


def retrieval_summary(rows: Sequence[RetrievalRow]) -> dict:
    """Bottom-row statistics: mean and population std of each column over
    the rows that carry a number in that column."""
    columns = {"n_in_tuning": [r.n_in_tuning for r in rows]}
    labels = sorted({label for r in rows for label in r.tracks}, key=_track_order)
    for label in labels:
        for stat in ("retrieved", "missing", "unexpected"):
            columns[f"{label}_{stat}"] = [getattr(r.tracks[label], stat) for r in rows]
    summary = {}
    for name, values in columns.items():
        present = [v for v in values if v is not None]
        summary[name] = mean_std(present) if present else None
    return summary


def _track_order(label):
    return TRACK_LABELS.index(label) if label in TRACK_LABELS else len(TRACK_LABELS)


def epsilon_distribution(analyses: Sequence[SongAnalysis], track: str) -> EpsilonDistribution:
    values = [
        (a.id, a.track(track).estimate.epsilon_s)
        for a in sorted(analyses, key=lambda a: a.id)
        if a.track(track).ok
    ]
    if not values:
        warnings.warn(f"no successfully analyzed {track} tracks", stacklevel=2)
        return EpsilonDistribution(track, [], None)
    return EpsilonDistribution(track, values, mean_std([v for _, v in values]))


def degree_density(analyses: Sequence[SongAnalysis], track: str) -> list[DensityPoint]:
    """Every merged component of ``track`` across the corpus, unfolded."""
    points = []
    for a in sorted(analyses, key=lambda a: a.id):
        t = a.track(track)
        if not t.ok:
            continue
        for comp, label in zip(t.estimate.components, t.estimate.labels):
            points.append(
                DensityPoint(a.id, comp.mean_cents, comp.weight, label.degree, label.offset_cents)
            )
    if not points:
        warnings.warn(f"no {track} components to report", stacklevel=2)
    return points


def _strongest_per_degree(estimate: ScaleEstimate) -> dict:
    best = {}
    for comp, label in zip(estimate.components, estimate.labels):
        cur = best.get(label.degree)
        if cur is None or comp.weight > cur[0].weight:
            best[label.degree] = (comp, label)
    return best


def compare_tracks(
    analyses: Sequence[SongAnalysis], reference: str = "seperewa", other: str = "vocals"
) -> list[ComparisonRow]:
    """Signed ``other - reference`` position differences per degree.

    Only songs where both tracks found the degree contribute; with several
    components on one degree the heaviest one is used.  Differences are
    taken between degree offsets, so a tonic found at the octave in one
    track still pairs with a tonic near 0 in the other.
    """
    diffs = {d: [] for d in ALL_DEGREES}
    for a in sorted(analyses, key=lambda a: a.id):
        ref, oth = a.track(reference), a.track(other)
        if not (ref.ok and oth.ok):
            continue
        ref_best = _strongest_per_degree(ref.estimate)
        oth_best = _strongest_per_degree(oth.estimate)
        for degree in ALL_DEGREES:
            if degree in ref_best and degree in oth_best:
                diffs[degree].append(oth_best[degree][1].offset_cents - ref_best[degree][1].offset_cents)
    rows = []
    for degree in ALL_DEGREES:
        if diffs[degree]:
            s = mean_std(diffs[degree])
            rows.append(ComparisonRow(degree, s.n, s.mean, s.std))
    return rows
