"""Seeded synthetic F0 traces with known generating scales.

Used as the ground truth for end-to-end tests: each note is a Gaussian
cloud of cents around its position, so a correct pipeline must hand the
positions back.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ParseError, ScaleApproxError
from .f0_ingest import DEFAULT_HI, DEFAULT_LO, F0Trace, format_f0_csv
from .scale import KnownTuning

HOP_S = 0.01


@dataclass(frozen=True)
class Note:
    position_cents: float
    std_cents: float
    weight: float = 1.0


@dataclass(frozen=True)
class ScaleSpec:
    notes: tuple[Note, ...]
    tonic_hz: float
    n_frames: int
    seed: int
    confidence_range: tuple[float, float] = (0.85, 1.0)
    unvoiced_fraction: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "notes", tuple(
            n if isinstance(n, Note) else Note(*n) for n in self.notes
        ))
        if not self.notes:
            raise ValueError("notes: at least one note is required")
        for i, note in enumerate(self.notes):
            if not DEFAULT_LO <= note.position_cents <= DEFAULT_HI:
                raise ValueError(f"notes[{i}].position_cents must lie in [-200, 1200]")
            if not note.std_cents > 0:
                raise ValueError(f"notes[{i}].std_cents must be positive")
            if not note.weight > 0:
                raise ValueError(f"notes[{i}].weight must be positive")
        if not (self.tonic_hz > 0 and math.isfinite(self.tonic_hz)):
            raise ValueError("tonic_hz must be positive")
        if not (isinstance(self.n_frames, int) and self.n_frames > 0):
            raise ValueError("n_frames must be a positive integer")
        lo, hi = self.confidence_range
        if not 0.0 <= lo <= hi <= 1.0:
            raise ValueError("confidence_range must satisfy 0 <= lo <= hi <= 1")
        if not 0.0 <= self.unvoiced_fraction < 1.0:
            raise ValueError("unvoiced_fraction must lie in [0, 1)")
        if not (isinstance(self.seed, int) and 0 <= self.seed < 2**64):
            raise ValueError("seed must be an unsigned 64-bit integer")

    @property
    def positions(self) -> list[float]:
        return [n.position_cents for n in self.notes]


@dataclass(frozen=True)
class SongSpec:
    id: str
    seperewa: ScaleSpec
    vocals: ScaleSpec
    tuning: KnownTuning


def generate_trace(spec: ScaleSpec, source_label: str = "seperewa", unvoiced_fraction=None) -> F0Trace:
    """Sample one trace from ``spec``; identical specs give identical traces.

    ``unvoiced_fraction`` overrides the spec value and may be 1.0 (all
    frames unvoiced), which a spec itself does not allow.
    """
    uf = spec.unvoiced_fraction if unvoiced_fraction is None else unvoiced_fraction
    rng = np.random.default_rng(spec.seed)
    n = spec.n_frames
    pos = np.array([note.position_cents for note in spec.notes])
    std = np.array([note.std_cents for note in spec.notes])
    w = np.array([note.weight for note in spec.notes])
    w = w / w.sum()

    voiced = rng.random(n) >= uf
    which = rng.choice(len(pos), size=n, p=w)
    cents = rng.normal(pos[which], std[which])
    lo, hi = spec.confidence_range
    conf = rng.uniform(lo, hi, size=n)
    freq = np.where(voiced, spec.tonic_hz * np.power(2.0, cents / 1200.0), 0.0)
    times = np.arange(n) / round(1.0 / HOP_S)
    return F0Trace(times, freq, conf, source_label)


def generate_corpus(specs: Sequence[SongSpec], out_dir) -> Path:
    """Write one CSV per track plus ``manifest.json``; returns the manifest path."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ScaleApproxError(f"cannot create {out_dir}: {exc}") from exc
    if not specs:
        warnings.warn("generating an empty corpus", stacklevel=2)

    manifest = []
    for song in specs:
        entry = {"id": song.id}
        for label in ("seperewa", "vocals"):
            trace = generate_trace(getattr(song, label), label)
            name = f"{song.id}_{label}.csv"
            path = out_dir / name
            try:
                path.write_text(format_f0_csv(trace), encoding="utf-8")
            except OSError as exc:
                raise ScaleApproxError(f"cannot write {path}: {exc}") from exc
            entry[f"{label}_f0"] = name
        entry.update(
            tonic_hz=song.tuning.tonic_hz, third=song.tuning.third, sixth=song.tuning.sixth
        )
        manifest.append(entry)

    manifest_path = out_dir / "manifest.json"
    try:
        manifest_path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise ScaleApproxError(f"cannot write {manifest_path}: {exc}") from exc
    return manifest_path


def derive_seed(seed: int, *path: int) -> int:
    """Independent 64-bit child seed for position ``path`` under ``seed``."""
    ss = np.random.SeedSequence([seed, *path])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _track_from_json(obj, seed, where, tonic_hz):
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: expected an object")
    try:
        raw_notes = obj["notes"]
    except KeyError:
        raise ParseError(f"{where}.notes: missing field") from None
    notes = []
    for i, raw in enumerate(raw_notes):
        if isinstance(raw, dict):
            try:
                notes.append(Note(float(raw["position_cents"]), float(raw["std_cents"]), float(raw.get("weight", 1.0))))
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"{where}.notes[{i}]: {exc}") from None
        else:
            try:
                notes.append(Note(*(float(v) for v in raw)))
            except (TypeError, ValueError) as exc:
                raise ParseError(f"{where}.notes[{i}]: {exc}") from None
    try:
        return ScaleSpec(
            notes=tuple(notes),
            tonic_hz=tonic_hz,
            n_frames=obj.get("n_frames", 4000),
            seed=obj.get("seed", seed),
            confidence_range=tuple(obj.get("confidence_range", (0.85, 1.0))),
            unvoiced_fraction=float(obj.get("unvoiced_fraction", 0.0)),
        )
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{where}.{exc}") from None


def parse_synth_spec(obj) -> list[SongSpec]:
    """Validate a synth spec document.

    Layout::

        {"seed": 7,
         "songs": [{"id": "s01", "tonic_hz": 220.0, "third": "major", "sixth": "major",
                    "seperewa": {"notes": [[0, 12, 1], [200, 12, 1]], "n_frames": 4000},
                    "vocals": {...}}]}

    A top-level ``seed`` is mandatory; per-track seeds default to values
    derived from it.
    """
    if not isinstance(obj, dict):
        raise ParseError("spec must be a JSON object")
    if "seed" not in obj:
        raise ParseError("seed: missing; an explicit seed is required for reproducible output")
    seed = obj["seed"]
    if not (isinstance(seed, int) and not isinstance(seed, bool) and 0 <= seed < 2**64):
        raise ParseError("seed: must be an unsigned 64-bit integer")
    songs = obj.get("songs")
    if not isinstance(songs, list):
        raise ParseError("songs: expected a list")
    out, seen = [], set()
    for i, song in enumerate(songs):
        where = f"songs[{i}]"
        if not isinstance(song, dict):
            raise ParseError(f"{where}: expected an object")
        sid = song.get("id")
        if not isinstance(sid, str) or not sid:
            raise ParseError(f"{where}.id: expected a non-empty string")
        if sid in seen:
            raise ParseError(f"{where}.id: duplicate id {sid!r}")
        seen.add(sid)
        try:
            tuning = KnownTuning(
                float(song.get("tonic_hz", "nan")), song.get("third", "major"), song.get("sixth", "major")
            )
        except (TypeError, ValueError) as exc:
            raise ParseError(f"{where}.{exc}") from None
        tracks = [
            _track_from_json(song.get(label), derive_seed(seed, i, t), f"{where}.{label}", tuning.tonic_hz)
            for t, label in enumerate(("seperewa", "vocals"))
        ]
        out.append(SongSpec(sid, tracks[0], tracks[1], tuning))
    return out


def load_synth_spec(path) -> list[SongSpec]:
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}", path=path) from None
    return parse_synth_spec(obj)
