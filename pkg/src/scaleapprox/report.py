"""JSON and CSV serialization of analyses and corpus reports.

CSV column sets are fixed:

retrieval.csv
    degree, n_in_tuning, then per track ``<track>_n_in_tuning``,
    ``<track>_retrieved``, ``<track>_missing``, ``<track>_unexpected``.
    Degrees absent from every tuning carry ``-`` in the count columns.
    Two trailing rows, ``mean`` and ``std``, hold the summary statistics.
epsilon.csv
    song_id, track, epsilon_s
density_<track>.csv
    song_id, position_cents, weight, degree, offset_cents
comparison.csv
    degree, n_songs_matched, mean_distance_cents, std_distance_cents
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from .corpus import (
    ComparisonRow,
    DensityPoint,
    EpsilonDistribution,
    RetrievalTable,
    SongAnalysis,
    SummaryStat,
    TrackAnalysis,
)
from .f0_ingest import TRACK_LABELS
from .mixture import GaussianComponent, MixtureModel
from .scale import ScaleEstimate

ABSENT = "-"

RETRIEVAL_COLUMNS = ["degree", "n_in_tuning"] + [
    f"{t}_{c}" for t in TRACK_LABELS for c in ("n_in_tuning", "retrieved", "missing", "unexpected")
]
EPSILON_COLUMNS = ["song_id", "track", "epsilon_s"]
DENSITY_COLUMNS = ["song_id", "position_cents", "weight", "degree", "offset_cents"]
COMPARISON_COLUMNS = ["degree", "n_songs_matched", "mean_distance_cents", "std_distance_cents"]


def _component(c: GaussianComponent) -> dict:
    return {"mean_cents": c.mean_cents, "std_cents": c.std_cents, "weight": c.weight}


def _model(m: MixtureModel) -> dict:
    return {
        "k": m.k,
        "bic": m.bic,
        "log_likelihood": m.log_likelihood,
        "n_samples": m.n_samples,
        "n_iter": m.n_iter,
        "converged": m.converged,
        "components": [_component(c) for c in m.components],
    }


def _degrees(ds) -> list[str]:
    return [d.label for d in sorted(ds, key=lambda d: d.value)]


def estimate_to_dict(est: ScaleEstimate) -> dict:
    out = {
        "epsilon_s": est.epsilon_s,
        "components": [
            dict(_component(c), degree=l.degree.label, offset_cents=l.offset_cents)
            for c, l in zip(est.components, est.labels)
        ],
    }
    if est.model is not None:
        out["mixture"] = _model(est.model)
    return out


def track_to_dict(t: TrackAnalysis) -> dict:
    if not t.ok:
        return {"status": "failed", "error": t.error}
    return {
        "status": "ok",
        "n_samples": t.n_samples,
        "scale": estimate_to_dict(t.estimate),
        "found": _degrees(t.estimate.found),
        "retrieved": _degrees(t.retrieval.retrieved),
        "missing": _degrees(t.retrieval.missing),
        "unexpected": _degrees(t.retrieval.unexpected),
    }


def song_to_dict(a: SongAnalysis) -> dict:
    return {
        "id": a.id,
        "tuning": {"tonic_hz": a.tuning.tonic_hz, "third": a.tuning.third, "sixth": a.tuning.sixth},
        "expected": _degrees(a.expected),
        "tracks": {label: track_to_dict(a.track(label)) for label in TRACK_LABELS},
    }


def _stat(s: SummaryStat | None):
    return None if s is None else {"mean": s.mean, "std": s.std, "n": s.n}


def retrieval_to_dict(table: RetrievalTable) -> dict:
    rows = []
    for r in table.rows:
        rows.append(
            {
                "degree": r.degree.label,
                "n_in_tuning": r.n_in_tuning,
                "tracks": {
                    label: {
                        "n_in_tuning": c.n_in_tuning,
                        "retrieved": c.retrieved,
                        "missing": c.missing,
                        "unexpected": c.unexpected,
                    }
                    for label, c in r.tracks.items()
                },
            }
        )
    return {
        "rows": rows,
        "summary": {k: _stat(v) for k, v in table.summary.items()},
        "excluded_tracks": table.excluded,
    }


def epsilon_to_dict(dist: EpsilonDistribution) -> dict:
    return {
        "label": "epsilon_S (SAP definition)",
        "values": [{"song_id": sid, "epsilon_s": v} for sid, v in dist.values],
        "summary": _stat(dist.summary),
    }


def comparison_to_dict(rows) -> list[dict]:
    return [
        {
            "degree": r.degree.label,
            "n_songs_matched": r.n_songs_matched,
            "mean_distance_cents": r.mean_distance_cents,
            "std_distance_cents": r.std_distance_cents,
        }
        for r in rows
    ]


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, allow_nan=False) + "\n"


def _fmt(v):
    if v is None:
        return ABSENT
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def retrieval_csv(table: RetrievalTable) -> str:
    rows = []
    for r in table.rows:
        row = [r.degree.label, r.n_in_tuning]
        for label in TRACK_LABELS:
            c = r.tracks[label]
            row += [c.n_in_tuning, c.retrieved, c.missing, c.unexpected]
        rows.append(row)
    for stat in ("mean", "std"):
        row = [stat]
        for col in RETRIEVAL_COLUMNS[1:]:
            s = table.summary.get(col)
            row.append(None if s is None else getattr(s, stat))
        rows.append(row)
    return _csv_text(RETRIEVAL_COLUMNS, rows)


def epsilon_csv(dists) -> str:
    rows = [[sid, d.track, v] for d in dists for sid, v in d.values]
    return _csv_text(EPSILON_COLUMNS, rows)


def density_csv(points: list[DensityPoint]) -> str:
    rows = [[p.song_id, p.position_cents, p.weight, p.degree.label, p.offset_cents] for p in points]
    return _csv_text(DENSITY_COLUMNS, rows)


def comparison_csv(rows: list[ComparisonRow]) -> str:
    return _csv_text(
        COMPARISON_COLUMNS,
        [[r.degree.label, r.n_songs_matched, r.mean_distance_cents, r.std_distance_cents] for r in rows],
    )


def read_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
