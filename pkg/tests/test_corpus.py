import random

import pytest

from scaleapprox.corpus import (
    PipelineConfig,
    SongAnalysis,
    SongError,
    TrackAnalysis,
    aggregate_retrieval,
    analyze_corpus,
    analyze_song,
    compare_tracks,
    degree_density,
    epsilon_distribution,
    load_manifest,
    mean_std,
    parse_manifest,
)
from scaleapprox.errors import ParseError
from scaleapprox.mixture import GaussianComponent
from scaleapprox.scale import (
    DegreeClass as D,
    KnownTuning,
    ScaleEstimate,
    classify_retrieval,
    epsilon_s,
    expected_degrees,
    label_degree,
)
from scaleapprox.synth import SongSpec, generate_corpus

from conftest import TONIC_HZ, heptatonic_song, scale_spec


def make_track(label, means, weights=None, tuning=None):
    weights = weights or [1.0 / len(means)] * len(means)
    comps = tuple(GaussianComponent(float(m), 12.0, w) for m, w in zip(means, weights))
    est = ScaleEstimate(comps, tuple(label_degree(m) for m in means), epsilon_s(comps))
    exp = expected_degrees(tuning or KnownTuning(TONIC_HZ))
    return TrackAnalysis(label, est, classify_retrieval(est.found, exp), n_samples=1000)


def make_song(sid, sep_means, voc_means, tuning=None, sep_weights=None, voc_weights=None):
    tuning = tuning or KnownTuning(TONIC_HZ)
    sep = make_track("seperewa", sep_means, sep_weights, tuning) if sep_means is not None else TrackAnalysis("seperewa", error="failed")
    voc = make_track("vocals", voc_means, voc_weights, tuning) if voc_means is not None else TrackAnalysis("vocals", error="failed")
    return SongAnalysis(sid, tuning, sep, voc)


@pytest.fixture(scope="module")
def synth_corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    songs = [
        heptatonic_song("s1", 1),
        heptatonic_song("s2", 2, third="minor"),
        heptatonic_song("s3", 3, sixth="minor"),
    ]
    return songs, generate_corpus(songs, out)


# --- manifest --------------------------------------------------------------


def test_manifest_resolves_relative_paths(synth_corpus):
    _, manifest = synth_corpus
    records = load_manifest(manifest)
    assert [r.id for r in records] == ["s1", "s2", "s3"]
    assert records[0].seperewa_trace_path == manifest.parent / "s1_seperewa.csv"
    assert records[1].tuning.third == "minor"


@pytest.mark.parametrize(
    "entry, match",
    [
        ({"id": "a", "seperewa_f0": "x", "vocals_f0": "y", "tonic_hz": 220, "third": "major"}, "sixth"),
        ({"id": "a", "seperewa_f0": "x", "vocals_f0": "y", "tonic_hz": -1, "third": "major", "sixth": "major"}, "tonic_hz"),
        ({"id": "a", "seperewa_f0": "x", "vocals_f0": "y", "tonic_hz": 220, "third": "neutral", "sixth": "major"}, "third"),
    ],
)
def test_manifest_errors(entry, match):
    with pytest.raises(ParseError, match=match):
        parse_manifest([entry])


def test_manifest_duplicate_ids():
    e = {"id": "a", "seperewa_f0": "x", "vocals_f0": "y", "tonic_hz": 220, "third": "major", "sixth": "major"}
    with pytest.raises(ParseError, match="duplicate"):
        parse_manifest([e, dict(e)])


# --- analyze_song ----------------------------------------------------------


def test_analyze_song_retrieves_generating_degrees(synth_corpus):
    songs, manifest = synth_corpus
    for record, spec in zip(load_manifest(manifest), songs):
        a = analyze_song(record)
        for label in ("seperewa", "vocals"):
            t = a.track(label)
            assert t.ok
            assert t.retrieval.retrieved == expected_degrees(spec.tuning)
            positions = getattr(spec, label).positions
            for c in t.estimate.components:
                assert min(abs(c.mean_cents - p) for p in positions) <= 10


def test_missing_vocals_file(synth_corpus, tmp_path):
    _, manifest = synth_corpus
    record = load_manifest(manifest)[0]
    broken = type(record)(record.id, record.seperewa_trace_path, tmp_path / "nope.csv", record.tuning)
    with pytest.raises(SongError, match="s1"):
        analyze_song(broken)


def test_short_track_fails_alone(tmp_path):
    song = heptatonic_song("short", 4)
    short = scale_spec([0, 700], [10, 10], seed=1, n_frames=10)
    songs = [SongSpec("short", short, song.vocals, song.tuning)]
    (record,) = load_manifest(generate_corpus(songs, tmp_path))
    a = analyze_song(record)
    assert not a.seperewa.ok and "seperewa" in a.seperewa.error
    assert a.vocals.ok


def test_config_changes_threshold(tmp_path):
    spec = scale_spec([0, 700], [10, 10], seed=3, n_frames=400, confidence_range=(0.5, 0.79))
    song = heptatonic_song("t", 5)
    (record,) = load_manifest(generate_corpus([SongSpec("t", spec, song.vocals, song.tuning)], tmp_path))
    assert not analyze_song(record).seperewa.ok
    assert analyze_song(record, PipelineConfig(threshold=0.5)).seperewa.ok


def test_corpus_order_and_workers_do_not_matter(synth_corpus):
    _, manifest = synth_corpus
    records = load_manifest(manifest)
    a, _ = analyze_corpus(records)
    shuffled = records[::-1]
    b, _ = analyze_corpus(shuffled, workers=2)
    assert a == b
    assert [x.id for x in a] == ["s1", "s2", "s3"]


# --- aggregate_retrieval ---------------------------------------------------


def test_single_song_all_retrieved():
    base = [0, 200, 400, 500, 700, 900]
    table = aggregate_retrieval([make_song("a", base, base)])
    rows = {r.degree: r for r in table.rows}
    for d in expected_degrees(KnownTuning(TONIC_HZ)):
        assert rows[d].n_in_tuning == 1
        for label in ("seperewa", "vocals"):
            c = rows[d].tracks[label]
            assert (c.retrieved, c.missing, c.unexpected) == (1, 0, 0)
    assert rows[D.MINOR7].n_in_tuning is None
    assert rows[D.MINOR3].tracks["vocals"].retrieved is None


def test_retrieval_invariants():
    rng = random.Random(0)
    analyses = []
    for i in range(12):
        tuning = KnownTuning(TONIC_HZ, rng.choice(["major", "minor"]), rng.choice(["major", "minor"]))
        tracks = [sorted(rng.sample(range(-200, 1200, 100), rng.randint(1, 8))) for _ in range(2)]
        if i == 5:
            tracks[0] = None
        analyses.append(make_song(f"s{i:02d}", tracks[0], tracks[1], tuning))
    table = aggregate_retrieval(analyses)
    assert table.excluded == {"seperewa": 1, "vocals": 0}
    for row in table.rows:
        for label, c in row.tracks.items():
            if row.n_in_tuning is None:
                assert c.retrieved is None and c.missing is None
            else:
                assert c.retrieved + c.missing == c.n_in_tuning
        if row.degree in (D.MINOR2, D.TRITONE, D.MINOR7, D.MAJOR7):
            assert row.n_in_tuning is None
    assert table.rows[0].tracks["vocals"].n_in_tuning == 12
    assert table.rows[0].tracks["seperewa"].n_in_tuning == 11
    # processing order is irrelevant
    assert aggregate_retrieval(analyses[::-1]) == table


def test_unexpected_degrees_counted():
    base = [0, 200, 400, 500, 700, 900]
    table = aggregate_retrieval([make_song("a", base + [1100], base + [300, 1000])])
    rows = {r.degree: r for r in table.rows}
    assert rows[D.MAJOR7].tracks["seperewa"].unexpected == 1
    assert rows[D.MINOR3].tracks["vocals"].unexpected == 1
    assert rows[D.MINOR7].tracks["vocals"].unexpected == 1
    assert table.summary["vocals_unexpected"].n == 12
    assert table.summary["vocals_retrieved"].n == 6


def test_mean_std_is_population():
    s = mean_std([71, 71, 3, 68, 71, 71, 3, 68])
    assert s.mean == 53.25
    assert round(s.std, 2) == 29.04
    assert mean_std([5.0]).std == 0


# --- epsilon / density / comparison ----------------------------------------


def test_epsilon_single_song():
    d = epsilon_distribution([make_song("a", [0, 230], [0, 200])], "seperewa")
    assert d.values == [("a", 15.0)]
    assert d.summary.mean == 15 and d.summary.std == 0


def test_epsilon_skips_failed():
    d = epsilon_distribution([make_song("a", None, [0]), make_song("b", [10], [0])], "seperewa")
    assert d.values == [("b", 10.0)]


def test_epsilon_no_successes_warns():
    with pytest.warns(UserWarning):
        d = epsilon_distribution([make_song("a", None, [0])], "seperewa")
    assert d.summary is None


def test_density_rows():
    pts = degree_density([make_song("a", [0, 700], [0])], "seperewa")
    assert [(p.position_cents, p.degree) for p in pts] == [(0, D.TONIC), (700, D.FIFTH)]


def test_density_keeps_negative_positions():
    pts = degree_density([make_song("a", [-190, 0], [0])], "seperewa")
    assert pts[0].position_cents == -190 and pts[0].degree is D.MINOR7


def test_density_empty_warns():
    with pytest.warns(UserWarning):
        assert degree_density([make_song("a", None, [0])], "seperewa") == []


def test_density_flat_second(tmp_path):
    songs = []
    for i in range(4):
        pos = [0, 180, 390, 520, 700, 900]
        sep = scale_spec(pos, [12] * 6, seed=100 + i)
        voc = scale_spec(pos, [14] * 6, seed=200 + i)
        songs.append(SongSpec(f"f{i}", sep, voc, KnownTuning(TONIC_HZ)))
    analyses, _ = analyze_corpus(load_manifest(generate_corpus(songs, tmp_path)))
    for label in ("seperewa", "vocals"):
        seconds = [p.position_cents for p in degree_density(analyses, label) if p.degree is D.MAJOR2]
        assert len(seconds) == 4
        assert all(170 <= s <= 190 for s in seconds)


def test_compare_single_song():
    rows = compare_tracks([make_song("a", [0, 410], [0, 395])])
    by = {r.degree: r for r in rows}
    assert (by[D.MAJOR3].n_songs_matched, by[D.MAJOR3].mean_distance_cents, by[D.MAJOR3].std_distance_cents) == (1, -15, 0)


def test_compare_two_songs():
    rows = compare_tracks([make_song("a", [700], [710]), make_song("b", [700], [690])])
    (r,) = rows
    assert (r.degree, r.n_songs_matched, r.mean_distance_cents, r.std_distance_cents) == (D.FIFTH, 2, 0, 10)


def test_compare_needs_both_tracks():
    rows = compare_tracks([make_song("a", [0], [0, 700])])
    assert [r.degree for r in rows] == [D.TONIC]
    assert compare_tracks([make_song("a", None, [0])]) == []


def test_compare_uses_heaviest_component():
    song = make_song("a", [405], [380, 430], voc_weights=[0.2, 0.8])
    (r,) = compare_tracks([song])
    assert r.mean_distance_cents == 25


def test_compare_octave_tonic_pairs_by_offset():
    (r,) = compare_tracks([make_song("a", [1190], [5])])
    assert r.degree is D.TONIC and r.mean_distance_cents == 15


def test_compare_swap_flips_sign():
    analyses = [make_song("a", [0, 410, 700], [10, 390, 690]), make_song("b", [0, 395, 705], [-5, 420, 700])]
    fwd = compare_tracks(analyses)
    rev = compare_tracks(analyses, reference="vocals", other="seperewa")
    for f, r in zip(fwd, rev):
        assert f.degree == r.degree
        assert f.mean_distance_cents == pytest.approx(-r.mean_distance_cents)
        assert f.std_distance_cents == pytest.approx(r.std_distance_cents)
