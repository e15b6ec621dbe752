import numpy as np
import pytest

from scaleapprox.f0_ingest import histogram_from_values, quantize_cents
from scaleapprox.scale import KnownTuning
from scaleapprox.synth import Note, ScaleSpec, SongSpec

TONIC_HZ = 220.0

# Six-degree tunings with the seventh absent.  Adjacent notes are kept at
# least 150 cents apart by bending the semitone-neighbours away from each
# other (flat third / sharp fourth, flat second for minor thirds, ...).
HEPTATONIC_BASES = {
    ("major", "major"): [0, 200, 370, 530, 700, 900],
    ("minor", "major"): [0, 175, 330, 500, 700, 900],
    ("major", "minor"): [0, 200, 368, 523, 678, 833],
    ("minor", "minor"): [0, 175, 330, 500, 675, 830],
}


def gaussian_histogram(centers, std, n, seed, weights=None):
    """Histogram of quantized draws from a Gaussian mixture with known
    parameters."""
    rng = np.random.default_rng(seed)
    centers = np.asarray(centers, dtype=float)
    w = np.ones(len(centers)) if weights is None else np.asarray(weights, dtype=float)
    which = rng.choice(len(centers), size=n, p=w / w.sum())
    values = quantize_cents(rng.normal(centers[which], std))
    values = values[(values >= -200) & (values <= 1200)]
    return histogram_from_values(values)


def scale_spec(positions, stds, seed, n_frames=4000, weights=None, **kw):
    weights = weights or [1.0] * len(positions)
    notes = tuple(Note(float(p), float(s), float(w)) for p, s, w in zip(positions, stds, weights))
    return ScaleSpec(notes=notes, tonic_hz=TONIC_HZ, n_frames=n_frames, seed=seed, **kw)


def heptatonic_song(song_id, seed, third="major", sixth="major", jitter=2.5,
                    sep_std=(6.0, 18.0), voc_std=(6.0, 18.0), n_frames=5000):
    """A song whose two tracks are drawn from the same tuning with
    independent microtonal offsets of at most ``jitter`` cents, so adjacent
    notes stay >= 150 cents apart."""
    rng = np.random.default_rng(seed)
    base = HEPTATONIC_BASES[(third, sixth)]
    tracks = {}
    for i, (label, (lo, hi)) in enumerate((("seperewa", sep_std), ("vocals", voc_std))):
        pos = [p + rng.uniform(-jitter, jitter) for p in base]
        stds = [rng.uniform(lo, hi) for _ in base]
        weights = [rng.uniform(0.5, 1.5) for _ in base]
        tracks[label] = scale_spec(
            pos, stds, seed * 10 + i, n_frames=n_frames, weights=weights,
            confidence_range=(0.7, 1.0), unvoiced_fraction=0.05,
        )
    return SongSpec(song_id, tracks["seperewa"], tracks["vocals"], KnownTuning(TONIC_HZ, third, sixth))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_RESULTS = []


@pytest.fixture
def criterion(request):
    """Record a pass/fail line for the acceptance summary.

    Usage: ``criterion("name", detail)`` once the test's checks are set up;
    the outcome is taken from the test result itself.
    """
    entry = {}

    def record(name, detail=""):
        entry.update(name=name, detail=detail)

    yield record
    rep = getattr(request.node, "rep_call", None)
    if entry:
        passed = rep is not None and rep.passed
        ACCEPTANCE_RESULTS.append((passed, entry["name"], entry["detail"]))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for passed, name, detail in ACCEPTANCE_RESULTS:
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {name}" + (f" -- {detail}" if detail else ""))
