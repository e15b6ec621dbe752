"""Reading F0 traces and turning them into tonic-relative pitch histograms.

A trace is the per-frame output of a monophonic pitch tracker: timestamp,
frequency and tracker confidence.  Frames with ``frequency <= 0`` are
unvoiced.  The conversion chain is

    trace -> filter_confidence -> to_samples (cents, quantized, windowed)
          -> build_histogram
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Union

import numpy as np

from .errors import DomainError, InsufficientDataError, ParseError

TRACK_LABELS = ("seperewa", "vocals")
CSV_HEADER = ("time", "frequency", "confidence")

DEFAULT_BIN_CENTS = 10.0
DEFAULT_LO = -200.0
DEFAULT_HI = 1200.0
DEFAULT_THRESHOLD = 0.8
MIN_SAMPLES = 50


@dataclass(frozen=True)
class F0Frame:
    time_s: float
    frequency_hz: float
    confidence: float

    @property
    def voiced(self) -> bool:
        return self.frequency_hz > 0


@dataclass(frozen=True, eq=False)
class F0Trace:
    """Frames of one isolated track, stored column-wise.

    ``time_s``, ``frequency_hz`` and ``confidence`` are equal-length float
    arrays sorted by time.
    """

    time_s: np.ndarray
    frequency_hz: np.ndarray
    confidence: np.ndarray
    source_label: str

    def __post_init__(self):
        if self.source_label not in TRACK_LABELS:
            raise ValueError(
                f"source_label must be one of {TRACK_LABELS}, got {self.source_label!r}"
            )
        n = len(self.time_s)
        if len(self.frequency_hz) != n or len(self.confidence) != n:
            raise ValueError("trace columns differ in length")

    @classmethod
    def from_frames(cls, frames, source_label: str) -> "F0Trace":
        frames = list(frames)
        arr = np.array(
            [(f.time_s, f.frequency_hz, f.confidence) for f in frames], dtype=float
        ).reshape(-1, 3)
        return cls._from_columns(arr[:, 0], arr[:, 1], arr[:, 2], source_label)

    @classmethod
    def _from_columns(cls, t, f, c, source_label):
        t = np.asarray(t, dtype=float)
        order = np.argsort(t, kind="stable")
        return cls(
            t[order],
            np.asarray(f, dtype=float)[order],
            np.asarray(c, dtype=float)[order],
            source_label,
        )

    def __len__(self) -> int:
        return len(self.time_s)

    def __iter__(self) -> Iterator[F0Frame]:
        return iter(self.frames)

    def __eq__(self, other) -> bool:
        if not isinstance(other, F0Trace):
            return NotImplemented
        return (
            self.source_label == other.source_label
            and np.array_equal(self.time_s, other.time_s)
            and np.array_equal(self.frequency_hz, other.frequency_hz)
            and np.array_equal(self.confidence, other.confidence)
        )

    @property
    def frames(self) -> list[F0Frame]:
        return [
            F0Frame(float(t), float(f), float(c))
            for t, f, c in zip(self.time_s, self.frequency_hz, self.confidence)
        ]

    @property
    def voiced(self) -> np.ndarray:
        return self.frequency_hz > 0


@dataclass(frozen=True, eq=False)
class CentsSamples:
    """Quantized tonic-relative cents, restricted to the analysis window."""

    values: np.ndarray
    tonic_hz: float
    bin_cents: float = DEFAULT_BIN_CENTS
    lo: float = DEFAULT_LO
    hi: float = DEFAULT_HI

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True, eq=False)
class PitchHistogram:
    """Sample counts on the bin grid ``lo, lo + bin_cents, ..., hi``."""

    counts: np.ndarray
    bin_cents: float = DEFAULT_BIN_CENTS
    lo: float = DEFAULT_LO
    hi: float = DEFAULT_HI

    def __post_init__(self):
        expected = n_bins(self.lo, self.hi, self.bin_cents)
        if len(self.counts) != expected:
            raise ValueError(f"expected {expected} bins, got {len(self.counts)}")
        if np.any(np.asarray(self.counts) < 0):
            raise ValueError("histogram counts must be non-negative")

    @property
    def centers(self) -> np.ndarray:
        return self.lo + self.bin_cents * np.arange(len(self.counts))

    @property
    def total(self) -> int:
        return int(np.sum(self.counts))

    @property
    def n_nonempty(self) -> int:
        return int(np.count_nonzero(self.counts))

    def shifted(self, offset_cents: float) -> "PitchHistogram":
        """Same counts with every bin center moved by ``offset_cents``."""
        return PitchHistogram(
            self.counts.copy(), self.bin_cents, self.lo + offset_cents, self.hi + offset_cents
        )


def n_bins(lo: float, hi: float, bin_cents: float) -> int:
    return int(round((hi - lo) / bin_cents)) + 1


def parse_f0_csv(content: Union[bytes, str], source_label: str, path=None) -> F0Trace:
    """Parse ``time,frequency,confidence`` CSV content into a trace.

    Rows are re-sorted by time if the file is out of order.  Any malformed
    row raises :class:`ParseError` carrying the 1-based line number.
    """
    if isinstance(content, bytes):
        try:
            content = content.decode("utf-8-sig")
        except UnicodeDecodeError as exc:
            raise ParseError(f"not valid UTF-8 ({exc})", path=path) from None
    reader = csv.reader(io.StringIO(content))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty file, missing header", line=1, path=path) from None
    if tuple(h.strip() for h in header) != CSV_HEADER:
        raise ParseError(
            f"header must be {','.join(CSV_HEADER)!r}, got {','.join(header)!r}",
            line=1,
            path=path,
        )

    rows = []
    for row in reader:
        line = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 3:
            raise ParseError(f"expected 3 fields, got {len(row)}", line=line, path=path)
        try:
            t, f, c = (float(cell) for cell in row)
        except ValueError:
            raise ParseError(f"non-numeric field in {row!r}", line=line, path=path) from None
        if not (math.isfinite(t) and math.isfinite(f) and math.isfinite(c)):
            raise ParseError(f"non-finite field in {row!r}", line=line, path=path)
        if t < 0:
            raise ParseError(f"negative time {t}", line=line, path=path)
        if not 0.0 <= c <= 1.0:
            raise ParseError(f"confidence {c} outside [0, 1]", line=line, path=path)
        rows.append((t, f, c))

    arr = np.array(rows, dtype=float).reshape(-1, 3)
    return F0Trace._from_columns(arr[:, 0], arr[:, 1], arr[:, 2], source_label)


def read_f0_csv(path, source_label: str) -> F0Trace:
    path = Path(path)
    return parse_f0_csv(path.read_bytes(), source_label, path=path)


def format_f0_csv(trace: F0Trace) -> str:
    """Inverse of :func:`parse_f0_csv`; floats are written with ``repr`` so
    the round trip is exact."""
    lines = [",".join(CSV_HEADER)]
    for t, f, c in zip(trace.time_s.tolist(), trace.frequency_hz.tolist(), trace.confidence.tolist()):
        lines.append(f"{t!r},{f!r},{c!r}")
    return "\n".join(lines) + "\n"


def filter_confidence(trace: F0Trace, threshold: float = DEFAULT_THRESHOLD) -> F0Trace:
    """Keep voiced frames whose confidence is at least ``threshold``."""
    if not 0.0 <= threshold <= 1.0:
        raise DomainError(f"threshold must lie in [0, 1], got {threshold}")
    keep = (trace.frequency_hz > 0) & (trace.confidence >= threshold)
    return F0Trace(
        trace.time_s[keep], trace.frequency_hz[keep], trace.confidence[keep], trace.source_label
    )


def hz_to_cents(frequency_hz, tonic_hz):
    """``1200 * log2(frequency_hz / tonic_hz)``; works on scalars and arrays."""
    f = np.asarray(frequency_hz, dtype=float)
    if np.any(f <= 0) or not tonic_hz > 0:
        raise DomainError("frequencies must be positive to convert to cents")
    out = 1200.0 * np.log2(f / tonic_hz)
    return float(out) if out.ndim == 0 else out


def cents_to_hz(cents, tonic_hz):
    return tonic_hz * np.power(2.0, np.asarray(cents, dtype=float) / 1200.0)


def quantize_cents(value, bin_cents: float = DEFAULT_BIN_CENTS):
    """Round to the nearest multiple of ``bin_cents``, halves away from zero."""
    if not bin_cents > 0:
        raise DomainError(f"bin_cents must be positive, got {bin_cents}")
    v = np.asarray(value, dtype=float)
    out = np.sign(v) * np.floor(np.abs(v) / bin_cents + 0.5) * bin_cents
    # sign() of -0.0 rounds gives -0.0; normalize so equality checks stay simple
    out = out + 0.0
    return float(out) if out.ndim == 0 else out


def to_samples(
    trace: F0Trace,
    tonic_hz: float,
    bin_cents: float = DEFAULT_BIN_CENTS,
    lo: float = DEFAULT_LO,
    hi: float = DEFAULT_HI,
    min_samples: int = MIN_SAMPLES,
) -> CentsSamples:
    """Convert voiced frames to quantized cents inside ``[lo, hi]``.

    Raises :class:`InsufficientDataError` if fewer than ``min_samples``
    values survive.
    """
    if not tonic_hz > 0:
        raise DomainError(f"tonic_hz must be positive, got {tonic_hz}")
    freqs = trace.frequency_hz[trace.frequency_hz > 0]
    if len(freqs):
        cents = quantize_cents(hz_to_cents(freqs, tonic_hz), bin_cents)
        cents = np.atleast_1d(cents)
        cents = cents[(cents >= lo) & (cents <= hi)]
    else:
        cents = np.empty(0)
    if len(cents) < min_samples:
        raise InsufficientDataError(
            f"{len(cents)} usable frames, need at least {min_samples}",
            track=trace.source_label,
        )
    return CentsSamples(cents, float(tonic_hz), bin_cents, lo, hi)


def build_histogram(samples: CentsSamples) -> PitchHistogram:
    if len(samples) == 0:
        raise InsufficientDataError("cannot build a histogram from no samples")
    nb = n_bins(samples.lo, samples.hi, samples.bin_cents)
    idx = np.rint((samples.values - samples.lo) / samples.bin_cents).astype(np.int64)
    counts = np.bincount(idx, minlength=nb)
    return PitchHistogram(counts, samples.bin_cents, samples.lo, samples.hi)


def histogram_from_values(values, bin_cents=DEFAULT_BIN_CENTS, lo=DEFAULT_LO, hi=DEFAULT_HI):
    """Histogram of already-quantized cents values (test and tooling helper)."""
    return build_histogram(CentsSamples(np.asarray(values, dtype=float), 1.0, bin_cents, lo, hi))
