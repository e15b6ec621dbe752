"""From a fitted mixture to a labeled scale.

Components closer than the merge radius are collapsed pairwise (closest
pair first).  Each surviving component gets a scale-degree label relative
to the tonic with a signed microtonal offset, and the whole set is scored
by its mean absolute distance to the 100-cent equal-tempered grid.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .errors import DomainError
from .f0_ingest import DEFAULT_HI, DEFAULT_LO, PitchHistogram
from .mixture import FitConfig, GaussianComponent, MixtureModel, select_model

DEFAULT_MERGE_RADIUS = 50.0


class DegreeClass(enum.Enum):
    TONIC = 0
    MINOR2 = 100
    MAJOR2 = 200
    MINOR3 = 300
    MAJOR3 = 400
    FOURTH = 500
    TRITONE = 600
    FIFTH = 700
    MINOR6 = 800
    MAJOR6 = 900
    MINOR7 = 1000
    MAJOR7 = 1100

    @property
    def canonical_cents(self) -> int:
        return self.value

    @property
    def label(self) -> str:
        return _DISPLAY[self]

    @classmethod
    def from_label(cls, text: str) -> "DegreeClass":
        for member, name in _DISPLAY.items():
            if name == text:
                return member
        return cls[text.upper()]


_DISPLAY = {
    DegreeClass.TONIC: "Tonic",
    DegreeClass.MINOR2: "Minor2",
    DegreeClass.MAJOR2: "Major2",
    DegreeClass.MINOR3: "Minor3",
    DegreeClass.MAJOR3: "Major3",
    DegreeClass.FOURTH: "Fourth",
    DegreeClass.TRITONE: "Tritone",
    DegreeClass.FIFTH: "Fifth",
    DegreeClass.MINOR6: "Minor6",
    DegreeClass.MAJOR6: "Major6",
    DegreeClass.MINOR7: "Minor7",
    DegreeClass.MAJOR7: "Major7",
}

ALL_DEGREES = tuple(DegreeClass)


@dataclass(frozen=True)
class DegreeLabel:
    degree: DegreeClass
    offset_cents: float

    def __str__(self):
        return f"{self.degree.label} {self.offset_cents:+g}"


@dataclass(frozen=True)
class KnownTuning:
    """Expert tuning annotation: tonic plus the quality of the 3rd and 6th."""

    tonic_hz: float
    third: str = "major"
    sixth: str = "major"

    def __post_init__(self):
        if not (isinstance(self.tonic_hz, (int, float)) and self.tonic_hz > 0 and math.isfinite(self.tonic_hz)):
            raise ValueError(f"tonic_hz must be a positive number, got {self.tonic_hz!r}")
        for name in ("third", "sixth"):
            if getattr(self, name) not in ("major", "minor"):
                raise ValueError(f"{name} must be 'major' or 'minor', got {getattr(self, name)!r}")


@dataclass(frozen=True)
class ScaleEstimate:
    components: tuple[GaussianComponent, ...]
    labels: tuple[DegreeLabel, ...]
    epsilon_s: float
    model: Optional[MixtureModel] = None

    @property
    def found(self) -> frozenset:
        return frozenset(label.degree for label in self.labels)


@dataclass(frozen=True)
class Retrieval:
    retrieved: frozenset
    missing: frozenset
    unexpected: frozenset


def merge_components(
    components: Iterable[GaussianComponent], radius: float = DEFAULT_MERGE_RADIUS
) -> list[GaussianComponent]:
    """Recursively average the closest pair of components while it is
    closer than ``radius``.

    The merged component takes the weight-weighted mean of means and of
    stds, and the summed weight.  Equal distances merge the lower pair
    first.
    """
    comps = sorted(components, key=lambda g: g.mean_cents)
    while len(comps) > 1:
        best_i, best_d = None, None
        # after sorting, the closest pair is always adjacent
        for i in range(len(comps) - 1):
            d = comps[i + 1].mean_cents - comps[i].mean_cents
            if best_d is None or d < best_d:
                best_i, best_d = i, d
        if best_d >= radius:
            break
        a, b = comps[best_i], comps[best_i + 1]
        w = a.weight + b.weight
        merged = GaussianComponent(
            mean_cents=(a.weight * a.mean_cents + b.weight * b.mean_cents) / w,
            std_cents=(a.weight * a.std_cents + b.weight * b.std_cents) / w,
            weight=w,
        )
        comps[best_i : best_i + 2] = [merged]
    return comps


def grid_deviation(mean_cents: float) -> float:
    """Signed distance to the nearest multiple of 100 cents, in [-50, 50]."""
    return mean_cents - 100.0 * round(mean_cents / 100.0)


def epsilon_s(components: Sequence) -> float:
    """Mean absolute distance of component means to the 100-cent grid.

    Accepts components or plain means.  0 means every component sits on an
    equal-tempered pitch; 50 means every component sits halfway between.
    """
    if len(components) == 0:
        raise DomainError("epsilon_s needs at least one component")
    means = [getattr(c, "mean_cents", c) for c in components]
    return sum(abs(grid_deviation(m)) for m in means) / len(means)


def fold_cents(mean_cents: float, lo: float = DEFAULT_LO, hi: float = DEFAULT_HI) -> float:
    if not lo <= mean_cents <= hi:
        raise DomainError(f"{mean_cents} cents is outside [{lo}, {hi}]")
    folded = mean_cents % 1200.0
    # float modulo can land on 1200 for tiny negative inputs
    return 0.0 if folded >= 1200.0 else folded


def label_degree(mean_cents: float, lo: float = DEFAULT_LO, hi: float = DEFAULT_HI) -> DegreeLabel:
    """Nearest equal-tempered degree and the offset from it.

    >>> label_degree(930)
    DegreeLabel(degree=<DegreeClass.MAJOR6: 900>, offset_cents=30.0)
    """
    folded = fold_cents(mean_cents, lo, hi)
    step = math.floor((folded + 50.0) / 100.0)
    offset = folded - 100.0 * step
    return DegreeLabel(DegreeClass((step % 12) * 100), offset + 0.0)


def expected_degrees(tuning: KnownTuning) -> frozenset:
    third = DegreeClass.MAJOR3 if tuning.third == "major" else DegreeClass.MINOR3
    sixth = DegreeClass.MAJOR6 if tuning.sixth == "major" else DegreeClass.MINOR6
    return frozenset(
        {DegreeClass.TONIC, DegreeClass.MAJOR2, third, DegreeClass.FOURTH, DegreeClass.FIFTH, sixth}
    )


def classify_retrieval(found: Iterable, expected: Iterable) -> Retrieval:
    found, expected = frozenset(found), frozenset(expected)
    return Retrieval(
        retrieved=found & expected,
        missing=expected - found,
        unexpected=found - expected,
    )


def estimate_scale(
    hist: PitchHistogram,
    tuning: Optional[KnownTuning] = None,
    config: FitConfig = FitConfig(),
    merge_radius: float = DEFAULT_MERGE_RADIUS,
) -> ScaleEstimate:
    """Fit, merge, label and score one track's histogram.

    ``tuning`` is accepted for symmetry with the corpus runner; the histogram
    is already tonic-relative, so labeling does not depend on it.
    """
    model = select_model(hist, config)
    merged = merge_components(model.components, merge_radius)
    labels = tuple(label_degree(g.mean_cents, hist.lo, hist.hi) for g in merged)
    return ScaleEstimate(
        components=tuple(merged),
        labels=labels,
        epsilon_s=epsilon_s(merged),
        model=model,
    )
