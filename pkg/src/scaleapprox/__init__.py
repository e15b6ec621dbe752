"""Scale approximation from F0 traces: pitch histograms, Gaussian mixture
fitting, equal-temperament deviation and scale-degree labeling."""

__version__ = "0.1.0"

from .errors import (
    DomainError,
    FitDivergedError,
    InfeasibleKError,
    InsufficientDataError,
    ParseError,
    ScaleApproxError,
)
from .f0_ingest import (
    CentsSamples,
    F0Frame,
    F0Trace,
    PitchHistogram,
    build_histogram,
    filter_confidence,
    hz_to_cents,
    parse_f0_csv,
    quantize_cents,
    read_f0_csv,
    to_samples,
)
from .mixture import FitConfig, GaussianComponent, MixtureModel, fit_em, select_model
from .scale import (
    DegreeClass,
    DegreeLabel,
    KnownTuning,
    ScaleEstimate,
    classify_retrieval,
    epsilon_s,
    estimate_scale,
    expected_degrees,
    label_degree,
    merge_components,
)
from .corpus import (
    PipelineConfig,
    SongAnalysis,
    SongRecord,
    aggregate_retrieval,
    analyze_corpus,
    analyze_song,
    compare_tracks,
    degree_density,
    epsilon_distribution,
    load_manifest,
)

__all__ = [
    "__version__",
    "CentsSamples",
    "DegreeClass",
    "DegreeLabel",
    "DomainError",
    "F0Frame",
    "F0Trace",
    "FitConfig",
    "FitDivergedError",
    "GaussianComponent",
    "InfeasibleKError",
    "InsufficientDataError",
    "KnownTuning",
    "MixtureModel",
    "ParseError",
    "PipelineConfig",
    "PitchHistogram",
    "ScaleApproxError",
    "ScaleEstimate",
    "SongAnalysis",
    "SongRecord",
    "aggregate_retrieval",
    "analyze_corpus",
    "analyze_song",
    "build_histogram",
    "classify_retrieval",
    "compare_tracks",
    "degree_density",
    "epsilon_distribution",
    "epsilon_s",
    "estimate_scale",
    "expected_degrees",
    "filter_confidence",
    "fit_em",
    "hz_to_cents",
    "label_degree",
    "load_manifest",
    "merge_components",
    "parse_f0_csv",
    "quantize_cents",
    "read_f0_csv",
    "select_model",
    "to_samples",
]
