"""Exception hierarchy shared across the pipeline."""


class ScaleApproxError(Exception):
    """Base class for every error raised by this package."""


class ParseError(ScaleApproxError):
    """Malformed F0 trace, manifest or synth spec."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        prefix = ":".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class DomainError(ScaleApproxError, ValueError):
    """Argument outside the domain of a numerical operation."""


class InsufficientDataError(ScaleApproxError):
    """Too few usable samples to analyze a track."""

    def __init__(self, message, track=None):
        self.track = track
        super().__init__(f"{track}: {message}" if track else message)


class InfeasibleKError(ScaleApproxError, ValueError):
    """Requested more mixture components than non-empty histogram bins."""


class FitDivergedError(ScaleApproxError):
    """EM produced a non-finite log-likelihood."""
