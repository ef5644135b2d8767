"""Error taxonomy.

Contract errors keep their spec-facing names (no ``...Error`` suffix);
they all derive from :class:`DronenetError` so callers can catch the
package family in one clause. ``NumericalFailure`` subclasses map to
CLI exit code 3, ``SchemaError`` to exit code 2.
"""


class DronenetError(Exception):
    """Base class for all package errors."""


class SchemaError(DronenetError):
    """Malformed input table/file. Carries row/column diagnostics when known."""

    def __init__(self, message, *, path=None, row=None, column=None):
        self.path = path
        self.row = row
        self.column = column
        where = []
        if path is not None:
            where.append(str(path))
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class NumericalFailure(DronenetError):
    """Base for numerical breakdowns (CLI exit code 3)."""


class DimensionMismatch(DronenetError, ValueError):
    """Array shapes do not line up with the declared contract."""


class RankDeficient(NumericalFailure):
    """Design matrix is singular beyond tolerance."""


class OptimizerFailed(NumericalFailure):
    """Every hyperparameter restart produced a non-finite objective."""


class FactorizationFailed(NumericalFailure):
    """Gram matrix never became positive definite under escalating jitter."""


class EmptyComponentList(DronenetError, ValueError):
    """lognormal_sum called with no components."""


class FoldTooSmall(DronenetError, ValueError):
    """Cross-validation fold count incompatible with the sample size."""


class OutOfRange(DronenetError, ValueError):
    """Scalar argument outside its documented domain."""


class InvalidPolygon(DronenetError, ValueError):
    """No-fly-zone polygon ring is degenerate or self-intersecting."""


class UnknownNode(DronenetError, KeyError):
    """Road-graph query references a node id that does not exist."""


class BrokenPath(DronenetError, ValueError):
    """Edge sequence is not contiguous in the road graph."""


class AllUnreachable(DronenetError):
    """No facility is reachable from the incident."""


class DegenerateWeights(DronenetError):
    """All raw demand weights are zero; normalization undefined."""


class NonPositiveDensity(DronenetError, ValueError):
    """Site population density must be strictly positive (log is taken)."""


class DegenerateCovariate(DronenetError, ValueError):
    """Prior covariate maximum is non-positive; auto-scaling undefined."""


class EmptyCandidateSet(DronenetError):
    """Design requested with zero candidate sites."""


class TooManyFailures(DronenetError, ValueError):
    """Requested more simultaneous failures than active stations."""


class MissingConfiguration(DronenetError):
    """Trace set does not cover every requested (season, hour) pair."""


class NonPositiveQALY(DronenetError):
    """Cost per QALY requested with a non-positive QALY gain."""
