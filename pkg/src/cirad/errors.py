"""Exception types shared across the toolkit."""


class CiradError(Exception):
    """Base class for all domain errors raised by this package."""


class ConsistencyError(CiradError):
    """System parameters violate a mutual-consistency invariant."""


class RangeError(CiradError):
    """A raw parameter is outside its admissible range."""


class ProbabilityError(CiradError):
    """Requested tone count implies a selection probability above one."""


class AllocError(CiradError):
    """Dense operator would exceed the configured memory budget."""


class DomainError(CiradError):
    """Continuum parameters fall outside the open parameter domain."""


class ShapeError(CiradError):
    """Dimension mismatch between operator, scene, or measurement."""


class CardinalityError(CiradError):
    """Requested sparsity exceeds the number of grid cells."""


class PackingError(CiradError):
    """Rejection sampling could not place separated targets within the retry cap."""


class ZeroColumnError(CiradError):
    """Matrix has a zero column; coherence is undefined."""


class ConvergenceError(CiradError):
    """Iterative routine failed to converge within its iteration cap."""


class CombinatoricsError(CiradError):
    """Exhaustive support enumeration exceeds the configured budget."""


class DivergenceError(CiradError):
    """Solver objective increased persistently (step-size pathology)."""


class RankError(CiradError):
    """Least-squares refit submatrix is rank deficient."""


class DegenerateResidualError(CiradError):
    """Atom selection called with a (numerically) zero residual."""


class EmptyTruthError(CiradError):
    """ROC computation requires a nonempty truth support."""


class MissingCellError(CiradError):
    """Performance-profile table has a missing (realization, system) cell."""


class SpecError(CiradError):
    """Unknown experiment name or invalid sweep specification."""
