"""Exception taxonomy shared across the library.

Every error raised by qstacker derives from QStackerError, so callers can
catch one type at the CLI boundary and map it to an exit code.
"""


class QStackerError(Exception):
    """Base class for all qstacker errors."""


class NonFiniteInput(QStackerError):
    """An input vector or matrix contains NaN or Inf entries."""


class ShapeMismatch(QStackerError):
    """Matrix/vector shapes do not chain for the requested operation."""


class DimMismatch(QStackerError):
    """Two encoded states have different dimensions."""


class ZeroState(QStackerError):
    """Operation undefined on the zero-vector sentinel state."""


class DimNotPowerOfTwo(QStackerError):
    """Circuit-level verification requires a 2^n dimensional state."""


class DimTooLarge(QStackerError):
    """State too large for explicit statevector verification."""


class BudgetTooSmall(QStackerError):
    """Qubit budget cannot hold even a single Hadamard test."""


class InvalidEpsilon(QStackerError):
    """Target precision must lie in (0, 1)."""


class PlanJobMismatch(QStackerError):
    """Execution plan and job buffer disagree on job count or ids."""


class InvalidDistribution(QStackerError):
    """Probabilities are negative or do not sum to one."""


class InvalidSupport(QStackerError):
    """Requested support size is out of range for the state family."""


class ConstantSeries(QStackerError):
    """Correlation undefined when one series is constant."""


class TooFewPoints(QStackerError):
    """Correlation requires at least three points."""


class NoCrossing(QStackerError):
    """Variance curves do not intersect inside the shared entropy range."""


class InsufficientOverlap(QStackerError):
    """Sweeps do not span a common entropy interval."""


class InvalidEntropy(QStackerError):
    """Entropy argument outside [0, H_max]."""


class ParseError(QStackerError):
    """Input file could not be parsed."""


class MagicMismatch(ParseError):
    """IDX file magic number does not match the expected format."""


class TruncatedFile(ParseError):
    """File ends before the declared payload is complete."""


class EmptyDataset(QStackerError):
    """Training requires at least one sample."""
