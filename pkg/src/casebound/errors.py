"""Exception hierarchy.

Every error raised on purpose by this package derives from CaseboundError,
so callers (and the CLI) can map failure classes to exit codes without
string matching.
"""


class CaseboundError(Exception):
    """Base class for all errors raised by casebound."""


class ValidationError(CaseboundError, ValueError):
    """Inputs violate a documented contract (domain, shape, configuration)."""


# --- ingestion -------------------------------------------------------------

class MissingColumn(ValidationError):
    """A required column is absent from the input file."""


class NonBinaryOutcome(ValidationError):
    """The outcome or treatment column contains values other than 0/1."""


class EmptyStratum(ValidationError):
    """One of the outcome strata contains no observations."""


class ZeroCell(ValidationError):
    """A 2x2 count table has an empty cell; the odds ratio is undefined."""


# --- finite-population oracle ----------------------------------------------

class OverlapViolation(CaseboundError):
    """Treatment or potential-outcome probabilities hit 0 or 1 on a cell."""


class ZeroRetroProb(CaseboundError):
    """A retrospective probability Pi(t|y,x) is zero where positivity is required."""


class ZeroDenominator(CaseboundError):
    """A ratio in an identification formula has a zero denominator."""


# --- numerical fitting -------------------------------------------------------

class DegenerateColumn(ValidationError):
    """A constructed basis column is constant."""


class SeparationDetected(CaseboundError):
    """Logistic coefficients diverged; the data are (quasi-)separated."""


class Singular(CaseboundError):
    """The observed information matrix is not invertible."""


class NotConverged(CaseboundError):
    """Newton iterations exhausted without meeting the gradient tolerance."""


class NuisanceProbabilityOutOfRange(CaseboundError):
    """A fitted nuisance probability is non-finite or outside [0, 1]."""


# --- resampling ---------------------------------------------------------------

class BootstrapDegenerate(CaseboundError):
    """All bootstrap replicates produced the same estimate."""
