"""Exception hierarchy.

Every error raised by the library derives from :class:`GenspecError`, so the
CLI can map library failures to exit codes with a single ``except`` clause.
"""


class GenspecError(Exception):
    """Base class for all library errors."""


# sde core
class NonFiniteCoefficient(GenspecError):
    pass


class OutOfDomain(GenspecError):
    pass


class InvalidDomain(GenspecError):
    pass


# generator
class InvalidGrid(GenspecError):
    pass


class CoefficientEvaluationFailed(GenspecError):
    pass


class DomainTooSmall(GenspecError):
    pass


class NegativeDiffusion(GenspecError):
    pass


class TooFewPoints(GenspecError):
    pass


# spectra
class EigensolverFailure(GenspecError):
    pass


class ResidualTooLarge(GenspecError):
    def __init__(self, message, index=None, eigenvalue=None, residual=None):
        super().__init__(message)
        self.index = index
        self.eigenvalue = eigenvalue
        self.residual = residual


class ZeroModeNotFound(GenspecError):
    pass


class NegativeDensity(GenspecError):
    pass


class AnchorDegenerate(GenspecError):
    pass


# fibre
class DegenerateGradient(GenspecError):
    pass


class ComponentTooShort(GenspecError):
    pass


class FibreTooShort(GenspecError):
    pass


class AllWeightsZero(GenspecError):
    pass


# frames
class RankDeficientNeighborhood(GenspecError):
    pass


class IllConditionedFit(GenspecError):
    pass


# analysis
class NotAGraph(GenspecError):
    pass


class IndexMismatch(GenspecError):
    pass


class StepFailed(GenspecError):
    """Wraps an error raised inside one step of an algorithm driver."""

    def __init__(self, step, cause):
        super().__init__(f"step {step}: {type(cause).__name__}: {cause}")
        self.step = step
        self.cause = cause


# reduction
class SectionOutsideDomain(GenspecError):
    pass


class WindowTooSmall(GenspecError):
    pass


class SingularSystem(GenspecError):
    pass


# bench problems
class NonPositiveEpsilon(GenspecError):
    pass


class BlowUp(GenspecError):
    pass


# cli
class ConfigError(GenspecError):
    pass


class ExpressionError(ConfigError):
    pass
