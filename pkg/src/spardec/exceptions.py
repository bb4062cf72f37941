"""Exception types shared across the package."""


class SpardecError(Exception):
    """Base class for all package-specific failures."""


class ConfigError(SpardecError, ValueError):
    """Invalid configuration value, file, or CLI argument combination."""


class DimensionMismatchError(SpardecError, ValueError):
    """Operands whose shapes cannot be combined."""


class InvalidParamsError(SpardecError, ValueError):
    """Generator or algorithm parameters outside their documented domain."""


class SingularSystemError(SpardecError):
    """A linear system whose condition estimate exceeds the safe bound."""


class RankDeficientActiveSetError(SingularSystemError):
    """Active dictionary columns too close to linear dependence to invert."""


class InfeasiblePartitionError(SpardecError, ValueError):
    """Active set too large for the requested closed-form estimator."""


class ZeroMixtureError(SpardecError, ValueError):
    """Relative error against a zero mixture is undefined."""


class ZeroTruthError(SpardecError, ValueError):
    """SNR against an identically zero reference is undefined."""


class MaxIterationsExceededError(SpardecError):
    """Iterative solver hit its iteration cap before reaching tolerance.

    The best iterate found so far is attached as ``result`` so callers
    can inspect or reuse it.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class NumericalFailureError(SpardecError):
    """Factorization or step computation failed beyond recovery."""


class SdpFormatError(SpardecError, ValueError):
    """Malformed problem file; message carries the offending line number."""
