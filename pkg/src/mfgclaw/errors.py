"""Exception hierarchy shared by every solver module."""


class MfgClawError(Exception):
    """Base class for all errors raised by mfgclaw."""


class InvalidMeasure(MfgClawError, ValueError):
    pass


class NonFiniteImage(MfgClawError, ValueError):
    pass


class UnsupportedDimension(MfgClawError, ValueError):
    pass


class NonconvexFlux(MfgClawError, ValueError):
    pass


class EmptyInterval(MfgClawError, ValueError):
    pass


class MinimizationFailed(MfgClawError, RuntimeError):
    pass


class SingularSensitivity(MfgClawError, ArithmeticError):
    pass


class NewtonDiverged(MfgClawError, RuntimeError):
    """Raised when the implicit optimal-point equation cannot be solved.

    ``atom`` holds the index of the offending atom when the failure happened
    while pushing a measure forward.
    """

    def __init__(self, message, atom=None):
        super().__init__(message)
        self.atom = atom


class BadScan(MfgClawError, ValueError):
    pass


class NoEquilibrium(MfgClawError, RuntimeError):
    pass


class AmbiguousEquilibrium(MfgClawError, RuntimeError):
    pass


class StencilCrossesSingularity(MfgClawError, RuntimeError):
    pass


class NonDifferentiableSigma0(MfgClawError, ValueError):
    pass


class PresetRequired(MfgClawError, TypeError):
    pass


class BadInput(MfgClawError, ValueError):
    pass


class ProfileConstructionFailed(MfgClawError, RuntimeError):
    pass


class RefineGrid(MfgClawError, RuntimeError):
    pass


class StiffnessError(MfgClawError, RuntimeError):
    pass


class ReducedRegimeRequired(MfgClawError, TypeError):
    pass


class ConfigError(MfgClawError, ValueError):
    pass
