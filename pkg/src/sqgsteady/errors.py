"""Exception hierarchy; ``exit_code`` is what the command line returns."""


class SQGError(Exception):
    exit_code = 1


class ConfigError(SQGError, ValueError):
    exit_code = 2


class NumericalFailure(SQGError, RuntimeError):
    exit_code = 3


class StepSizeError(NumericalFailure):
    """CFL guard tripped."""


class BlowUpError(NumericalFailure):
    """Non-finite values or sup norm past the blow-up threshold."""


class NonContractionError(NumericalFailure):
    """Outer steady-state iteration stopped contracting."""


class InnerDivergenceError(NumericalFailure):
    """Frozen-velocity linear solve diverged."""


class TailNotConvergedError(NumericalFailure):
    """Time-integral route hit T_max before the tail criterion."""


class AssumptionViolation(SQGError, ValueError):
    """Force has spectral content below rho0."""


class SnapshotError(SQGError, OSError):
    exit_code = 4
