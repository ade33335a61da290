"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of a physical formula."""


class PreconditionError(ValueError):
    """A caller-side precondition (grid spacing, window length, ...) is violated."""


class ContractError(TypeError):
    """An object of the wrong kind was passed (e.g. a pulse where a CW drive is required)."""


class StepSizeError(ArithmeticError):
    """Integrator norm drift exceeded tolerance; the time step is too coarse."""


class NumericError(ArithmeticError):
    """NaN/Inf or a failed decomposition."""
