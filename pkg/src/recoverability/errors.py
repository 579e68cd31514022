"""Exception hierarchy shared by every module of the package."""


class RecoverabilityError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(RecoverabilityError, ValueError):
    """Matrix or subsystem dimensions do not fit together."""


class InvalidParameter(RecoverabilityError, ValueError):
    """A scalar or structural parameter is out of its allowed range."""


class NotPSD(RecoverabilityError, ValueError):
    """An operator required to be positive semi-definite is not."""


class NotHermitian(RecoverabilityError, ValueError):
    """An operator required to be Hermitian is not."""


class InvalidState(RecoverabilityError, ValueError):
    """A density operator violates the unit-trace invariant."""


class InvalidChannel(RecoverabilityError, ValueError):
    """A map lacks a property (e.g. trace preservation) the caller requires."""


class InvalidMeasurement(RecoverabilityError, ValueError):
    """Measurement vectors do not resolve the identity."""


class SupportError(RecoverabilityError, ValueError):
    """supp(rho) is not contained in supp(sigma) where that is required."""


class InvalidInstance(RecoverabilityError, ValueError):
    """A verification instance does not satisfy the preconditions of its check."""


class ObjectiveError(RecoverabilityError, ArithmeticError):
    """An objective evaluated during a t-search returned a non-finite value."""

    def __init__(self, t, value):
        super().__init__(f"objective returned non-finite value {value!r} at t={t!r}")
        self.t = t
        self.value = value


class NumericsError(RecoverabilityError, ArithmeticError):
    """A dense linear-algebra kernel failed to converge."""
