"""Exception types shared across the package."""


class ExalError(Exception):
    """Base class for all package errors."""


class ContractViolation(ExalError, ValueError):
    """An operation was called with arguments outside its contract."""


class OutsideOmega(ContractViolation):
    """The primal point lies outside the effective domain, where the value is +inf."""


class NonFiniteEvaluation(ExalError, FloatingPointError):
    """A problem evaluator returned NaN or inf."""

    def __init__(self, component, x=None):
        self.component = component
        self.x = x
        super().__init__(f"non-finite evaluation in component {component!r}")


class SecondOrderUnavailable(ExalError):
    """The problem does not provide Hessian hooks."""


class UnknownProblem(ExalError, KeyError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"unknown problem {name!r}")

    def __str__(self):
        return self.args[0]


class LemmaHypothesisUnavailable(ExalError):
    """The penalty shape has no lower-slope constant, so the lower bounds do not apply."""


class NumericalFailure(ExalError):
    def __init__(self, message, matrix=None):
        self.matrix = matrix
        if matrix is not None:
            message = f"{message}\nmatrix:\n{matrix!r}"
        super().__init__(message)


class SingularConstraints(ExalError):
    """The constraint Gram operator is not invertible; multiplier estimate undefined."""

    def __init__(self, min_eigenvalue):
        self.min_eigenvalue = min_eigenvalue
        super().__init__(f"singular: smallest Gram eigenvalue {min_eigenvalue:.3e}")


class InfeasibleStart(ContractViolation):
    """The starting point of a solve is outside the effective domain."""


class CannotSampleOmega(ExalError):
    """Rejection sampling failed to produce a point inside the effective domain."""
