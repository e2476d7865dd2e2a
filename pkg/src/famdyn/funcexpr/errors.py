"""Exceptions raised while parsing, evaluating or solving expressions."""


class EvaluationError(ValueError):
    pass


class UnboundSymbol(EvaluationError):
    pass


class IndeterminateError(EvaluationError):
    """0/0 (or inf-inf, 0*inf) that one L'Hopital step does not resolve."""


class EssentialSingularityError(EvaluationError):
    """exp evaluated at infinity."""


class NotRationalError(EvaluationError):
    pass


class DegreeError(ValueError):
    pass


class NonConvergenceError(ArithmeticError):
    """Iterative numerics failed to converge within their documented limits."""
