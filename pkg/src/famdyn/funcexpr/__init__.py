"""Member expressions: parse, print, evaluate, differentiate, solve."""
from .calculus import differentiate
from .errors import (
    DegreeError, EssentialSingularityError, EvaluationError, IndeterminateError,
    NonConvergenceError, NotRationalError, UnboundSymbol,
)
from .evaluate import (
    as_expr, evaluate, normalized_rational, rational_form, spherical_derivative_values,
    values, values_and_derivative,
)
from .nodes import (
    Add, Compose, Const, Div, Exp, Expr, Index, Mul, Neg, Param, Pow, Sub, Var,
    N, Z, bind, canonical, compose, free_params, has_poles, is_rational, simplify,
    to_text, uses_index,
)
from .parser import ParseError, parse
from .roots import (
    BoundaryHitError, count_solutions_in, count_solutions_many, poly_roots, preimages,
    rational_degree_of,
)


def eval_expr(f, bindings, z):
    """``eval`` operation: f evaluated at z under ``bindings``."""
    return evaluate(f, z, bindings)
