"""Registry of test problems addressed by name."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import UnknownProblem
from .h1 import h1_gram, trace_matrix
from .problem import KnownSolution, PrimalDual, ProblemSpec


def _zeros(*shape):
    return lambda x: np.zeros(shape)


def p1_eq() -> ProblemSpec:
    """min x1^2 + x2^2  s.t.  x1 + x2 - 1 = 0.

    KKT: 2 x + lam (1, 1) = 0 and x1 + x2 = 1 give x = (1/2, 1/2), lam = -1, f = 1/2.
    """
    return ProblemSpec(
        name="p1_eq",
        n=2,
        ell=1,
        m=0,
        f=lambda x: float(x @ x),
        grad_f=lambda x: 2.0 * x,
        F=lambda x: np.array([x[0] + x[1] - 1.0]),
        DF=lambda x: np.array([[1.0, 1.0]]),
        g=lambda x: np.zeros(0),
        Dg=lambda x: np.zeros((0, 2)),
        hess_f=lambda x: 2.0 * np.eye(2),
        hess_F=_zeros(1, 2, 2),
        hess_g=_zeros(0, 2, 2),
        known_solution=KnownSolution(np.array([0.5, 0.5]), np.array([-1.0]), np.zeros(0), 0.5),
        default_start=PrimalDual.of([0.0, 0.0], [0.0], []),
        description="quadratic objective, one linear equality",
    )


def p2_ineq() -> ProblemSpec:
    """min x^2  s.t.  1 - x <= 0.

    KKT: 2x - mu = 0 with the constraint active gives x = 1, mu = 2 > 0, f = 1.
    """
    return ProblemSpec(
        name="p2_ineq",
        n=1,
        ell=0,
        m=1,
        f=lambda x: float(x[0] ** 2),
        grad_f=lambda x: 2.0 * x,
        F=lambda x: np.zeros(0),
        DF=lambda x: np.zeros((0, 1)),
        g=lambda x: np.array([1.0 - x[0]]),
        Dg=lambda x: np.array([[-1.0]]),
        hess_f=lambda x: np.array([[2.0]]),
        hess_F=_zeros(0, 1, 1),
        hess_g=_zeros(1, 1, 1),
        known_solution=KnownSolution(np.array([1.0]), np.zeros(0), np.array([2.0]), 1.0),
        default_start=PrimalDual.of([0.0], [], [1.0]),
        description="quadratic objective, one linear inequality",
    )


def p3_mixed() -> ProblemSpec:
    """min (x1 - 2)^2 + (x2 - 1)^2  s.t.  x1^2 - x2 = 0,  x1 + x2 - 2 <= 0.

    On the parabola x2 = x1^2 the inequality reads x1 in [-2, 1].  The reduced
    objective (x1 - 2)^2 + (x1^2 - 1)^2 has derivative 4 x1^3 - 2 x1 - 4, whose
    only real root (~1.16) lies outside [-2, 1] and which is negative on it, so
    the minimum is at x1 = 1, i.e. x = (1, 1), f = 1.

    KKT at (1, 1): grad f = (-2, 0), DF = (2, -1), grad g = (1, 1);
    (-2, 0) + lam (2, -1) + mu (1, 1) = 0 gives lam = mu = 2/3.
    """
    return ProblemSpec(
        name="p3_mixed",
        n=2,
        ell=1,
        m=1,
        f=lambda x: float((x[0] - 2.0) ** 2 + (x[1] - 1.0) ** 2),
        grad_f=lambda x: np.array([2.0 * (x[0] - 2.0), 2.0 * (x[1] - 1.0)]),
        F=lambda x: np.array([x[0] ** 2 - x[1]]),
        DF=lambda x: np.array([[2.0 * x[0], -1.0]]),
        g=lambda x: np.array([x[0] + x[1] - 2.0]),
        Dg=lambda x: np.array([[1.0, 1.0]]),
        hess_f=lambda x: 2.0 * np.eye(2),
        hess_F=lambda x: np.array([[[2.0, 0.0], [0.0, 0.0]]]),
        hess_g=_zeros(1, 2, 2),
        known_solution=KnownSolution(
            np.array([1.0, 1.0]), np.array([2.0 / 3.0]), np.array([2.0 / 3.0]), 1.0
        ),
        default_start=PrimalDual.of([0.0, 0.0], [0.0], [0.0]),
        description="nonlinear equality and linear inequality, both active",
    )


def p3_saddle() -> ProblemSpec:
    """min x3 - x1^2 + x2  s.t.  x2 = 0,  -x3 <= 0.

    KKT at x = 0: (0, 1, 1) + lam (0, 1, 0) + mu (0, 0, -1) = 0 gives lam = -1, mu = 1.
    The critical cone is span{e1}, on which the Lagrangian Hessian diag(-2, 0, 0)
    is negative: a KKT point that is not a local minimum.
    """
    return ProblemSpec(
        name="p3_saddle",
        n=3,
        ell=1,
        m=1,
        f=lambda x: float(x[2] - x[0] ** 2 + x[1]),
        grad_f=lambda x: np.array([-2.0 * x[0], 1.0, 1.0]),
        F=lambda x: np.array([x[1]]),
        DF=lambda x: np.array([[0.0, 1.0, 0.0]]),
        g=lambda x: np.array([-x[2]]),
        Dg=lambda x: np.array([[0.0, 0.0, -1.0]]),
        hess_f=lambda x: np.diag([-2.0, 0.0, 0.0]),
        hess_F=_zeros(1, 3, 3),
        hess_g=_zeros(1, 3, 3),
        known_solution=KnownSolution(
            np.zeros(3), np.array([-1.0]), np.array([1.0]), 0.0, optimal=False
        ),
        default_start=PrimalDual.of([0.1, 0.1, 0.1], [0.0], [0.0]),
        description="KKT saddle point: indefinite reduced Hessian",
    )


def p4_degenerate() -> ProblemSpec:
    """min (x1 - 1)^2 + x2^2  s.t.  x1^2 = 0.

    The feasible set is {x1 = 0}, so x = (0, 0) is optimal with f = 1.  There DF = 0
    while grad f = (-2, 0): no multiplier exists and the constraint Gram operator
    vanishes.  No KKT point, hence no known_solution.
    """
    return ProblemSpec(
        name="p4_degenerate",
        n=2,
        ell=1,
        m=0,
        f=lambda x: float((x[0] - 1.0) ** 2 + x[1] ** 2),
        grad_f=lambda x: np.array([2.0 * (x[0] - 1.0), 2.0 * x[1]]),
        F=lambda x: np.array([x[0] ** 2]),
        DF=lambda x: np.array([[2.0 * x[0], 0.0]]),
        g=lambda x: np.zeros(0),
        Dg=lambda x: np.zeros((0, 2)),
        hess_f=lambda x: 2.0 * np.eye(2),
        hess_F=lambda x: np.array([[[2.0, 0.0], [0.0, 0.0]]]),
        hess_g=_zeros(0, 2, 2),
        known_solution=None,
        default_start=PrimalDual.of([0.5, 0.5], [0.0], []),
        description="constraint qualification fails at the solution",
    )


def h1_boundary(N: int = 16, d: int = 1, a: float = 0.0, b: float = 1.0) -> ProblemSpec:
    """Boundary-constrained projection in piecewise-linear H^1([a, b]; R^d).

    min 1/2 ||x - z||_X^2  s.t.  x(a) = 0,  x_j(b) - 1 <= 0,  with z(t) = 1 + s(t),
    s(t) = (t - a)/(b - a), applied to every component.

    The Riesz representatives of x -> x_j(a) and x -> x_j(b) are A*(e_j/3, 0) and
    A*(0, e_j/2).  Stationarity x - z + lam r_a + mu r_b = 0 with x(a) = 0 and
    x(b) = 1 gives lam = 3 z(a) = 3, mu = 2 (z(b) - 1) = 2 per component, and
    x* = z - A*(1, 1) = s(t), f* = 1/2 ||1||_X^2 = 5 d / 2.
    """
    G = h1_gram(N, a, b, d)
    A = trace_matrix(N, d)
    s = np.linspace(0.0, 1.0, N + 1)
    z = np.repeat(1.0 + s, d)
    x_star = np.repeat(s, d)
    DF = A[:d].copy()
    Dg = A[d:].copy()
    nx = (N + 1) * d

    def f(x):
        r = x - z
        return 0.5 * float(r @ G @ r)

    return ProblemSpec(
        name="h1_boundary",
        n=nx,
        ell=d,
        m=d,
        f=f,
        grad_f=lambda x: G @ (x - z),
        F=lambda x: DF @ x,
        DF=lambda x: DF,
        g=lambda x: Dg @ x - 1.0,
        Dg=lambda x: Dg,
        hess_f=lambda x: G,
        hess_F=_zeros(d, nx, nx),
        hess_g=_zeros(d, nx, nx),
        known_solution=KnownSolution(x_star, np.full(d, 3.0), np.full(d, 2.0), 2.5 * d),
        default_start=PrimalDual.of(np.zeros(nx), np.zeros(d), np.zeros(d)),
        metric_gram=G,
        description=f"H1([{a}, {b}]; R^{d}) boundary constraints, N={N}",
    )


_FACTORIES = {
    "p1_eq": p1_eq,
    "p2_ineq": p2_ineq,
    "p3_mixed": p3_mixed,
    "p3_saddle": p3_saddle,
    "p4_degenerate": p4_degenerate,
    "h1_boundary": h1_boundary,
}


def problem_names() -> list[str]:
    return list(_FACTORIES)


@lru_cache(maxsize=None)
def registry_lookup(name: str) -> ProblemSpec:
    try:
        factory = _FACTORIES[name]
    except KeyError:
        raise UnknownProblem(name) from None
    return factory()
