"""Piecewise-linear discretisation of H^1([a, b]; R^d) and the boundary trace.

The space carries the inner product

    <x, y>_X = <x(a), y(a)> + <x(a) + x(b), y(a) + y(b)> + (b - a) int <x', y'> dt,

and ``Y = R^d x R^d`` carries ``<(x1, x2), (y1, y2)>_Y = 3<x1, y1> + 2<x2, y2>``.
The trace ``A x = (x(a), x(b))`` has the adjoint ``(A* y)(t) = y1 + (y2 - y1)(t - a)/(b - a)``.

Derivatives of piecewise-linear functions are piecewise constant, so the
integral term is an exact sum over cells.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation

Y_WEIGHTS = (3.0, 2.0)


@dataclass(frozen=True)
class H1Space:
    """Nodal values of a piecewise-linear function on a uniform grid."""

    a: float
    b: float
    values: np.ndarray  # shape (N + 1, d)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if not self.b > self.a:
            raise ContractViolation("H1Space needs b > a")
        if values.ndim != 2 or values.shape[0] < 2:
            raise ContractViolation("H1Space needs at least two nodes (N >= 1)")
        object.__setattr__(self, "values", values)

    @property
    def N(self) -> int:
        return self.values.shape[0] - 1

    @property
    def d(self) -> int:
        return self.values.shape[1]

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(self.a, self.b, self.N + 1)

    @property
    def step(self) -> float:
        return (self.b - self.a) / self.N

    @classmethod
    def from_function(cls, func, a=0.0, b=1.0, N=16, d=1):
        t = np.linspace(a, b, N + 1)
        vals = np.array([np.broadcast_to(np.asarray(func(ti), float), (d,)) for ti in t])
        return cls(a, b, vals)

    @classmethod
    def from_flat(cls, x, a, b, d):
        x = np.asarray(x, dtype=float)
        return cls(a, b, x.reshape(-1, d))

    def flat(self) -> np.ndarray:
        """Row-major coordinates: node k, component j at index ``k * d + j``."""
        return self.values.reshape(-1).copy()

    def same_shape(self, other: "H1Space") -> bool:
        return (
            self.a == other.a
            and self.b == other.b
            and self.values.shape == other.values.shape
        )


def h1_apply_A(h: H1Space):
    return h.values[0].copy(), h.values[-1].copy()


def h1_apply_A_star(y1, y2, shape: H1Space) -> H1Space:
    y1 = np.atleast_1d(np.asarray(y1, dtype=float))
    y2 = np.atleast_1d(np.asarray(y2, dtype=float))
    if y1.shape != (shape.d,) or y2.shape != (shape.d,):
        raise ContractViolation("A* arguments must have the codomain dimension d")
    s = (shape.grid - shape.a) / (shape.b - shape.a)
    vals = y1[None, :] + (y2 - y1)[None, :] * s[:, None]
    # exact endpoint values, independent of rounding in s
    vals[0] = y1
    vals[-1] = y2
    return H1Space(shape.a, shape.b, vals)


def h1_inner(u: H1Space, v: H1Space) -> float:
    if not u.same_shape(v):
        raise ContractViolation("h1_inner: grid mismatch")
    ua, ub = u.values[0], u.values[-1]
    va, vb = v.values[0], v.values[-1]
    du = np.diff(u.values, axis=0)
    dv = np.diff(v.values, axis=0)
    # cell integral of u'v' is du*dv/dt; the (b - a) weight comes from the norm
    integral = float(np.sum(du * dv)) / u.step
    return float(ua @ va) + float((ua + ub) @ (va + vb)) + (u.b - u.a) * integral


def y_inner(p1, p2) -> float:
    (x1, x2), (y1, y2) = p1, p2
    x1, x2, y1, y2 = (np.atleast_1d(np.asarray(v, dtype=float)) for v in (x1, x2, y1, y2))
    if not (x1.shape == y1.shape and x2.shape == y2.shape):
        raise ContractViolation("y_inner: dimension mismatch")
    return Y_WEIGHTS[0] * float(x1 @ y1) + Y_WEIGHTS[1] * float(x2 @ y2)


def h1_gram(N: int, a: float = 0.0, b: float = 1.0, d: int = 1) -> np.ndarray:
    """Matrix ``G`` of the inner product on flattened nodal vectors."""
    if N < 1 or not b > a:
        raise ContractViolation("h1_gram needs N >= 1 and b > a")
    dt = (b - a) / N
    e0 = np.zeros(N + 1)
    e0[0] = 1.0
    eN = np.zeros(N + 1)
    eN[-1] = 1.0
    D = np.diff(np.eye(N + 1), axis=0)
    G1 = np.outer(e0, e0) + np.outer(e0 + eN, e0 + eN) + (b - a) / dt * (D.T @ D)
    return np.kron(G1, np.eye(d))


def trace_matrix(N: int, d: int = 1) -> np.ndarray:
    """Coordinate matrix of ``A``: rows pick node 0 then node N, component-wise."""
    A = np.zeros((2 * d, (N + 1) * d))
    A[:d, :d] = np.eye(d)
    A[d:, N * d :] = np.eye(d)
    return A


def adjoint_identity_error(y1, y2, x: H1Space) -> float:
    """``|<A* y, x>_X - <y, A x>_Y|`` on the discrete space."""
    lhs = h1_inner(h1_apply_A_star(y1, y2, x), x)
    rhs = y_inner((y1, y2), h1_apply_A(x))
    return abs(lhs - rhs)
