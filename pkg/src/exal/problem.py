"""Constrained problem abstraction.

A problem is ``min f(x) s.t. F(x) = 0, g(x) <= 0`` with ``x`` in a Hilbert space
``X`` represented by coordinate vectors of length ``n``.  Evaluator hooks return
*coordinate* derivatives (partial derivatives and Jacobians).  When the problem
carries a ``metric`` (the Gram matrix of the inner product of ``X`` on coordinate
vectors) gradients are converted to Riesz representatives with respect to that
inner product; without one, ``X`` is Euclidean and the two notions coincide.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import linalg

from .errors import ContractViolation, NonFiniteEvaluation, SecondOrderUnavailable

Array = np.ndarray


@dataclass(frozen=True)
class KnownSolution:
    x: Array
    lam: Array
    mu: Array
    f: float
    # False for KKT points that are not minimisers (saddle instances).
    optimal: bool = True


@dataclass(frozen=True)
class PrimalDual:
    """A triple (x, lambda, mu)."""

    x: Array
    lam: Array
    mu: Array

    @classmethod
    def of(cls, x, lam=(), mu=()):
        return cls(
            np.atleast_1d(np.asarray(x, dtype=float)).copy(),
            np.atleast_1d(np.asarray(lam, dtype=float)).copy(),
            np.atleast_1d(np.asarray(mu, dtype=float)).copy(),
        )

    def pack(self) -> Array:
        return np.concatenate([self.x, self.lam, self.mu])

    @classmethod
    def unpack(cls, z: Array, n: int, ell: int) -> "PrimalDual":
        z = np.asarray(z, dtype=float)
        return cls(z[:n].copy(), z[n : n + ell].copy(), z[n + ell :].copy())


class Metric:
    """Inner product ``<u, v> = u^T G v`` on coordinate vectors.

    ``G = None`` is the Euclidean case and uses no linear algebra.
    """

    def __init__(self, gram: Optional[Array] = None):
        if gram is None:
            self.gram = None
            self._cho = None
        else:
            gram = np.asarray(gram, dtype=float)
            self.gram = 0.5 * (gram + gram.T)
            self._cho = linalg.cho_factor(self.gram)

    @property
    def euclidean(self) -> bool:
        return self.gram is None

    def riesz(self, covector: Array) -> Array:
        """Solve ``G z = covector``; works column-wise on 2-D input."""
        covector = np.asarray(covector, dtype=float)
        if self._cho is None or covector.size == 0:
            return covector.copy()
        return linalg.cho_solve(self._cho, covector)

    def lower(self, vector: Array) -> Array:
        """Map a vector to its covector, ``G v``."""
        vector = np.asarray(vector, dtype=float)
        if self.gram is None:
            return vector.copy()
        return self.gram @ vector

    def inner(self, u: Array, v: Array) -> float:
        if self.gram is None:
            return float(np.dot(u, v))
        return float(u @ self.gram @ v)

    def norm(self, u: Array) -> float:
        return float(np.sqrt(max(self.inner(u, u), 0.0)))


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    n: int
    ell: int
    m: int
    f: Callable[[Array], float]
    grad_f: Callable[[Array], Array]
    F: Callable[[Array], Array]
    DF: Callable[[Array], Array]
    g: Callable[[Array], Array]
    Dg: Callable[[Array], Array]
    hess_f: Optional[Callable[[Array], Array]] = None
    hess_F: Optional[Callable[[Array], Array]] = None
    hess_g: Optional[Callable[[Array], Array]] = None
    known_solution: Optional[KnownSolution] = None
    default_start: Optional[PrimalDual] = None
    metric_gram: Optional[Array] = field(default=None, repr=False)
    description: str = ""
    metric: Metric = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "metric", Metric(self.metric_gram))

    @property
    def has_second_order(self) -> bool:
        return (
            self.hess_f is not None
            and (self.ell == 0 or self.hess_F is not None)
            and (self.m == 0 or self.hess_g is not None)
        )

    def start(self) -> PrimalDual:
        if self.default_start is not None:
            return self.default_start
        return PrimalDual(np.zeros(self.n), np.zeros(self.ell), np.zeros(self.m))

    def check(self, xi: PrimalDual) -> None:
        if xi.x.shape != (self.n,) or xi.lam.shape != (self.ell,) or xi.mu.shape != (self.m,):
            raise ContractViolation(
                f"{self.name}: expected dims (n={self.n}, ell={self.ell}, m={self.m}), "
                f"got ({xi.x.shape}, {xi.lam.shape}, {xi.mu.shape})"
            )


@dataclass(frozen=True)
class FirstOrder:
    """First-order data at a point.

    ``grad_f``, ``DF_star`` and ``grad_g`` are Riesz representatives:
    ``DF_star[:, k] = DF(x)^* e_k`` and ``grad_g[:, i]`` is the gradient of ``g_i``.
    ``DF`` and ``Dg`` are the derivative operators in coordinates, so
    ``<grad g_i, y>_X = Dg[i] @ y``.
    """

    f: float
    df: Array
    grad_f: Array
    F: Array
    DF: Array
    g: Array
    Dg: Array
    DF_star: Array
    grad_g: Array


@dataclass(frozen=True)
class SecondOrder:
    hess_f: Array
    hess_F: Array
    hess_g: Array


def _as_vector(x, n):
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise ContractViolation(f"expected a vector of length {n}, got shape {x.shape}")
    return x


def _finite(name, value, shape, x):
    value = np.asarray(value, dtype=float)
    if value.size != int(np.prod(shape)):
        raise ContractViolation(f"{name} has shape {value.shape}, expected {shape}")
    value = value.reshape(shape)
    if not np.all(np.isfinite(value)):
        raise NonFiniteEvaluation(name, x)
    return value


def eval_first_order(p: ProblemSpec, x) -> FirstOrder:
    x = _as_vector(x, p.n)
    n, ell, m = p.n, p.ell, p.m
    f = float(_finite("f", p.f(x), (), x))
    df = _finite("grad_f", p.grad_f(x), (n,), x)
    F = _finite("F", p.F(x), (ell,), x)
    DF = _finite("DF", p.DF(x), (ell, n), x)
    g = _finite("g", p.g(x), (m,), x)
    Dg = _finite("Dg", p.Dg(x), (m, n), x)
    metric = p.metric
    return FirstOrder(
        f=f,
        df=df,
        grad_f=metric.riesz(df),
        F=F,
        DF=DF,
        g=g,
        Dg=Dg,
        DF_star=metric.riesz(DF.T) if ell else np.zeros((n, 0)),
        grad_g=metric.riesz(Dg.T) if m else np.zeros((n, 0)),
    )


def eval_second_order(p: ProblemSpec, x) -> SecondOrder:
    """Coordinate Hessians of f, of each F_k and of each g_i."""
    if not p.has_second_order:
        raise SecondOrderUnavailable(f"{p.name} provides no Hessian hooks")
    x = _as_vector(x, p.n)
    n = p.n
    hf = _finite("hess_f", p.hess_f(x), (n, n), x)
    hF = _finite("hess_F", p.hess_F(x), (p.ell, n, n), x) if p.ell else np.zeros((0, n, n))
    hg = _finite("hess_g", p.hess_g(x), (p.m, n, n), x) if p.m else np.zeros((0, n, n))
    for name, mats in (("hess_f", hf[None]), ("hess_F", hF), ("hess_g", hg)):
        asym = np.abs(mats - np.swapaxes(mats, -1, -2))
        scale = np.maximum(1.0, np.abs(mats))
        if asym.size and np.max(asym / scale) > 1e-12:
            raise ContractViolation(f"{p.name}: {name} is not symmetric")
    sym = lambda a: 0.5 * (a + np.swapaxes(a, -1, -2))
    return SecondOrder(sym(hf), sym(hF), sym(hg))


def lagrangian_value(p: ProblemSpec, xi: PrimalDual) -> float:
    fo = eval_first_order(p, xi.x)
    return fo.f + float(xi.lam @ fo.F) + float(xi.mu @ fo.g)


def grad_lagrangian_from(fo: FirstOrder, lam: Array, mu: Array) -> Array:
    return fo.grad_f + fo.DF_star @ lam + fo.grad_g @ mu


def grad_lagrangian(p: ProblemSpec, xi: PrimalDual) -> Array:
    """Gradient in x of f + <lam, F> + <mu, g>."""
    p.check(xi)
    return grad_lagrangian_from(eval_first_order(p, xi.x), xi.lam, xi.mu)


def hess_lagrangian_from(so: SecondOrder, lam: Array, mu: Array) -> Array:
    """Coordinate Hessian of the classical Lagrangian in x."""
    h = so.hess_f.copy()
    if lam.size:
        h += np.tensordot(lam, so.hess_F, axes=1)
    if mu.size:
        h += np.tensordot(mu, so.hess_g, axes=1)
    return h
