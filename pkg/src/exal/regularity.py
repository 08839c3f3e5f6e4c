"""Constraint regularity: the Gram operator E E*, Q(x), a_max, multipliers, KKT and SOSC."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg

from .errors import ContractViolation, NumericalFailure, SingularConstraints
from .problem import (
    FirstOrder,
    PrimalDual,
    ProblemSpec,
    eval_first_order,
    eval_second_order,
    grad_lagrangian_from,
    hess_lagrangian_from,
)

A_TOL = 1e-10


def _gram_from(fo: FirstOrder) -> np.ndarray:
    top = np.hstack([fo.DF @ fo.DF_star, fo.DF @ fo.grad_g])
    bottom = np.hstack([fo.Dg @ fo.DF_star, fo.Dg @ fo.grad_g + np.diag(fo.g**2)])
    gram = np.vstack([top, bottom])
    return 0.5 * (gram + gram.T)


def assemble_gram(p: ProblemSpec, x) -> np.ndarray:
    """Matrix of E(x) E(x)^* on H x R^m, block order (lam, mu)."""
    return _gram_from(eval_first_order(p, x))


def q_form_value(p: ProblemSpec, x, lam, mu) -> float:
    """Q(x)[lam, mu] evaluated from its defining formula (not through the Gram matrix)."""
    fo = eval_first_order(p, x)
    lam = np.atleast_1d(np.asarray(lam, dtype=float)).reshape(p.ell)
    mu = np.atleast_1d(np.asarray(mu, dtype=float)).reshape(p.m)
    u = fo.DF_star @ lam + fo.grad_g @ mu
    first = fo.DF @ u
    second = fo.Dg @ u + fo.g**2 * mu
    return 0.5 * float(first @ first) + 0.5 * float(second @ second)


def _eigvalsh(gram):
    if gram.size == 0:
        return np.zeros(0)
    try:
        return linalg.eigvalsh(gram)
    except (linalg.LinAlgError, ValueError) as exc:
        raise NumericalFailure(f"eigensolver failed: {exc}", gram) from exc


def _a_max_from(gram) -> float:
    ev = _eigvalsh(gram)
    if ev.size == 0:
        # no constraints: every multiplier space is trivial
        return math.inf
    sigma = max(float(ev[0]), 0.0)
    return 0.5 * sigma * sigma


def a_max(p: ProblemSpec, x) -> float:
    """Largest a with Q(x)[v] >= a |v|^2; equals (smallest Gram eigenvalue)^2 / 2."""
    return _a_max_from(assemble_gram(p, x))


@dataclass(frozen=True)
class MultiplierEstimate:
    lam: np.ndarray
    mu: np.ndarray


def _multipliers_from(fo: FirstOrder, gram: np.ndarray, ell: int, a_tol: float) -> MultiplierEstimate:
    ev = _eigvalsh(gram)
    if ev.size and ev[0] < a_tol:
        raise SingularConstraints(float(ev[0]))
    rhs = -np.concatenate([fo.DF @ fo.grad_f, fo.Dg @ fo.grad_f])
    if rhs.size == 0:
        return MultiplierEstimate(np.zeros(0), np.zeros(0))
    sol = linalg.solve(gram, rhs, assume_a="pos")
    return MultiplierEstimate(sol[:ell], sol[ell:])


def multiplier_estimate(p: ProblemSpec, x, a_tol: float = A_TOL) -> MultiplierEstimate:
    """Solve E E^* (lam, mu) = -(DF[grad f], grad g grad f); raises SingularConstraints."""
    fo = eval_first_order(p, x)
    return _multipliers_from(fo, _gram_from(fo), p.ell, a_tol)


@dataclass(frozen=True)
class KKTResidual:
    stationarity: float
    feasibility_eq: float
    feasibility_comp: float

    @property
    def total(self) -> float:
        return max(self.stationarity, self.feasibility_eq, self.feasibility_comp)

    def as_dict(self) -> dict:
        return {
            "stationarity": self.stationarity,
            "feasibility_eq": self.feasibility_eq,
            "feasibility_comp": self.feasibility_comp,
            "total": self.total,
        }


def kkt_residual(p: ProblemSpec, xi: PrimalDual) -> KKTResidual:
    p.check(xi)
    fo = eval_first_order(p, xi.x)
    v = grad_lagrangian_from(fo, xi.lam, xi.mu)
    return KKTResidual(
        stationarity=p.metric.norm(v),
        feasibility_eq=float(np.linalg.norm(fo.F)),
        feasibility_comp=float(np.linalg.norm(np.maximum(fo.g, -xi.mu))),
    )


@dataclass(frozen=True)
class EtaDecomposition:
    Q1_lambda: np.ndarray
    Q1_mu: np.ndarray
    Q0: float


def eta_decomposition(p: ProblemSpec, x) -> EtaDecomposition:
    """Linear and constant coefficients of eta(x, ., .) = Q(x) + <Q1, (lam, mu)> + Q0."""
    fo = eval_first_order(p, x)
    DF_gf = fo.DF @ fo.grad_f
    Dg_gf = fo.Dg @ fo.grad_f  # <grad g_i, grad f>
    q1_lam = fo.DF @ (fo.DF_star @ DF_gf) + fo.DF @ (fo.grad_g @ Dg_gf)
    Gr = fo.Dg @ fo.grad_g
    DF_gg = fo.DF @ fo.grad_g  # column i: DF[grad g_i]
    q1_mu = DF_gg.T @ DF_gf + Gr @ Dg_gf + Dg_gf * fo.g**2
    q0 = 0.5 * float(DF_gf @ DF_gf) + 0.5 * float(Dg_gf @ Dg_gf)
    return EtaDecomposition(q1_lam, q1_mu, q0)


def active_set(g: np.ndarray, eps_act: Optional[float] = None) -> list[int]:
    if eps_act is None:
        eps_act = 1e-6 * max(1.0, float(np.max(np.abs(g))) if g.size else 1.0)
    return [int(i) for i in np.nonzero(np.abs(g) <= eps_act)[0]]


def stacked_active_jacobian(p: ProblemSpec, x, eps_act: Optional[float] = None) -> np.ndarray:
    fo = eval_first_order(p, x)
    act = active_set(fo.g, eps_act)
    return np.vstack([fo.DF, fo.Dg[act]]) if act else fo.DF.copy()


def active_rank_full(p: ProblemSpec, x, eps_act: Optional[float] = None, tol: float = 1e-10) -> bool:
    """Full row rank of [DF; grad g_i, i active], ranked by singular values."""
    J = stacked_active_jacobian(p, x, eps_act)
    if J.shape[0] == 0:
        return True
    sv = linalg.svdvals(J)
    return J.shape[0] <= J.shape[1] and bool(sv[-1] > tol)


@dataclass(frozen=True)
class RegularityReport:
    gram: np.ndarray
    a_max: float
    positive_definite: bool
    active_set: list
    multiplier_estimate: Optional[MultiplierEstimate]  # None means singular
    condition: float

    def as_dict(self) -> dict:
        est = self.multiplier_estimate
        return {
            "gram": self.gram.tolist(),
            "a_max": self.a_max,
            "positive_definite": self.positive_definite,
            "active_set": list(self.active_set),
            "multiplier_estimate": (
                "singular" if est is None else {"lambda": est.lam.tolist(), "mu": est.mu.tolist()}
            ),
            "condition": self.condition,
        }


def regularity_report(p: ProblemSpec, x, eps_act: Optional[float] = None, a_tol: float = A_TOL) -> RegularityReport:
    fo = eval_first_order(p, x)
    gram = _gram_from(fo)
    ev = _eigvalsh(gram)
    amax = _a_max_from(gram)
    try:
        est = _multipliers_from(fo, gram, p.ell, a_tol)
    except SingularConstraints:
        est = None
    if ev.size == 0:
        cond = 1.0
    elif ev[0] <= 0:
        cond = math.inf
    else:
        cond = float(ev[-1] / ev[0])
    return RegularityReport(gram, amax, amax > a_tol, active_set(fo.g, eps_act), est, cond)


@dataclass(frozen=True)
class SoscReport:
    active_set: list
    strict_complementarity: bool
    cone_basis: np.ndarray  # n x k, Euclidean-orthonormal columns
    reduced_hessian_min_eig: Optional[float]  # None when the cone is trivial
    rho: float
    sosc_holds: bool

    @property
    def vacuous(self) -> bool:
        return self.cone_basis.shape[1] == 0

    def as_dict(self) -> dict:
        return {
            "active_set": list(self.active_set),
            "strict_complementarity": self.strict_complementarity,
            "cone_dimension": int(self.cone_basis.shape[1]),
            "reduced_hessian_min_eig": (
                "vacuous" if self.reduced_hessian_min_eig is None else self.reduced_hessian_min_eig
            ),
            "rho": self.rho,
            "sosc_holds": self.sosc_holds,
        }


def sosc_check(
    p: ProblemSpec,
    xi: PrimalDual,
    eps_act: Optional[float] = None,
    mu_tol: float = 1e-8,
    kkt_tol: float = 1e-8,
) -> SoscReport:
    """Second-order sufficient conditions on the critical cone.

    rho is the smallest generalised eigenvalue of (Z^T D2L Z, Z^T G Z), i.e. the
    best constant in D2L[z, z] >= rho |z|_X^2 on the cone; for Euclidean X this is
    the smallest eigenvalue of the reduced Hessian.
    """
    res = kkt_residual(p, xi)
    if res.total > kkt_tol:
        raise ContractViolation(f"sosc_check needs a KKT triple, residual {res.total:.3e}")
    fo = eval_first_order(p, xi.x)
    hL = hess_lagrangian_from(eval_second_order(p, xi.x), xi.lam, xi.mu)
    act = active_set(fo.g, eps_act)
    strict = all(xi.mu[i] >= mu_tol for i in act)
    J = np.vstack([fo.DF, fo.Dg[act]]) if act else fo.DF
    Z = linalg.null_space(J, rcond=1e-10) if J.shape[0] else np.eye(p.n)
    if Z.shape[1] == 0:
        return SoscReport(act, strict, Z, None, math.inf, True)
    reduced = Z.T @ hL @ Z
    reduced = 0.5 * (reduced + reduced.T)
    min_eig = float(linalg.eigvalsh(reduced)[0])
    if p.metric.euclidean:
        rho = min_eig
    else:
        zgz = Z.T @ p.metric.gram @ Z
        rho = float(linalg.eigvalsh(reduced, 0.5 * (zgz + zgz.T))[0])
    return SoscReport(act, strict, Z, min_eig, rho, rho > 0)
