"""The exact augmented Lagrangian and its derivatives.

For ``x`` in Omega = {b(x) > 0, phi(|F(x)|^2) < inf}

    AL(x, lam, mu, c) = f + <lam, F> + c/2 (1 + |lam|^2) phi(|F|^2)
                        + <mu, q> + c/(2p) |q|^2 + eta(x, lam, mu),

with b(x) = psi(max{g, 0}), p = b / (1 + |mu|^2), q = max{g, -(p/c) mu} and

    eta = 1/2 |DF(x)[grad_x L]|^2 + 1/2 sum_i (<grad g_i, grad_x L> + g_i^2 mu_i)^2.

Outside Omega the value is +inf.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation, LemmaHypothesisUnavailable, OutsideOmega
from .problem import (
    FirstOrder,
    PrimalDual,
    ProblemSpec,
    eval_first_order,
    eval_second_order,
    grad_lagrangian_from,
    hess_lagrangian_from,
)
from .shaping import InequalityShapePsi, PenaltyShapePhi, make_phi, make_psi

_FD_STEP = np.finfo(float).eps ** (1.0 / 3.0)


@dataclass(frozen=True)
class AlfConfig:
    c: float
    phi: PenaltyShapePhi = field(default_factory=lambda: make_phi("linear"))
    psi: InequalityShapePsi = field(default_factory=lambda: make_psi("constant", 1.0))

    def __post_init__(self):
        if not (self.c > 0 and math.isfinite(self.c)):
            raise ContractViolation(f"penalty parameter must be positive, got {self.c}")

    def with_c(self, c: float) -> "AlfConfig":
        return AlfConfig(c, self.phi, self.psi)


@dataclass(frozen=True)
class AlfEvaluation:
    value: float
    in_omega: bool
    b: float
    p: float
    q: np.ndarray
    eta: float
    infeasibility: float


@dataclass(frozen=True)
class AlfGradient:
    gx: np.ndarray  # Riesz representative in X
    glambda: np.ndarray
    gmu: np.ndarray

    def covector(self, p: ProblemSpec) -> np.ndarray:
        """Partial derivatives in the coordinates of (x, lam, mu)."""
        return np.concatenate([p.metric.lower(self.gx), self.glambda, self.gmu])

    def vector(self) -> np.ndarray:
        return np.concatenate([self.gx, self.glambda, self.gmu])

    def norm(self, p: ProblemSpec) -> float:
        s = p.metric.inner(self.gx, self.gx) + float(self.glambda @ self.glambda)
        s += float(self.gmu @ self.gmu)
        return math.sqrt(max(s, 0.0))


@dataclass(frozen=True)
class _Pieces:
    fo: FirstOrder
    v: np.ndarray  # grad_x L
    w: np.ndarray  # DF[grad_x L]
    r: np.ndarray  # <grad g_i, grad_x L> + g_i^2 mu_i
    nF2: float
    phi: float
    b: float
    p: float
    q: np.ndarray
    eta: float

    @property
    def in_omega(self) -> bool:
        return self.b > 0 and math.isfinite(self.phi)


def _pieces(p: ProblemSpec, cfg: AlfConfig, xi: PrimalDual) -> _Pieces:
    p.check(xi)
    fo = eval_first_order(p, xi.x)
    lam, mu = xi.lam, xi.mu
    v = grad_lagrangian_from(fo, lam, mu)
    w = fo.DF @ v
    r = fo.Dg @ v + fo.g**2 * mu
    eta = 0.5 * float(w @ w) + 0.5 * float(r @ r)
    nF2 = float(fo.F @ fo.F)
    phi = cfg.phi(nF2)
    b = cfg.psi(np.maximum(fo.g, 0.0))
    if b > 0:
        pv = b / (1.0 + float(mu @ mu))
        q = np.maximum(fo.g, -(pv / cfg.c) * mu)
    else:
        pv = 0.0
        q = np.maximum(fo.g, 0.0)
    return _Pieces(fo, v, w, r, nF2, phi, b, pv, q, eta)


def _require_omega(pc: _Pieces, what: str):
    if not pc.in_omega:
        raise OutsideOmega(f"{what}: x is outside Omega (b = {pc.b}, phi = {pc.phi})")


def in_omega(p: ProblemSpec, cfg: AlfConfig, x) -> bool:
    fo = eval_first_order(p, np.asarray(x, dtype=float))
    return cfg.psi(np.maximum(fo.g, 0.0)) > 0 and math.isfinite(cfg.phi(float(fo.F @ fo.F)))


def inequality_scaling(p: ProblemSpec, cfg: AlfConfig, x, mu) -> tuple[float, float]:
    """Return (b(x), p(x, mu))."""
    x = np.asarray(x, dtype=float)
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    if not in_omega(p, cfg, x):
        raise OutsideOmega("inequality_scaling outside Omega")
    b = cfg.psi(np.maximum(eval_first_order(p, x).g, 0.0))
    return b, b / (1.0 + float(mu @ mu))


def shifted_residual(p: ProblemSpec, cfg: AlfConfig, xi: PrimalDual) -> np.ndarray:
    pc = _pieces(p, cfg, xi)
    _require_omega(pc, "shifted_residual")
    return pc.q


def eta_value(p: ProblemSpec, xi: PrimalDual) -> float:
    p.check(xi)
    fo = eval_first_order(p, xi.x)
    v = grad_lagrangian_from(fo, xi.lam, xi.mu)
    w = fo.DF @ v
    r = fo.Dg @ v + fo.g**2 * xi.mu
    return 0.5 * float(w @ w) + 0.5 * float(r @ r)


def _value(pc: _Pieces, cfg: AlfConfig, xi: PrimalDual) -> float:
    if not pc.in_omega:
        return math.inf
    c, lam, mu = cfg.c, xi.lam, xi.mu
    val = pc.fo.f + float(lam @ pc.fo.F)
    if pc.nF2 > 0:
        val += 0.5 * c * (1.0 + float(lam @ lam)) * pc.phi
    if mu.size:
        val += float(mu @ pc.q) + c / (2.0 * pc.p) * float(pc.q @ pc.q)
    return val + pc.eta


def evaluate(p: ProblemSpec, cfg: AlfConfig, xi: PrimalDual) -> AlfEvaluation:
    pc = _pieces(p, cfg, xi)
    infeas = math.sqrt(pc.nF2) + float(np.linalg.norm(pc.q))
    return AlfEvaluation(_value(pc, cfg, xi), pc.in_omega, pc.b, pc.p, pc.q, pc.eta, infeas)


def alf_value(p: ProblemSpec, cfg: AlfConfig, xi: PrimalDual) -> float:
    return _value(_pieces(p, cfg, xi), cfg, xi)


def alf_value_alt_form(p: ProblemSpec, cfg: AlfConfig, xi: PrimalDual) -> float:
    """Same value written as L + penalty bracket + eta; only defined on Omega."""
    pc = _pieces(p, cfg, xi)
    _require_omega(pc, "alf_value_alt_form")
    c, lam, mu, fo = cfg.c, xi.lam, xi.mu, pc.fo
    val = fo.f + float(lam @ fo.F) + float(mu @ fo.g)
    if pc.nF2 > 0:
        val += 0.5 * c * (1.0 + float(lam @ lam)) * pc.phi
    if mu.size:
        shifted = np.minimum(0.0, fo.g + (pc.p / c) * mu)
        val += c / (2.0 * pc.p) * (float(fo.g @ fo.g) - float(shifted @ shifted))
    return val + pc.eta


def _multiplier_blocks(pc: _Pieces, cfg: AlfConfig, xi: PrimalDual):
    fo, c, lam, mu = pc.fo, cfg.c, xi.lam, xi.mu
    u = fo.DF_star @ pc.w + fo.grad_g @ pc.r  # DF* w + sum r_i grad g_i
    glam = fo.F + c * pc.phi * lam + fo.DF @ u if lam.size else np.zeros(0)
    if mu.size:
        qq = float(pc.q @ pc.q)
        gmu = pc.q + (c / pc.b) * qq * mu + fo.Dg @ u + fo.g**2 * pc.r
    else:
        gmu = np.zeros(0)
    return glam, gmu


def _x_block_analytic(p: ProblemSpec, pc: _Pieces, cfg: AlfConfig, xi: PrimalDual) -> np.ndarray:
    fo, c, lam, mu = pc.fo, cfg.c, xi.lam, xi.mu
    so = eval_second_order(p, xi.x)
    hL = hess_lagrangian_from(so, lam, mu)
    # coordinate partial derivatives, mapped to the Riesz representative at the end
    cx = fo.df + fo.DF.T @ lam + fo.Dg.T @ mu
    if lam.size and pc.nF2 > 0:
        cx = cx + c * (1.0 + float(lam @ lam)) * cfg.phi.deriv(pc.nF2) * (fo.DF.T @ fo.F)
    if mu.size:
        cx = cx + (c / pc.p) * (fo.Dg.T @ pc.q)
        dpsi = cfg.psi.grad(np.maximum(fo.g, 0.0))
        qq = float(pc.q @ pc.q)
        if qq > 0 and np.any(dpsi):
            cx = cx - (c * qq / (2.0 * pc.b * pc.p)) * (fo.Dg.T @ dpsi)
    if lam.size:
        cx = cx + np.einsum("k,kij,j->i", pc.w, so.hess_F, pc.v) + hL @ (fo.DF_star @ pc.w)
    if mu.size:
        cx = cx + np.einsum("k,kij,j->i", pc.r, so.hess_g, pc.v) + hL @ (fo.grad_g @ pc.r)
        cx = cx + fo.Dg.T @ (2.0 * fo.g * mu * pc.r)
    return p.metric.riesz(cx)


def _x_block_fd(p: ProblemSpec, cfg: AlfConfig, xi: PrimalDual) -> np.ndarray:
    x = xi.x
    cx = np.empty(p.n)
    for i in range(p.n):
        h = _FD_STEP * max(1.0, abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        fp = alf_value(p, cfg, PrimalDual(xp, xi.lam, xi.mu))
        fm = alf_value(p, cfg, PrimalDual(xm, xi.lam, xi.mu))
        cx[i] = (fp - fm) / (xp[i] - xm[i])
    return p.metric.riesz(cx)


def alf_multiplier_gradient(p: ProblemSpec, cfg: AlfConfig, xi: PrimalDual):
    """The (lam, mu) gradient blocks; first-order data suffices."""
    pc = _pieces(p, cfg, xi)
    _require_omega(pc, "alf_multiplier_gradient")
    return _multiplier_blocks(pc, cfg, xi)


def alf_gradient(p: ProblemSpec, cfg: AlfConfig, xi: PrimalDual, allow_fd: bool = False) -> AlfGradient:
    """Gradient blocks in x (Riesz), lam and mu.

    The x block needs Hessians of f, F and g.  Without them SecondOrderUnavailable
    is raised, unless ``allow_fd`` asks for a central-difference x block instead.
    The lam and mu blocks use first-order data only, see alf_multiplier_gradient.
    """
    pc = _pieces(p, cfg, xi)
    _require_omega(pc, "alf_gradient")
    glam, gmu = _multiplier_blocks(pc, cfg, xi)
    if p.has_second_order or not allow_fd:
        gx = _x_block_analytic(p, pc, cfg, xi)
    else:
        gx = _x_block_fd(p, cfg, xi)
    return AlfGradient(gx, glam, gmu)


def alf_value_and_gradient(p: ProblemSpec, cfg: AlfConfig, xi: PrimalDual):
    """Value, gradient (None outside Omega) and cached pieces in one pass.

    Used by the solver; falls back to a difference x block without Hessian hooks.
    """
    pc = _pieces(p, cfg, xi)
    val = _value(pc, cfg, xi)
    if not pc.in_omega:
        return val, None, pc
    glam, gmu = _multiplier_blocks(pc, cfg, xi)
    if p.has_second_order:
        gx = _x_block_analytic(p, pc, cfg, xi)
    else:
        gx = _x_block_fd(p, cfg, xi)
    return val, AlfGradient(gx, glam, gmu), pc


def lower_bound_lemma1(p: ProblemSpec, cfg: AlfConfig, xi: PrimalDual) -> tuple[float, float]:
    """The two lower estimates of the augmented Lagrangian, valid when phi(t) >= phi0 t."""
    phi0 = cfg.phi.phi0
    if phi0 is None or not phi0 > 0:
        raise LemmaHypothesisUnavailable(f"phi {cfg.phi.kind!r} carries no phi0")
    pc = _pieces(p, cfg, xi)
    _require_omega(pc, "lower_bound_lemma1")
    c, fo = cfg.c, pc.fo
    psi0 = cfg.psi.psi0
    base = fo.f + 0.5 * c * pc.phi - 1.0 / (2.0 * c * phi0) + pc.eta
    bound1 = base + c / (2.0 * pc.b) * float(pc.q @ pc.q) - psi0 / (2.0 * c)
    gp = np.maximum(fo.g, 0.0)
    bound2 = base + c / (2.0 * psi0) * float(gp @ gp) - (1 + p.m) * psi0 / (2.0 * c)
    return bound1, bound2


def diag_identity_residual(p: ProblemSpec, cfg: AlfConfig, xi: PrimalDual) -> np.ndarray:
    """Componentwise g_i mu_i - [mu_i q_i + (c/p)(max{g_i, -p mu_i/c} - g_i) q_i]."""
    pc = _pieces(p, cfg, xi)
    _require_omega(pc, "diag_identity_residual")
    g, mu, c, q = pc.fo.g, xi.mu, cfg.c, pc.q
    rhs = mu * q + (c / pc.p) * (np.maximum(g, -(pc.p / c) * mu) - g) * q
    return g * mu - rhs
