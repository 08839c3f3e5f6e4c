"""Penalty shape functions phi and inequality scaling functions psi."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ContractViolation


@dataclass(frozen=True)
class PenaltyShapePhi:
    """Convex non-decreasing phi: [0, inf) -> [0, inf] with phi(t) = 0 iff t = 0.

    ``phi0`` is a constant with ``phi(t) >= phi0 * t`` (None if unknown) and
    ``alpha`` the right end of the effective domain (inf when unbounded).
    """

    kind: str
    value: Callable[[float], float]
    deriv: Callable[[float], float]
    phi0: Optional[float] = None
    alpha: float = math.inf
    params: tuple = ()

    def __call__(self, t: float) -> float:
        return self.value(t)

    def spelling(self) -> str:
        if self.kind == "barrier":
            return f"barrier:{self.alpha!r}"
        return {"linear": "linear", "exponential": "exp"}.get(self.kind, self.kind)


@dataclass(frozen=True)
class InequalityShapePsi:
    """Concave psi on [0, inf)^m with global maximum psi(0) > 0 at zero."""

    kind: str
    value: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    psi0: float
    params: tuple = ()
    m: Optional[int] = field(default=None, compare=False)

    def __call__(self, y) -> float:
        return self.value(np.asarray(y, dtype=float))

    def spelling(self) -> str:
        if self.kind == "constant":
            return f"const:{self.params[0]!r}"
        if self.kind == "poly":
            return f"poly:{self.params[0]!r},{self.params[1]!r}"
        return self.kind


def _barrier(alpha):
    def value(t):
        return t / (alpha - t) if t < alpha else math.inf

    def deriv(t):
        return alpha / (alpha - t) ** 2 if t < alpha else math.inf

    return value, deriv


def _exp_value(t):
    # expm1 keeps phi(t) >= t exact for small t
    try:
        return math.expm1(t)
    except OverflowError:
        return math.inf


def _exp_deriv(t):
    try:
        return math.exp(t)
    except OverflowError:
        return math.inf


def make_phi(kind: str, *params: float) -> PenaltyShapePhi:
    """Build phi: ``linear`` (t), ``barrier`` (t/(alpha - t), +inf for t >= alpha) or ``exponential`` (e^t - 1)."""
    if kind == "linear":
        return PenaltyShapePhi("linear", lambda t: t, lambda t: 1.0, phi0=1.0)
    if kind == "barrier":
        if len(params) != 1:
            raise ContractViolation("barrier phi takes one parameter alpha")
        alpha = float(params[0])
        if not alpha > 0 or not math.isfinite(alpha):
            raise ContractViolation(f"barrier phi needs alpha > 0, got {alpha}")
        value, deriv = _barrier(alpha)
        return PenaltyShapePhi("barrier", value, deriv, phi0=1.0 / alpha, alpha=alpha, params=(alpha,))
    if kind in ("exponential", "exp"):
        return PenaltyShapePhi("exponential", _exp_value, _exp_deriv, phi0=1.0)
    raise ContractViolation(f"unknown phi kind {kind!r}")


def make_psi(kind: str, *params: float, m: Optional[int] = None) -> InequalityShapePsi:
    """Build psi: ``constant`` (beta) or ``poly`` (beta - sum y_i^s, s > 1)."""
    if kind in ("constant", "const"):
        beta = float(params[0]) if params else 1.0
        if not beta > 0:
            raise ContractViolation(f"psi needs beta > 0, got {beta}")
        return InequalityShapePsi(
            "constant",
            lambda y: beta,
            lambda y: np.zeros_like(np.asarray(y, dtype=float)),
            psi0=beta,
            params=(beta,),
            m=m,
        )
    if kind == "poly":
        if len(params) != 2:
            raise ContractViolation("poly psi takes parameters beta, s")
        beta, s = float(params[0]), float(params[1])
        if not beta > 0:
            raise ContractViolation(f"psi needs beta > 0, got {beta}")
        if not s > 1:
            raise ContractViolation(f"poly psi needs s > 1, got {s}")

        def value(y):
            return beta - float(np.sum(np.asarray(y, dtype=float) ** s))

        def grad(y):
            return -s * np.asarray(y, dtype=float) ** (s - 1.0)

        return InequalityShapePsi("poly", value, grad, psi0=beta, params=(beta, s), m=m)
    raise ContractViolation(f"unknown psi kind {kind!r}")


def parse_phi(text: str) -> PenaltyShapePhi:
    """Parse ``linear``, ``barrier:ALPHA`` or ``exp``."""
    name, _, rest = text.strip().partition(":")
    try:
        params = [float(v) for v in rest.split(",")] if rest else []
    except ValueError:
        raise ContractViolation(f"bad phi spelling {text!r}") from None
    if name not in ("linear", "barrier", "exp", "exponential") or (name != "barrier" and params):
        raise ContractViolation(f"bad phi spelling {text!r}")
    return make_phi(name, *params)


def parse_psi(text: str, m: Optional[int] = None) -> InequalityShapePsi:
    """Parse ``const:BETA`` or ``poly:BETA,S``."""
    name, _, rest = text.strip().partition(":")
    try:
        params = [float(v) for v in rest.split(",")] if rest else []
    except ValueError:
        raise ContractViolation(f"bad psi spelling {text!r}") from None
    if name not in ("const", "constant", "poly"):
        raise ContractViolation(f"bad psi spelling {text!r}")
    return make_psi(name, *params, m=m)


@dataclass
class AxiomReport:
    shape: str
    samples: int
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _phi_axioms(phi: PenaltyShapePhi, samples: int, rng) -> AxiomReport:
    rep = AxiomReport(phi.kind, samples)
    upper = phi.alpha * (1 - 1e-3) if math.isfinite(phi.alpha) else 10.0
    t = np.sort(rng.uniform(0.0, upper, samples))
    t[0] = 0.0
    vals = np.array([phi(ti) for ti in t])
    ders = np.array([phi.deriv(ti) for ti in t])
    if phi(0.0) != 0.0:
        rep.violations.append(("phi(0) != 0", 0.0, phi(0.0)))
    if not phi.deriv(0.0) > 0:
        rep.violations.append(("phi'(0) <= 0", 0.0, phi.deriv(0.0)))
    for ti, vi in zip(t[1:], vals[1:]):
        if not vi > 0:
            rep.violations.append(("phi(t) <= 0 for t > 0", float(ti), float(vi)))
            break
    drops = np.nonzero(np.diff(vals) < -1e-12 * np.maximum(1.0, np.abs(vals[1:])))[0]
    if drops.size:
        k = drops[0]
        rep.violations.append(("phi not nondecreasing", float(t[k + 1]), float(vals[k + 1])))
    bends = np.nonzero(np.diff(ders) < -1e-12 * np.maximum(1.0, np.abs(ders[1:])))[0]
    if bends.size:
        k = bends[0]
        rep.violations.append(("phi' not nondecreasing (convexity)", float(t[k + 1]), float(ders[k + 1])))
    if phi.phi0 is not None:
        gap = vals - phi.phi0 * t
        bad = np.nonzero(gap < -1e-12 * np.maximum(1.0, np.abs(vals)))[0]
        if bad.size:
            k = bad[0]
            rep.violations.append(("phi(t) < phi0 t", float(t[k]), float(gap[k])))
    if math.isfinite(phi.alpha) and math.isfinite(phi(phi.alpha)):
        rep.violations.append(("phi finite at alpha", phi.alpha, phi(phi.alpha)))
    return rep


def _psi_axioms(psi: InequalityShapePsi, samples: int, rng, m: int) -> AxiomReport:
    rep = AxiomReport(psi.kind, samples)
    zero = np.zeros(m)
    p0 = psi(zero)
    if not p0 > 0:
        rep.violations.append(("psi(0) <= 0", zero.tolist(), p0))
    if abs(p0 - psi.psi0) > 1e-15 * max(1.0, abs(p0)):
        rep.violations.append(("psi0 does not match psi(0)", zero.tolist(), p0))
    ys = rng.uniform(0.0, 2.0, size=(samples, m))
    for y in ys:
        v = psi(y)
        if v > p0 + 1e-12:
            rep.violations.append(("psi(y) > psi(0)", y.tolist(), v))
            break
    for y in ys[: max(1, samples // 4)]:
        for i in range(m):
            yi = y.copy()
            yi[i] = 0.0
            gi = float(psi.grad(yi)[i])
            if gi != 0.0:
                rep.violations.append(("partial derivative nonzero at y_i = 0", yi.tolist(), gi))
                break
    for _ in range(samples):
        u, v = ys[rng.integers(samples)], ys[rng.integers(samples)]
        th = rng.uniform()
        mid = psi(th * u + (1 - th) * v)
        chord = th * psi(u) + (1 - th) * psi(v)
        if mid < chord - 1e-12 * max(1.0, abs(chord)):
            rep.violations.append(("psi not concave", (th * u + (1 - th) * v).tolist(), mid - chord))
            break
    return rep


def verify_shape_axioms(shape, samples: int = 1000, seed: int = 0, m: int = 2) -> AxiomReport:
    """Sampled check of the axioms for phi or psi; violations are returned, not raised."""
    if samples < 1:
        raise ContractViolation("samples must be positive")
    rng = np.random.default_rng(seed)
    if isinstance(shape, PenaltyShapePhi):
        return _phi_axioms(shape, samples, rng)
    if isinstance(shape, InequalityShapePsi):
        return _psi_axioms(shape, samples, rng, shape.m or m)
    raise ContractViolation(f"not a shape function: {shape!r}")
