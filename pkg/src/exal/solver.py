"""Unconstrained minimisation of the augmented Lagrangian and penalty adaptation."""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import alf as _alf
from .alf import AlfConfig, AlfGradient, alf_value, alf_value_and_gradient
from .errors import CannotSampleOmega, InfeasibleStart, SingularConstraints
from .problem import PrimalDual, ProblemSpec
from .regularity import A_TOL, KKTResidual, a_max, kkt_residual, multiplier_estimate

log = logging.getLogger(__name__)

_FD_STEP = np.finfo(float).eps ** (1.0 / 3.0)

UNBOUNDED = 1e15

TERMINATIONS = ("kkt-converged", "c-cap-reached", "iteration-cap", "left-omega", "stationary")


@dataclass(frozen=True)
class SolverConfig:
    c0: float = 1.0
    c_growth: float = 10.0
    c_max: float = 1e8
    K: float = 1.0
    grad_tol: float = 1e-8
    kkt_tol: float = 1e-8
    max_outer: int = 20
    max_inner: int = 5000
    armijo_slope: float = 1e-4
    armijo_backtrack: float = 0.5
    inner_method: str = "quasi-newton-secant"
    memory: int = 10
    reseed_multipliers: bool = False
    seed: int = 0

    def __post_init__(self):
        for name in ("grad_tol", "kkt_tol", "c0", "c_max", "K"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.c_growth > 1:
            raise ValueError("c_growth must exceed 1")
        if self.inner_method not in ("steepest-descent", "quasi-newton-secant"):
            raise ValueError(f"unknown inner method {self.inner_method!r}")
        if not (0 < self.armijo_slope < 1 and 0 < self.armijo_backtrack < 1):
            raise ValueError("Armijo parameters must lie in (0, 1)")


@dataclass
class SolveReport:
    problem: str
    xi_final: PrimalDual
    c_final: float
    alf_final: float
    kkt: KKTResidual
    history: list = field(default_factory=list)
    termination: str = "iteration-cap"
    inner_iterations: int = 0
    outer_iterations: int = 0
    a_max_history: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    diagnostic: str = ""


def _grad_parts(p: ProblemSpec, grad: AlfGradient):
    """(covector, Riesz vector) of the full gradient in (x, lam, mu)."""
    return grad.covector(p), grad.vector()


def _infeasibility(p: ProblemSpec, cfg: AlfConfig, xi: PrimalDual) -> float:
    return _alf.evaluate(p, cfg, xi).infeasibility


def minimize_fixed_c(
    p: ProblemSpec,
    cfg: AlfConfig,
    start: PrimalDual,
    sc: SolverConfig = SolverConfig(),
    outer: int = 0,
) -> SolveReport:
    """Minimise AL(., c) jointly in (x, lam, mu) with a monotone Armijo line search.

    Trial points outside Omega have value +inf and are rejected by backtracking.
    """
    p.check(start)
    n, ell = p.n, p.ell
    val, grad, pc = alf_value_and_gradient(p, cfg, start)
    if grad is None or not math.isfinite(val):
        raise InfeasibleStart(f"{p.name}: start is outside Omega")
    z = start.pack()
    gcov, gvec = _grad_parts(p, grad)
    gnorm = math.sqrt(max(float(gcov @ gvec), 0.0))
    memory: deque = deque(maxlen=sc.memory)
    history = []
    termination = "iteration-cap"
    diagnostic = ""
    step0 = 1.0
    it = 0
    omega_rejects = 0
    flat = 0  # consecutive accepted steps with a decrease at round-off level

    def record(k):
        xi_k = PrimalDual.unpack(z, n, ell)
        infeas = math.sqrt(pc.nF2) + float(np.linalg.norm(pc.q))
        history.append(
            {"outer": outer, "inner": k, "c": cfg.c, "alf": val, "grad_norm": gnorm, "infeasibility": infeas}
        )
        return xi_k

    record(0)
    while True:
        if gnorm <= sc.grad_tol:
            termination = "stationary"
            break
        if val < -UNBOUNDED:
            diagnostic = f"AL fell below {-UNBOUNDED:g}: unbounded below at c = {cfg.c:g}"
            break
        if it >= sc.max_inner:
            termination = "iteration-cap"
            diagnostic = f"inner iteration cap {sc.max_inner} reached"
            break
        if sc.inner_method == "quasi-newton-secant" and memory:
            d = -_two_loop(p, gcov, memory)
            t = 1.0
        else:
            d = -gvec
            t = step0
        slope = float(gcov @ d)
        if not slope < 0:
            memory.clear()
            d = -gvec
            slope = -gnorm * gnorm
            t = step0
        accepted = False
        omega_rejects = 0
        while t >= 1e-16:
            z_try = z + t * d
            xi_try = PrimalDual.unpack(z_try, n, ell)
            v_try = alf_value(p, cfg, xi_try)
            if not math.isfinite(v_try):
                omega_rejects += 1
            elif v_try <= val + sc.armijo_slope * t * slope:
                accepted = True
                break
            t *= sc.armijo_backtrack
        if not accepted:
            if memory:
                # secant model went stale; retry once along steepest descent
                memory.clear()
                continue
            termination = "left-omega" if omega_rejects and omega_rejects >= 50 else "iteration-cap"
            diagnostic = f"line search failed at inner iteration {it} (step < 1e-16)"
            break
        v_new, grad_new, pc_new = alf_value_and_gradient(p, cfg, xi_try)
        gcov_new, gvec_new = _grad_parts(p, grad_new)
        s = z_try - z
        y = gcov_new - gcov
        sy = float(s @ y)
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            memory.append((s, y, 1.0 / sy))
        flat = flat + 1 if val - v_new <= 4 * np.finfo(float).eps * max(1.0, abs(val)) else 0
        z, val, pc, gcov, gvec = z_try, v_new, pc_new, gcov_new, gvec_new
        gnorm = math.sqrt(max(float(gcov @ gvec), 0.0))
        step0 = min(1.0, 2.0 * t) if sc.inner_method == "steepest-descent" else 1.0
        it += 1
        record(it)
        if flat >= 20:
            termination = "stationary"
            diagnostic = f"no decrease beyond round-off for {flat} steps, |grad| = {gnorm:.3e}"
            break

    xi = PrimalDual.unpack(z, n, ell)
    kkt = kkt_residual(p, xi)
    if kkt.total <= sc.kkt_tol:
        termination = "kkt-converged"
    return SolveReport(
        problem=p.name,
        xi_final=xi,
        c_final=cfg.c,
        alf_final=val,
        kkt=kkt,
        history=history,
        termination=termination,
        inner_iterations=it,
        outer_iterations=1,
        diagnostic=diagnostic,
    )


def _two_loop(p: ProblemSpec, gcov: np.ndarray, memory) -> np.ndarray:
    """Inverse-secant product H g with initial operator gamma * (Riesz map)."""
    q = gcov.copy()
    alphas = []
    for s, y, rho in reversed(memory):
        a = rho * float(s @ q)
        alphas.append(a)
        q -= a * y
    s, y, rho = memory[-1]
    n = p.n
    r = q.copy()
    r[:n] = p.metric.riesz(q[:n])
    yHy = float(y @ np.concatenate([p.metric.riesz(y[:n]), y[n:]]))
    gamma = float(s @ y) / yHy if yHy > 0 else 1.0
    r *= gamma
    for (s, y, rho), a in zip(memory, reversed(alphas)):
        b = rho * float(y @ r)
        r += (a - b) * s
    return r


def infeasibility_test(p: ProblemSpec, cfg: AlfConfig, xi: PrimalDual, grad_norm: float, K: float) -> bool:
    """True when |grad AL| >= K (|F| + |q|), the lower estimate that holds for large c."""
    return grad_norm >= K * _infeasibility(p, cfg, xi)


def solve_adaptive(
    p: ProblemSpec,
    cfg: AlfConfig,
    start: Optional[PrimalDual] = None,
    sc: SolverConfig = SolverConfig(),
) -> SolveReport:
    """Outer loop: minimise at fixed c, raise c while the gradient estimate fails.

    At an approximate stationary point the estimate |grad AL| >= K * infeasibility
    can only hold if the infeasibility is already small; when it fails c is
    multiplied by ``c_growth`` and the solve is warm-started.  The penalty starts
    at ``sc.c0`` and the ``c`` carried by ``cfg`` is ignored.
    """
    start = p.start() if start is None else start
    # c comes from the solver configuration; cfg only contributes phi and psi
    c = sc.c0
    xi = start
    history: list = []
    amax_hist: list = []
    warnings: list = []
    total_inner = 0
    report = None
    termination = "iteration-cap"
    for outer in range(sc.max_outer):
        run_cfg = cfg.with_c(c)
        report = minimize_fixed_c(p, run_cfg, xi, sc, outer=outer)
        history.extend(report.history)
        total_inner += report.inner_iterations
        xi = report.xi_final
        am = a_max(p, xi.x)
        amax_hist.append({"outer": outer, "c": c, "a_max": am})
        if report.termination == "kkt-converged":
            termination = "kkt-converged"
            break
        if report.termination == "left-omega":
            termination = "left-omega"
            break
        gnorm = report.history[-1]["grad_norm"]
        if infeasibility_test(p, run_cfg, xi, max(gnorm, sc.grad_tol), sc.K):
            # estimate satisfied but not KKT: the inner run stopped early, keep c
            log.debug("outer %d: estimate holds at c=%g, continuing", outer, c)
            continue
        if c * sc.c_growth > sc.c_max:
            termination = "c-cap-reached"
            break
        c *= sc.c_growth
        if sc.reseed_multipliers:
            try:
                est = multiplier_estimate(p, xi.x, A_TOL)
            except SingularConstraints:
                pass
            else:
                xi = PrimalDual(xi.x, est.lam, est.mu)
    else:
        termination = "iteration-cap"

    warnings.extend(_a_max_collapse(amax_hist))
    for w in warnings:
        log.warning("%s: %s", p.name, w)
    final_cfg = cfg.with_c(c)
    return SolveReport(
        problem=p.name,
        xi_final=xi,
        c_final=c,
        alf_final=alf_value(p, final_cfg, xi),
        kkt=kkt_residual(p, xi),
        history=history,
        termination=termination,
        inner_iterations=total_inner,
        outer_iterations=len(amax_hist),
        a_max_history=amax_hist,
        warnings=warnings,
        diagnostic=report.diagnostic if report is not None else "",
    )


def _a_max_collapse(amax_hist) -> list:
    """Warn when a_max shrinks toward zero while c rises."""
    if len(amax_hist) < 2:
        return []
    first, last = amax_hist[0], amax_hist[-1]
    if last["c"] <= first["c"]:
        return []
    ref = max(first["a_max"], max(h["a_max"] for h in amax_hist))
    if last["a_max"] <= A_TOL or (math.isfinite(ref) and last["a_max"] <= 1e-6 * ref):
        return [
            f"a_max collapse: a_max fell from {ref:.3e} to {last['a_max']:.3e} "
            f"while c rose from {first['c']:.3g} to {last['c']:.3g}; "
            "the constraint qualification appears to fail"
        ]
    return []


@dataclass
class SweepRow:
    c: float
    start_id: int
    converged: bool
    alf_final: float
    dist_to_kkt: float
    infeasibility: float
    a_max_final: float
    xi_final: PrimalDual


@dataclass
class SweepTable:
    problem: str
    rows: list
    c_star: Optional[float]

    def recovered_at(self, c: float) -> bool:
        cells = [r for r in self.rows if r.c == c]
        return bool(cells) and all(r.converged for r in cells)


def distance_to_kkt(p: ProblemSpec, xi: PrimalDual) -> float:
    ks = p.known_solution
    dx = xi.x - ks.x
    s = p.metric.inner(dx, dx) + float(np.sum((xi.lam - ks.lam) ** 2)) + float(np.sum((xi.mu - ks.mu) ** 2))
    return math.sqrt(s)


def random_starts(p: ProblemSpec, count: int, seed: int = 0, scale: float = 1.0) -> list:
    """Seeded starts around the problem's default start."""
    rng = np.random.default_rng(seed)
    base = p.start()
    return [
        PrimalDual(
            base.x + scale * rng.uniform(-1, 1, p.n),
            base.lam + scale * rng.uniform(-1, 1, p.ell),
            base.mu + scale * rng.uniform(-1, 1, p.m),
        )
        for _ in range(count)
    ]


def exactness_sweep(
    p: ProblemSpec,
    c_list: Sequence[float],
    starts: Sequence[PrimalDual],
    sc: SolverConfig = SolverConfig(),
    cfg: Optional[AlfConfig] = None,
    x_tol: float = 1e-6,
    value_tol: float = 1e-8,
) -> SweepTable:
    """Minimise at each fixed c from each start and compare with the known KKT triple.

    ``c_star`` is the smallest sampled c from which every larger sampled c recovers
    the triple from all starts (None if the largest c does not).
    """
    if p.known_solution is None:
        raise ValueError(f"{p.name} has no known solution")
    base = cfg if cfg is not None else AlfConfig(1.0)
    fstar = p.known_solution.f
    rows = []
    for c in c_list:
        run_cfg = base.with_c(float(c))
        for j, s in enumerate(starts):
            rep = minimize_fixed_c(p, run_cfg, s, sc)
            xi = rep.xi_final
            dist = distance_to_kkt(p, xi)
            ok = dist <= x_tol and abs(rep.alf_final - fstar) <= value_tol
            rows.append(
                SweepRow(
                    c=float(c),
                    start_id=j,
                    converged=bool(ok),
                    alf_final=rep.alf_final,
                    dist_to_kkt=dist,
                    infeasibility=_infeasibility(p, run_cfg, xi),
                    a_max_final=a_max(p, xi.x),
                    xi_final=xi,
                )
            )
    c_star = None
    for c in sorted(set(float(c) for c in c_list), reverse=True):
        if all(r.converged for r in rows if r.c == c):
            c_star = c
        else:
            break
    return SweepTable(p.name, rows, c_star)


@dataclass
class GradientCheckReport:
    max_rel_err: dict
    worst_point: dict
    samples: int
    rtol: float
    passed: bool
    failures: int = 0  # samples where some block exceeds rtol


def _fd_covector(p: ProblemSpec, cfg: AlfConfig, xi: PrimalDual) -> np.ndarray:
    z = xi.pack()
    out = np.empty_like(z)
    for i in range(z.size):
        h = _FD_STEP * max(1.0, abs(z[i]))
        zp, zm = z.copy(), z.copy()
        zp[i] += h
        zm[i] -= h
        fp = alf_value(p, cfg, PrimalDual.unpack(zp, p.n, p.ell))
        fm = alf_value(p, cfg, PrimalDual.unpack(zm, p.n, p.ell))
        out[i] = (fp - fm) / (zp[i] - zm[i])
    return out


def sample_omega_point(p: ProblemSpec, cfg: AlfConfig, rng, scale: float = 1.0, margin: float = 0.5) -> PrimalDual:
    """Random triple near the default start whose x lies well inside Omega.

    ``margin`` keeps |F|^2 below ``margin * alpha`` for bounded-domain phi and
    b(x) above ``(1 - margin) * psi(0)``, so central differences stay in Omega.
    """
    base = p.start()
    ref = p.known_solution.x if p.known_solution is not None else base.x
    for _ in range(100):
        x = ref + scale * rng.uniform(-1, 1, p.n)
        xi = PrimalDual(x, rng.uniform(-2, 2, p.ell), rng.uniform(-2, 2, p.m))
        ev = _alf.evaluate(p, cfg, xi)
        if not ev.in_omega:
            continue
        nF2 = (ev.infeasibility - float(np.linalg.norm(ev.q))) ** 2
        if math.isfinite(cfg.phi.alpha) and nF2 > margin * cfg.phi.alpha:
            continue
        if ev.b < (1.0 - margin) * cfg.psi.psi0:
            continue
        return xi
    raise CannotSampleOmega(f"{p.name}: could not sample a point inside Omega")


def gradient_check(
    p: ProblemSpec,
    cfg: AlfConfig,
    samples: int = 100,
    seed: int = 0,
    rtol: float = 1e-5,
) -> GradientCheckReport:
    """Compare analytic gradient blocks with central differences at random Omega points."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    n, ell = p.n, p.ell
    worst = {"x": 0.0, "lambda": 0.0, "mu": 0.0}
    where: dict = {}
    failures = 0
    for _ in range(samples):
        xi = sample_omega_point(p, cfg, rng)
        g = _alf.alf_gradient(p, cfg, xi)
        analytic = g.covector(p)
        fd = _fd_covector(p, cfg, xi)
        bad = False
        for key, sl in (("x", slice(0, n)), ("lambda", slice(n, n + ell)), ("mu", slice(n + ell, None))):
            a, b = analytic[sl], fd[sl]
            if a.size == 0:
                continue
            err = float(np.linalg.norm(a - b)) / max(float(np.linalg.norm(b)), 1e-12)
            bad = bad or err > rtol
            if err > worst[key]:
                worst[key] = err
                where[key] = {"x": xi.x.tolist(), "lambda": xi.lam.tolist(), "mu": xi.mu.tolist()}
        failures += bad
    passed = all(v <= rtol for v in worst.values())
    return GradientCheckReport(worst, where, samples, rtol, passed, failures)


def fd_hessian(p: ProblemSpec, cfg: AlfConfig, xi: PrimalDual, rel_step: float = 1e-5) -> np.ndarray:
    """Symmetrised central-difference Hessian of AL in packed coordinates (x, lam, mu)."""
    z = xi.pack()
    k = z.size
    H = np.empty((k, k))
    for i in range(k):
        h = rel_step * max(1.0, abs(z[i]))
        zp, zm = z.copy(), z.copy()
        zp[i] += h
        zm[i] -= h
        gp = _alf.alf_gradient(p, cfg, PrimalDual.unpack(zp, p.n, p.ell)).covector(p)
        gm = _alf.alf_gradient(p, cfg, PrimalDual.unpack(zm, p.n, p.ell)).covector(p)
        H[:, i] = (gp - gm) / (2.0 * h)
    return 0.5 * (H + H.T)


def local_exactness_min_eig(p: ProblemSpec, c: float = 100.0, cfg: Optional[AlfConfig] = None) -> float:
    """Smallest eigenvalue of the finite-difference Hessian of AL at the known KKT triple."""
    ks = p.known_solution
    if ks is None:
        raise ValueError(f"{p.name} has no known solution")
    run_cfg = (cfg if cfg is not None else AlfConfig(c)).with_c(c)
    H = fd_hessian(p, run_cfg, PrimalDual(ks.x, ks.lam, ks.mu))
    return float(np.linalg.eigvalsh(H)[0])


@dataclass
class GradEstimateCheck:
    c: float
    level: float
    samples: int
    violations: int
    worst_ratio: float  # min over samples of |grad AL| / (K * infeasibility)

    @property
    def holds(self) -> bool:
        return self.violations == 0


def grad_estimate_check(
    p: ProblemSpec,
    c: float,
    samples: int = 1000,
    seed: int = 0,
    K: float = 1.0,
    cfg: Optional[AlfConfig] = None,
    start: Optional[PrimalDual] = None,
    box: float = 2.0,
    max_halvings: int = 60,
) -> GradEstimateCheck:
    """Test |grad AL| >= K (|F| + |q|) on random points of the sublevel set {AL <= AL(start)}.

    A direction is drawn uniformly from the box of half-width ``box`` and the
    step from the known solution (or the start) along it is halved until the
    point lies in the sublevel set.  Plain rejection from the box is hopeless in
    higher dimension because the set is thin across the constraint directions.
    """
    run_cfg = (cfg if cfg is not None else AlfConfig(c)).with_c(c)
    start = p.start() if start is None else start
    level = alf_value(p, run_cfg, start)
    centre = p.known_solution if p.known_solution is not None else start
    z0 = np.concatenate([centre.x, centre.lam, centre.mu])
    rng = np.random.default_rng(seed)
    violations = 0
    worst = math.inf
    for _ in range(samples):
        u = rng.uniform(-box, box, z0.size)
        for _ in range(max_halvings):
            xi = PrimalDual.unpack(z0 + u, p.n, p.ell)
            val, grad, _ = alf_value_and_gradient(p, run_cfg, xi)
            if grad is not None and val <= level:
                break
            u *= 0.5
        else:
            raise CannotSampleOmega(f"{p.name}: no sublevel point along a sampled ray at c={c:g}")
        infeas = _infeasibility(p, run_cfg, xi)
        gn = grad.norm(p)
        if infeas > 0:
            ratio = gn / (K * infeas)
            worst = min(worst, ratio)
            if ratio < 1.0:
                violations += 1
    return GradEstimateCheck(c, level, samples, violations, worst)
