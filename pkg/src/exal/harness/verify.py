"""Sampled property checks over one registry problem.

Each check returns a :class:`CheckResult`; a suite passes when every check has
zero violations.  Checks whose hypotheses do not apply to the problem (no known
solution, failed second-order conditions, ...) are omitted rather than passed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .. import alf as _alf
from ..alf import AlfConfig
from ..errors import CannotSampleOmega, ContractViolation
from ..problem import PrimalDual, ProblemSpec, eval_first_order, grad_lagrangian, lagrangian_value
from ..regularity import (
    A_TOL,
    a_max,
    active_rank_full,
    assemble_gram,
    eta_decomposition,
    kkt_residual,
    multiplier_estimate,
    q_form_value,
    sosc_check,
)
from ..shaping import make_phi, make_psi, verify_shape_axioms
from .. import solver as _solver

SUITES = ("lemmas", "regularity", "solver", "all")

PHIS = (("linear",), ("barrier", 2.0), ("exp",))
PSIS = (("const", 1.0), ("poly", 2.0, 3.0))


@dataclass
class CheckResult:
    check_name: str
    samples: int
    violations: int
    worst_case: Optional[dict] = None

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def as_dict(self) -> dict:
        return {
            "check_name": self.check_name,
            "samples": self.samples,
            "violations": self.violations,
            "worst_case": self.worst_case,
        }


class _Tally:
    """Count violations and keep the sample with the largest excess."""

    def __init__(self, name: str):
        self.name = name
        self.samples = 0
        self.violations = 0
        self.worst = -math.inf
        self.worst_case: Optional[dict] = None

    def add(self, excess: float, ok: bool, **where):
        self.samples += 1
        if not ok:
            self.violations += 1
        if excess > self.worst:
            self.worst = excess
            self.worst_case = {"value": float(excess), **{k: _plain(v) for k, v in where.items()}}

    def result(self) -> CheckResult:
        return CheckResult(self.name, self.samples, self.violations, self.worst_case)


def _plain(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, PrimalDual):
        return {"x": v.x.tolist(), "lambda": v.lam.tolist(), "mu": v.mu.tolist()}
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def _known(p: ProblemSpec) -> Optional[PrimalDual]:
    ks = p.known_solution
    return None if ks is None else PrimalDual(ks.x, ks.lam, ks.mu)


def _centre(p: ProblemSpec) -> np.ndarray:
    return p.known_solution.x if p.known_solution is not None else p.start().x


def _random_xi(p: ProblemSpec, rng, scale: float = 1.0) -> PrimalDual:
    return PrimalDual(
        _centre(p) + scale * rng.uniform(-1, 1, p.n),
        rng.uniform(-2, 2, p.ell),
        rng.uniform(-2, 2, p.m),
    )


def _omega_xi(p: ProblemSpec, cfg: AlfConfig, rng) -> PrimalDual:
    return _solver.sample_omega_point(p, cfg, rng, margin=1.0)


def _log_uniform(rng, lo=1e-1, hi=1e2) -> float:
    return float(math.exp(rng.uniform(math.log(lo), math.log(hi))))


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(1.0, abs(a), abs(b))


def _cfg(phi, psi, c=1.0, m=None) -> AlfConfig:
    return AlfConfig(c, make_phi(*phi), make_psi(*psi, m=m))


def _spell(args) -> str:
    return ":".join([args[0], ",".join(repr(a) for a in args[1:])]) if len(args) > 1 else args[0]


# -- problem and shaping ----------------------------------------------------


def check_shape_axioms(p: ProblemSpec, seed: int, samples: int) -> list:
    out = []
    for spec in PHIS:
        phi = make_phi(*spec)
        rep = verify_shape_axioms(phi, samples=samples, seed=seed)
        out.append(
            CheckResult(
                f"shape_axioms[phi={_spell(spec)}]",
                samples,
                len(rep.violations),
                None if rep.ok else {"violation": list(rep.violations[0])},
            )
        )
        t = _Tally(f"phi_derivative_fd[phi={_spell(spec)}]")
        rng = np.random.default_rng(seed)
        upper = phi.alpha * 0.9 if math.isfinite(phi.alpha) else 5.0
        for ti in rng.uniform(1e-3, upper, min(samples, 200)):
            h = 1e-6 * max(1.0, ti)
            fd = (phi(ti + h) - phi(ti - h)) / (2 * h)
            err = _rel(phi.deriv(ti), fd) if phi.deriv(ti) else abs(fd)
            t.add(err, err <= 1e-6, t=ti)
        out.append(t.result())
    for spec in PSIS:
        psi = make_psi(*spec, m=max(p.m, 1))
        rep = verify_shape_axioms(psi, samples=samples, seed=seed)
        out.append(
            CheckResult(
                f"shape_axioms[psi={_spell(spec)}]",
                samples,
                len(rep.violations),
                None if rep.ok else {"violation": list(rep.violations[0])},
            )
        )
    return out


def check_known_solution(p: ProblemSpec) -> list:
    xi = _known(p)
    if xi is None:
        return []
    res = kkt_residual(p, xi)
    fo = eval_first_order(p, xi.x)
    t = _Tally("known_solution_kkt")
    t.add(res.stationarity, res.stationarity <= 1e-10, kind="stationarity")
    feas = float(np.max(np.abs(fo.F))) if fo.F.size else 0.0
    t.add(feas, feas <= 1e-12, kind="equality")
    comp = float(np.max(np.abs(np.maximum(fo.g, -xi.mu)))) if fo.g.size else 0.0
    t.add(comp, comp <= 1e-12, kind="complementarity")
    return [t.result()]


def check_grad_lagrangian(p: ProblemSpec, seed: int, samples: int) -> list:
    rng = np.random.default_rng(seed)
    t = _Tally("grad_lagrangian_fd")
    for _ in range(samples):
        xi = _random_xi(p, rng)
        cov = p.metric.lower(grad_lagrangian(p, xi))
        fd = np.empty(p.n)
        for i in range(p.n):
            h = 1e-6 * max(1.0, abs(xi.x[i]))
            xp, xm = xi.x.copy(), xi.x.copy()
            xp[i] += h
            xm[i] -= h
            fd[i] = (lagrangian_value(p, PrimalDual(xp, xi.lam, xi.mu)) - lagrangian_value(p, PrimalDual(xm, xi.lam, xi.mu))) / (2 * h)
        err = float(np.linalg.norm(cov - fd)) / max(float(np.linalg.norm(fd)), 1e-8)
        t.add(err, err <= 1e-5, point=xi)
    return [t.result()]


# -- augmented Lagrangian ----------------------------------------------------


def check_gradient_consistency(p: ProblemSpec, seed: int, samples: int, c: float = 3.0) -> list:
    out = []
    for phi in PHIS:
        for psi in PSIS:
            cfg = _cfg(phi, psi, c, m=p.m)
            name = f"gradient_consistency[phi={_spell(phi)},psi={_spell(psi)}]"
            try:
                rep = _solver.gradient_check(p, cfg, samples=samples, seed=seed, rtol=1e-5)
            except CannotSampleOmega as exc:
                out.append(CheckResult(name, 0, 1, {"error": str(exc)}))
                continue
            worst_block = max(rep.max_rel_err, key=rep.max_rel_err.get)
            out.append(
                CheckResult(
                    name,
                    samples,
                    rep.failures,
                    {
                        "value": rep.max_rel_err[worst_block],
                        "block": worst_block,
                        "point": rep.worst_point.get(worst_block),
                    },
                )
            )
    return out


def check_monotone_in_c(p: ProblemSpec, seed: int, samples: int) -> list:
    rng = np.random.default_rng(seed)
    out = []
    for phi in PHIS:
        for psi in PSIS:
            cfg = _cfg(phi, psi, 1.0, m=p.m)
            t = _Tally(f"monotone_in_c[phi={_spell(phi)},psi={_spell(psi)}]")
            for _ in range(samples):
                xi = _omega_xi(p, cfg, rng)
                c1, c2 = sorted((_log_uniform(rng), _log_uniform(rng)))
                v1 = _alf.alf_value(p, cfg.with_c(c1), xi)
                v2 = _alf.alf_value(p, cfg.with_c(c2), xi)
                slack = 1e-12 * max(1.0, abs(v2))
                t.add(v1 - v2, v1 <= v2 + slack, point=xi, c1=c1, c2=c2)
            out.append(t.result())
    return out


def check_form_equivalence(p: ProblemSpec, seed: int, samples: int) -> list:
    rng = np.random.default_rng(seed)
    out = []
    for phi in PHIS:
        for psi in PSIS:
            cfg = _cfg(phi, psi, 1.0, m=p.m)
            t = _Tally(f"form_equivalence[phi={_spell(phi)},psi={_spell(psi)}]")
            for _ in range(samples):
                xi = _omega_xi(p, cfg, rng)
                run = cfg.with_c(_log_uniform(rng))
                a = _alf.alf_value(p, run, xi)
                b = _alf.alf_value_alt_form(p, run, xi)
                err = abs(a - b) / max(abs(a), abs(b), 1e-300)
                t.add(err, err <= 1e-10, point=xi, c=run.c)
            out.append(t.result())
    return out


def check_lower_bounds(p: ProblemSpec, seed: int, samples: int) -> list:
    rng = np.random.default_rng(seed)
    out = []
    for phi in PHIS:
        for psi in PSIS:
            cfg = _cfg(phi, psi, 1.0, m=p.m)
            t = _Tally(f"lower_bounds[phi={_spell(phi)},psi={_spell(psi)}]")
            for _ in range(samples):
                xi = _omega_xi(p, cfg, rng)
                run = cfg.with_c(_log_uniform(rng))
                val = _alf.alf_value(p, run, xi)
                b1, b2 = _alf.lower_bound_lemma1(p, run, xi)
                slack = 1e-12 * max(1.0, abs(val))
                excess = max(b1 - val, b2 - val)
                t.add(excess, excess <= slack, point=xi, c=run.c)
            out.append(t.result())
    return out


def check_diag_identity(p: ProblemSpec, seed: int, samples: int) -> list:
    if p.m == 0:
        return []
    rng = np.random.default_rng(seed)
    out = []
    for psi in PSIS:
        cfg = _cfg(("linear",), psi, 1.0, m=p.m)
        t = _Tally(f"diag_identity[psi={_spell(psi)}]")
        for _ in range(samples):
            xi = _omega_xi(p, cfg, rng)
            run = cfg.with_c(_log_uniform(rng))
            res = _alf.diag_identity_residual(p, run, xi)
            g = eval_first_order(p, xi.x).g
            scale = max(1.0, float(np.max(np.abs(g * xi.mu))))
            err = float(np.max(np.abs(res))) / scale
            t.add(err, err <= 1e-12, point=xi, c=run.c)
        out.append(t.result())
    return out


def check_eta(p: ProblemSpec, seed: int, samples: int) -> list:
    rng = np.random.default_rng(seed)
    dec = _Tally("eta_decomposition")
    neg = _Tally("eta_nonnegative")
    for _ in range(samples):
        xi = _random_xi(p, rng)
        eta = _alf.eta_value(p, xi)
        d = eta_decomposition(p, xi.x)
        quad = q_form_value(p, xi.x, xi.lam, xi.mu)
        rebuilt = quad + float(d.Q1_lambda @ xi.lam) + float(d.Q1_mu @ xi.mu) + d.Q0
        err = abs(eta - rebuilt) / max(1.0, abs(eta))
        dec.add(err, err <= 1e-10, point=xi)
        neg.add(-eta, eta >= 0.0, point=xi)
    out = [dec.result(), neg.result()]
    xi = _known(p)
    if xi is not None:
        z = _Tally("eta_zero_at_kkt")
        eta = _alf.eta_value(p, xi)
        z.add(eta, eta <= 1e-20, point=xi)
        out.append(z.result())
    return out


def check_kkt_stationarity(p: ProblemSpec) -> list:
    xi = _known(p)
    if xi is None:
        return []
    out = []
    for phi in PHIS:
        for psi in PSIS:
            t = _Tally(f"kkt_stationarity[phi={_spell(phi)},psi={_spell(psi)}]")
            for c in (0.1, 1.0, 10.0, 100.0):
                g = _alf.alf_gradient(p, _cfg(phi, psi, c, m=p.m), xi)
                gn = g.norm(p)
                t.add(gn, gn <= 1e-8, c=c)
            out.append(t.result())
    return out


# -- regularity ----------------------------------------------------------------


def check_q_form(p: ProblemSpec, seed: int, samples: int) -> list:
    rng = np.random.default_rng(seed)
    t = _Tally("q_form_gram_consistency")
    k = p.ell + p.m
    for _ in range(samples):
        x = _random_xi(p, rng).x
        v = rng.standard_normal(k)
        gram = assemble_gram(p, x)
        direct = q_form_value(p, x, v[: p.ell], v[p.ell :])
        via = 0.5 * float(np.sum((gram @ v) ** 2))
        err = abs(direct - via) / max(abs(via), 1e-300)
        t.add(err, err <= 1e-10, x=x, v=v)
    return [t.result()]


def check_a_max(p: ProblemSpec, seed: int, points: int = 5, sphere: int = 10000) -> list:
    k = p.ell + p.m
    if k == 0:
        return []
    rng = np.random.default_rng(seed)
    lower = _Tally("a_max_lower_bound")
    tight = _Tally("a_max_sphere_minimum")
    for _ in range(points):
        x = _random_xi(p, rng).x
        am = a_max(p, x)
        gram = assemble_gram(p, x)
        v = rng.standard_normal((sphere, k))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        qs = 0.5 * np.sum((v @ gram) ** 2, axis=1)
        qmin = float(qs.min())
        lower.add(am - qmin, am <= qmin * (1 + 1e-10) + 1e-300, x=x)
        if k <= 3 and am > A_TOL:
            err = (qmin - am) / am
            tight.add(err, err <= 1e-3, x=x)
    out = [lower.result()]
    if tight.samples:
        out.append(tight.result())
    return out


def check_a_max_continuity(p: ProblemSpec, seed: int, paths: int = 5) -> list:
    if p.ell + p.m == 0:
        return []
    rng = np.random.default_rng(seed)
    t = _Tally("a_max_continuity")
    for _ in range(paths):
        x0 = _random_xi(p, rng).x
        d = rng.standard_normal(p.n)
        d /= np.linalg.norm(d)
        base = a_max(p, x0)
        diffs = [abs(a_max(p, x0 + 2.0**-k * d) - base) for k in range(4, 30, 4)]
        final = diffs[-1] / max(1.0, base)
        t.add(final, final <= 1e-6, x=x0, direction=d, diffs=diffs)
    return [t.result()]


def check_multiplier_estimate(p: ProblemSpec) -> list:
    xi = _known(p)
    if xi is None or a_max(p, xi.x) <= A_TOL:
        return []
    est = multiplier_estimate(p, xi.x)
    t = _Tally("multiplier_estimate_at_kkt")
    err = float(np.max(np.abs(np.concatenate([est.lam - xi.lam, est.mu - xi.mu]))))
    t.add(err, err <= 1e-8, kind="multipliers")
    eta = _alf.eta_value(p, PrimalDual(xi.x, est.lam, est.mu))
    t.add(eta, eta <= 1e-10, kind="eta")
    return [t.result()]


def check_rank_equivalence(p: ProblemSpec, seed: int, samples: int) -> list:
    if p.ell + p.m == 0:
        return []
    rng = np.random.default_rng(seed)
    t = _Tally("rank_equivalence")
    xs = [_random_xi(p, rng).x for _ in range(samples)]
    if p.known_solution is not None:
        xs.append(p.known_solution.x)
    xs.append(p.start().x)
    for x in xs:
        am = a_max(p, x)
        rank_full = active_rank_full(p, x)
        t.add(float((am > A_TOL) != rank_full), (am > A_TOL) == rank_full, x=x, a_max=am, rank_full=rank_full)
    return [t.result()]


def check_sosc(p: ProblemSpec) -> list:
    xi = _known(p)
    if xi is None or not p.has_second_order:
        return []
    rep = sosc_check(p, xi)
    ok = rep.sosc_holds == p.known_solution.optimal
    return [CheckResult("sosc_classification", 1, int(not ok), {"value": rep.rho, **rep.as_dict()})]


# -- solver ---------------------------------------------------------------------


def check_inner_monotonicity(p: ProblemSpec, seed: int, starts: int = 4) -> list:
    cfg = AlfConfig(10.0)
    sc = _solver.SolverConfig(max_inner=500)
    t = _Tally("inner_monotonicity")
    for j, s in enumerate([p.start()] + _solver.random_starts(p, starts, seed=seed, scale=0.5)):
        try:
            rep = _solver.minimize_fixed_c(p, cfg, s, sc)
        except ContractViolation:
            continue
        vals = [h["alf"] for h in rep.history]
        rises = [b - a for a, b in zip(vals, vals[1:])]
        worst = max(rises, default=-math.inf)
        t.add(worst, worst <= 0.0, start_id=j)
    return [t.result()]


def _optimal(p: ProblemSpec) -> bool:
    return p.known_solution is not None and p.known_solution.optimal


def check_grad_estimate(p: ProblemSpec, seed: int, samples: int = 1000) -> list:
    if not _optimal(p):
        return []
    ratios = {}
    found = None
    for c in (1e3, 1e4, 1e5, 1e6):
        try:
            rep = _solver.grad_estimate_check(p, c, samples=samples, seed=seed)
        except CannotSampleOmega:
            continue
        ratios[repr(c)] = rep.worst_ratio
        if rep.holds:
            found = c
            break
    return [
        CheckResult(
            "grad_estimate_exists_c",
            samples,
            int(found is None),
            {"value": found, "worst_ratio_by_c": ratios},
        )
    ]


def check_local_exactness(p: ProblemSpec) -> list:
    xi = _known(p)
    if xi is None or not p.has_second_order or a_max(p, xi.x) <= A_TOL:
        return []
    rep = sosc_check(p, xi)
    if not (rep.sosc_holds and rep.strict_complementarity):
        return []
    ev = _solver.local_exactness_min_eig(p, 100.0)
    return [CheckResult("local_exactness_hessian", 1, int(not ev > 0), {"value": ev})]


def check_exactness_recovery(p: ProblemSpec, seed: int) -> list:
    if not _optimal(p):
        return []
    c_list = [0.01, 0.1, 1.0, 10.0, 100.0]
    starts = [p.start()] + _solver.random_starts(p, 2, seed=seed, scale=0.5)
    tab = _solver.exactness_sweep(p, c_list, starts)
    return [
        CheckResult(
            "exactness_recovery",
            len(tab.rows),
            int(tab.c_star is None),
            {"value": tab.c_star, "recovered": [r.converged for r in tab.rows]},
        )
    ]


def check_a_max_monitoring(p: ProblemSpec) -> list:
    """A KKT-converged report must not coexist with a collapsed a_max."""
    rep = _solver.solve_adaptive(p, AlfConfig(1.0), sc=_solver.SolverConfig(max_inner=1000, max_outer=10))
    final = rep.a_max_history[-1]["a_max"] if rep.a_max_history else math.nan
    bad = rep.termination == "kkt-converged" and (bool(rep.warnings) or final <= A_TOL)
    return [
        CheckResult(
            "a_max_monitoring",
            len(rep.a_max_history),
            int(bad),
            {"value": final, "termination": rep.termination, "warnings": list(rep.warnings)},
        )
    ]


def run_suite(p: ProblemSpec, suite: str = "all", seed: int = 0, samples: Optional[int] = None) -> list:
    """Run one suite (``lemmas``, ``regularity``, ``solver`` or ``all``) in a fixed order."""
    if suite not in SUITES:
        raise ContractViolation(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")

    def n(default):
        return default if samples is None else samples

    groups: dict[str, list[Callable[[], list]]] = {
        "lemmas": [
            lambda: check_shape_axioms(p, seed, n(1000)),
            lambda: check_known_solution(p),
            lambda: check_grad_lagrangian(p, seed, n(100)),
            lambda: check_gradient_consistency(p, seed, n(100)),
            lambda: check_monotone_in_c(p, seed, n(500)),
            lambda: check_form_equivalence(p, seed, n(200)),
            lambda: check_lower_bounds(p, seed, n(1000)),
            lambda: check_diag_identity(p, seed, n(500)),
            lambda: check_eta(p, seed, n(500)),
            lambda: check_kkt_stationarity(p),
        ],
        "regularity": [
            lambda: check_q_form(p, seed, n(100)),
            lambda: check_a_max(p, seed),
            lambda: check_a_max_continuity(p, seed),
            lambda: check_multiplier_estimate(p),
            lambda: check_rank_equivalence(p, seed, n(100)),
            lambda: check_sosc(p),
        ],
        "solver": [
            lambda: check_inner_monotonicity(p, seed),
            lambda: check_grad_estimate(p, seed, n(1000)),
            lambda: check_local_exactness(p),
            lambda: check_exactness_recovery(p, seed),
            lambda: check_a_max_monitoring(p),
        ],
    }
    chosen = ("lemmas", "regularity", "solver") if suite == "all" else (suite,)
    results: list = []
    for name in chosen:
        for run in groups[name]:
            results.extend(run())
    return results
