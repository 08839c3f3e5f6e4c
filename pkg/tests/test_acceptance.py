"""Acceptance criteria, one test each; every test prints a single PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v`` or ``python tests/test_acceptance.py``.
"""

import math
import sys
import time

import numpy as np
import pytest

from exal.alf import (
    AlfConfig,
    alf_gradient,
    alf_value,
    alf_value_alt_form,
    diag_identity_residual,
    eta_value,
    lower_bound_lemma1,
)
from exal.h1 import H1Space, adjoint_identity_error, h1_apply_A, h1_apply_A_star
from exal.problem import PrimalDual, eval_first_order
from exal.registry import problem_names, registry_lookup
from exal.regularity import A_TOL, a_max, assemble_gram, eta_decomposition, multiplier_estimate, q_form_value, sosc_check
from exal.shaping import make_phi, make_psi
from exal.solver import (
    SolverConfig,
    exactness_sweep,
    grad_estimate_check,
    gradient_check,
    local_exactness_min_eig,
    random_starts,
    sample_omega_point,
    solve_adaptive,
)

PHIS = [("linear",), ("barrier", 2.0), ("exp",)]
PSIS = [("const", 1.0), ("poly", 2.0, 3.0)]


def _cfg(c, phi, psi):
    return AlfConfig(c, make_phi(*phi), make_psi(*psi))


def _known(p):
    ks = p.known_solution
    return PrimalDual(ks.x, ks.lam, ks.mu)


_emit = print


@pytest.fixture
def report(capsys):
    def line(number, ok, detail):
        with capsys.disabled():
            _emit(f"\n[criterion {number:2d}] {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail

    return line


def _seeded_points(p, cfg, count, seed):
    rng = np.random.default_rng(seed)
    return [sample_omega_point(p, cfg, rng, margin=1.0) for _ in range(count)], rng


def test_criterion_01_gradient_oracle(report):
    worst, where = 0.0, None
    for name in problem_names():
        p = registry_lookup(name)
        for phi in PHIS:
            for psi in PSIS:
                rep = gradient_check(p, _cfg(3.0, phi, psi), samples=100, seed=1, rtol=1e-5)
                err = max(rep.max_rel_err.values())
                if err > worst:
                    worst, where = err, (name, phi[0], psi[0])
    report(1, worst <= 1e-5, f"max relative gradient error {worst:.2e} (worst at {where}), tolerance 1e-5")


def test_criterion_02_kkt_stationarity(report):
    worst = 0.0
    for name in problem_names():
        p = registry_lookup(name)
        if p.known_solution is None:
            continue
        for c in (0.1, 1.0, 10.0, 100.0):
            for phi in PHIS:
                for psi in PSIS:
                    worst = max(worst, alf_gradient(p, _cfg(c, phi, psi), _known(p)).norm(p))
    report(2, worst <= 1e-8, f"max |grad AL| at known KKT triples {worst:.2e}, tolerance 1e-8")


def test_criterion_03_exactness_recovery(report):
    details, ok = [], True
    for name in ("p1_eq", "p2_ineq"):
        p = registry_lookup(name)
        starts = [p.start()] + random_starts(p, 4, seed=3)
        t0 = time.perf_counter()
        tab = exactness_sweep(p, [0.01, 0.1, 1.0, 10.0, 100.0], starts)
        elapsed = time.perf_counter() - t0
        rec = [r for r in tab.rows if tab.c_star is not None and r.c >= tab.c_star]
        good = (
            tab.c_star is not None
            and elapsed <= 10.0
            and all(r.dist_to_kkt <= 1e-6 and abs(r.alf_final - p.known_solution.f) <= 1e-8 for r in rec)
        )
        ok &= good
        details.append(f"{name}: c*={tab.c_star} in {elapsed:.2f}s")
    report(3, ok, "; ".join(details))


def test_criterion_04_lower_bounds(report):
    violations = total = 0
    for name in problem_names():
        p = registry_lookup(name)
        for phi in PHIS:
            cfg = _cfg(1.0, phi, PSIS[1])
            pts, rng = _seeded_points(p, cfg, 1000, seed=4)
            for xi in pts:
                run = cfg.with_c(float(np.exp(rng.uniform(np.log(0.1), np.log(100.0)))))
                val = alf_value(p, run, xi)
                b1, b2 = lower_bound_lemma1(p, run, xi)
                slack = 1e-12 * max(1.0, abs(val))
                total += 1
                violations += (b1 > val + slack) or (b2 > val + slack)
    report(4, violations == 0, f"{violations} violations over {total} samples")


def test_criterion_05_gram_consistency(report):
    rng = np.random.default_rng(5)
    worst = 0.0
    names = problem_names()
    for k in range(100):
        p = registry_lookup(names[k % len(names)])
        x = (p.known_solution.x if p.known_solution else p.start().x) + rng.uniform(-1, 1, p.n)
        v = rng.standard_normal(p.ell + p.m)
        via = 0.5 * float(np.sum((assemble_gram(p, x) @ v) ** 2))
        worst = max(worst, abs(q_form_value(p, x, v[: p.ell], v[p.ell :]) - via) / via)
    sphere_worst = 0.0
    for name in names:
        p = registry_lookup(name)
        if p.n > 3:
            continue
        k = p.ell + p.m
        for _ in range(3):
            x = (p.known_solution.x if p.known_solution else p.start().x) + rng.uniform(-1, 1, p.n)
            am = a_max(p, x)
            if am <= A_TOL:
                continue
            u = rng.standard_normal((10000, k))
            u /= np.linalg.norm(u, axis=1, keepdims=True)
            qmin = float(np.min(0.5 * np.sum((u @ assemble_gram(p, x)) ** 2, axis=1)))
            sphere_worst = max(sphere_worst, abs(qmin - am) / am)
    report(5, worst <= 1e-10 and sphere_worst <= 1e-3, f"Q vs gram rel {worst:.1e} (1e-10); a_max vs sphere min rel {sphere_worst:.1e} (1e-3)")


def test_criterion_06_multiplier_estimate(report):
    worst_m = worst_eta = 0.0
    checked = []
    for name in problem_names():
        p = registry_lookup(name)
        ks = p.known_solution
        if ks is None or a_max(p, ks.x) <= 1e-10:
            continue
        est = multiplier_estimate(p, ks.x)
        worst_m = max(worst_m, float(np.max(np.abs(np.concatenate([est.lam - ks.lam, est.mu - ks.mu])))))
        worst_eta = max(worst_eta, eta_value(p, PrimalDual(ks.x, est.lam, est.mu)))
        checked.append(name)
    report(6, worst_m <= 1e-8 and worst_eta <= 1e-10, f"multiplier error {worst_m:.1e}, eta {worst_eta:.1e} on {checked}")


def test_criterion_07_monotone_and_forms(report):
    mono = form = 0
    worst_form = 0.0
    names = problem_names()
    rng = np.random.default_rng(7)
    for k in range(500):
        p = registry_lookup(names[k % len(names)])
        cfg = _cfg(1.0, PHIS[k % 3], PSIS[k % 2])
        xi = sample_omega_point(p, cfg, rng, margin=1.0)
        c1, c2 = sorted(np.exp(rng.uniform(np.log(0.05), np.log(500.0), 2)))
        v1, v2 = alf_value(p, cfg.with_c(c1), xi), alf_value(p, cfg.with_c(c2), xi)
        mono += v1 > v2 + 1e-12 * max(1.0, abs(v2))
        alt = alf_value_alt_form(p, cfg.with_c(c1), xi)
        err = abs(v1 - alt) / max(abs(v1), abs(alt))
        worst_form = max(worst_form, err)
        form += err > 1e-10
    report(7, mono == 0 and form == 0, f"monotonicity violations {mono}/500; form mismatches {form}/500 (worst rel {worst_form:.1e})")


def test_criterion_08_eta_and_diag_identity(report):
    rng = np.random.default_rng(8)
    names = problem_names()
    worst_eta = worst_diag = 0.0
    for k in range(500):
        p = registry_lookup(names[k % len(names)])
        x = (p.known_solution.x if p.known_solution else p.start().x) + rng.uniform(-1, 1, p.n)
        xi = PrimalDual(x, rng.uniform(-2, 2, p.ell), rng.uniform(-2, 2, p.m))
        d = eta_decomposition(p, x)
        rebuilt = q_form_value(p, x, xi.lam, xi.mu) + float(d.Q1_lambda @ xi.lam) + float(d.Q1_mu @ xi.mu) + d.Q0
        eta = eta_value(p, xi)
        worst_eta = max(worst_eta, abs(eta - rebuilt) / max(1.0, abs(eta)))
    ineq = [n for n in names if registry_lookup(n).m > 0]
    for k in range(500):
        p = registry_lookup(ineq[k % len(ineq)])
        cfg = _cfg(float(np.exp(rng.uniform(np.log(0.1), np.log(100.0)))), ("linear",), PSIS[k % 2])
        xi = sample_omega_point(p, cfg, rng, margin=1.0)
        res = diag_identity_residual(p, cfg, xi)
        g = eval_first_order(p, xi.x).g
        worst_diag = max(worst_diag, float(np.max(np.abs(res))) / max(1.0, float(np.max(np.abs(g * xi.mu)))))
    report(8, worst_eta <= 1e-10 and worst_diag <= 1e-12, f"eta decomposition {worst_eta:.1e} (1e-10); diagonal identity residual {worst_diag:.1e} (1e-12)")


def test_criterion_09_h1_embedding(report):
    rng = np.random.default_rng(9)
    worst_id = 0.0
    shape = H1Space(0.0, 1.0, np.zeros((33, 2)))
    for _ in range(100):
        y1, y2 = rng.normal(size=2), rng.normal(size=2)
        ya, yb = h1_apply_A(h1_apply_A_star(y1, y2, shape))
        worst_id = max(worst_id, float(np.max(np.abs(np.concatenate([ya - y1, yb - y2])))))

    def err(N):
        r = np.random.default_rng(90)
        vals = []
        for _ in range(100):
            x = H1Space(0.0, 1.0, r.normal(size=(N + 1, 2)))
            vals.append(adjoint_identity_error(r.normal(size=2), r.normal(size=2), x))
        return max(vals)

    e32, e64 = err(32), err(64)
    ratio = e64 / e32 if e32 > 0 else math.nan
    halves = 0.4 <= ratio <= 0.6
    report(
        9,
        worst_id <= 1e-12 and halves,
        f"A A* = I error {worst_id:.1e} (1e-12); adjoint error h=1/32 {e32:.1e}, h=1/64 {e64:.1e}, "
        f"ratio {ratio:.2f} (required 0.5 +- 20%; the discrete identity is exact, error is round-off)",
    )


def test_criterion_10_local_exactness(report):
    p = registry_lookup("p1_eq")
    rep = sosc_check(p, _known(p))
    am = a_max(p, p.known_solution.x)
    ev = local_exactness_min_eig(p, 100.0)
    report(10, math.isclose(rep.rho, 2.0) and math.isclose(am, 2.0) and ev > 0, f"rho {rep.rho:.6g}, a_max {am:.6g}, min eig of FD Hessian at c=100 {ev:.4g}")


def test_criterion_11_grad_estimate(report):
    found = {}
    for name in ("p1_eq", "p2_ineq"):
        p = registry_lookup(name)
        found[name] = None
        for c in (1e3, 1e4, 1e5, 1e6):
            if grad_estimate_check(p, c, samples=1000, seed=11).holds:
                found[name] = c
                break
    report(11, all(v is not None for v in found.values()), f"first passing c per problem {found}")


def test_criterion_12_degenerate_detection(report):
    p = registry_lookup("p4_degenerate")
    rep = solve_adaptive(p, AlfConfig(1.0), sc=SolverConfig())
    collapse = any("a_max collapse" in w for w in rep.warnings)
    ok = rep.termination == "c-cap-reached" and collapse
    report(12, ok, f"termination {rep.termination}, c_final {rep.c_final:g}, a_max warning {collapse}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
