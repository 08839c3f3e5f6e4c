import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exal.alf import eta_value
from exal.errors import ContractViolation, SingularConstraints
from exal.problem import PrimalDual, eval_first_order
from exal.registry import problem_names, registry_lookup
from exal.regularity import (
    A_TOL,
    a_max,
    active_rank_full,
    active_set,
    assemble_gram,
    eta_decomposition,
    kkt_residual,
    multiplier_estimate,
    q_form_value,
    regularity_report,
    sosc_check,
)

from conftest import SOLVED, known_xi


def test_gram_examples(p1, p2, p4):
    np.testing.assert_array_equal(assemble_gram(p1, [0.3, 7.0]), [[2.0]])
    np.testing.assert_array_equal(assemble_gram(p2, [1.0]), [[1.0]])
    np.testing.assert_array_equal(assemble_gram(p4, [0.0, 0.0]), [[0.0]])


def test_q_form_examples(p1, p2):
    assert q_form_value(p1, [0.1, 0.2], [0.0], []) == 0.0
    assert q_form_value(p1, [0.1, 0.2], [3.0], []) == 18.0
    assert q_form_value(p2, [1.0], [], [1.5]) == pytest.approx(0.5 * 1.5**2)


def test_a_max_examples(p1, p2, p4):
    assert a_max(p1, [0.5, 0.5]) == 2.0
    assert a_max(p2, [1.0]) == 0.5
    assert a_max(p4, [0.0, 0.0]) == 0.0


def test_multiplier_estimate_examples(p1, p2):
    est = multiplier_estimate(p1, [0.5, 0.5])
    np.testing.assert_allclose(est.lam, [-1.0])
    np.testing.assert_allclose(multiplier_estimate(p2, [1.0]).mu, [2.0])
    np.testing.assert_array_equal(multiplier_estimate(p1, [0.0, 0.0]).lam, [0.0])


def test_multiplier_estimate_singular(p4):
    with pytest.raises(SingularConstraints) as err:
        multiplier_estimate(p4, [0.0, 0.0])
    assert err.value.min_eigenvalue < A_TOL


def test_kkt_residual_examples(p1, p2):
    res = kkt_residual(p1, PrimalDual.of([0.0, 0.0], [0.0]))
    assert res.total == 1.0 and res.feasibility_eq == 1.0 and res.stationarity == 0.0
    res = kkt_residual(p2, PrimalDual.of([1.0], [], [-1.0]))
    assert res.feasibility_comp == 1.0


def test_eta_decomposition_examples(p1):
    d = eta_decomposition(p1, [1.0, 0.0])
    np.testing.assert_allclose(d.Q1_lambda, [4.0])
    assert d.Q0 == 2.0
    for lam in (-3.0, 0.0, 0.5, 2.0):
        assert eta_value(p1, PrimalDual.of([1.0, 0.0], [lam])) == pytest.approx(2 * lam**2 + 4 * lam + 2)
    d = eta_decomposition(p1, [0.0, 0.0])
    assert d.Q1_lambda[0] == 0.0 and d.Q0 == 0.0


def test_eta_decomposition_p2_sampled(p2, rng):
    for _ in range(5):
        x = rng.uniform(-2, 3, 1)
        d = eta_decomposition(p2, x)
        for mu in rng.normal(size=20):
            direct = eta_value(p2, PrimalDual.of(x, [], [mu]))
            rebuilt = q_form_value(p2, x, [], [mu]) + d.Q1_mu[0] * mu + d.Q0
            assert direct == pytest.approx(rebuilt, rel=1e-10, abs=1e-12)


def test_regularity_report_fields(p1, p4):
    rep = regularity_report(p1, [0.5, 0.5])
    assert rep.positive_definite and rep.a_max == 2.0 and rep.condition == 1.0
    assert set(rep.as_dict()) == {"gram", "a_max", "positive_definite", "active_set", "multiplier_estimate", "condition"}
    rep = regularity_report(p4, [0.0, 0.0])
    assert not rep.positive_definite
    assert rep.as_dict()["multiplier_estimate"] == "singular"
    assert rep.condition == math.inf


def test_active_set_tolerance():
    assert active_set(np.array([0.0, 1e-7, -0.5, 2e-6])) == [0, 1]
    assert active_set(np.array([0.0, 1e-5, 100.0])) == [0, 1]  # scaled by |g|_inf


def test_sosc_p1(p1):
    rep = sosc_check(p1, known_xi(p1))
    assert rep.rho == pytest.approx(2.0)
    z = rep.cone_basis[:, 0]
    np.testing.assert_allclose(abs(z @ np.array([1.0, -1.0]) / math.sqrt(2)), 1.0)
    assert rep.sosc_holds


def test_sosc_p2_vacuous(p2):
    rep = sosc_check(p2, known_xi(p2))
    assert rep.active_set == [0] and rep.strict_complementarity
    assert rep.vacuous and rep.rho == math.inf and rep.sosc_holds
    assert rep.as_dict()["reduced_hessian_min_eig"] == "vacuous"


def test_sosc_indefinite_variant():
    p = registry_lookup("p3_saddle")
    rep = sosc_check(p, known_xi(p))
    assert not rep.sosc_holds
    assert rep.reduced_hessian_min_eig == pytest.approx(-2.0)


def test_sosc_requires_kkt(p1):
    with pytest.raises(ContractViolation):
        sosc_check(p1, PrimalDual.of([0.0, 0.0], [0.0]))


@pytest.mark.parametrize("name", SOLVED)
def test_sosc_cone_basis(name):
    p = registry_lookup(name)
    rep = sosc_check(p, known_xi(p))
    Z = rep.cone_basis
    fo = eval_first_order(p, p.known_solution.x)
    np.testing.assert_allclose(Z.T @ Z, np.eye(Z.shape[1]), atol=1e-12)
    assert np.all(np.abs(fo.DF @ Z) <= 1e-10)
    assert np.all(np.abs(fo.Dg[rep.active_set] @ Z) <= 1e-10)
    assert rep.sosc_holds == p.known_solution.optimal


@pytest.mark.parametrize("name", SOLVED)
def test_multiplier_estimate_at_kkt(name):
    p = registry_lookup(name)
    ks = p.known_solution
    if a_max(p, ks.x) <= A_TOL:
        pytest.skip("degenerate")
    est = multiplier_estimate(p, ks.x)
    np.testing.assert_allclose(est.lam, ks.lam, atol=1e-8)
    np.testing.assert_allclose(est.mu, ks.mu, atol=1e-8)
    assert eta_value(p, PrimalDual(ks.x, est.lam, est.mu)) <= 1e-10


def _x(p, r):
    centre = p.known_solution.x if p.known_solution is not None else p.start().x
    return centre + r.uniform(-1, 1, p.n)


problems = st.sampled_from(problem_names())


@settings(max_examples=100, deadline=None)
@given(name=problems, seed=st.integers(0, 2**31))
def test_q_form_equals_half_gram_square(name, seed):
    p = registry_lookup(name)
    r = np.random.default_rng(seed)
    x = _x(p, r)
    v = r.normal(size=p.ell + p.m)
    gram = assemble_gram(p, x)
    assert q_form_value(p, x, v[: p.ell], v[p.ell :]) == pytest.approx(0.5 * np.sum((gram @ v) ** 2), rel=1e-10)


@settings(max_examples=50, deadline=None)
@given(name=problems, seed=st.integers(0, 2**31))
def test_gram_symmetric_psd(name, seed):
    p = registry_lookup(name)
    gram = assemble_gram(p, _x(p, np.random.default_rng(seed)))
    np.testing.assert_allclose(gram, gram.T, atol=1e-12)
    assert np.linalg.eigvalsh(gram)[0] >= -1e-10


@pytest.mark.parametrize("name", ["p1_eq", "p2_ineq", "p3_mixed", "p3_saddle", "p4_degenerate"])
def test_a_max_is_sphere_minimum(name, rng):
    p = registry_lookup(name)
    k = p.ell + p.m
    for _ in range(3):
        x = _x(p, rng)
        gram = assemble_gram(p, x)
        v = rng.normal(size=(10000, k))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        q = 0.5 * np.sum((v @ gram) ** 2, axis=1)
        am = a_max(p, x)
        assert am <= q.min() * (1 + 1e-10)
        if am > A_TOL:
            assert (q.min() - am) / am <= 1e-3


@pytest.mark.parametrize("name", problem_names())
def test_a_max_continuous(name, rng):
    p = registry_lookup(name)
    x0 = _x(p, rng)
    d = rng.normal(size=p.n)
    base = a_max(p, x0)
    diffs = [abs(a_max(p, x0 + 2.0**-k * d) - base) for k in range(2, 40, 3)]
    assert diffs[-1] <= 1e-8 * max(1.0, base)
    assert diffs[-1] <= diffs[0] or diffs[0] == 0.0


@settings(max_examples=100, deadline=None)
@given(name=problems, seed=st.integers(0, 2**31))
def test_gram_definite_iff_full_rank(name, seed):
    p = registry_lookup(name)
    x = _x(p, np.random.default_rng(seed))
    g = eval_first_order(p, x).g
    # points inside the tolerance band between eps_act and the a_tol scale are ambiguous
    if g.size and np.any((np.abs(g) > 1e-6) & (np.abs(g) < 1e-2)):
        return
    assert (a_max(p, x) > A_TOL) == active_rank_full(p, x)


def test_rank_criterion_at_degenerate_point(p4, p1):
    assert not active_rank_full(p4, [0.0, 0.0])
    assert a_max(p4, [0.0, 0.0]) <= A_TOL
    assert active_rank_full(p1, [0.5, 0.5])
