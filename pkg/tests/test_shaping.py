import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from exal.errors import ContractViolation
from exal.shaping import (
    PenaltyShapePhi,
    make_phi,
    make_psi,
    parse_phi,
    parse_psi,
    verify_shape_axioms,
)


def test_linear_phi():
    phi = make_phi("linear")
    assert phi(2.0) == 2.0 and phi.deriv(2.0) == 1.0
    assert phi.phi0 == 1.0 and phi.alpha == math.inf


def test_barrier_phi():
    phi = make_phi("barrier", 1.0)
    assert phi(0.5) == 1.0
    assert phi(1.5) == math.inf
    assert phi(1.0) == math.inf
    assert phi.phi0 == 1.0
    assert phi.deriv(0.5) == pytest.approx(4.0)
    assert make_phi("barrier", 4.0).phi0 == 0.25


def test_exponential_phi():
    phi = make_phi("exponential")
    assert phi(0.0) == 0.0
    assert phi.deriv(0.0) == 1.0
    assert phi(1000.0) == math.inf


@pytest.mark.parametrize("alpha", [0.0, -1.0, math.inf])
def test_barrier_needs_positive_alpha(alpha):
    with pytest.raises(ContractViolation):
        make_phi("barrier", alpha)


def test_psi_constant():
    psi = make_psi("constant", 1.0)
    assert psi(np.array([7.0, 3.0])) == 1.0
    assert psi(np.zeros(2)) == 1.0 and psi.psi0 == 1.0


def test_psi_poly():
    psi = make_psi("poly", 1.0, 2.0, m=1)
    assert psi(np.array([0.5])) == 0.75
    assert psi.grad(np.array([0.5]))[0] == -1.0
    assert psi.grad(np.array([0.0]))[0] == 0.0


@pytest.mark.parametrize("s", [1.0, 0.5])
def test_psi_poly_requires_s_above_one(s):
    with pytest.raises(ContractViolation):
        make_psi("poly", 1.0, s)


def test_spellings_roundtrip():
    for text in ("linear", "barrier:2.0", "exp"):
        assert parse_phi(text).spelling() == text
    for text in ("const:1.0", "poly:2.0,3.0"):
        assert parse_psi(text).spelling() == text
    assert parse_phi("barrier:0.5").alpha == 0.5


@pytest.mark.parametrize("text", ["quadratic", "barrier", "barrier:x", "linear:3", "exp:1"])
def test_bad_phi_spelling(text):
    with pytest.raises(ContractViolation):
        parse_phi(text)


@pytest.mark.parametrize("text", ["poly:1", "cubic", "poly:1,1"])
def test_bad_psi_spelling(text):
    with pytest.raises(ContractViolation):
        parse_psi(text)


@pytest.mark.parametrize("shape", [make_phi("linear"), make_phi("barrier", 1.0), make_phi("exp")])
def test_phi_axioms_hold(shape):
    rep = verify_shape_axioms(shape, samples=1000, seed=3)
    assert rep.ok, rep.violations


@pytest.mark.parametrize("shape", [make_psi("const", 2.0), make_psi("poly", 1.0, 2.0), make_psi("poly", 3.0, 1.5)])
def test_psi_axioms_hold(shape):
    rep = verify_shape_axioms(shape, samples=1000, seed=3, m=3)
    assert rep.ok, rep.violations


def test_adversarial_phi_reported():
    bad = PenaltyShapePhi("negated", lambda t: -t, lambda t: -1.0)
    rep = verify_shape_axioms(bad, samples=200)
    names = [v[0] for v in rep.violations]
    assert "phi not nondecreasing" in names
    assert not rep.ok


def test_verify_rejects_non_shape():
    with pytest.raises(ContractViolation):
        verify_shape_axioms(lambda t: t)


@pytest.mark.parametrize("phi", [make_phi("linear"), make_phi("barrier", 2.0), make_phi("exp")])
@given(t=st.floats(1e-3, 1.8))
def test_phi_derivative_matches_differences(phi, t):
    h = 1e-6
    fd = (phi(t + h) - phi(t - h)) / (2 * h)
    assert phi.deriv(t) == pytest.approx(fd, rel=1e-6)


@pytest.mark.parametrize("phi", [make_phi("linear"), make_phi("barrier", 2.0), make_phi("exp")])
@given(t=st.floats(0.0, 1.99))
def test_phi_above_phi0_line(phi, t):
    assert phi(t) >= phi.phi0 * t


@given(y=st.lists(st.floats(0.0, 10.0), min_size=1, max_size=4), s=st.floats(1.01, 4.0))
def test_poly_psi_maximal_at_zero(y, s):
    psi = make_psi("poly", 1.0, s)
    assert psi(np.array(y)) <= psi(np.zeros(len(y)))
