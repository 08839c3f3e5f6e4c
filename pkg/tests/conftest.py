import numpy as np
import pytest

from exal.problem import PrimalDual
from exal.registry import problem_names, registry_lookup


def known_xi(p):
    ks = p.known_solution
    return PrimalDual(ks.x, ks.lam, ks.mu)


@pytest.fixture
def p1():
    return registry_lookup("p1_eq")


@pytest.fixture
def p2():
    return registry_lookup("p2_ineq")


@pytest.fixture
def p3():
    return registry_lookup("p3_mixed")


@pytest.fixture
def p4():
    return registry_lookup("p4_degenerate")


@pytest.fixture
def h1():
    return registry_lookup("h1_boundary")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ALL_PROBLEMS = problem_names()
SOLVED = [n for n in ALL_PROBLEMS if registry_lookup(n).known_solution is not None]
