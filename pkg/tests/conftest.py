"""Shared fixtures: built-in models, their cusps, and the default MMO runs.

The expensive objects (integrations, fold curves) are session-scoped and
shared between the unit tests and the acceptance suite.
"""

import time

import pytest

import cuspkit as ck
from cuspkit.core import ModelDefinition, StateBox

CURTU_BRACKET = (0.5, 0.99)
ML_BRACKET = (-50.0, -10.0)


@pytest.fixture(scope="session")
def curtu():
    return ck.build_curtu()


@pytest.fixture(scope="session")
def ml():
    return ck.build_morris_lecar()


@pytest.fixture(scope="session")
def curtu_cusp(curtu):
    roots = ck.find_symmetric_fold(curtu, CURTU_BRACKET)
    assert len(roots) == 1
    return roots[0]


@pytest.fixture(scope="session")
def ml_cusp(ml):
    roots = ck.find_symmetric_fold(ml, ML_BRACKET)
    assert len(roots) == 1
    return roots[0]


@pytest.fixture(scope="session")
def curtu_report(curtu, curtu_cusp):
    return ck.cusp_test(curtu, curtu_cusp)


@pytest.fixture(scope="session")
def ml_report(ml, ml_cusp):
    return ck.cusp_test(ml, ml_cusp)


@pytest.fixture(scope="session")
def curtu_rc(curtu, curtu_cusp):
    return ck.reduction_coefficients(curtu, curtu_cusp)


@pytest.fixture(scope="session")
def ml_rc(ml, ml_cusp):
    return ck.reduction_coefficients(ml, ml_cusp)


@pytest.fixture(scope="session")
def curtu_run(curtu):
    """Default Curtu MMO run (t_end = 3000) with its wall time."""
    s0 = ck.default_mmo_ic(curtu)
    t0 = time.perf_counter()
    traj = ck.integrate(curtu, s0, (0.0, 3000.0))
    wall = time.perf_counter() - t0
    return traj, wall


@pytest.fixture(scope="session")
def curtu_run_long(curtu):
    """Extended Curtu run covering several MMO periods (period ~ 1116)."""
    s0 = ck.default_mmo_ic(curtu)
    return ck.integrate(curtu, s0, (0.0, 6500.0))


@pytest.fixture(scope="session")
def ml_run(ml):
    """Default Morris-Lecar MMO run (t_end = 20000) with its wall time."""
    s0 = ck.default_mmo_ic(ml)
    t0 = time.perf_counter()
    traj = ck.integrate(ml, s0, (0.0, 20000.0))
    wall = time.perf_counter() - t0
    return traj, wall


@pytest.fixture(scope="session")
def curtu_fold_curve(curtu, curtu_cusp):
    return ck.trace_fold_curve(curtu, curtu_cusp, arclength=0.04, n_points=400)


@pytest.fixture(scope="session")
def ml_fold_curve(ml, ml_cusp):
    return ck.trace_fold_curve(ml, ml_cusp, arclength=1.0, n_points=400)


def make_cubic_pair(b=0.5, p=1.1, slow="linear_in_x"):
    """FHN-flavoured synthetic model: f = x - x^3/3 - b*x_j - y.

    ``slow`` picks the slow field: 'linear_in_x' (g = x - p, gy = 0),
    'repelling' (g = -x + p, so fy*gx > 0), or 'constant' (g = 0.3).
    The fold condition f1 = f2 reduces to x* = sqrt(1 + b).
    """
    def f(x_i, x_j, y):
        return x_i - x_i ** 3 / 3.0 - b * x_j - y

    if slow == "linear_in_x":
        def g(x, y):
            return x - p
    elif slow == "repelling":
        def g(x, y):
            return -x + p
    elif slow == "constant":
        def g(x, y):
            return 0.3
    else:
        raise ValueError(slow)

    def manifold_guess(x_i, x_j):
        return x_i - x_i ** 3 / 3.0 - b * x_j

    def builder(params, eps):
        return make_cubic_pair(b=params["b"], p=params["p"], slow=slow)

    return ModelDefinition(
        name=f"cubic_pair_{slow}",
        params={"b": b, "p": p},
        epsilon=0.01,
        f=f,
        g=g,
        domain=StateBox(-3.0, 3.0, -5.0, 5.0),
        manifold_guess=manifold_guess,
        equilibrium_guess=(p, p - p ** 3 / 3.0 - b * p),
        builder=builder,
    )


def make_degenerate_linear():
    """Linear model whose fold condition is identically satisfied nowhere
    non-trivially: f1 - f2 == 0 everywhere and all higher partials vanish."""
    def f(x_i, x_j, y):
        return -x_i - x_j + y

    def g(x, y):
        return x - y

    return ModelDefinition(
        name="degenerate_linear",
        params={},
        epsilon=0.01,
        f=f,
        g=g,
        domain=StateBox(-10.0, 10.0, -25.0, 25.0),
        manifold_guess=lambda x_i, x_j: x_i + x_j,
    )
