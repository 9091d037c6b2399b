"""Center-manifold coefficients, conditions, and the SAO prediction."""

import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import cuspkit as ck
from cuspkit.errors import InconsistencyError
from cuspkit.models import CurtuParams
from cuspkit.reduction import (OPENS_W_NEGATIVE, OPENS_W_POSITIVE,
                               desingularized_field)

small = st.floats(-0.1, 0.1)


def test_curtu_coefficients_against_closed_forms(curtu_rc, curtu_cusp):
    # the sigmoid closed forms: S', S'', S''' at the fold argument, where
    # S'(arg) = r u (1 - u) on the manifold
    p = CurtuParams()
    u = curtu_cusp
    s1 = p.r * u * (1 - u)
    s2 = p.r ** 2 * u * (1 - u) * (1 - 2 * u)
    s3 = p.r ** 3 * u * (1 - u) * (1 - 6 * u + 6 * u * u)
    rc = curtu_rc
    f1 = -1.0 + s1
    omega = s2 * (-(1 + p.b) - (1 - p.b ** 2) * (-s1) / (2 * f1))
    gamma = s3 * (1 + p.b) ** 3 / 6 \
        - s2 ** 2 * (1 - p.b ** 2) * (1 + p.b) ** 2 / (4 * f1)
    assert rc.omega == pytest.approx(omega, rel=1e-10)
    assert rc.gamma == pytest.approx(gamma, rel=1e-10)
    assert rc.omega > 0 and rc.gamma > 0
    assert rc.g0 == pytest.approx(0.0036, abs=2e-4)


def test_ml_coefficients(ml_rc):
    assert ml_rc.gamma == pytest.approx(0.002, abs=5e-4)
    assert ml_rc.omega < 0.0
    assert ml_rc.g0 < 0.0


def test_h_coefficients_formulas(curtu_rc):
    rc = curtu_rc
    assert rc.h0w == pytest.approx(-rc.fy / (2 * rc.f1), rel=1e-14)
    # huu ties to rho_eff through gx
    assert rc.rho_eff == pytest.approx(rc.gx * rc.huu, rel=1e-12)  # gxx = 0
    assert rc.nu_eff == pytest.approx(rc.gy - rc.gx * rc.fy / (2 * rc.f1),
                                      rel=1e-14)


@pytest.mark.parametrize("which", ["curtu", "ml"])
def test_omega_dstar_identity(which, curtu, ml, curtu_report, ml_report,
                              curtu_rc, ml_rc):
    rep = curtu_report if which == "curtu" else ml_report
    rc = curtu_rc if which == "curtu" else ml_rc
    assert rc.omega == pytest.approx(-(rc.fy / (2 * rc.f1)) * rep.d_star,
                                     rel=1e-10)


def test_omega_dstar_identity_random_perturbations():
    # the identity is structural: it must survive parameter perturbation
    rng = np.random.default_rng(99)
    for _ in range(25):
        scale = 1.0 + rng.uniform(-0.05, 0.05, 5)
        m = ck.build_model("curtu", {
            "I": 0.68 * scale[0], "b": 0.6055 * scale[1],
            "c": 0.63 * scale[2], "r": 10.0 * scale[3],
            "theta": 0.2 * scale[4]})
        roots = ck.find_symmetric_fold(m, (0.5, 0.995))
        if not roots:
            continue
        rep = ck.cusp_test(m, roots[-1])
        rc = ck.reduction_coefficients(m, roots[-1])
        assert rc.omega == pytest.approx(
            -(rc.fy / (2 * rc.f1)) * rep.d_star, rel=1e-10)
    for _ in range(25):
        scale = 1.0 + rng.uniform(-0.02, 0.02, 3)
        m = ck.build_model("morris_lecar", {
            "I_app": 80.0 * scale[0], "g_s": 0.3 * scale[1],
            "g_Ca": 4.4 * scale[2]})
        roots = ck.find_symmetric_fold(m, (-50.0, -10.0))
        if not roots:
            continue
        rep = ck.cusp_test(m, roots[-1])
        rc = ck.reduction_coefficients(m, roots[-1])
        assert rc.omega == pytest.approx(
            -(rc.fy / (2 * rc.f1)) * rep.d_star, rel=1e-10)


def test_reduced_field_at_origin(curtu_rc):
    out = ck.reduced_field(curtu_rc, 0.0, 0.0, 0.0, 0.01)
    assert out[0] == 0.0
    assert out[1] == pytest.approx(0.01 * curtu_rc.g0, rel=1e-14)
    assert out[2] == 0.0


@settings(max_examples=50, deadline=None)
@given(small, small, small)
def test_reduced_field_fast_component_odd(u, w, z):
    m = ck.build_curtu()
    roots = ck.find_symmetric_fold(m, (0.5, 0.99))
    rc = ck.reduction_coefficients(m, roots[0])
    a = ck.reduced_field(rc, u, w, z, 0.01)[0]
    b = ck.reduced_field(rc, -u, w, -z, 0.01)[0]
    assert a == pytest.approx(-b, rel=1e-12, abs=1e-15)


def test_q_surface_oddness_and_consistency(curtu_rc):
    rng = np.random.default_rng(12)
    for _ in range(50):
        u, w = rng.uniform(-0.1, 0.1, 2)
        q = ck.q_surface(curtu_rc, u, w)
        assert ck.q_surface(curtu_rc, -u, w) == pytest.approx(-q, rel=1e-12,
                                                              abs=1e-16)
        # the truncated fast component vanishes identically on z = Q
        res = ck.reduced_field(curtu_rc, u, w, q, 0.01)[0]
        assert abs(res) < 1e-14


def test_q_fold_parabola(curtu_rc):
    rc = curtu_rc
    h = 1e-7
    for u in (0.02, -0.05, 0.1):
        w = -(3 * rc.gamma / rc.omega) * u * u
        dq = (ck.q_surface(rc, u + h, w) - ck.q_surface(rc, u - h, w)) / (2 * h)
        assert abs(dq) < 1e-7  # derivative of the truncation vanishes here
        # exact evaluation of d_u Q on the parabola
        du_exact = -(rc.omega / rc.fy) * w - 3 * (rc.gamma / rc.fy) * u * u
        assert abs(du_exact) < 1e-12


def test_q_fold_cusp_constant(curtu_rc):
    rc = curtu_rc
    expected = -4 * rc.omega ** 3 / (27 * rc.fy ** 2 * rc.gamma)
    for u in (0.01, 0.03, 0.07):
        w = -(3 * rc.gamma / rc.omega) * u * u
        z = ck.q_surface(rc, u, w)
        assert z * z / w ** 3 == pytest.approx(expected, rel=1e-6)


def test_classify_opening_curtu(curtu_rc):
    opening, attracting = ck.classify_opening(curtu_rc)
    assert opening == OPENS_W_NEGATIVE
    assert attracting


def test_classify_opening_ml(ml_rc):
    opening, attracting = ck.classify_opening(ml_rc)
    assert opening == OPENS_W_POSITIVE
    assert attracting


def test_classify_opening_fy_flip_toggles_attraction(curtu_rc):
    flipped = replace(curtu_rc, fy=-curtu_rc.fy)
    _, attracting = ck.classify_opening(flipped)
    assert attracting != ck.classify_opening(curtu_rc)[1]


def test_opening_matches_fold_parabola_side(curtu_rc, ml_rc):
    for rc in (curtu_rc, ml_rc):
        opening, _ = ck.classify_opening(rc)
        w_on_fold = -(3 * rc.gamma / rc.omega) * 0.01 ** 2
        assert (w_on_fold < 0) == (opening == OPENS_W_NEGATIVE)


def test_conditions_curtu(curtu, curtu_cusp):
    cond = ck.check_conditions(curtu, curtu_cusp)
    assert cond.all_satisfied
    assert cond.c1 and cond.c2 and cond.c3 and cond.c4 and cond.c5 and cond.c6


def test_conditions_ml(ml, ml_cusp):
    cond = ck.check_conditions(ml, ml_cusp)
    assert cond.all_satisfied


def test_conditions_fail_without_inhibition():
    m = ck.build_model("curtu", {"b": 0.0})
    roots = ck.find_symmetric_fold(m, (0.5, 0.99))
    cond = ck.check_conditions(m, roots[-1])
    assert not cond.c1
    assert not cond.all_satisfied


def test_condition_margin_is_configurable(curtu, curtu_cusp):
    # g0 ~ 3.6e-3: an absurdly large margin must fail c5
    cond = ck.check_conditions(curtu, curtu_cusp, margin=0.01)
    assert not cond.c5


def test_condition_report_json_layout(curtu, curtu_cusp):
    d = ck.check_conditions(curtu, curtu_cusp).to_dict()
    assert list(d.keys()) == [
        "c1", "c2", "c3", "c4", "c5", "c6", "all_satisfied",
        "witness_f2", "witness_gy", "witness_fygx", "witness_gamma",
        "witness_g0", "witness_g0_omega", "opening",
        "central_sheet_attracting"]


def test_desingularized_eigenvalues_curtu(curtu_rc, curtu, curtu_cusp):
    cond = ck.check_conditions(curtu, curtu_cusp)
    pred = ck.desingularized_eigenvalues(curtu_rc, conditions=cond)
    assert pred.lambda_strong < 0 and pred.lambda_weak < 0
    assert pred.ratio > 1.0
    assert pred.n_sao is not None and pred.n_sao >= 1


def test_desingularized_fd_cross_check_catches_breakage(curtu_rc):
    # the built-in finite-difference check runs on every call; a doctored
    # inconsistent coefficient set cannot slip through silently
    pred = ck.desingularized_eigenvalues(curtu_rc, cross_check=True)
    fd_h = 1e-7
    j00 = (desingularized_field(curtu_rc, fd_h, 0.0)[0]
           - desingularized_field(curtu_rc, -fd_h, 0.0)[0]) / (2 * fd_h)
    j11 = (desingularized_field(curtu_rc, 0.0, fd_h)[1]
           - desingularized_field(curtu_rc, 0.0, -fd_h)[1]) / (2 * fd_h)
    assert sorted((j00, j11)) == pytest.approx(
        sorted((pred.lambda_strong, pred.lambda_weak)), rel=1e-6)


def test_desingularized_degenerate_slow_field(curtu_rc):
    # with gx = gy = 0 the linearization reduces to +-(Omega g0 / |fy|):
    # trace = sign(fy) gx = 0 forces the opposite pair
    rc = replace(curtu_rc, gx=0.0, gy=0.0)
    pred = ck.desingularized_eigenvalues(rc)
    lam = rc.omega * rc.g0 / abs(rc.fy)
    assert pred.lambda_strong == pytest.approx(lam, rel=1e-12)
    assert pred.lambda_weak == pytest.approx(-lam, rel=1e-12)


def test_desingularized_invariant_under_y_flip(curtu):
    roots = ck.find_symmetric_fold(curtu, (0.5, 0.99))
    rc = ck.reduction_coefficients(curtu, roots[0])
    flipped = ck.y_flip(curtu)
    roots_f = ck.find_symmetric_fold(flipped, (0.5, 0.99))
    rc_f = ck.reduction_coefficients(flipped, roots_f[0])
    a = ck.desingularized_eigenvalues(rc)
    b = ck.desingularized_eigenvalues(rc_f)
    assert b.lambda_strong == pytest.approx(a.lambda_strong, rel=1e-8)
    assert b.lambda_weak == pytest.approx(a.lambda_weak, rel=1e-8)


def test_inconsistency_error_on_positive_eigenvalue(curtu, curtu_cusp,
                                                    curtu_rc):
    cond = ck.check_conditions(curtu, curtu_cusp)
    broken = replace(curtu_rc, g0=-curtu_rc.g0)   # flips the weak eigenvalue
    with pytest.raises(InconsistencyError):
        ck.desingularized_eigenvalues(broken, conditions=cond)


def test_sao_count_floor_and_resonance():
    mk = lambda s, w: ck.SaoPrediction(
        lambda_strong=s, lambda_weak=w, ratio=s / w,
        n_sao=int(math.floor(s / w)) if abs(s / w - round(s / w)) >= 1e-6
        else None,
        resonance_flag=abs(s / w - round(s / w)) < 1e-6)
    # magnitude ordering: -25 strong, -10 weak -> ratio 2.5 -> floor 2
    p = mk(-25.0, -10.0)
    assert p.ratio == pytest.approx(2.5)
    assert ck.sao_count(p) == 2
    # integer ratio -> resonance, undefined count
    p = mk(-30.0, -10.0)
    assert p.resonance_flag
    assert ck.sao_count(p) is None
    # equal eigenvalues -> ratio 1 -> resonance
    p = mk(-10.0, -10.0)
    assert p.resonance_flag
    assert ck.sao_count(p) is None


@settings(max_examples=60, deadline=None)
@given(st.floats(-50.0, -0.1), st.floats(-50.0, -0.1))
def test_sao_count_magnitude_ordering_property(a, b):
    strong, weak = (a, b) if abs(a) >= abs(b) else (b, a)
    ratio = strong / weak
    pred = ck.SaoPrediction(
        lambda_strong=strong, lambda_weak=weak, ratio=ratio,
        n_sao=None if abs(ratio - round(ratio)) < 1e-6 else int(math.floor(ratio)),
        resonance_flag=abs(ratio - round(ratio)) < 1e-6)
    n = ck.sao_count(pred)
    if not pred.resonance_flag:
        assert n == math.floor(ratio)
        assert ratio >= 1.0


def test_gamma_smooth_in_parameters():
    # no hidden branch discontinuity in the cusp solve: central differences
    # of Gamma with respect to each parameter converge at first order
    def gamma_of(name, value):
        m = ck.build_model("curtu", {name: value})
        roots = ck.find_symmetric_fold(m, (0.5, 0.995))
        return ck.reduction_coefficients(m, roots[-1]).gamma

    base = dict(CurtuParams().__dict__)
    base.pop("epsilon")
    for name, val in base.items():
        h = 1e-4 * max(1.0, abs(val))
        d_h = (gamma_of(name, val + h) - gamma_of(name, val - h)) / (2 * h)
        d_h2 = (gamma_of(name, val + h / 2) - gamma_of(name, val - h / 2)) / h
        assert d_h == pytest.approx(d_h2, rel=1e-3, abs=1e-6)


def test_reduced_field_shadows_full_system(curtu, curtu_rc):
    # independent oracle: integrate the full system from a center-manifold
    # state and compare the symmetry-adapted projection with the reduced flow
    rc = curtu_rc
    eps = curtu.epsilon
    u0, w0 = 0.02, -0.004
    z0 = ck.q_surface(rc, u0, w0) * 1.02
    s0 = ck.embed_reduced_state(rc, u0, w0, z0)
    full = ck.integrate(curtu, s0, (0.0, 1.0), rtol=1e-10, atol=1e-12)
    red = ck.integrate_field(
        lambda t, y: ck.reduced_field(rc, y[0], y[1], y[2], eps),
        (u0, w0, z0), (0.0, 1.0), rtol=1e-10, atol=1e-12)
    _, uf, wf, zf = ck.project_full_state(rc, ck.PairState(*full.states[-1]))
    ur, wr, zr = red.states[-1]
    err = max(abs(uf - ur), abs(wf - wr), abs(zf - zr))
    assert err <= eps  # O(eps) shadowing over O(1) time
