"""Adaptive integration: accuracy, order, symmetry, errors, CSV."""

import math

import numpy as np
import pytest

import cuspkit as ck
from cuspkit.core import ModelDefinition, PairState, StateBox, exchange
from cuspkit.errors import AnalysisError, DomainError, IntegrationError


def test_linear_decay_accuracy():
    traj = ck.integrate_field(lambda t, y: (-y[0],), (1.0,), (0.0, 1.0),
                              rtol=1e-8, atol=1e-12)
    err = abs(traj.states[-1, 0] - math.exp(-1.0))
    assert err < 10 * 1e-8


def test_order_five_convergence(curtu):
    # self-convergence: shrinking rtol by 32 should shrink the error by ~2^5
    s0 = ck.default_mmo_ic(curtu)
    ref = ck.integrate(curtu, s0, (0.0, 40.0), rtol=1e-13, atol=1e-15)
    coarse = ck.integrate(curtu, s0, (0.0, 40.0), rtol=1e-6, atol=1e-9)
    fine = ck.integrate(curtu, s0, (0.0, 40.0), rtol=1e-6 / 32, atol=1e-9 / 32)
    e_coarse = np.max(np.abs(coarse.states[-1] - ref.states[-1]))
    e_fine = np.max(np.abs(fine.states[-1] - ref.states[-1]))
    ratio = e_coarse / e_fine
    assert 16.0 <= ratio <= 64.0


def test_determinism(curtu):
    s0 = ck.default_mmo_ic(curtu)
    a = ck.integrate(curtu, s0, (0.0, 100.0))
    b = ck.integrate(curtu, s0, (0.0, 100.0))
    assert np.array_equal(a.t, b.t)
    assert np.array_equal(a.states, b.states)


def test_flow_equivariance(curtu):
    s0 = ck.default_mmo_ic(curtu, antisym=0.05)
    a = ck.integrate(curtu, s0, (0.0, 40.0))
    b = ck.integrate(curtu, exchange(s0), (0.0, 40.0))
    times = np.linspace(1.0, 39.0, 191)
    ra = ck.hermite_resample(a, times=times).states
    rb = ck.hermite_resample(b, times=times).states
    swapped = rb[:, [1, 0, 3, 2]]
    assert np.max(np.abs(ra - swapped)) < 1e-7


def test_symmetric_subspace_invariant(curtu):
    x_eq, y_eq = ck.find_symmetric_equilibrium(curtu)
    s0 = PairState(x_eq + 0.05, x_eq + 0.05, y_eq - 0.02, y_eq - 0.02)
    traj = ck.integrate(curtu, s0, (0.0, 200.0))
    gap = np.abs(traj.states[:, 0] - traj.states[:, 1]) + \
        np.abs(traj.states[:, 2] - traj.states[:, 3])
    assert gap.max() < 1e-8


def test_mmo_presence_default_run(curtu_run):
    traj, _ = curtu_run
    u = 0.5 * (traj.states[:, 0] - traj.states[:, 1])
    assert np.max(np.abs(u)) > 0.4        # large excursions happen
    sub = ck.discard_transient(traj)
    sig = ck.classify_mmo(sub)
    kinds = {e.kind for e in sig.events}
    assert kinds == {"SAO", "LAO"}


def test_domain_exit_error():
    # constant outward drift leaves the box; the error carries the exit state
    m = ModelDefinition(
        name="drift", params={}, epsilon=1.0,
        f=lambda xi, xj, y: 0.5,
        g=lambda x, y: 0.0,
        domain=StateBox(-1.0, 1.0, -1.0, 1.0))
    with pytest.raises(DomainError) as err:
        ck.integrate(m, PairState(0.0, 0.0, 0.0, 0.0), (0.0, 10.0))
    assert err.value.state is not None
    assert err.value.trajectory is not None


def test_initial_state_outside_domain(curtu):
    with pytest.raises(DomainError):
        ck.integrate(curtu, PairState(1.2, 0.5, 0.5, 0.5), (0.0, 1.0))


def test_blowup_reports_partial_trajectory():
    with pytest.raises(IntegrationError) as err:
        ck.integrate_field(lambda t, y: (y[0] ** 2,), (1.0,), (0.0, 2.0))
    traj = err.value.trajectory
    assert traj is not None and len(traj) > 1
    assert traj.meta["failed"]


def test_step_counters_in_meta(curtu):
    traj = ck.integrate(curtu, ck.default_mmo_ic(curtu), (0.0, 20.0))
    assert traj.meta["accepted"] == len(traj) - 1
    assert traj.meta["rejected"] >= 0
    assert traj.meta["model"] == "curtu"
    assert np.all(np.diff(traj.t) > 0)


def test_max_step_respected(curtu):
    traj = ck.integrate(curtu, ck.default_mmo_ic(curtu), (0.0, 50.0),
                        max_step=0.25)
    assert np.max(np.diff(traj.t)) <= 0.25 + 1e-12


def test_hermite_resample_accuracy():
    # harmonic oscillator against the analytic solution
    traj = ck.integrate_field(lambda t, y: (y[1], -y[0]), (1.0, 0.0),
                              (0.0, 12.0), rtol=1e-10, atol=1e-12)
    res = ck.hermite_resample(traj, dt=0.05)
    exact = np.cos(res.t)
    assert np.max(np.abs(res.states[:, 0] - exact)) < 1e-7


def test_csv_roundtrip(tmp_path, curtu):
    traj = ck.integrate(curtu, ck.default_mmo_ic(curtu), (0.0, 10.0))
    path = tmp_path / "traj.csv"
    traj.to_csv(path)
    with open(path) as fh:
        assert fh.readline().strip() == "t,u1,u2,a1,a2"
    back = ck.Trajectory.from_csv(path)
    assert np.array_equal(back.t, traj.t)
    assert np.array_equal(back.states, traj.states)


def test_csv_generic_channel_names(tmp_path, curtu):
    traj = ck.integrate(curtu, ck.default_mmo_ic(curtu), (0.0, 5.0))
    path = tmp_path / "traj.csv"
    traj.to_csv(path, channels=("x1", "x2", "y1", "y2"))
    with open(path) as fh:
        assert fh.readline().strip() == "t,x1,x2,y1,y2"


def test_from_csv_rejects_garbage(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(AnalysisError):
        ck.Trajectory.from_csv(path)


def test_transient_discard():
    t = np.linspace(0.0, 10.0, 101)
    states = np.zeros((101, 1))
    traj = ck.Trajectory(t=t, states=states, derivs=None, meta={})
    sub = ck.discard_transient(traj, 0.2)
    assert sub.t[0] >= 2.0
    assert len(sub) == 81
