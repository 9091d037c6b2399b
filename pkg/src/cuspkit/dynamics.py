"""Adaptive embedded Runge-Kutta 5(4) integration (Dormand-Prince pair).

An explicit pair suffices here: with eps ~ 0.01 the stiffness ratio of the
built-in systems is modest.  Defaults rtol=1e-9 / atol=1e-11 resolve
small-amplitude oscillations of size ~1e-3 well above the noise floor.
Step size is governed by a PI controller; dense output uses cubic Hermite
interpolation on the stored node derivatives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .core import ModelDefinition, PairState, eval_field
from .errors import AnalysisError, DomainError, IntegrationError

__all__ = ["Trajectory", "integrate", "integrate_field", "hermite_resample",
           "default_mmo_ic", "discard_transient"]

# Dormand-Prince 5(4) tableau; fifth-order solution is propagated (FSAL)
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
# error weights: b5 - b4
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)

_SAFETY = 0.9
_ALPHA = 0.7 / 5.0   # PI controller: proportional exponent
_BETA = 0.4 / 5.0    # PI controller: integral exponent
_FAC_MIN = 0.2
_FAC_MAX = 5.0


@dataclass
class Trajectory:
    """Time-sampled orbit with node derivatives and solver metadata."""

    t: np.ndarray
    states: np.ndarray
    derivs: Optional[np.ndarray]
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.t)

    @property
    def channel_names(self):
        return tuple(self.meta.get("channels",
                                   [f"x{k}" for k in range(self.states.shape[1])]))

    def channel(self, name):
        """Named state channel, or the antisymmetric coordinate ``u``."""
        names = self.channel_names
        if name in names:
            return self.states[:, names.index(name)]
        if name == "u" and self.states.shape[1] == 4:
            return 0.5 * (self.states[:, 0] - self.states[:, 1])
        raise KeyError(f"unknown channel {name!r}; have {names}")

    def to_csv(self, path, channels: Optional[Sequence[str]] = None):
        """Write `t,<channels...>` at full double precision."""
        names = list(channels or self.channel_names)
        if len(names) != self.states.shape[1]:
            raise ValueError("channel count mismatch")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("t," + ",".join(names) + "\n")
            for tk, row in zip(self.t, self.states):
                fh.write(f"{tk:.17g}," + ",".join(f"{v:.17g}" for v in row) + "\n")

    @classmethod
    def from_csv(cls, path):
        """Read a trajectory CSV written by :meth:`to_csv` (no derivatives)."""
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip().split(",")
            if not header or header[0] != "t":
                raise AnalysisError(f"{path}: not a trajectory CSV (header {header!r})")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        if data.size == 0:
            raise AnalysisError(f"{path}: empty trajectory")
        return cls(t=data[:, 0], states=data[:, 1:], derivs=None,
                   meta={"channels": header[1:], "source": str(path)})


def _initial_step(field_fn, t0, y0, f0, rtol, atol, t_end):
    """Standard two-trial-step heuristic for the first step size."""
    scale = atol + rtol * np.abs(y0)
    d0 = math.sqrt(float(np.mean((y0 / scale) ** 2)))
    d1 = math.sqrt(float(np.mean((f0 / scale) ** 2)))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * f0
    f1 = np.asarray(field_fn(t0 + h0, y1))
    d2 = math.sqrt(float(np.mean(((f1 - f0) / scale) ** 2))) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100.0 * h0, h1, t_end - t0)


def integrate_field(field_fn: Callable, s0, t_span, rtol: float = 1e-9,
                    atol: float = 1e-11, max_step: float = math.inf,
                    first_step: Optional[float] = None,
                    meta: Optional[dict] = None) -> Trajectory:
    """Integrate ``y' = field_fn(t, y)`` adaptively over ``t_span``.

    Local error is kept below ``atol + rtol*|y|`` componentwise (RMS norm);
    step underflow raises ``IntegrationError`` carrying the partial
    trajectory.  Identical inputs give bit-identical output.
    """
    t0, t_end = float(t_span[0]), float(t_span[1])
    if not (rtol > 0 and atol > 0):
        raise ValueError("rtol and atol must be positive")
    if t_end <= t0:
        raise ValueError("t_span must be increasing")

    y = np.asarray(s0, dtype=float)
    ndim = y.size
    t = t0
    f_now = np.asarray(field_fn(t, y), dtype=float)
    if not np.all(np.isfinite(f_now)):
        raise IntegrationError(f"non-finite field at initial state {s0!r}")

    h = first_step if first_step is not None else _initial_step(
        field_fn, t0, y, f_now, rtol, atol, t_end)
    h = min(h, max_step, t_end - t0)

    ts = [t]
    ys = [y.copy()]
    fs = [f_now.copy()]
    n_accept = 0
    n_reject = 0
    err_prev = 1.0
    k = [np.empty(ndim) for _ in range(7)]

    def partial(msg):
        traj = Trajectory(
            t=np.array(ts), states=np.array(ys), derivs=np.array(fs),
            meta=dict(meta or {}, rtol=rtol, atol=atol,
                      accepted=n_accept, rejected=n_reject, failed=True))
        return IntegrationError(msg, trajectory=traj)

    while t < t_end:
        h = min(h, t_end - t)
        if h < 1e-14 * max(1.0, abs(t)):
            raise partial(f"step underflow at t={t!r} (h={h!r})")

        k[0] = f_now
        bad = False
        for i in range(1, 7):
            yi = y + h * sum(a * k[j] for j, a in enumerate(_A[i]) if a != 0.0)
            k[i] = np.asarray(field_fn(t + _C[i] * h, yi), dtype=float)
            if not np.all(np.isfinite(k[i])):
                bad = True
                break
        if bad:
            n_reject += 1
            h *= 0.25
            continue

        y_new = yi  # seventh stage evaluates at the fifth-order solution (FSAL)
        err_vec = h * sum(e * k[j] for j, e in enumerate(_E) if e != 0.0)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = math.sqrt(float(np.mean((err_vec / scale) ** 2)))

        if err <= 1.0 or h <= 1e-13 * max(1.0, abs(t)):
            t = t + h
            y = y_new
            f_now = k[6].copy()
            ts.append(t)
            ys.append(y.copy())
            fs.append(f_now.copy())
            n_accept += 1
            err = max(err, 1e-10)
            fac = _SAFETY * err ** (-_ALPHA) * err_prev ** _BETA
            h = h * min(_FAC_MAX, max(_FAC_MIN, fac))
            h = min(h, max_step)
            err_prev = err
        else:
            n_reject += 1
            fac = _SAFETY * err ** (-0.2)
            h = h * min(1.0, max(_FAC_MIN, fac))

    return Trajectory(
        t=np.array(ts), states=np.array(ys), derivs=np.array(fs),
        meta=dict(meta or {}, rtol=rtol, atol=atol,
                  accepted=n_accept, rejected=n_reject, failed=False))


def integrate(model: ModelDefinition, s0, t_span, rtol: float = 1e-9,
              atol: float = 1e-11, max_step: float = math.inf,
              first_step: Optional[float] = None,
              check_domain: bool = True) -> Trajectory:
    """Integrate the full two-cell system from ``s0`` over ``t_span``.

    Accepted states are checked against the model's state box; leaving it
    raises ``DomainError`` carrying the exit state and partial trajectory.
    """
    s0 = PairState(*s0)
    if check_domain and not model.domain.contains_state(s0):
        raise DomainError("initial state outside model domain", state=s0)

    def rhs(t, y):
        return eval_field(model, PairState(y[0], y[1], y[2], y[3]), check=False)

    meta = {"model": model.name, "epsilon": model.epsilon,
            "channels": list(model.channel_names), "ic": list(map(float, s0)),
            "t_span": [float(t_span[0]), float(t_span[1])]}
    traj = integrate_field(rhs, s0, t_span, rtol=rtol, atol=atol,
                           max_step=max_step, first_step=first_step, meta=meta)
    if check_domain:
        box = model.domain
        for idx in range(len(traj)):
            st = PairState(*traj.states[idx])
            if not box.contains_state(st):
                clipped = Trajectory(t=traj.t[:idx], states=traj.states[:idx],
                                     derivs=traj.derivs[:idx], meta=traj.meta)
                raise DomainError(
                    f"trajectory left the model domain at t={traj.t[idx]!r}",
                    state=st, trajectory=clipped)
    return traj


def default_mmo_ic(model: ModelDefinition, antisym: float = 1e-3) -> PairState:
    """Stock initial condition for MMO runs: the symmetric equilibrium plus
    an antisymmetric fast perturbation of the given magnitude."""
    from .spectra import find_symmetric_equilibrium
    x_eq, y_eq = find_symmetric_equilibrium(model)
    return PairState(x_eq + antisym, x_eq - antisym, y_eq, y_eq)


def discard_transient(traj: Trajectory, fraction: float = 0.2) -> Trajectory:
    """Drop the leading ``fraction`` of the time span."""
    if not 0.0 <= fraction < 1.0:
        raise ValueError("fraction must be in [0, 1)")
    t_cut = traj.t[0] + fraction * (traj.t[-1] - traj.t[0])
    keep = traj.t >= t_cut
    return Trajectory(
        t=traj.t[keep], states=traj.states[keep],
        derivs=None if traj.derivs is None else traj.derivs[keep],
        meta=dict(traj.meta, transient_discarded=fraction))


def hermite_resample(traj: Trajectory, dt: Optional[float] = None,
                     times: Optional[np.ndarray] = None) -> Trajectory:
    """Resample on a fixed stride (or explicit times) by cubic Hermite
    interpolation using the stored node derivatives."""
    if traj.derivs is None:
        raise AnalysisError("resampling needs node derivatives")
    if times is None:
        if dt is None or dt <= 0:
            raise ValueError("need dt > 0 or explicit times")
        times = np.arange(traj.t[0], traj.t[-1] + 0.5 * dt, dt)
        times = times[times <= traj.t[-1]]
    times = np.asarray(times, dtype=float)
    idx = np.searchsorted(traj.t, times, side="right") - 1
    idx = np.clip(idx, 0, len(traj.t) - 2)
    t0 = traj.t[idx]
    t1 = traj.t[idx + 1]
    hseg = (t1 - t0)[:, None]
    s = ((times - t0) / (t1 - t0))[:, None]
    y0 = traj.states[idx]
    y1 = traj.states[idx + 1]
    f0 = traj.derivs[idx]
    f1 = traj.derivs[idx + 1]
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    states = h00 * y0 + h10 * hseg * f0 + h01 * y1 + h11 * hseg * f1
    return Trajectory(t=times, states=states, derivs=None,
                      meta=dict(traj.meta, resampled=True))
