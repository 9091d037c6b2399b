"""Symmetric equilibria, block-diagonalized Jacobians, and the singular Hopf.

At a symmetric point the 4x4 Jacobian of the full system decomposes, in the
symmetry eigenbasis, into two 2x2 blocks

    J_s = [[f1+f2, fy], [eps gx, eps gy]]   (symmetric perturbations)
    J_a = [[f1-f2, fy], [eps gx, eps gy]]   (antisymmetric perturbations)

whose eigenvalue union is the full spectrum.  The singular Hopf bifurcation
lives in J_a: its trace vanishes at parameter distance O(eps) from the fold,
where the eigenvalues are +-i sqrt(eps |fy gx|) + O(eps).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .core import ModelDefinition, PairState, eval_field, f_jet, g_jet
from .errors import HopfNotFoundError, RootFindError, WrongBranchError

__all__ = [
    "JacobianBlocks",
    "HopfResult",
    "find_symmetric_equilibrium",
    "jacobian_blocks",
    "locate_singular_hopf",
    "full_jacobian_fd",
]

SADDLE_FOCUS = "saddle_focus"
STABLE_FOCUS = "stable_focus"
UNSTABLE_FOCUS = "unstable_focus"
STABLE_NODE = "stable_node"
UNSTABLE_NODE = "unstable_node"
SADDLE = "saddle"
NONHYPERBOLIC = "nonhyperbolic"


@dataclass(frozen=True)
class JacobianBlocks:
    """Symmetric/antisymmetric 2x2 blocks with spectra and classification.

    Classification (on the union of the four eigenvalues, tolerance
    ``hyperbolicity_tol`` on real parts):

    * nonhyperbolic  - some real part ~ 0;
    * *_focus        - a complex pair exists; stable/unstable when all real
      parts share the sign, saddle_focus when signs are mixed;
    * *_node/saddle  - all eigenvalues real, by the sign pattern.
    """

    j_s: np.ndarray
    j_a: np.ndarray
    eig_s: tuple
    eig_a: tuple
    classification: str

    def to_dict(self):
        return {
            "j_s": [list(map(float, row)) for row in self.j_s],
            "j_a": [list(map(float, row)) for row in self.j_a],
            "eig_s": [[ev.real, ev.imag] for ev in self.eig_s],
            "eig_a": [[ev.real, ev.imag] for ev in self.eig_a],
            "classification": self.classification,
        }


@dataclass(frozen=True)
class HopfResult:
    """Singular Hopf point located along a symmetric-equilibrium branch."""

    parameter_name: str
    mu_h: float
    x_eq: float
    y_eq: float
    omega_h: float            # imaginary part of the antisymmetric pair
    predicted_omega: float    # sqrt(eps |fy gx|) at the located equilibrium
    det_a: float
    trace_a: float
    epsilon: float

    def to_dict(self):
        return {
            "parameter_name": self.parameter_name,
            "mu_h": self.mu_h,
            "x_eq": self.x_eq,
            "y_eq": self.y_eq,
            "omega_h": self.omega_h,
            "predicted_omega": self.predicted_omega,
            "det_a": self.det_a,
            "trace_a": self.trace_a,
            "epsilon": self.epsilon,
            "eigenvalues_a": [[0.0, self.omega_h], [0.0, -self.omega_h]],
        }


def _eig2(m) -> tuple:
    """Closed-form eigenvalues of a real 2x2 matrix."""
    tr = m[0][0] + m[1][1]
    det = m[0][0] * m[1][1] - m[0][1] * m[1][0]
    disc = tr * tr - 4.0 * det
    root = cmath.sqrt(disc)
    return (0.5 * (tr + root), 0.5 * (tr - root))


def find_symmetric_equilibrium(model: ModelDefinition, guess=None,
                               ftol: float = 1e-12, max_iter: int = 60):
    """Solve (f(x,x,y), g(x,y)) = (0,0) by damped 2D Newton.

    Returns (x_eq, y_eq) with residual infinity-norm below ``ftol``.
    """
    if guess is None:
        guess = model.equilibrium_guess
        if guess is None:
            raise RootFindError("equilibrium solve needs a guess")
    x, y = float(guess[0]), float(guess[1])

    def residual(x, y):
        return model.f(x, x, y), model.g(x, y)

    rf, rg = residual(x, y)
    for _ in range(max_iter):
        if max(abs(rf), abs(rg)) < ftol:
            return x, y
        fj = f_jet(model, x, x, y)
        gj = g_jet(model, x, y)
        a11, a12 = fj.f1 + fj.f2, fj.fy
        a21, a22 = gj.gx, gj.gy
        det = a11 * a22 - a12 * a21
        if det == 0.0:
            raise RootFindError("singular Jacobian in equilibrium solve",
                                residual=max(abs(rf), abs(rg)))
        dx = -(rf * a22 - a12 * rg) / det
        dy = -(a11 * rg - rf * a21) / det
        lam = 1.0
        for _ in range(40):
            xn, yn = x + lam * dx, y + lam * dy
            rfn, rgn = residual(xn, yn)
            if (math.isfinite(rfn) and math.isfinite(rgn)
                    and max(abs(rfn), abs(rgn)) < max(abs(rf), abs(rg))):
                break
            lam *= 0.5
        else:
            raise RootFindError("equilibrium Newton stalled",
                                residual=max(abs(rf), abs(rg)))
        x, y, rf, rg = xn, yn, rfn, rgn
    if max(abs(rf), abs(rg)) < ftol:
        return x, y
    raise RootFindError("equilibrium Newton did not converge",
                        residual=max(abs(rf), abs(rg)))


def jacobian_blocks(model: ModelDefinition, x: float, y: float,
                    eps: Optional[float] = None,
                    hyperbolicity_tol: float = 1e-9) -> JacobianBlocks:
    """Block decomposition of the full Jacobian at the symmetric point (x,x,y,y)."""
    if eps is None:
        eps = model.epsilon
    fj = f_jet(model, x, x, y)
    gj = g_jet(model, x, y)
    j_s = np.array([[fj.f1 + fj.f2, fj.fy], [eps * gj.gx, eps * gj.gy]])
    j_a = np.array([[fj.f1 - fj.f2, fj.fy], [eps * gj.gx, eps * gj.gy]])
    eig_s = _eig2(j_s)
    eig_a = _eig2(j_a)
    eigs = list(eig_s) + list(eig_a)

    scale = max(1.0, max(abs(ev) for ev in eigs))
    if any(abs(ev.real) < hyperbolicity_tol * scale for ev in eigs):
        cls = NONHYPERBOLIC
    else:
        has_complex = any(abs(ev.imag) > hyperbolicity_tol * scale for ev in eigs)
        n_pos = sum(1 for ev in eigs if ev.real > 0)
        if has_complex:
            if n_pos == 0:
                cls = STABLE_FOCUS
            elif n_pos == 4:
                cls = UNSTABLE_FOCUS
            else:
                cls = SADDLE_FOCUS
        else:
            if n_pos == 0:
                cls = STABLE_NODE
            elif n_pos == 4:
                cls = UNSTABLE_NODE
            else:
                cls = SADDLE
    return JacobianBlocks(j_s=j_s, j_a=j_a, eig_s=eig_s, eig_a=eig_a,
                          classification=cls)


def locate_singular_hopf(model: ModelDefinition, parameter_name: str,
                         bracket, eps: Optional[float] = None,
                         eq_guess=None, trace_tol: float = 1e-10) -> HopfResult:
    """Find the parameter value where trace(J_a) vanishes on the equilibrium
    branch, verifying det(J_a) > 0 there.

    The equilibrium branch is continued naturally: each trace evaluation
    seeds its Newton solve with the previously found equilibrium, so repeated
    calls with identical inputs are bit-identical.
    """
    if eps is None:
        eps = model.epsilon
    lo, hi = float(bracket[0]), float(bracket[1])
    state = {"guess": eq_guess if eq_guess is not None
             else model.equilibrium_guess}

    def at(mu):
        m = model.with_params({parameter_name: mu})
        xy = find_symmetric_equilibrium(m, guess=state["guess"])
        state["guess"] = xy
        fj = f_jet(m, xy[0], xy[0], xy[1])
        gj = g_jet(m, xy[0], xy[1])
        trace = fj.f1 - fj.f2 + eps * gj.gy
        det = (fj.f1 - fj.f2) * eps * gj.gy - fj.fy * eps * gj.gx
        return trace, det, xy, fj, gj

    t_lo = at(lo)[0]
    t_hi = at(hi)[0]
    if t_lo == 0.0:
        mu_h = lo
    elif t_hi == 0.0:
        mu_h = hi
    elif math.copysign(1.0, t_lo) == math.copysign(1.0, t_hi):
        raise HopfNotFoundError(
            f"trace(J_a) has no sign change over {parameter_name} in "
            f"[{lo}, {hi}]: {t_lo:+.3e} .. {t_hi:+.3e}", residual=min(abs(t_lo), abs(t_hi)))
    else:
        mu_h = brentq(lambda mu: at(mu)[0], lo, hi, xtol=1e-15, rtol=8.9e-16)

    trace, det, (x_eq, y_eq), fj, gj = at(mu_h)
    if abs(trace) > trace_tol:
        raise RootFindError(
            f"Hopf polish left |trace|={abs(trace):.3e}", residual=trace)
    if det <= 0.0:
        raise WrongBranchError(
            f"det(J_a)={det:.3e} <= 0 at the trace root: steady-state "
            "bifurcation of the antisymmetric block, not a Hopf point",
            residual=det)
    omega_h = math.sqrt(det - 0.25 * trace * trace)
    predicted = math.sqrt(eps * abs(fj.fy * gj.gx))
    return HopfResult(
        parameter_name=parameter_name,
        mu_h=float(mu_h),
        x_eq=x_eq,
        y_eq=y_eq,
        omega_h=omega_h,
        predicted_omega=predicted,
        det_a=det,
        trace_a=trace,
        epsilon=eps,
    )


def full_jacobian_fd(model: ModelDefinition, s: PairState,
                     h_scale: float = 1e-6) -> np.ndarray:
    """4x4 Jacobian of the full field by Richardson-extrapolated central
    differences of ``eval_field`` (validation oracle for the block form)."""
    s0 = np.array(s, dtype=float)

    def col(k, h):
        up = s0.copy()
        dn = s0.copy()
        up[k] += h
        dn[k] -= h
        fu = eval_field(model, PairState(*up), check=False)
        fd = eval_field(model, PairState(*dn), check=False)
        return (np.array(fu) - np.array(fd)) / (2.0 * h)

    jac = np.empty((4, 4))
    for k in range(4):
        h = h_scale * model.length_scale * max(1.0, abs(s0[k]))
        d_h = col(k, h)
        d_h2 = col(k, 0.5 * h)
        jac[:, k] = (4.0 * d_h2 - d_h) / 3.0
    return jac
