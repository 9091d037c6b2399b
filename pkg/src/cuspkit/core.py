"""Symmetric two-cell slow-fast model abstraction and its derivative engine.

A model is the pair of scalar fields (f, g) together with the time-scale
ratio ``epsilon``:

    x1' = f(x1, x2, y1),   y1' = epsilon * g(x1, y1),
    x2' = f(x2, x1, y2),   y2' = epsilon * g(x2, y2).

Coupling enters f only through its second argument.  The full field is
equivariant under the cell exchange (x1,x2,y1,y2) -> (x2,x1,y2,y1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Mapping, NamedTuple, Optional

from . import autodiff as ad
from .errors import DerivativeConsistencyError, DomainError

__all__ = [
    "PairState",
    "StateBox",
    "ModelDefinition",
    "FJet3",
    "GJet2",
    "eval_field",
    "f_jet",
    "g_jet",
    "f_jet_fd",
    "g_jet_fd",
    "exchange",
    "y_flip",
]


class PairState(NamedTuple):
    """Full-system state (fast pair, slow pair)."""

    x1: float
    x2: float
    y1: float
    y2: float


class FJet3(NamedTuple):
    """Partial derivatives of f through third order at one point.

    Index convention: 1 = d/dx_i (own fast), 2 = d/dx_j (coupled fast),
    y = d/dy_i (own slow).  Only the entries needed downstream are carried;
    no pure slow second/third derivatives of f are required.
    """

    f: float
    f1: float
    f2: float
    fy: float
    f11: float
    f12: float
    f22: float
    f1y: float
    f2y: float
    f111: float
    f112: float
    f122: float
    f222: float


class GJet2(NamedTuple):
    """Partial derivatives of g through second order at one point."""

    g: float
    gx: float
    gy: float
    gxx: float
    gxy: float
    gyy: float


@dataclass(frozen=True)
class StateBox:
    """Axis-aligned validity box for one cell's (x, y) pair.

    ``open_x`` marks the fast bounds as strict (for models whose inverse
    nonlinearity diverges at the endpoints).
    """

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    open_x: bool = False

    def contains(self, x: float, y: float) -> bool:
        if self.open_x:
            if not (self.x_min < x < self.x_max):
                return False
        elif not (self.x_min <= x <= self.x_max):
            return False
        return self.y_min <= y <= self.y_max

    def contains_state(self, s: PairState) -> bool:
        return self.contains(s.x1, s.y1) and self.contains(s.x2, s.y2)


@dataclass(frozen=True)
class ModelDefinition:
    """Immutable definition of a symmetric two-cell slow-fast system.

    ``f`` and ``g`` must be written with :mod:`cuspkit.autodiff` elementary
    functions so the dual engine can differentiate them.  Optional closed-form
    jet oracles, when present, are checked against the engine on every jet
    evaluation (relative tolerance 1e-6).
    """

    name: str
    params: Mapping[str, float]
    epsilon: float
    f: Callable
    g: Callable
    domain: StateBox
    f_jet_oracle: Optional[Callable] = None
    g_jet_oracle: Optional[Callable] = None
    manifold_guess: Optional[Callable] = None   # (x_i, x_j) -> y seed
    equilibrium_guess: Optional[tuple] = None   # (x, y) seed
    length_scale: float = 1.0
    channel_names: tuple = ("x1", "x2", "y1", "y2")
    builder: Optional[Callable] = None          # (params, epsilon) -> ModelDefinition

    def __post_init__(self):
        if not (self.epsilon > 0.0):
            raise ValueError("epsilon must be positive")

    def with_params(self, overrides: Mapping[str, float], epsilon: float | None = None):
        """Rebuild the model with updated parameters (requires a builder)."""
        if self.builder is None:
            raise ValueError(f"model {self.name!r} carries no builder")
        params = dict(self.params)
        for key, val in overrides.items():
            if key not in params:
                raise KeyError(f"unknown parameter {key!r} for model {self.name!r}")
            params[key] = float(val)
        return self.builder(params, self.epsilon if epsilon is None else epsilon)

    def check_domain(self, x: float, y: float):
        if not self.domain.contains(x, y):
            raise DomainError(
                f"point (x={x!r}, y={y!r}) outside domain of model {self.name!r}",
                state=(x, y),
            )


def exchange(s: PairState) -> PairState:
    """Cell-exchange involution (x1,x2,y1,y2) -> (x2,x1,y2,y1)."""
    return PairState(s.x2, s.x1, s.y2, s.y1)


def eval_field(model: ModelDefinition, s: PairState, check: bool = True):
    """Right-hand side of the full system at ``s``.

    Returns the 4-tuple (x1', x2', y1', y2').  Raises ``DomainError`` for
    states outside the model box or for non-finite results.
    """
    if check and not model.domain.contains_state(s):
        raise DomainError(
            f"state outside domain of model {model.name!r}", state=s
        )
    eps = model.epsilon
    out = (
        model.f(s.x1, s.x2, s.y1),
        model.f(s.x2, s.x1, s.y2),
        eps * model.g(s.x1, s.y1),
        eps * model.g(s.x2, s.y2),
    )
    if check and not all(math.isfinite(v) for v in out):
        raise DomainError(f"non-finite field value at {s!r}", state=s)
    return out


def _check_against_oracle(engine, oracle, what, rtol=1e-6):
    scale = max(1.0, max(abs(v) for v in engine))
    for name, a, b in zip(engine._fields, engine, oracle):
        if abs(a - b) > rtol * max(scale, abs(a), abs(b)):
            raise DerivativeConsistencyError(
                f"{what} entry {name}: engine={a!r} oracle={b!r}",
                entry=name,
                values=(a, b),
            )


def f_jet(model: ModelDefinition, x_i: float, x_j: float, y: float,
          check_oracle: bool = True) -> FJet3:
    """All required partials of f at (x_i, x_j, y) via nested duals.

    Five nested evaluations cover the 13 entries.  If the model ships an
    analytic jet oracle it is compared entrywise (rel. tol. 1e-6) and a
    ``DerivativeConsistencyError`` is raised on disagreement.
    """
    model.check_domain(x_i, y)
    model.check_domain(x_j, y)
    args = (x_i, x_j, y)
    f = model.f
    e111 = ad.derive(f, args, (0, 0, 0))
    e112 = ad.derive(f, args, (0, 0, 1))
    e122 = ad.derive(f, args, (0, 1, 1))
    e222 = ad.derive(f, args, (1, 1, 1))
    e12y = ad.derive(f, args, (0, 1, 2))
    jet = FJet3(
        f=ad.part(e111, (0, 0, 0)),
        f1=ad.part(e111, (1, 0, 0)),
        f2=ad.part(e222, (1, 0, 0)),
        fy=ad.part(e12y, (0, 0, 1)),
        f11=ad.part(e111, (1, 1, 0)),
        f12=ad.part(e122, (1, 1, 0)),
        f22=ad.part(e222, (1, 1, 0)),
        f1y=ad.part(e12y, (1, 0, 1)),
        f2y=ad.part(e12y, (0, 1, 1)),
        f111=ad.part(e111, (1, 1, 1)),
        f112=ad.part(e112, (1, 1, 1)),
        f122=ad.part(e122, (1, 1, 1)),
        f222=ad.part(e222, (1, 1, 1)),
    )
    if not all(math.isfinite(v) for v in jet):
        raise DomainError(f"non-finite f-jet at ({x_i}, {x_j}, {y})")
    if check_oracle and model.f_jet_oracle is not None:
        _check_against_oracle(jet, model.f_jet_oracle(x_i, x_j, y), "f_jet")
    return jet


def g_jet(model: ModelDefinition, x: float, y: float,
          check_oracle: bool = True) -> GJet2:
    """All partials of g through second order at (x, y) via nested duals."""
    model.check_domain(x, y)
    args = (x, y)
    g = model.g
    exx = ad.derive(g, args, (0, 0))
    exy = ad.derive(g, args, (0, 1))
    eyy = ad.derive(g, args, (1, 1))
    jet = GJet2(
        g=ad.part(exx, (0, 0)),
        gx=ad.part(exx, (1, 0)),
        gy=ad.part(eyy, (1, 0)),
        gxx=ad.part(exx, (1, 1)),
        gxy=ad.part(exy, (1, 1)),
        gyy=ad.part(eyy, (1, 1)),
    )
    if not all(math.isfinite(v) for v in jet):
        raise DomainError(f"non-finite g-jet at ({x}, {y})")
    if check_oracle and model.g_jet_oracle is not None:
        _check_against_oracle(jet, model.g_jet_oracle(x, y), "g_jet")
    return jet


def f_jet_fd(model: ModelDefinition, x_i: float, x_j: float, y: float) -> FJet3:
    """Finite-difference counterpart of :func:`f_jet` (validation route).

    Central differences at steps h and h/2 with Richardson extrapolation;
    step scaled per derivative order and by ``model.length_scale``.
    """
    args = (x_i, x_j, y)
    f = model.f
    s = model.length_scale

    def fd(*idx):
        return ad.fd_partial(f, args, idx, scale=s)

    return FJet3(
        f=f(x_i, x_j, y),
        f1=fd(0), f2=fd(1), fy=fd(2),
        f11=fd(0, 0), f12=fd(0, 1), f22=fd(1, 1),
        f1y=fd(0, 2), f2y=fd(1, 2),
        f111=fd(0, 0, 0), f112=fd(0, 0, 1),
        f122=fd(0, 1, 1), f222=fd(1, 1, 1),
    )


def g_jet_fd(model: ModelDefinition, x: float, y: float) -> GJet2:
    """Finite-difference counterpart of :func:`g_jet` (validation route)."""
    args = (x, y)
    g = model.g
    s = model.length_scale

    def fd(*idx):
        return ad.fd_partial(g, args, idx, scale=s)

    return GJet2(
        g=g(x, y),
        gx=fd(0), gy=fd(1),
        gxx=fd(0, 0), gxy=fd(0, 1), gyy=fd(1, 1),
    )


def y_flip(model: ModelDefinition) -> ModelDefinition:
    """The model under the slow-variable reflection y_i -> -y_i.

    Derived quantities obey the sign table (relative to the original):
    f_y, Omega, g_x and g0 flip sign; Gamma and g_y are unchanged.  All
    cusp/Hopf conditions are invariant, which is what makes the reflection
    useful as a consistency check.
    """
    f0, g0 = model.f, model.g

    def f_flipped(x_i, x_j, y):
        return f0(x_i, x_j, -y)

    def g_flipped(x, y):
        return -g0(x, -y)

    f_oracle = None
    if model.f_jet_oracle is not None:
        base_f = model.f_jet_oracle

        def f_oracle(x_i, x_j, y):
            j = base_f(x_i, x_j, -y)
            return FJet3(
                f=j.f, f1=j.f1, f2=j.f2, fy=-j.fy,
                f11=j.f11, f12=j.f12, f22=j.f22,
                f1y=-j.f1y, f2y=-j.f2y,
                f111=j.f111, f112=j.f112, f122=j.f122, f222=j.f222,
            )

    g_oracle = None
    if model.g_jet_oracle is not None:
        base_g = model.g_jet_oracle

        def g_oracle(x, y):
            j = base_g(x, -y)
            return GJet2(g=-j.g, gx=-j.gx, gy=j.gy,
                         gxx=-j.gxx, gxy=j.gxy, gyy=-j.gyy)

    guess = None
    if model.manifold_guess is not None:
        base_guess = model.manifold_guess

        def guess(x_i, x_j):
            return -base_guess(x_i, x_j)

    eq_guess = None
    if model.equilibrium_guess is not None:
        ex, ey = model.equilibrium_guess
        eq_guess = (ex, -ey)

    box = model.domain
    flipped_box = replace(box, y_min=-box.y_max, y_max=-box.y_min)

    return replace(
        model,
        name=model.name + "_yflip",
        f=f_flipped,
        g=g_flipped,
        domain=flipped_box,
        f_jet_oracle=f_oracle,
        g_jet_oracle=g_oracle,
        manifold_guess=guess,
        equilibrium_guess=eq_guess,
        builder=None,
    )
