"""Built-in models: the Curtu rate model and coupled Morris-Lecar neurons.

Both ship hand-derived analytic jets that act as oracles for the generic
dual-number engine, plus closed-form critical-manifold maps used as Newton
seeds.

Note on the Curtu slow-variable derivative: differentiating the rate
equation directly gives df/da_i = -S'(arg) (no factor b); some derivations
quote -b*S'(arg).  The sign, which is all the theory uses, is the same
either way.  The shipped oracle is the direct derivative; the engine
cross-check in the test suite pins it.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Mapping

from .autodiff import cosh, exp, log, sinh, tanh
from .core import FJet3, GJet2, ModelDefinition, StateBox
from .errors import ConfigError

__all__ = [
    "CurtuParams",
    "MorrisLecarParams",
    "build_curtu",
    "build_morris_lecar",
    "build_model",
    "ml_analytic_jet",
    "curtu_phi",
    "curtu_phi_d1",
    "curtu_phi_d2",
    "curtu_phi_d3",
    "curtu_fold_closed_form",
    "MODEL_BUILDERS",
]


# ---------------------------------------------------------------------------
# Curtu mutual-inhibition rate model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CurtuParams:
    """Parameters of the two-population inhibitory rate model."""

    I: float = 0.68
    b: float = 0.6055
    c: float = 0.63
    r: float = 10.0
    theta: float = 0.2
    epsilon: float = 0.01

    def __post_init__(self):
        if self.r <= 0:
            raise ValueError("r must be positive")


def _sigmoid_derivs(sig, r):
    """(S', S'', S''') of the logistic S at a point, given sig = S there."""
    q = sig * (1.0 - sig)
    s1 = r * q
    s2 = r * r * q * (1.0 - 2.0 * sig)
    s3 = r ** 3 * q * (1.0 - 6.0 * sig + 6.0 * sig * sig)
    return s1, s2, s3


def curtu_phi(u, p: CurtuParams):
    """phi(u) = u - S^{-1}(u), the single-cell manifold nonlinearity."""
    return u - (p.theta + log(u / (1.0 - u)) / p.r)


def curtu_phi_d1(u, p: CurtuParams):
    return 1.0 - 1.0 / (p.r * u * (1.0 - u))


def curtu_phi_d2(u, p: CurtuParams):
    return (1.0 - 2.0 * u) / (p.r * u ** 2 * (1.0 - u) ** 2)


def curtu_phi_d3(u, p: CurtuParams):
    q = u * (1.0 - u)
    return -2.0 * (q + (1.0 - 2.0 * u) ** 2) / (p.r * q ** 3)


def curtu_fold_closed_form(p: CurtuParams) -> float:
    """Upper-branch root of the symmetric fold condition phi'(u) = -b.

    The condition reduces to u(1-u) = 1/(r(1+b)), a quadratic in u.
    """
    disc = 1.0 - 4.0 / (p.r * (1.0 + p.b))
    if disc < 0.0:
        raise ValueError("no real symmetric fold for these parameters")
    return 0.5 * (1.0 + disc ** 0.5)


def build_curtu(p: CurtuParams | None = None, epsilon: float | None = None) -> ModelDefinition:
    """Curtu model: f = -u_i + S(I - b u_j - a_i + u_i), g = -a + c u."""
    if p is None:
        p = CurtuParams()
    if epsilon is not None:
        p = CurtuParams(I=p.I, b=p.b, c=p.c, r=p.r, theta=p.theta, epsilon=epsilon)
    I, b, c, r, theta = p.I, p.b, p.c, p.r, p.theta

    def f(u_i, u_j, a_i):
        arg = I - b * u_j - a_i + u_i
        return -u_i + 1.0 / (1.0 + exp(-r * (arg - theta)))

    def g(u, a):
        return -a + c * u

    def f_oracle(u_i, u_j, a_i):
        arg = I - b * u_j - a_i + u_i
        sig = 1.0 / (1.0 + exp(-r * (arg - theta)))
        s1, s2, s3 = _sigmoid_derivs(sig, r)
        return FJet3(
            f=-u_i + sig,
            f1=-1.0 + s1,
            f2=-b * s1,
            fy=-s1,
            f11=s2,
            f12=-b * s2,
            f22=b * b * s2,
            f1y=-s2,
            f2y=b * s2,
            f111=s3,
            f112=-b * s3,
            f122=b * b * s3,
            f222=-(b ** 3) * s3,
        )

    def g_oracle(u, a):
        return GJet2(g=-a + c * u, gx=c, gy=-1.0, gxx=0.0, gxy=0.0, gyy=0.0)

    def manifold_guess(u_i, u_j):
        return I - b * u_j + curtu_phi(u_i, p)

    def builder(params: Mapping[str, float], eps: float = p.epsilon):
        q = CurtuParams(I=params["I"], b=params["b"], c=params["c"],
                        r=params["r"], theta=params["theta"], epsilon=eps)
        return build_curtu(q)

    return ModelDefinition(
        name="curtu",
        params={"I": I, "b": b, "c": c, "r": r, "theta": theta},
        epsilon=p.epsilon,
        f=f,
        g=g,
        domain=StateBox(0.0, 1.0, -1.0, 2.0, open_x=True),
        f_jet_oracle=f_oracle,
        g_jet_oracle=g_oracle,
        manifold_guess=manifold_guess,
        equilibrium_guess=(0.93, 0.59),
        length_scale=1.0,
        channel_names=("u1", "u2", "a1", "a2"),
        builder=builder,
    )


# ---------------------------------------------------------------------------
# Coupled Morris-Lecar neurons with fast synaptic inhibition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MorrisLecarParams:
    """Conductance-based parameters (uF/cm^2, mV, mS/cm^2, uA/cm^2, 1/ms)."""

    C: float = 20.0
    V_K: float = -84.0
    g_K: float = 8.0
    V_Ca: float = 120.0
    g_Ca: float = 4.4
    V_L: float = -60.0
    g_L: float = 2.0
    I_app: float = 80.0
    V_syn: float = -70.0
    g_s: float = 0.3
    phi_n: float = 0.01
    v1: float = -1.2
    v2: float = 18.0
    v3: float = 2.0
    v4: float = 30.0
    k_s: float = 2.0
    theta_s: float = -25.0

    def __post_init__(self):
        if self.C <= 0:
            raise ValueError("C must be positive")
        for name in ("g_K", "g_Ca", "g_L", "g_s"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")


def _ml_f0_derivs(V, p: MorrisLecarParams):
    """(f0, f0', f0'', f0''') of the instantaneous current balance."""
    t = tanh((V - p.v1) / p.v2)
    m = 0.5 * (1.0 + t)
    m1 = 0.5 * (1.0 - t * t) / p.v2
    m2 = -t * (1.0 - t * t) / p.v2 ** 2
    m3 = -(1.0 - t * t) * (1.0 - 3.0 * t * t) / p.v2 ** 3
    dv = V - p.V_Ca
    f0 = p.I_app - p.g_Ca * m * dv - p.g_L * (V - p.V_L)
    f0_1 = -p.g_Ca * (m1 * dv + m) - p.g_L
    f0_2 = -p.g_Ca * (m2 * dv + 2.0 * m1)
    f0_3 = -p.g_Ca * (m3 * dv + 3.0 * m2)
    return f0, f0_1, f0_2, f0_3


def _ml_syn_derivs(V, p: MorrisLecarParams):
    """(s, s', s'', s''') of the synaptic activation sigmoid."""
    s = 1.0 / (1.0 + exp(-(V - p.theta_s) / p.k_s))
    q = s * (1.0 - s)
    s1 = q / p.k_s
    s2 = q * (1.0 - 2.0 * s) / p.k_s ** 2
    s3 = q * (1.0 - 6.0 * s + 6.0 * s * s) / p.k_s ** 3
    return s, s1, s2, s3


def ml_analytic_jet(p: MorrisLecarParams, V_i: float, V_j: float, n: float) -> FJet3:
    """Closed-form f-jet of the Morris-Lecar fast equation (dV/dt units).

    Valid at any point; the mixed partial f_112 vanishes identically because
    the coupling is additive and linear in V_i.
    """
    C = p.C
    f0, f0_1, f0_2, f0_3 = _ml_f0_derivs(V_i, p)
    s, s1, s2, s3 = _ml_syn_derivs(V_j, p)
    dvs = V_i - p.V_syn
    return FJet3(
        f=(f0 - p.g_K * n * (V_i - p.V_K) - p.g_s * s * dvs) / C,
        f1=(f0_1 - p.g_K * n - p.g_s * s) / C,
        f2=-p.g_s * s1 * dvs / C,
        fy=-p.g_K * (V_i - p.V_K) / C,
        f11=f0_2 / C,
        f12=-p.g_s * s1 / C,
        f22=-p.g_s * s2 * dvs / C,
        f1y=-p.g_K / C,
        f2y=0.0,
        f111=f0_3 / C,
        f112=0.0,
        f122=-p.g_s * s2 / C,
        f222=-p.g_s * s3 * dvs / C,
    )


def build_morris_lecar(p: MorrisLecarParams | None = None,
                       epsilon: float = 0.01) -> ModelDefinition:
    """Two Morris-Lecar neurons, fast variable V, slow gating variable n.

    f is the membrane equation divided by C; g = phi_n (n_inf(V) - n)/tau(V)
    with tau(V) = 1/cosh((V - v3)/(2 v4)).  The explicit time-scale ratio
    ``epsilon`` multiplies g on top of phi_n; with the stock parameters the
    symmetric equilibrium is a saddle-focus (and the system shows MMOs) for
    epsilon well below phi_n-only scaling.
    """
    if p is None:
        p = MorrisLecarParams()

    C = p.C

    def f(V_i, V_j, n):
        t = tanh((V_i - p.v1) / p.v2)
        m = 0.5 * (1.0 + t)
        s = 1.0 / (1.0 + exp(-(V_j - p.theta_s) / p.k_s))
        return (p.I_app
                - p.g_Ca * m * (V_i - p.V_Ca)
                - p.g_K * n * (V_i - p.V_K)
                - p.g_L * (V_i - p.V_L)
                - p.g_s * s * (V_i - p.V_syn)) / C

    def g(V, n):
        n_inf = 0.5 * (1.0 + tanh((V - p.v3) / p.v4))
        return p.phi_n * (n_inf - n) * cosh((V - p.v3) / (2.0 * p.v4))

    def f_oracle(V_i, V_j, n):
        return ml_analytic_jet(p, V_i, V_j, n)

    def g_oracle(V, n):
        tn = tanh((V - p.v3) / p.v4)
        n_inf = 0.5 * (1.0 + tn)
        n1 = 0.5 * (1.0 - tn * tn) / p.v4
        n2 = -tn * (1.0 - tn * tn) / p.v4 ** 2
        eta = (V - p.v3) / (2.0 * p.v4)
        ch, sh = cosh(eta), sinh(eta)
        dn = n_inf - n
        ph = p.phi_n
        return GJet2(
            g=ph * dn * ch,
            gx=ph * (n1 * ch + dn * sh / (2.0 * p.v4)),
            gy=-ph * ch,
            gxx=ph * (n2 * ch + n1 * sh / p.v4 + dn * ch / (4.0 * p.v4 ** 2)),
            gxy=-ph * sh / (2.0 * p.v4),
            gyy=0.0,
        )

    def manifold_guess(V_i, V_j):
        f0, _, _, _ = _ml_f0_derivs(V_i, p)
        s, _, _, _ = _ml_syn_derivs(V_j, p)
        return (f0 - p.g_s * s * (V_i - p.V_syn)) / (p.g_K * (V_i - p.V_K))

    def builder(params: Mapping[str, float], eps: float = epsilon):
        q = MorrisLecarParams(**params)
        return build_morris_lecar(q, epsilon=eps)

    return ModelDefinition(
        name="morris_lecar",
        params=asdict(p),
        epsilon=epsilon,
        f=f,
        g=g,
        domain=StateBox(-84.0, 120.0, 0.0, 1.0),
        f_jet_oracle=f_oracle,
        g_jet_oracle=g_oracle,
        manifold_guess=manifold_guess,
        equilibrium_guess=(-30.2, 0.104),
        length_scale=2.0,   # sharpest voltage scale (synaptic k_s), in mV
        channel_names=("V1", "V2", "n1", "n2"),
        builder=builder,
    )


# ---------------------------------------------------------------------------
# Registry / config loading
# ---------------------------------------------------------------------------

MODEL_BUILDERS = {
    "curtu": lambda params, eps: build_curtu(
        CurtuParams(**{**params, "epsilon": eps if eps is not None else 0.01})
    ),
    "morris_lecar": lambda params, eps: build_morris_lecar(
        MorrisLecarParams(**params),
        epsilon=eps if eps is not None else 0.01,
    ),
}

_DEFAULTS = {
    "curtu": {k: v for k, v in asdict(CurtuParams()).items() if k != "epsilon"},
    "morris_lecar": asdict(MorrisLecarParams()),
}


def build_model(name: str, overrides: Mapping[str, float] | None = None,
                epsilon: float | None = None) -> ModelDefinition:
    """Instantiate a registered model with parameter overrides.

    Unknown model names and unknown parameter keys are rejected.
    """
    if name not in MODEL_BUILDERS:
        raise ConfigError(
            f"unknown model {name!r}; available: {sorted(MODEL_BUILDERS)}"
        )
    params = dict(_DEFAULTS[name])
    for key, val in (overrides or {}).items():
        if key not in params:
            raise ConfigError(f"unknown parameter {key!r} for model {name!r}")
        params[key] = float(val)
    return MODEL_BUILDERS[name](params, epsilon)


def params_from_json(path: str) -> dict:
    """Load a parameter-record JSON file ({"model": ..., "params": {...}})."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
