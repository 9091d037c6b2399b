"""Center-manifold reduction at a cusped singularity.

Eliminating the strongly contracting symmetric fast direction v (eigenvalue
2 f1 < 0) leaves a three-dimensional slow-fast system in the symmetry-adapted
coordinates (u, w, z):

    u' = fy z + Omega u w + Gamma u^3
    w' = eps (g0 + nu_eff w + rho_eff u^2)
    z' = eps (gx u + gy z)

(cubic truncation; all downstream claims are for the truncation).  Its
critical surface z = Q(u, w) carries the cusp, and the desingularized slow
flow's eigenvalues at the cusp set the small-amplitude-oscillation count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import ModelDefinition, PairState, f_jet, g_jet
from .errors import InconsistencyError
from .manifold import DEFAULT_TOL, ToleranceConfig, solve_Y

__all__ = [
    "ReducedCoefficients",
    "ConditionReport",
    "SaoPrediction",
    "OPENS_W_NEGATIVE",
    "OPENS_W_POSITIVE",
    "reduction_coefficients",
    "reduced_field",
    "q_surface",
    "classify_opening",
    "check_conditions",
    "desingularized_eigenvalues",
    "prediction_from_eigenvalues",
    "sao_count",
    "embed_reduced_state",
    "project_full_state",
]

OPENS_W_NEGATIVE = "opens_w_negative"
OPENS_W_POSITIVE = "opens_w_positive"


@dataclass(frozen=True)
class ReducedCoefficients:
    """Everything the reduced 3D system needs, evaluated at the cusp."""

    f1: float
    f2: float
    fy: float
    h0w: float        # center-manifold coefficient of w
    huu: float        # center-manifold coefficient of u^2
    omega: float      # coefficient of u*w in the fast equation
    gamma: float      # coefficient of u^3 in the fast equation
    g0: float         # slow drift at the cusp
    nu_eff: float     # effective linear w-coefficient of the w-equation
    rho_eff: float    # effective u^2-coefficient of the w-equation
    gx: float
    gy: float
    x_star: float
    y_star: float

    def to_dict(self):
        return {
            "f1": self.f1, "f2": self.f2, "fy": self.fy,
            "h0w": self.h0w, "huu": self.huu,
            "omega": self.omega, "gamma": self.gamma,
            "g0": self.g0, "nu_eff": self.nu_eff, "rho_eff": self.rho_eff,
            "gx": self.gx, "gy": self.gy,
            "x_star": self.x_star, "y_star": self.y_star,
        }


@dataclass(frozen=True)
class ConditionReport:
    """Verdicts and witnesses of the six cusp-mechanism conditions.

    c1 inhibitory coupling        f2 < 0
    c2 slow decay                 gy <= 0
    c3 cross-derivative product   fy*gx < 0
    c4 cubic non-degeneracy       Gamma != 0
    c5 cusp not an equilibrium    g0 != 0
    c6 crossing from attracting   g0*Omega > 0 and Gamma > 0
    """

    c1: bool
    c2: bool
    c3: bool
    c4: bool
    c5: bool
    c6: bool
    all_satisfied: bool
    witness_f2: float
    witness_gy: float
    witness_fygx: float
    witness_gamma: float
    witness_g0: float
    witness_g0_omega: float
    opening: str
    central_sheet_attracting: bool

    def to_dict(self):
        return {
            "c1": self.c1, "c2": self.c2, "c3": self.c3,
            "c4": self.c4, "c5": self.c5, "c6": self.c6,
            "all_satisfied": self.all_satisfied,
            "witness_f2": self.witness_f2,
            "witness_gy": self.witness_gy,
            "witness_fygx": self.witness_fygx,
            "witness_gamma": self.witness_gamma,
            "witness_g0": self.witness_g0,
            "witness_g0_omega": self.witness_g0_omega,
            "opening": self.opening,
            "central_sheet_attracting": self.central_sheet_attracting,
        }


@dataclass(frozen=True)
class SaoPrediction:
    """Eigenvalues of the desingularized slow flow and the implied SAO count.

    ``ratio`` is magnitude-ordered (|strong| / |weak| >= 1): the raw
    eigenvalue quotient of the literature would land in (0, 1] whenever the
    weak eigenvalue is listed first, making its floor useless, so the
    magnitude convention is used and both eigenvalues are reported.
    """

    lambda_strong: float
    lambda_weak: float
    ratio: float
    n_sao: Optional[int]
    resonance_flag: bool

    def to_dict(self):
        return {
            "lambda_strong": self.lambda_strong,
            "lambda_weak": self.lambda_weak,
            "ratio": self.ratio,
            "n_sao": self.n_sao,
            "resonance_flag": self.resonance_flag,
        }


def reduction_coefficients(model: ModelDefinition, x_star: float,
                           tol: ToleranceConfig = DEFAULT_TOL) -> ReducedCoefficients:
    """Reduced-system coefficients from the f- and g-jets at the cusp.

    With d = f11 - f22, m = f11 - 2 f12 + f22 and t = f111 - 3 f112
    + 3 f122 - f222:

        h0w  = -fy / (2 f1)          huu  = -m / (4 f1)
        Omega = (f1y - f2y) - d fy/(2 f1)
        Gamma = t/6 - d m/(4 f1)
        nu_eff  = gy - gx fy/(2 f1)
        rho_eff = gx huu + gxx/2
    """
    y_star = solve_Y(model, x_star, x_star, tol=tol)
    fj = f_jet(model, x_star, x_star, y_star)
    gj = g_jet(model, x_star, y_star)
    if abs(fj.f1) < tol.fy_floor:
        raise InconsistencyError("f1 ~ 0 at cusp: reduction undefined")

    d = fj.f11 - fj.f22
    m = fj.f11 - 2.0 * fj.f12 + fj.f22
    t = fj.f111 - 3.0 * fj.f112 + 3.0 * fj.f122 - fj.f222
    h0w = -fj.fy / (2.0 * fj.f1)
    huu = -m / (4.0 * fj.f1)
    omega = (fj.f1y - fj.f2y) - d * fj.fy / (2.0 * fj.f1)
    gamma = t / 6.0 - d * m / (4.0 * fj.f1)

    return ReducedCoefficients(
        f1=fj.f1, f2=fj.f2, fy=fj.fy,
        h0w=h0w, huu=huu,
        omega=omega, gamma=gamma,
        g0=gj.g,
        nu_eff=gj.gy - gj.gx * fj.fy / (2.0 * fj.f1),
        rho_eff=gj.gx * huu + 0.5 * gj.gxx,
        gx=gj.gx, gy=gj.gy,
        x_star=x_star, y_star=y_star,
    )


def reduced_field(rc: ReducedCoefficients, u: float, w: float, z: float,
                  eps: float):
    """Right-hand side of the reduced 3D system (cubic truncation)."""
    du = rc.fy * z + rc.omega * u * w + rc.gamma * u ** 3
    dw = eps * (rc.g0 + rc.nu_eff * w + rc.rho_eff * u * u)
    dz = eps * (rc.gx * u + rc.gy * z)
    return (du, dw, dz)


def q_surface(rc: ReducedCoefficients, u: float, w: float) -> float:
    """Critical surface z = Q(u, w) of the reduced system (odd in u)."""
    return -(rc.omega / rc.fy) * u * w - (rc.gamma / rc.fy) * u ** 3


def classify_opening(rc: ReducedCoefficients):
    """Opening direction of the cusp and attractivity of its central sheet.

    The cusp opens toward w < 0 exactly when Gamma/Omega > 0; the central
    sheet is attracting when Omega/fy has the opposite sign of the opening
    (Omega/fy < 0 with a w<0 opening, Omega/fy > 0 with a w>0 opening).
    """
    if rc.omega == 0.0 or rc.gamma == 0.0 or rc.fy == 0.0:
        raise InconsistencyError("degenerate coefficients: cannot classify")
    ratio_go = rc.gamma / rc.omega
    ratio_of = rc.omega / rc.fy
    opening = OPENS_W_NEGATIVE if ratio_go > 0.0 else OPENS_W_POSITIVE
    attracting = (ratio_go > 0.0 and ratio_of < 0.0) or \
                 (ratio_go < 0.0 and ratio_of > 0.0)
    return opening, attracting


def check_conditions(model: ModelDefinition, x_star: float,
                     margin: float = 1e-10,
                     tol: ToleranceConfig = DEFAULT_TOL,
                     rc: Optional[ReducedCoefficients] = None) -> ConditionReport:
    """Evaluate the six mechanism conditions at a verified cusp.

    Strict inequalities are tested against ``margin`` (robustly nonzero);
    the non-strict c2 tolerates values up to +margin.
    """
    if rc is None:
        rc = reduction_coefficients(model, x_star, tol=tol)
    fygx = rc.fy * rc.gx
    g0om = rc.g0 * rc.omega
    c1 = rc.f2 < -margin
    c2 = rc.gy <= margin
    c3 = fygx < -margin
    c4 = abs(rc.gamma) > margin
    c5 = abs(rc.g0) > margin
    c6 = g0om > margin and rc.gamma > margin
    opening, attracting = classify_opening(rc)
    return ConditionReport(
        c1=c1, c2=c2, c3=c3, c4=c4, c5=c5, c6=c6,
        all_satisfied=c1 and c2 and c3 and c4 and c5 and c6,
        witness_f2=rc.f2,
        witness_gy=rc.gy,
        witness_fygx=fygx,
        witness_gamma=rc.gamma,
        witness_g0=rc.g0,
        witness_g0_omega=g0om,
        opening=opening,
        central_sheet_attracting=attracting,
    )


def desingularized_field(rc: ReducedCoefficients, u: float, w: float):
    """Planar desingularized slow flow on the critical surface, chart (u, w).

    On z = Q(u, w) the slow constraint gives Q_u u' = gx u + gy Q - Q_w w'
    with w' = g0 + nu w + rho u^2.  Multiplying the field by sign(fy) * Q_u
    removes the fold-line singularity while preserving time orientation on
    the attracting sheet (where fy * Q_u > 0).
    """
    s = math.copysign(1.0, rc.fy)
    alpha = -rc.omega / rc.fy   # Q = alpha*u*w + beta*u^3
    beta = -rc.gamma / rc.fy
    q = alpha * u * w + beta * u ** 3
    q_u = alpha * w + 3.0 * beta * u * u
    q_w = alpha * u
    big_g = rc.g0 + rc.nu_eff * w + rc.rho_eff * u * u
    n_val = rc.gx * u + rc.gy * q - q_w * big_g
    return (s * n_val, s * q_u * big_g)


def desingularized_eigenvalues(rc: ReducedCoefficients,
                               conditions: Optional[ConditionReport] = None,
                               cross_check: bool = True) -> SaoPrediction:
    """Eigenvalues of the desingularized slow flow at the cusp.

    The origin is an equilibrium of the desingularized planar system; its
    linearization is diagonal:

        lambda_u = sign(fy) gx + Omega g0 / |fy|
        lambda_w = -Omega g0 / |fy|

    A finite-difference Jacobian of the constructed planar field cross-checks
    the closed form.  When a satisfied condition report is supplied and an
    eigenvalue is nonnegative, an ``InconsistencyError`` is raised instead of
    returning a silently meaningless count.
    """
    afy = abs(rc.fy)
    s = math.copysign(1.0, rc.fy)
    lam_u = s * rc.gx + rc.omega * rc.g0 / afy
    lam_w = -rc.omega * rc.g0 / afy

    if cross_check:
        h = 1e-7 * max(1.0, abs(rc.g0), abs(rc.gx))
        j = np.empty((2, 2))
        for col, dv in enumerate(((h, 0.0), (0.0, h))):
            up = desingularized_field(rc, dv[0], dv[1])
            dn = desingularized_field(rc, -dv[0], -dv[1])
            j[0, col] = (up[0] - dn[0]) / (2.0 * h)
            j[1, col] = (up[1] - dn[1]) / (2.0 * h)
        fd = sorted(np.linalg.eigvals(j).real)
        an = sorted((lam_u, lam_w))
        scale = max(1.0, abs(an[0]), abs(an[1]))
        if max(abs(fd[0] - an[0]), abs(fd[1] - an[1])) > 1e-6 * scale:
            raise InconsistencyError(
                f"desingularized linearization mismatch: analytic {an}, "
                f"finite-difference {fd}")

    if conditions is not None and conditions.all_satisfied:
        if lam_u >= 0.0 or lam_w >= 0.0:
            raise InconsistencyError(
                "conditions satisfied but a desingularized eigenvalue is "
                f"nonnegative: ({lam_u}, {lam_w}); check sign conventions")

    return prediction_from_eigenvalues(lam_u, lam_w)


def prediction_from_eigenvalues(lam_a: float, lam_b: float,
                                resonance_tol: float = 1e-6) -> SaoPrediction:
    """Magnitude-order a raw eigenvalue pair into a SAO prediction."""
    if abs(lam_a) >= abs(lam_b):
        strong, weak = lam_a, lam_b
    else:
        strong, weak = lam_b, lam_a
    ratio = math.inf if weak == 0.0 else strong / weak
    resonance = math.isfinite(ratio) and abs(ratio - round(ratio)) < resonance_tol
    n = None
    if math.isfinite(ratio) and not resonance and strong < 0.0 and weak < 0.0:
        n = int(math.floor(ratio))
    return SaoPrediction(
        lambda_strong=strong,
        lambda_weak=weak,
        ratio=ratio,
        n_sao=n,
        resonance_flag=resonance,
    )


def sao_count(pred: SaoPrediction) -> Optional[int]:
    """Predicted SAO count: floor of the magnitude-ordered eigenvalue ratio.

    Undefined (None) at integer resonances of the ratio.
    """
    if pred.resonance_flag:
        return None
    return pred.n_sao


def embed_reduced_state(rc: ReducedCoefficients, u: float, w: float,
                        z: float) -> PairState:
    """Map a reduced state to full-system coordinates via the center manifold.

    Uses the quadratic truncation v = h0w*w + huu*u^2 of the manifold graph.
    """
    v = rc.h0w * w + rc.huu * u * u
    return PairState(
        x1=rc.x_star + v + u,
        x2=rc.x_star + v - u,
        y1=rc.y_star + w + z,
        y2=rc.y_star + w - z,
    )


def project_full_state(rc: ReducedCoefficients, s: PairState):
    """Symmetry-adapted coordinates (v, u, w, z) of a full state, cusp-centered."""
    v = 0.5 * (s.x1 + s.x2) - rc.x_star
    u = 0.5 * (s.x1 - s.x2)
    w = 0.5 * (s.y1 + s.y2) - rc.y_star
    z = 0.5 * (s.y1 - s.y2)
    return (v, u, w, z)
