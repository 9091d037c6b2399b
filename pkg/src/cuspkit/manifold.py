"""Critical-manifold geometry: folds, the cusp test, and fold-curve tracing.

The critical manifold is the graph y_i = Y(x_i, x_j) of the fast nullcline.
Symmetric folds are the diagonal points where the projection Jacobian DF
drops rank along the antisymmetric direction (1, -1); a fold is a
non-degenerate cusp when the second-order transversality value D* and the
cubic coefficient A of the antisymmetric graph coordinate are both nonzero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from . import autodiff as ad
from .core import ModelDefinition, f_jet
from .errors import (CuspkitError, FitError, InconsistencyError,
                     RootFindError, SolvabilityError)

__all__ = [
    "ToleranceConfig",
    "CuspReport",
    "FoldCurve",
    "solve_Y",
    "critical_y",
    "df_at",
    "find_symmetric_fold",
    "cusp_test",
    "trace_fold_curve",
    "cusp_exponent_fit",
]


@dataclass(frozen=True)
class ToleranceConfig:
    """Central numeric tolerances for manifold computations."""

    newton_ftol: float = 1e-12      # |f| at a converged Y solve
    newton_max_iter: int = 50
    fy_floor: float = 1e-12         # solvability threshold for |f_y|
    fold_rtol: float = 1e-10        # |f1 - f2| at a polished fold
    fold_scan_points: int = 400
    det_tol: float = 1e-8           # |det DF| on a traced fold curve
    dstar_tol: float = 1e-8         # non-degeneracy threshold on D*
    a_tol: float = 1e-8             # transversality threshold on A
    step_b: float = 1e-3            # mixed-difference step factor for B
    step_a: float = 1e-2            # third-difference step factor for A


DEFAULT_TOL = ToleranceConfig()


@dataclass(frozen=True)
class CuspReport:
    """Verdict and local expansion data at a symmetric fold point."""

    x_star: float
    y_star: float
    f1_star: float
    f2_star: float
    fy_star: float
    d_star: float               # second-order non-degeneracy value
    A: float                    # cubic coefficient of the antisymmetric graph
    B: float                    # mixed coefficient, equals Y_11 - Y_22
    is_nondegenerate_cusp: bool
    fold_eigenvalues: tuple     # eigenvalues of DF at the point

    def to_dict(self):
        return {
            "x_star": self.x_star,
            "y_star": self.y_star,
            "f1_star": self.f1_star,
            "f2_star": self.f2_star,
            "fy_star": self.fy_star,
            "d_star": self.d_star,
            "A": self.A,
            "B": self.B,
            "is_nondegenerate_cusp": self.is_nondegenerate_cusp,
            "fold_eigenvalues": list(self.fold_eigenvalues),
        }


@dataclass
class FoldCurve:
    """Fold locus {det DF = 0} on the critical manifold, ordered by arclength.

    ``points`` holds (x1, x2, y1, y2); ``projections`` the symmetry-adapted
    (v, u, w, z) relative to the cusp.  ``truncated`` flags a continuation
    that stopped early in either direction.
    """

    points: np.ndarray
    projections: np.ndarray
    arclength: np.ndarray
    x_star: float
    y_star: float
    truncated: bool = False

    CSV_HEADER = "x1,x2,y1,y2,v,u,w,z"

    def to_csv(self, path):
        data = np.hstack([self.points, self.projections])
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.CSV_HEADER + "\n")
            for row in data:
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def solve_Y(model: ModelDefinition, x_i: float, x_j: float,
            y_guess: Optional[float] = None,
            tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """Solve f(x_i, x_j, y) = 0 for the slow variable by damped Newton.

    Converges to |f| < ``tol.newton_ftol``; raises ``SolvabilityError`` when
    f_y vanishes at an iterate and ``RootFindError`` (with the last residual)
    on non-convergence.
    """
    if y_guess is None:
        if model.manifold_guess is None:
            raise RootFindError(
                "solve_Y needs y_guess (model has no manifold_guess)")
        y = float(model.manifold_guess(x_i, x_j))
    else:
        y = float(y_guess)

    f = model.f
    res = f(x_i, x_j, y)
    for _ in range(tol.newton_max_iter):
        if abs(res) < tol.newton_ftol:
            return y
        fy = ad.first_partial(f, (x_i, x_j, y), 2)
        if abs(fy) < tol.fy_floor * max(1.0, abs(res)):
            raise SolvabilityError(
                f"f_y ~ 0 at y={y!r} while solving the critical manifold")
        step = -res / fy
        lam = 1.0
        for _ in range(40):
            y_new = y + lam * step
            res_new = f(x_i, x_j, y_new)
            if math.isfinite(res_new) and abs(res_new) < abs(res):
                break
            lam *= 0.5
        else:
            raise RootFindError(
                f"Y solve stalled at (x_i={x_i}, x_j={x_j})", residual=res)
        y, res = y_new, res_new
    if abs(res) < tol.newton_ftol:
        return y
    raise RootFindError(
        f"Y solve did not converge at (x_i={x_i}, x_j={x_j})", residual=res)


def critical_y(model, x_i, x_j, y_guess=None, tol=DEFAULT_TOL):
    """Alias for :func:`solve_Y` (reads better at call sites)."""
    return solve_Y(model, x_i, x_j, y_guess=y_guess, tol=tol)


def df_at(model: ModelDefinition, x1: float, x2: float,
          y1: Optional[float] = None, y2: Optional[float] = None,
          tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """Projection Jacobian DF of the critical-manifold graph at (x1, x2).

    Rows are gradients of Y(x1, x2) and Y(x2, x1); entries come from
    implicit differentiation, Y_k = -f_k / f_y per cell.
    """
    if y1 is None:
        y1 = solve_Y(model, x1, x2, tol=tol)
    if y2 is None:
        y2 = solve_Y(model, x2, x1,
                     y_guess=None if model.manifold_guess else y1, tol=tol)
    j1 = f_jet(model, x1, x2, y1)
    j2 = f_jet(model, x2, x1, y2)
    for j in (j1, j2):
        if abs(j.fy) < tol.fy_floor:
            raise SolvabilityError("f_y ~ 0 on the critical manifold")
    return np.array([
        [-j1.f1 / j1.fy, -j1.f2 / j1.fy],
        [-j2.f2 / j2.fy, -j2.f1 / j2.fy],
    ])


def _fold_residual(model, x, y_seed, tol):
    """r(x) = f1 - f2 on the symmetric diagonal; returns (r, y)."""
    y = solve_Y(model, x, x, y_guess=y_seed, tol=tol)
    jet = f_jet(model, x, x, y)
    return jet.f1 - jet.f2, y


def find_symmetric_fold(model: ModelDefinition, bracket,
                        n_scan: Optional[int] = None,
                        y_guess: Optional[float] = None,
                        tol: ToleranceConfig = DEFAULT_TOL):
    """All symmetric fold points in ``bracket``.

    Scans r(x) = f1 - f2 on a uniform grid (default 400 subintervals),
    carrying the Y solve along as a Newton seed, then polishes each sign
    change (Brent) to |r| below ``tol.fold_rtol``.  Returns a (possibly
    empty) sorted list.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not lo < hi:
        raise ValueError("bracket must satisfy lo < hi")
    n = n_scan or tol.fold_scan_points
    xs = np.linspace(lo, hi, n + 1)

    rs = np.empty_like(xs)
    y = y_guess
    ys = np.empty_like(xs)
    for k, x in enumerate(xs):
        r, y = _fold_residual(model, float(x), y, tol)
        rs[k], ys[k] = r, y

    roots = []
    for k in range(n):
        if rs[k] == 0.0:
            roots.append(float(xs[k]))
            continue
        if math.copysign(1.0, rs[k]) != math.copysign(1.0, rs[k + 1]):
            seed = {"y": ys[k]}

            def r_of_x(x):
                r, seed["y"] = _fold_residual(model, x, seed["y"], tol)
                return r

            root = brentq(r_of_x, float(xs[k]), float(xs[k + 1]),
                          xtol=1e-14, rtol=8.9e-16)
            res, _ = _fold_residual(model, root, seed["y"], tol)
            if abs(res) > tol.fold_rtol:
                raise RootFindError(
                    f"fold polish left |f1-f2|={abs(res):.3e} at x={root!r}",
                    residual=res)
            roots.append(float(root))
    return roots


def _z_coord(model, x_star, v, u, y_seed, tol):
    """Antisymmetric graph coordinate Z(v, u) = (y1 - y2)/2 about the cusp."""
    ya = solve_Y(model, x_star + v + u, x_star + v - u, y_guess=y_seed, tol=tol)
    yb = solve_Y(model, x_star + v - u, x_star + v + u, y_guess=y_seed, tol=tol)
    return 0.5 * (ya - yb)


def _mixed_vu(model, x_star, y_star, h, tol):
    """Central mixed difference of Z with respect to (v, u) at the cusp."""
    def zz(v, u):
        return _z_coord(model, x_star, v, u, y_star, tol)

    return (zz(h, h) - zz(h, -h) - zz(-h, h) + zz(-h, -h)) / (4.0 * h * h)


def _third_u(model, x_star, y_star, h, tol):
    """Central third difference of Z(0, u) along u at the cusp."""
    def zz(u):
        return _z_coord(model, x_star, 0.0, u, y_star, tol)

    return (zz(2 * h) - 2.0 * zz(h) + 2.0 * zz(-h) - zz(-2 * h)) / (2.0 * h ** 3)


def cusp_test(model: ModelDefinition, x_star: float,
              tol: ToleranceConfig = DEFAULT_TOL) -> CuspReport:
    """Non-degeneracy test at a symmetric fold point.

    D* comes from the f-jet; B (the mixed coefficient, = Y_11 - Y_22) from a
    Richardson-extrapolated mixed difference of the antisymmetric graph
    coordinate; A from third differences along the antisymmetric axis.
    """
    y_star = solve_Y(model, x_star, x_star, tol=tol)
    jet = f_jet(model, x_star, x_star, y_star)

    fold_res = jet.f1 - jet.f2
    scale = max(1.0, abs(jet.f1), abs(jet.f2))
    if abs(fold_res) > 1e-6 * scale:
        raise InconsistencyError(
            f"x={x_star!r} is not a symmetric fold: f1-f2={fold_res!r}")
    if abs(jet.fy) < tol.fy_floor:
        raise SolvabilityError("f_y ~ 0 at the fold point")

    d_star = jet.f11 - jet.f22 - 2.0 * (jet.f1 / jet.fy) * (jet.f1y - jet.f2y)

    hb = tol.step_b * model.length_scale
    b_h = _mixed_vu(model, x_star, y_star, hb, tol)
    b_h2 = _mixed_vu(model, x_star, y_star, 0.5 * hb, tol)
    B = (4.0 * b_h2 - b_h) / 3.0

    ha = tol.step_a * model.length_scale
    a_h = _third_u(model, x_star, y_star, ha, tol)
    a_h2 = _third_u(model, x_star, y_star, 0.5 * ha, tol)
    A = (4.0 * a_h2 - a_h) / 3.0 / 6.0

    eig_plus = -(jet.f1 + jet.f2) / jet.fy
    eig_minus = -(jet.f1 - jet.f2) / jet.fy

    return CuspReport(
        x_star=x_star,
        y_star=y_star,
        f1_star=jet.f1,
        f2_star=jet.f2,
        fy_star=jet.fy,
        d_star=d_star,
        A=A,
        B=B,
        is_nondegenerate_cusp=(abs(d_star) > tol.dstar_tol
                               and abs(A) > tol.a_tol),
        fold_eigenvalues=(eig_plus, eig_minus),
    )


def _det_df(model, x1, x2, seeds, tol):
    """det DF with Y-solve seeding; returns (det, (y1, y2))."""
    s1, s2 = seeds if seeds is not None else (None, None)
    y1 = solve_Y(model, x1, x2, y_guess=s1, tol=tol)
    y2 = solve_Y(model, x2, x1, y_guess=s2 if s2 is not None else y1, tol=tol)
    j1 = f_jet(model, x1, x2, y1)
    j2 = f_jet(model, x2, x1, y2)
    a = (-j1.f1 / j1.fy) * (-j2.f1 / j2.fy)
    b = (-j1.f2 / j1.fy) * (-j2.f2 / j2.fy)
    return a - b, (y1, y2)


def trace_fold_curve(model: ModelDefinition, x_star: float,
                     arclength: float = 0.1, n_points: int = 120,
                     tol: ToleranceConfig = DEFAULT_TOL) -> FoldCurve:
    """Pseudo-arclength continuation of the fold through the cusp.

    Traces {det DF = 0, f = 0 on both cells} in both antisymmetric
    directions from the cusp; ``arclength`` is the target length per
    direction (in fast-variable units), ``n_points`` the points per
    direction.  A direction that stalls marks the curve ``truncated``.
    """
    y_star = solve_Y(model, x_star, x_star, tol=tol)
    scale = model.length_scale
    ds0 = arclength / max(1, n_points)
    fd_h = 1e-6 * scale

    def G(p, seeds):
        return _det_df(model, p[0], p[1], seeds, tol)

    def grad_G(p, seeds):
        gx1 = (G((p[0] + fd_h, p[1]), seeds)[0]
               - G((p[0] - fd_h, p[1]), seeds)[0]) / (2 * fd_h)
        gx2 = (G((p[0], p[1] + fd_h), seeds)[0]
               - G((p[0], p[1] - fd_h), seeds)[0]) / (2 * fd_h)
        return np.array([gx1, gx2])

    def correct(pred, tangent, ds, seeds):
        """Newton on det DF = 0 in the plane orthogonal to the tangent.

        Returns (q, ys) on success, None on any solve failure or
        non-convergence (the caller halves the step).
        """
        q = pred.copy()
        try:
            for _ in range(4):
                det, ys = G(q, seeds)
                if abs(det) < tol.det_tol * 1e-2:
                    return q, ys
                grad = grad_G(q, seeds)
                denom = float(grad @ grad - (grad @ tangent) ** 2)
                if denom <= 0.0:
                    return None
                step = -det * (grad - (grad @ tangent) * tangent) / denom
                norm = float(np.hypot(*step))
                if norm > 2.0 * ds:
                    step *= 2.0 * ds / norm
                q = q + step
            det, ys = G(q, seeds)
            if abs(det) < tol.det_tol * 1e-2:
                return q, ys
        except CuspkitError:
            return None
        return None

    truncated = False
    branches = []
    for sign in (+1.0, -1.0):
        pts = []
        p = np.array([x_star, x_star])
        tangent = sign * np.array([1.0, -1.0]) / math.sqrt(2.0)
        ds = ds0
        seeds = (y_star, y_star)
        while len(pts) < n_points:
            hit = None
            for _ in range(18):
                result = correct(p + ds * tangent, tangent, ds, seeds)
                if result is not None:
                    hit = result
                    break
                ds *= 0.5
            if hit is None:
                truncated = True
                break
            q, ys = hit
            new_tangent = q - p
            norm = float(np.hypot(*new_tangent))
            if norm > 0:
                tangent = new_tangent / norm
            p = q
            seeds = ys
            pts.append((q[0], q[1], ys[0], ys[1]))
            ds = min(ds * 1.3, 4.0 * ds0)
        branches.append(pts)

    fwd, bwd = branches
    rows = [(x_star, x_star, y_star, y_star)]
    all_pts = [r for r in reversed(bwd)] + rows + fwd
    pts = np.array(all_pts)
    v = 0.5 * (pts[:, 0] + pts[:, 1]) - x_star
    u = 0.5 * (pts[:, 0] - pts[:, 1])
    w = 0.5 * (pts[:, 2] + pts[:, 3]) - y_star
    z = 0.5 * (pts[:, 2] - pts[:, 3])
    proj = np.column_stack([v, u, w, z])
    seg = np.vstack([[0.0, 0.0], np.diff(pts[:, :2], axis=0)])
    s = np.cumsum(np.hypot(seg[:, 0], seg[:, 1]))
    s -= s[len(bwd)]  # arclength zero at the cusp
    return FoldCurve(points=pts, projections=proj, arclength=s,
                     x_star=x_star, y_star=y_star, truncated=truncated)


def cusp_exponent_fit(curve: FoldCurve, min_points: int = 20,
                      decade: float = 10.0, w_floor: float = 0.0) -> float:
    """Log-log slope of |z| against |w| along the fold near the cusp.

    Fits a one-decade window of |w|, chosen as the innermost decade that
    still contains ``min_points`` on each branch (the cusp law z^2 ~ w^3 is
    asymptotic, so closer is more accurate, subject to point density).
    The geometry forces slope 3/2.
    """
    u = curve.projections[:, 1]
    w = curve.projections[:, 2]
    z = curve.projections[:, 3]
    good = (np.abs(w) > w_floor) & (np.abs(z) > 0.0) & (u != 0.0)
    aw = np.abs(w[good])
    if aw.size == 0:
        raise FitError("degenerate fold curve: no usable points")
    pos = u[good] > 0

    lo = None
    for cand in np.sort(aw):
        sel = (aw >= cand) & (aw <= decade * cand)
        if (np.count_nonzero(sel & pos) >= min_points
                and np.count_nonzero(sel & ~pos) >= min_points):
            lo = cand
            break
    if lo is None:
        raise FitError(
            f"no |w| decade holds {min_points} points per branch; "
            "trace a longer/denser curve")
    sel = (aw >= lo) & (aw <= decade * lo)
    lw = np.log(aw[sel])
    lz = np.log(np.abs(z[good][sel]))
    slope = np.polyfit(lw, lz, 1)[0]
    return float(slope)
