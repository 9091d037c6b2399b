"""SAO/LAO decomposition of trajectories and MMO signature strings.

Oscillations are read off the antisymmetric coordinate u = (x1 - x2)/2:
small-amplitude oscillations near a cusped singularity are rotations in the
(u, z) plane, so u captures both the small events and the large excursions,
and its sign tells which cell is currently elevated.

Event grouping: an extremum is a large-oscillation (LAO) peak when the
swings on *both* of its flanks reach the threshold; runs of consecutive LAO
peaks with no small extremum between them (e.g. the immediate back-to-back
excursions of the two cells) merge into a single LAO event.  Epochs are the
`L^s` blocks of the signature: one LAO event plus the small oscillations
that follow it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .dynamics import Trajectory
from .errors import AnalysisError

__all__ = [
    "Extremum",
    "MmoEvent",
    "MmoSignature",
    "extract_extrema",
    "classify_mmo",
]

SAO = "SAO"
LAO = "LAO"
U_POSITIVE = "u_positive"
U_NEGATIVE = "u_negative"


@dataclass(frozen=True)
class Extremum:
    """One local extremum of the observable."""

    time: float
    value: float
    is_max: bool
    amplitude: float    # swing from the previous extremum (nan for the first)
    index: int          # sample index of the three-point hit


@dataclass(frozen=True)
class MmoEvent:
    """One oscillation event (a small extremum or a merged large excursion)."""

    time: float
    kind: str                     # SAO | LAO
    amplitude: float
    leading_cell: Optional[int]   # 1 | 2 (None when cells are unavailable)
    entry_side: Optional[str]     # u_positive | u_negative
    t_start: float
    t_end: float
    n_peaks: int = 1              # extrema merged into this event


@dataclass
class MmoSignature:
    """Event decomposition of one trajectory."""

    events: list
    signature_string: str
    alternating_cells: Optional[bool]   # None when fewer than 2 LAO events
    sao_counts_per_epoch: list
    n_lao_events: int
    sao_threshold: float
    warning: Optional[str] = None

    def to_dict(self):
        return {
            "events": [
                {
                    "time": e.time,
                    "kind": e.kind,
                    "amplitude": e.amplitude,
                    "leading_cell": e.leading_cell,
                    "entry_side": e.entry_side,
                }
                for e in self.events
            ],
            "signature_string": self.signature_string,
            "alternating_cells": self.alternating_cells,
            "sao_counts_per_epoch": self.sao_counts_per_epoch,
            "n_lao_events": self.n_lao_events,
            "sao_threshold": self.sao_threshold,
            "warning": self.warning,
        }

    def to_json(self, path=None, indent=2):
        payload = {"schema_version": 1, **self.to_dict()}
        text = json.dumps(payload, indent=indent)
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        return text

    EVENT_CSV_HEADER = "t,kind,amplitude,leading_cell,entry_side"

    def events_to_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.EVENT_CSV_HEADER + "\n")
            for e in self.events:
                fh.write(f"{e.time:.17g},{e.kind},{e.amplitude:.17g},"
                         f"{'' if e.leading_cell is None else e.leading_cell},"
                         f"{'' if e.entry_side is None else e.entry_side}\n")


def _resolve_observable(traj: Trajectory,
                        observable: Union[str, Callable, None]):
    if observable is None:
        observable = "u"
    if callable(observable):
        return np.asarray([observable(row) for row in traj.states], dtype=float)
    return np.asarray(traj.channel(observable), dtype=float)


def _refine(traj: Trajectory, obs: np.ndarray, i: int):
    """Vertex of the parabola through the three samples around index i."""
    t = traj.t
    t0, t1, t2 = t[i - 1], t[i], t[i + 1]
    y0, y1, y2 = obs[i - 1], obs[i], obs[i + 1]
    d1 = (y1 - y0) / (t1 - t0)
    d2 = (y2 - y1) / (t2 - t1)
    dd = (d2 - d1) / (t2 - t0)      # quadratic Newton-form coefficient
    if dd == 0.0:
        return float(t1), float(y1)
    ts = 0.5 * (t0 + t1) - d1 / (2.0 * dd)
    if not (t0 < ts < t2):
        return float(t1), float(y1)
    ys = y0 + d1 * (ts - t0) + dd * (ts - t0) * (ts - t1)
    return float(ts), float(ys)


def _refine_hermite(traj: Trajectory, deriv_obs: np.ndarray,
                    obs: np.ndarray, i: int):
    """Extremum from the cubic Hermite interpolant: root of its derivative
    (a quadratic per interval) in the two intervals flanking sample i."""
    t = traj.t
    best = (t[i], obs[i])
    for a, b in ((i - 1, i), (i, i + 1)):
        h = t[b] - t[a]
        if h <= 0:
            continue
        y0, y1 = obs[a], obs[b]
        d0, d1 = deriv_obs[a] * h, deriv_obs[b] * h
        # p'(s)/ (1/h): quadratic c2 s^2 + c1 s + c0 on s in [0,1]
        c0 = d0
        c1 = 6.0 * (y1 - y0) - 4.0 * d0 - 2.0 * d1
        c2 = 6.0 * (y0 - y1) + 3.0 * (d0 + d1)
        roots = []
        if c2 == 0.0:
            if c1 != 0.0:
                roots = [-c0 / c1]
        else:
            disc = c1 * c1 - 4.0 * c2 * c0
            if disc >= 0.0:
                r = math.sqrt(disc)
                roots = [(-c1 + r) / (2.0 * c2), (-c1 - r) / (2.0 * c2)]
        for s in roots:
            if 0.0 <= s <= 1.0:
                ts = t[a] + s * h
                h00 = (1 + 2 * s) * (1 - s) ** 2
                h10 = s * (1 - s) ** 2
                h01 = s * s * (3 - 2 * s)
                h11 = s * s * (s - 1)
                ys = h00 * y0 + h10 * d0 + h01 * y1 + h11 * d1
                if abs(ts - t[i]) < abs(best[0] - t[i]) or best[0] == t[i]:
                    best = (float(ts), float(ys))
    return best


def extract_extrema(traj: Trajectory,
                    observable: Union[str, Callable, None] = "u"):
    """Local extrema of the observable by the three-point test, refined to
    sub-sample accuracy.  Needs at least 3 samples."""
    if len(traj) < 3:
        raise AnalysisError("need at least 3 samples to find extrema")
    obs = _resolve_observable(traj, observable)

    deriv_obs = None
    if traj.derivs is not None and isinstance(observable, str):
        names = traj.channel_names
        if observable in names:
            deriv_obs = traj.derivs[:, names.index(observable)]
        elif observable == "u" and traj.states.shape[1] == 4:
            deriv_obs = 0.5 * (traj.derivs[:, 0] - traj.derivs[:, 1])

    out = []
    prev_val = None
    for i in range(1, len(obs) - 1):
        is_max = obs[i] > obs[i - 1] and obs[i] >= obs[i + 1]
        is_min = obs[i] < obs[i - 1] and obs[i] <= obs[i + 1]
        if not (is_max or is_min):
            continue
        if deriv_obs is not None:
            ts, vs = _refine_hermite(traj, deriv_obs, obs, i)
        else:
            ts, vs = _refine(traj, obs, i)
        amp = math.nan if prev_val is None else abs(vs - prev_val)
        out.append(Extremum(time=ts, value=vs, is_max=bool(is_max),
                            amplitude=amp, index=i))
        prev_val = vs
    return out


def _cell_excursions(traj: Trajectory, t_lo: float, t_hi: float):
    """Per-cell excursion (max - min) over [t_lo, t_hi]."""
    if traj.states.shape[1] != 4:
        return None
    sel = (traj.t >= t_lo) & (traj.t <= t_hi)
    if not np.any(sel):
        return None
    return tuple(float(traj.states[sel, col].max()
                       - traj.states[sel, col].min()) for col in (0, 1))


def classify_mmo(traj: Trajectory, sao_threshold: float = 0.25,
                 observable: Union[str, Callable, None] = "u",
                 extrema=None) -> MmoSignature:
    """Split a trajectory's oscillations into SAO and LAO events.

    An oscillation is large when its swing reaches ``sao_threshold`` times
    the largest swing; see the module docstring for the event-grouping and
    epoch conventions.  ``leading_cell`` of an LAO event is the cell with
    the larger excursion during the event (ties broken by which cell peaks
    first); ``entry_side`` is the sign of u at the first small oscillation
    of the epoch.  With fewer than 2 LAO events, alternation is undefined
    (``None``) and flagged in ``warning``.
    """
    if extrema is None:
        extrema = extract_extrema(traj, observable)
    if not extrema:
        return MmoSignature(events=[], signature_string="",
                            alternating_cells=None, sao_counts_per_epoch=[],
                            n_lao_events=0, sao_threshold=sao_threshold,
                            warning="no oscillations detected")

    n = len(extrema)
    swings = np.array([e.amplitude for e in extrema])  # swing[i]: i-1 -> i
    finite = swings[np.isfinite(swings)]
    if finite.size == 0:
        return MmoSignature(events=[], signature_string="",
                            alternating_cells=None, sao_counts_per_epoch=[],
                            n_lao_events=0, sao_threshold=sao_threshold,
                            warning="single extremum; no oscillation")
    max_swing = float(finite.max())
    cut = sao_threshold * max_swing

    def flank_big(i):
        # an extremum is only confirmed large when BOTH flanking swings are
        # large; boundary extrema (one flank) stay small
        left = swings[i] if np.isfinite(swings[i]) else None
        right = swings[i + 1] if i + 1 < n else None
        return (left is not None and right is not None
                and left >= cut and right >= cut)

    is_lao_peak = [flank_big(i) for i in range(n)]

    # merge runs of consecutive LAO peaks into single events
    events = []
    epochs = []   # [lao_event_index, [sao event indices]]
    i = 0
    while i < n:
        if is_lao_peak[i]:
            j = i
            while j + 1 < n and is_lao_peak[j + 1]:
                j += 1
            t_start = extrema[i].time
            t_end = extrema[j].time
            peak = max(range(i, j + 1), key=lambda k: abs(extrema[k].value))
            amp = float(max(swings[k] for k in range(i, min(j + 2, n))
                            if np.isfinite(swings[k])))
            leading = None
            exc = _cell_excursions(traj, t_start, t_end)
            if exc is not None:
                e1, e2 = exc
                if e1 > 1.1 * e2:
                    leading = 1
                elif e2 > 1.1 * e1:
                    leading = 2
                else:
                    # near-tie (both cells excurse fully): the cell elevated
                    # at the first peak of the run led the excursion
                    leading = 1 if extrema[i].value > 0 else 2
            events.append(MmoEvent(
                time=extrema[peak].time, kind=LAO, amplitude=amp,
                leading_cell=leading, entry_side=None,
                t_start=t_start, t_end=t_end, n_peaks=j - i + 1))
            epochs.append([len(events) - 1, []])
            i = j + 1
        else:
            e = extrema[i]
            amp = e.amplitude
            if not math.isfinite(amp):
                amp = swings[i + 1] if i + 1 < n and np.isfinite(swings[i + 1]) else 0.0
            side = U_POSITIVE if e.value >= 0 else U_NEGATIVE
            events.append(MmoEvent(
                time=e.time, kind=SAO, amplitude=float(amp),
                leading_cell=None, entry_side=side,
                t_start=e.time, t_end=e.time))
            if epochs:
                epochs[-1][1].append(len(events) - 1)
            i += 1

    n_lao = sum(1 for e in events if e.kind == LAO)

    # entry side of each epoch = side of its first SAO; attach to the LAO
    rebuilt = list(events)
    sao_counts = []
    blocks = []
    for lao_idx, sao_list in epochs:
        entry = None
        if sao_list:
            entry = events[sao_list[0]].entry_side
        ev = events[lao_idx]
        rebuilt[lao_idx] = MmoEvent(
            time=ev.time, kind=ev.kind, amplitude=ev.amplitude,
            leading_cell=ev.leading_cell, entry_side=entry,
            t_start=ev.t_start, t_end=ev.t_end, n_peaks=ev.n_peaks)
        s_count = int(math.ceil(len(sao_list) / 2.0))
        sao_counts.append(s_count)
        blocks.append(f"{ev.n_peaks}^{s_count}")
    events = rebuilt

    warning = None
    if n_lao >= 2:
        cells = [e.leading_cell for e in events if e.kind == LAO]
        if any(c is None for c in cells):
            alternating = None
            warning = "leading cells unavailable; alternation undefined"
        else:
            alternating = all(cells[k] != cells[k + 1]
                              for k in range(len(cells) - 1))
    else:
        alternating = None
        warning = "fewer than 2 LAO events; alternation undefined"

    return MmoSignature(
        events=events,
        signature_string=" ".join(blocks),
        alternating_cells=alternating,
        sao_counts_per_epoch=sao_counts,
        n_lao_events=n_lao,
        sao_threshold=sao_threshold,
        warning=warning,
    )
