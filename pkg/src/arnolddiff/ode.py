"""Adaptive Runge-Kutta-Fehlberg 7(8) integration with event location.

The 13-stage Fehlberg tableau is used with local extrapolation (the
8th-order solution propagates; the embedded 7th-order value feeds the error
estimate).  Events are located by bisection on the last accepted step,
re-stepping from the step start, so no dense-output interpolant is needed.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EventNotFound, MaxStepsExceeded, StepSizeUnderflow

# Fehlberg 7(8) coefficients.
_C = np.array(
    [0.0, 2 / 27, 1 / 9, 1 / 6, 5 / 12, 1 / 2, 5 / 6, 1 / 6, 2 / 3, 1 / 3, 1.0, 0.0, 1.0]
)
_A = np.zeros((13, 13))
_A[1, 0] = 2 / 27
_A[2, :2] = (1 / 36, 1 / 12)
_A[3, :3] = (1 / 24, 0, 1 / 8)
_A[4, :4] = (5 / 12, 0, -25 / 16, 25 / 16)
_A[5, :5] = (1 / 20, 0, 0, 1 / 4, 1 / 5)
_A[6, :6] = (-25 / 108, 0, 0, 125 / 108, -65 / 27, 125 / 54)
_A[7, :7] = (31 / 300, 0, 0, 0, 61 / 225, -2 / 9, 13 / 900)
_A[8, :8] = (2, 0, 0, -53 / 6, 704 / 45, -107 / 9, 67 / 90, 3)
_A[9, :9] = (-91 / 108, 0, 0, 23 / 108, -976 / 135, 311 / 54, -19 / 60, 17 / 6, -1 / 12)
_A[10, :10] = (
    2383 / 4100, 0, 0, -341 / 164, 4496 / 1025, -301 / 82, 2133 / 4100,
    45 / 82, 45 / 164, 18 / 41,
)
_A[11, :11] = (3 / 205, 0, 0, 0, 0, -6 / 41, -3 / 205, -3 / 41, 3 / 41, 6 / 41, 0)
_A[12, :12] = (
    -1777 / 4100, 0, 0, -341 / 164, 4496 / 1025, -289 / 82, 2193 / 4100,
    51 / 82, 33 / 164, 12 / 41, 0, 1,
)
_B8 = np.array(
    [0, 0, 0, 0, 0, 34 / 105, 9 / 35, 9 / 35, 9 / 280, 9 / 280, 0, 41 / 840, 41 / 840]
)
_ERRW = 41 / 840  # error = h*ERRW*(k0 + k10 - k11 - k12)

_SAFETY = 0.9
_SHRINK = 0.2
_GROW = 5.0
_ORDER_EXP = -1.0 / 8.0


@dataclass
class IntegratorConfig:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-12
    h_init: float = 1e-2
    h_min: float = 1e-13
    h_max: float = 1e3
    max_steps: int = 2_000_000

    def __post_init__(self):
        if not (0.0 < self.h_min <= self.h_init <= self.h_max):
            raise ValueError("need 0 < h_min <= h_init <= h_max")
        if self.abs_tol <= 0.0 or self.rel_tol <= 0.0:
            raise ValueError("tolerances must be > 0")


@dataclass
class EventSpec:
    """Section crossing g(state) = 0 with a direction filter.

    direction +1 counts upward (g<0 to g>0) crossings, -1 downward, 0 both.
    """

    fn: object
    direction: int = 0
    tol: float = 1e-12


@dataclass
class Trajectory:
    t: np.ndarray
    y: np.ndarray
    n_accepted: int = 0
    n_rejected: int = 0

    @property
    def final(self):
        return self.y[-1]

    def to_csv(self, path, columns=None):
        """One row per accepted step: t plus the state components."""
        dim = self.y.shape[1]
        names = columns or ["t"] + [f"y{i}" for i in range(dim)]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(names)
            for ti, yi in zip(self.t, self.y):
                w.writerow([f"{ti:.17g}"] + [f"{v:.17g}" for v in yi])


def rkf78_step(f, t, y, h):
    """One raw step; returns (y8, error_estimate_vector)."""
    k = np.empty((13, y.size))
    k[0] = f(t, y)
    for i in range(1, 13):
        k[i] = f(t + _C[i] * h, y + h * (_A[i, :i] @ k[:i]))
    y8 = y + h * (_B8 @ k)
    err = (h * _ERRW) * (k[0] + k[10] - k[11] - k[12])
    return y8, err


def fixed_step_integrate(f, y0, t0, t1, n_steps):
    """Fixed-step 8th-order propagation (order tests, event refinement)."""
    h = (t1 - t0) / n_steps
    y = np.asarray(y0, dtype=float).copy()
    t = t0
    for _ in range(n_steps):
        y, _err = rkf78_step(f, t, y, h)
        t += h
    return y


def _error_norm(err, y0, y1, cfg):
    scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.max(np.abs(err) / scale))


def integrate(f, y0, t_span, cfg=None, record=True, step_hook=None):
    """Integrate y' = f(t, y) over t_span (backward if t1 < t0).

    ``step_hook(t_prev, y_prev, t_new, y_new, h)`` runs after each accepted
    step; returning True stops integration early (used for event scans).
    """
    cfg = cfg or IntegratorConfig()
    t0, t1 = float(t_span[0]), float(t_span[1])
    if t0 == t1:
        raise ValueError("empty integration span")
    direction = 1.0 if t1 > t0 else -1.0
    y = np.asarray(y0, dtype=float).copy()
    t = t0
    h = direction * min(cfg.h_init, cfg.h_max, abs(t1 - t0))
    ts = [t0]
    ys = [y.copy()]
    n_acc = 0
    n_rej = 0
    attempts = 0
    while (t1 - t) * direction > 0.0:
        attempts += 1
        if attempts > cfg.max_steps:
            raise MaxStepsExceeded(f"exceeded {cfg.max_steps} step attempts at t={t}")
        if (t + h - t1) * direction > 0.0:
            h = t1 - t
        y_new, err = rkf78_step(f, t, y, h)
        enorm = _error_norm(err, y, y_new, cfg)
        if enorm <= 1.0:
            t_prev, y_prev = t, y
            t = t + h
            y = y_new
            n_acc += 1
            if record:
                ts.append(t)
                ys.append(y.copy())
            stop = False
            if step_hook is not None:
                stop = step_hook(t_prev, y_prev, t, y, h)
            factor = _GROW if enorm == 0.0 else min(
                _GROW, max(_SHRINK, _SAFETY * enorm**_ORDER_EXP)
            )
            h *= factor
            if abs(h) > cfg.h_max:
                h = direction * cfg.h_max
            if stop:
                break
        else:
            n_rej += 1
            h *= max(_SHRINK, _SAFETY * enorm**_ORDER_EXP)
        if abs(h) < cfg.h_min:
            raise StepSizeUnderflow(f"step size {abs(h):.3e} below h_min at t={t}")
    if not record:
        ts.append(t)
        ys.append(y.copy())
    return Trajectory(np.array(ts), np.array(ys), n_acc, n_rej)


def _crossed(g0, g1, direction):
    if g0 == 0.0 or g0 * g1 >= 0.0:
        return False
    if direction > 0:
        return g1 > 0.0
    if direction < 0:
        return g1 < 0.0
    return True


def _refine_event(f, event, t0, y0, h):
    """Bisect the crossing inside an accepted step by re-stepping from its start."""
    lo, hi = 0.0, h
    g_lo = event.fn(y0)
    y_hi, _ = rkf78_step(f, t0, y0, h)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        y_mid, _ = rkf78_step(f, t0, y0, mid) if mid != 0.0 else (y0.copy(), None)
        g_mid = event.fn(y_mid)
        if abs(g_mid) <= event.tol:
            return t0 + mid, y_mid
        if (g_mid < 0.0) == (g_lo < 0.0):
            lo = mid
            g_lo = g_mid
        else:
            hi = mid
            y_hi = y_mid
        if abs(hi - lo) <= 1e-15 * max(1.0, abs(h)):
            break
    return t0 + hi, y_hi


def integrate_to_event(f, y0, event, cfg=None, t_span=(0.0, 1e4), t_skip=0.0):
    """Run until the event function changes sign in the requested direction.

    Returns (state_at_event, t_event).  Crossings with t < t0 + t_skip are
    ignored (so orbits started on a section do not immediately retrigger).
    Raises EventNotFound if the horizon or step budget runs out first.
    """
    cfg = cfg or IntegratorConfig()
    hit = {}

    t0 = float(t_span[0])

    def hook(t_prev, y_prev, t_new, y_new, h):
        if abs(t_new - t0) <= t_skip:
            return False
        g0 = event.fn(y_prev)
        g1 = event.fn(y_new)
        if _crossed(g0, g1, event.direction):
            te, ye = _refine_event(f, event, t_prev, y_prev, h)
            if abs(te - t0) > t_skip:
                hit["t"] = te
                hit["y"] = ye
                return True
        return False

    integrate(f, y0, t_span, cfg, record=False, step_hook=hook)
    if "t" not in hit:
        raise EventNotFound(
            f"no qualifying sign change of the event function in t_span={t_span}"
        )
    return hit["y"], hit["t"]
