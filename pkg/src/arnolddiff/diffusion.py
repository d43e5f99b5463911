"""Pseudo-orbit construction along action paths, drift-time estimates, and
the full-system oracle for the first-order jump.

The constructor alternates branch-map jumps with rotation (ergodization)
waits: cover the path with sup-norm balls of radius delta, and before each
jump require the pulled-back angles psi to sit in the quadrant window that
makes every needed action component move toward the next ball center.  On
the exactly resonant diagonal (equal frequencies, offset pi) the window is
unreachable by rotation alone and a detour jump at psi = (0, pi) shifts the
offset instead; the builder repeats it until the window opens up.
"""

import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

from . import inner, kernels, melnikov
from .errors import (
    DegenerateDirection,
    EpsilonTooLarge,
    ExcursionTooShort,
    RangeNotCovered,
    Stuck,
    UseScatteringDetour,
    WindowUnreachable,
)
from .model import TWO_PI, separatrix
from .ode import IntegratorConfig, integrate
from .scattering import scattering_map

GUARD_EXPONENT = 0.5          # keep paths (eps^0.5)-clear of the origin, at least delta
WINDOW_MARGIN = 0.3           # angular margin inside the (pi, 2pi) windows
DEADBAND_FACTOR = 0.25        # cross-track slack (times delta) before constraining


@dataclass
class ActionPath:
    """Piecewise-linear target curve in the action plane."""

    waypoints: np.ndarray
    delta: float
    stairstepped: bool = False

    def __post_init__(self):
        self.waypoints = np.asarray(self.waypoints, dtype=float).reshape(-1, 2)
        if len(self.waypoints) < 2:
            raise ValueError("a path needs at least two waypoints")
        if not np.all(np.isfinite(self.waypoints)):
            raise ValueError("waypoints must be finite")
        if not (0.0 < self.delta < 1.0):
            raise ValueError("delta must be in (0, 1)")

    @property
    def start(self):
        return self.waypoints[0]

    @property
    def end(self):
        return self.waypoints[-1]

    def length(self):
        d = np.diff(self.waypoints, axis=0)
        return float(np.sum(np.abs(d).sum(axis=1)))

    def distance_to(self, point):
        """Sup-norm distance from a point to the polyline."""
        p = np.asarray(point, dtype=float)
        best = math.inf
        for a, b in zip(self.waypoints[:-1], self.waypoints[1:]):
            best = min(best, _segment_dist_inf(p, a, b))
        return best


def _segment_dist_inf(p, a, b):
    d = b - a
    den = float(d @ d)
    if den == 0.0:
        u = 0.0
    else:
        u = float(np.clip((p - a) @ d / den, 0.0, 1.0))
    proj = a + u * d
    return float(np.max(np.abs(p - proj)))


def stairstep(path, resolution=None):
    """Axis-aligned approximation of a path, rerouted around the origin.

    Every oblique segment is replaced by alternating horizontal/vertical
    steps no longer than ``resolution`` (default delta/2), so the Hausdorff
    distance to the original polyline stays below the resolution.  Segments
    that would cut through the guard box around I = (0, 0) are routed around
    its boundary with clearance >= delta/2.  Axis-aligned inputs clear of
    the guard box are returned unchanged.
    """
    res = resolution if resolution is not None else 0.5 * path.delta
    pts = [path.waypoints[0].copy()]
    for b in path.waypoints[1:]:
        a = pts[-1]
        d = b - a
        if d[0] != 0.0 and d[1] != 0.0:
            n = max(1, int(math.ceil(max(abs(d[0]), abs(d[1])) / res)))
            for k in range(1, n + 1):
                frac = k / n
                mid = np.array([a[0] + frac * d[0], pts[-1][1]])
                _append(pts, mid)
                _append(pts, np.array([a[0] + frac * d[0], a[1] + frac * d[1]]))
        else:
            _append(pts, b.copy())
    pts = _reroute_guard(pts, path.delta)
    return ActionPath(np.array(pts), path.delta, stairstepped=True)


def _append(pts, p):
    if not np.allclose(pts[-1], p, atol=1e-15):
        pts.append(p)


def _reroute_guard(pts, delta):
    """Detour axis-aligned segments around the sup-norm guard box at the origin."""
    g = delta  # guard half-width; rerouted pieces keep clearance g >= delta/2
    out = [pts[0]]
    if np.max(np.abs(pts[0])) < g:
        raise ValueError("path starts inside the origin guard box")
    for b in pts[1:]:
        a = out[-1]
        if np.max(np.abs(b)) < g:
            raise ValueError("path waypoint inside the origin guard box")
        d = b - a
        axis = 0 if d[1] == 0.0 else 1
        other = 1 - axis
        lo, hi = sorted((a[axis], b[axis]))
        crosses = abs(a[other]) < g and not (hi <= -g or lo >= g)
        if crosses:
            side = math.copysign(g, a[other]) if a[other] != 0.0 else g
            q1 = a.copy(); q1[axis] = -math.copysign(g, d[axis])
            q2 = q1.copy(); q2[other] = side
            q3 = q2.copy(); q3[axis] = math.copysign(g, d[axis])
            q4 = q3.copy(); q4[other] = a[other]
            for q in (q1, q2, q3, q4):
                _append(out, q)
        _append(out, b)
    return out


@dataclass
class PseudoStep:
    kind: str                  # 'S' jump, 'I' rotation wait, 'D' detour jump
    state: np.ndarray          # state after the step
    dt: float                  # rotation time (0 for jumps)
    psi: Optional[np.ndarray]  # pulled-back angles used for a jump
    dist: float                # sup-norm distance to the target path


@dataclass
class PseudoOrbit:
    steps: List[PseudoStep]
    path: ActionPath
    eps: float
    n_scatter: int = 0
    n_inner: int = 0
    n_detour: int = 0
    inner_time: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def states(self):
        return np.array([s.state for s in self.steps])

    @property
    def max_deviation(self):
        return max(s.dist for s in self.steps)

    def scatter_records(self):
        """(I1, I2, psi1, psi2) at every jump, for step accounting."""
        rec = [
            (s.state[0], s.state[1], s.psi[0], s.psi[1])
            for s in self.steps
            if s.kind == "S"
        ]
        return np.array(rec)


def _window_for(u, delta, margin, params):
    """Per-component psi windows pushing the action jump toward u.

    The jump component is -eps*A_c*sin(psi_c) and A_c carries the sign of
    the amplitude a_c, so the window flips for negative amplitudes.
    """
    dead = DEADBAND_FACTOR * delta
    win = []
    for uc, amp in zip(u, (params.a1, params.a2)):
        if abs(uc) <= dead:
            win.append(None)
        elif (uc > 0.0) == (amp > 0.0):
            win.append((math.pi + margin, TWO_PI - margin))
        else:
            win.append((margin, math.pi - margin))
    return tuple(win)


def _psi_in(ps, window):
    for x, w in zip(ps, window):
        if w is not None:
            lo, hi = w
            if not (lo < (x - lo) % TWO_PI + lo < hi):
                return False
    return True


def build_pseudo_orbit(
    path,
    start,
    params,
    j=0,
    eps=None,
    margin=WINDOW_MARGIN,
    max_steps=2_000_000,
    t_bound=None,
    on_event=None,
):
    """Track an action path with branch-map jumps and rotation waits.

    ``path`` should be axis-aligned (run stairstep() first; oblique segments
    are stairstepped here as a convenience).  ``start`` supplies the initial
    angles; its actions must lie within delta of the path start.  Every
    intermediate action stays within delta (sup-norm) of the path, and the
    orbit terminates within delta of the final waypoint.
    """
    params.require_diffusion_regime()
    eps = params.eps if eps is None else eps
    if eps <= 0.0:
        raise EpsilonTooLarge("eps must be positive to move the actions")
    if not path.stairstepped:
        path = stairstep(path)
    delta = path.delta

    z = np.asarray(start, dtype=float).copy()
    if np.max(np.abs(z[:2] - path.start)) > delta:
        raise ValueError("start actions are not within delta of the path start")

    centers = _ball_centers(path)
    steps: List[PseudoStep] = [
        PseudoStep("I", z.copy(), 0.0, None, path.distance_to(z[:2]))
    ]
    orbit = PseudoOrbit(steps, path, eps)

    k = 0
    target = centers[k]
    guard = max(delta, params.eps**GUARD_EXPONENT)
    for _ in range(max_steps):
        if np.max(np.abs(z[:2] - path.end)) <= delta and k == len(centers) - 1:
            break  # inside the final ball
        u = target - z[:2]
        if np.max(np.abs(u)) <= 0.5 * delta and k < len(centers) - 1:
            k += 1
            target = centers[k]
            continue
        if np.max(np.abs(z[:2])) < guard:
            raise Stuck(f"entered the origin guard region at state {z}")
        window = _window_for(u, delta, margin, params)
        ps, ts = melnikov.psi(j, z, params)
        if not _psi_in(ps, window):
            try:
                res = inner.ergodize(z, window, j=j, params=params, t_bound=t_bound)
                z = res.state
                orbit.n_inner += 1
                orbit.inner_time += res.t_star
                d = path.distance_to(z[:2])
                steps.append(PseudoStep("I", z.copy(), res.t_star, None, d))
                if on_event:
                    on_event("inner", z, res.t_star)
            except UseScatteringDetour:
                z = _detour(z, j, params, eps, orbit, steps, path, on_event, margin)
                continue
            except WindowUnreachable as exc:
                if _near_resonant_block(z, j, params, margin):
                    z = _detour(z, j, params, eps, orbit, steps, path, on_event, margin)
                    continue
                raise Stuck(f"window unreachable off the resonant line at {z}: {exc}")
        _val, tau, dI, dTH = melnikov.reduced_poincare_grad(j, z, params)
        w1, w2 = params.frequencies(z[0], z[1])
        ps = np.array([z[2] - tau * w1, z[3] - tau * w2])
        z = np.array(
            [z[0] + eps * dTH[0], z[1] + eps * dTH[1],
             z[2] - eps * dI[0], z[3] - eps * dI[1]]
        )
        orbit.n_scatter += 1
        d = path.distance_to(z[:2])
        steps.append(PseudoStep("S", z.copy(), 0.0, ps, d))
        if d > delta:
            raise Stuck(
                f"tracking contract violated: deviation {d:.4f} > delta={delta} at {z}"
            )
    else:
        raise Stuck(f"step budget exhausted before reaching {path.end}")
    orbit.meta.update(
        n_balls=len(centers),
        final_gap=float(np.max(np.abs(z[:2] - path.end))),
        margin=margin,
    )
    return orbit


def _near_resonant_block(z, j, params, margin):
    """Near-equal frequencies with the line offset too close to pi.

    In this geometry the natural offset drift |w2 - w1| is too slow to open
    the window within a sweep budget, so detour jumps are used instead.
    """
    w1, w2 = params.frequencies(z[0], z[1])
    if w1 == 0.0 or abs(w2 / w1 - 1.0) > 1e-3:
        return False
    ps, _ = melnikov.psi(j, z, params)
    off = (ps[1] - ps[0] - math.pi) % TWO_PI
    return min(off, TWO_PI - off) <= 2.0 * margin + 0.3


def _detour(z, j, params, eps, orbit, steps, path, on_event, margin):
    """Resonant-diagonal escape: jump at psi = (0, pi) until the offset clears.

    Each jump there leaves the actions fixed (both jump components vanish)
    but shifts the line offset by O(eps); repeat until the offset is far
    enough from pi that the margin-shrunk window intersects the line.
    """
    exit_gap = 2.0 * margin + 0.35
    for _ in range(200_000):
        t_rot, z = inner.rotate_to_psi1(z, 0.0, j=j, params=params)
        orbit.inner_time += t_rot
        step = scattering_map(j, z, params, eps=eps)
        z = step.after
        orbit.n_detour += 1
        d = path.distance_to(z[:2])
        steps.append(PseudoStep("D", z.copy(), t_rot, None, d))
        if on_event:
            on_event("detour", z, t_rot)
        ps, _ = melnikov.psi(j, z, params)
        off = (ps[1] - ps[0] - math.pi) % TWO_PI
        if min(off, TWO_PI - off) > exit_gap:
            return z
    raise Stuck("resonant detour failed to clear the blocked window")


def _ball_centers(path):
    """Centers gamma(t_i) spaced delta apart along the stairstepped path."""
    centers = []
    for a, b in zip(path.waypoints[:-1], path.waypoints[1:]):
        seg = b - a
        L = float(np.abs(seg).sum())
        n = max(1, int(math.ceil(L / path.delta)))
        for kk in range(1, n + 1):
            centers.append(a + seg * (kk / n))
    out = [centers[0]]
    for c in centers[1:]:
        if np.max(np.abs(c - out[-1])) > 1e-12:
            out.append(c)
    return out


def epsilon_threshold(path, delta, R, params, j=0, remainder_const=None, margin=WINDOW_MARGIN):
    """Tracking threshold eps0 = min(m/(2M), 2*delta/m) for a stairstepped path.

    m is the worst guaranteed jump speed along the path directions (the
    coupling coefficient of the moving action times the window margin sine);
    M is the calibrated quadratic-remainder constant of the branch map.
    Raises DegenerateDirection when a needed amplitude vanishes (m = 0).
    """
    if not path.stairstepped:
        path = stairstep(path)
    m = math.inf
    for a, b in zip(path.waypoints[:-1], path.waypoints[1:]):
        seg = b - a
        comp = 0 if abs(seg[0]) > abs(seg[1]) else 1
        amp = params.a1 if comp == 0 else params.a2
        om = params.Omega1 if comp == 0 else params.Omega2
        if amp == 0.0:
            raise DegenerateDirection(f"zero amplitude for action component {comp + 1}")
        for frac in np.linspace(0.0, 1.0, 9):
            p = a + frac * seg
            if abs(p[comp]) > R:
                continue
            w = om * p[comp]
            m = min(m, abs(kernels.coeff(w, amp)) * math.sin(margin))
    if not math.isfinite(m) or m == 0.0:
        raise DegenerateDirection("no usable jump speed found along the path")
    if remainder_const is None:
        from .scattering import calibrate_remainder

        remainder_const = calibrate_remainder(j, params, eps=1e-3, box=R, n=5)
    eps0 = min(m / (2.0 * remainder_const), 2.0 * delta / m)
    return eps0, {"m": m, "M": remainder_const, "branch_m_over_2M": m / (2.0 * remainder_const), "branch_2delta_over_m": 2.0 * delta / m}


def step_accounting(orbit, params):
    """Jump-count consistency: N_s*eps against the segment quadrature.

    For each stairstep segment, integrates sinh(pi w/2)/(2 pi a Omega w sbar)
    over the segment's frequency range, with sbar the mean |sin psi| of the
    segment-aligned jumps; the total is the flow time the jumps emulate, so
    N_s*eps should land within a factor ~2 of it.
    """
    rec = orbit.scatter_records()
    if len(rec) == 0:
        return 0.0, 0.0
    total = 0.0
    amps = (params.a1, params.a2)
    oms = (params.Omega1, params.Omega2)
    wp = orbit.path.waypoints
    states = rec[:, :2]
    for a, b in zip(wp[:-1], wp[1:]):
        seg = b - a
        comp = 0 if abs(seg[0]) >= abs(seg[1]) else 1
        other = 1 - comp
        lo, hi = sorted((a[comp], b[comp]))
        near = (
            (states[:, comp] >= lo - orbit.path.delta)
            & (states[:, comp] <= hi + orbit.path.delta)
            & (np.abs(states[:, other] - a[other]) <= orbit.path.delta)
        )
        if not np.any(near):
            continue
        sbar = float(np.mean(np.abs(np.sin(rec[near, 2 + comp]))))
        if sbar <= 0.0:
            continue
        om, amp = oms[comp], amps[comp]
        pref = 1.0 / (2.0 * math.pi * abs(amp) * om * sbar)
        val, _ = quad(
            lambda w: pref * math.sinh(0.5 * math.pi * w) / abs(w), om * lo, om * hi,
            limit=200,
        )
        total += abs(val)
    return orbit.n_scatter * orbit.eps, total


@dataclass
class TimeEstimate:
    T_s: float
    T_h: float
    C: float
    T_d: float
    eps: float
    omega_range: Tuple[float, float]
    b_exponent: float = 0.0
    meta: dict = field(default_factory=dict)


def _bigM(w_lo, w_hi):
    """max over [w_lo, w_hi] of |w - alpha(w)| by dense scan."""
    w = np.linspace(min(w_lo, w_hi), max(w_lo, w_hi), 4001)
    return float(np.max(np.abs(w - melnikov.alpha(w))))


def time_estimate(omega_range, orbit, eps, params, ergodize_a=0.125, ergodize_c=-0.25):
    """Drift-time assembly T_d = (T_s/eps) * 2 log(C/eps) along a Highway orbit.

    T_s comes from the quadrature
        (1/(2 pi a1 Omega1)) * int -sinh(pi w1/2) / (w1 sin(theta1 - w1 tau*)) dw1
    over the orbit's stored (theta1, tau*) samples; C is the explicit
    homoclinic-window constant built from the amplitude ratios and
    M(w) = max |w - alpha(w)| over the swept range.
    """
    w0, wf = omega_range
    w1 = orbit.omega1(params)
    lo, hi = float(np.min(w1)), float(np.max(w1))
    if min(w0, wf) < lo - 1e-9 or max(w0, wf) > hi + 1e-9:
        raise RangeNotCovered(
            f"orbit covers omega1 in [{lo:.4g}, {hi:.4g}], requested [{w0}, {wf}]"
        )
    order = np.argsort(w1)
    w_s = w1[order]
    th_s = orbit.states[order, 2]
    ta_s = orbit.tau[order]
    keep = np.concatenate(([True], np.diff(w_s) > 1e-12))
    w_s, th_s, ta_s = w_s[keep], th_s[keep], ta_s[keep]
    th_spl = CubicSpline(w_s, th_s)
    ta_spl = CubicSpline(w_s, ta_s)

    pref = 1.0 / (2.0 * math.pi * params.a1 * params.Omega1)

    def integrand(w):
        s = math.sin(th_spl(w) - w * ta_spl(w))
        return -pref * math.sinh(0.5 * math.pi * w) / (w * s)

    T_s, _err = quad(integrand, w0, wf, limit=400)

    mu1, mu2 = abs(params.mu1), abs(params.mu2)
    den = math.pi * (1.0 - 1.466 * (mu1 + mu2))
    if den <= 0.0:
        raise ValueError("amplitude ratios too large for the window constant")
    sh = kernels.SINH_HALF_PI
    Mw1 = _bigM(w0, wf)
    i2_range = (
        params.Omega2 * float(np.min(orbit.states[:, 1])),
        params.Omega2 * float(np.max(orbit.states[:, 1])),
    )
    Mw2 = _bigM(*i2_range)
    C = 16.0 * (
        abs(params.a1)
        + (2.0 * abs(params.a3 * params.mu1) * sh * mu1 / den) * Mw1
        + (2.0 * abs(params.a3 * params.mu2) * sh * mu1 / den) * Mw2
    )
    T_h = 2.0 * math.log(C / eps)
    T_d = (T_s / eps) * T_h
    b = -ergodize_c - 2.0 * ergodize_a
    return TimeEstimate(
        T_s, T_h, C, T_d, eps, (w0, wf), b,
        meta={"M_w1": Mw1, "M_w2": Mw2, "ergodize_a": ergodize_a, "ergodize_c": ergodize_c},
    )


@dataclass
class JumpCheck:
    measured: np.ndarray
    predicted: np.ndarray
    discrepancy: float
    raw_delta: np.ndarray
    excursion_time: float
    endpoint_distance: float


def default_excursion_time(eps):
    """Balanced excursion half-time ~ (1/2) log(16/eps).

    The seed sits on the unperturbed homoclinic loop, so its transverse
    error grows like eps*e^t while the tail of the jump integrand decays
    like e^{-2t}; this choice keeps both contributions at O(eps^2) and puts
    the endpoints O(sqrt(eps)) from the invariant set.
    """
    return 0.5 * math.log(16.0 / eps)


def verify_scattering_jump(state, j, eps, params, T=None, cfg=None):
    """Full-system oracle for one homoclinic excursion's action jump.

    Starts at the unperturbed homoclinic point (separatrix at tau*, angles
    phi = theta at s = 0), integrates the genuine 3.5-dof system over
    [-T, T] with eps-coupling switched on, and accumulates the
    inner-compensated jump J_i = int eps a_i sin(phi_i) (cos q - 1) dt,
    whose limit is the first-order prediction eps dL*/dtheta.  Also returns
    the raw I(T) - I(-T) (which includes the plain rotor drift).
    """
    if eps > 1e-2:
        raise ValueError("oracle calibrated for eps <= 1e-2")
    if T is None:
        T = default_excursion_time(eps) if eps > 0.0 else 10.0
    cfg = cfg or IntegratorConfig(h_max=0.5)
    p2 = replace(params, eps=eps)
    i1, i2, t1, t2 = state
    ts = melnikov.solve_tau_star(j, state, params)
    p0, q0 = separatrix(ts.value, branch=1)
    y_mid = np.array([p0, q0, i1, i2, t1, t2, 0.0, 0.0, 0.0])

    f = _augmented_rhs(p2)
    back = integrate(f, y_mid, (0.0, -T), cfg, record=False)
    fwd = integrate(f, y_mid, (0.0, T), cfg, record=False)
    yb, yf = back.final, fwd.final
    d_end = max(_nhim_distance(yb), _nhim_distance(yf))
    # O(sqrt(eps)) is the closest approach reachable from the unperturbed
    # homoclinic point: e^{-T} shrinks but the eps-transverse error grows e^T.
    if eps > 0.0 and d_end > 20.0 * math.sqrt(eps):
        raise ExcursionTooShort(
            f"endpoint distance to the invariant set {d_end:.3e} "
            f"> 20*sqrt(eps) = {20.0 * math.sqrt(eps):.3e}"
        )
    measured = np.array([yf[7] - yb[7], yf[8] - yb[8]])
    raw = np.array([yf[2] - yb[2], yf[3] - yb[3]])
    _val, _tau, _dI, dTH = melnikov.reduced_poincare_grad(j, state, params)
    predicted = eps * dTH
    disc = float(np.linalg.norm(measured - predicted))
    return JumpCheck(measured, predicted, disc, raw, T, d_end)


def _augmented_rhs(params):
    """Full field plus quadrature variables for the compensated jump."""
    sign = params.pendulum_sign
    a1, a2, a3 = params.a1, params.a2, params.a3
    om1, om2, eps = params.Omega1, params.Omega2, params.eps
    frhs = kernels.full_rhs

    def f(t, y):
        d = frhs(sign, a1, a2, a3, om1, om2, eps, y[0], y[1], y[2], y[3], y[4], y[5], y[6])
        cqm1 = math.cos(y[1]) - 1.0
        return np.array(
            d + (eps * a1 * math.sin(y[4]) * cqm1, eps * a2 * math.sin(y[5]) * cqm1)
        )

    return f


def _nhim_distance(y):
    q = y[1] % TWO_PI
    dq = min(q, TWO_PI - q)
    return math.hypot(y[0], dq)
