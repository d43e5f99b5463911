"""First-order branch maps, the scattering flow, sections and transversality.

Branch map j in reduced variables z = (I, theta):

    S_j(z) = z + eps * (dL*_j/dtheta, -dL*_j/dI),

i.e. one eps-step of the Hamiltonian flow of L*_j (Lemma: the jump follows
that flow up to O(eps^2)).  Only j = 0 and j = 1 are used in practice.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, fsolve

from . import kernels, melnikov
from .errors import EventNotFound
from .model import TWO_PI, wrap_angle
from .ode import EventSpec, IntegratorConfig, integrate_to_event


@dataclass
class ScatteringStep:
    before: np.ndarray
    after: np.ndarray
    branch: int
    jump: np.ndarray          # eps * dL*/dtheta
    tau: float
    lstar_before: float
    lstar_after: float

    @property
    def level_change(self):
        return self.lstar_after - self.lstar_before


def scattering_map(j, state, params, eps=None, guess=None):
    """Apply the first-order branch map S_j once."""
    eps = params.eps if eps is None else eps
    val, tau, dI, dTH = melnikov.reduced_poincare_grad(j, state, params, guess=guess)
    state = np.asarray(state, dtype=float)
    after = state.copy()
    jump = eps * dTH
    after[0] += jump[0]
    after[1] += jump[1]
    after[2] -= eps * dI[0]
    after[3] -= eps * dI[1]
    val_after = melnikov.reduced_poincare(j, after, params, guess=tau)
    return ScatteringStep(state, after, j, jump, tau, val, val_after)


def scattering_flow_field(j, state, params, guess=None):
    """Right-hand side of the scattering flow (I' = L*_theta, theta' = -L*_I)."""
    i1, i2, t1, t2 = state
    d1, d2, d3, d4, _tau = kernels.flow_rhs(
        j, params.a1, params.a2, params.a3, params.Omega1, params.Omega2,
        i1, i2, t1, t2, guess,
    )
    return np.array([d1, d2, d3, d4])


def flow_rhs(j, params):
    """Scattering flow as f(t, y) for the integrator."""
    a1, a2, a3 = params.a1, params.a2, params.a3
    om1, om2 = params.Omega1, params.Omega2
    frhs = kernels.flow_rhs

    def f(t, y):
        d1, d2, d3, d4, _ = frhs(j, a1, a2, a3, om1, om2, y[0], y[1], y[2], y[3])
        return np.array([d1, d2, d3, d4])

    return f


@dataclass
class SectionPoint:
    orbit: int
    t: float
    i2: float
    theta2: float
    state: np.ndarray


def adjust_seed_to_level(j, i1, i2, theta1_guess, theta2, level, params, width=1.5):
    """Root-solve in theta1 so the seed sits on the prescribed L*_j level.

    The interval [guess - width, guess + width] is scanned for sign changes
    and the root nearest the guess is polished with brentq.
    """

    def f(th1):
        return melnikov.reduced_poincare(j, (i1, i2, th1, theta2), params) - level

    grid = np.linspace(theta1_guess - width, theta1_guess + width, 81)
    vals = np.array([f(t) for t in grid])
    sign_change = np.nonzero(vals[:-1] * vals[1:] <= 0.0)[0]
    if sign_change.size == 0:
        raise ValueError("no level crossing in the theta1 search interval")
    mids = 0.5 * (grid[sign_change] + grid[sign_change + 1])
    k = sign_change[np.argmin(np.abs(mids - theta1_guess))]
    th1 = brentq(f, grid[k], grid[k + 1], xtol=1e-14)
    return np.array([i1, i2, th1, theta2])


def poincare_section(
    j,
    level,
    section_i1,
    seeds,
    t_max,
    params,
    direction=1,
    max_crossings=200,
    cfg=None,
    adjust_width=1.5,
):
    """Crossings of the hyperplane I1 = section_i1 for scattering-flow orbits.

    ``seeds`` is a list of (i1, i2, theta1_guess, theta2); each seed is first
    moved onto the L*_j = level set by a 1D root solve in theta1.  Returns a
    list of SectionPoint records ordered by orbit then time.  Raises
    EventNotFound if an orbit never crosses (e.g. a seed at an equilibrium).
    """
    cfg = cfg or IntegratorConfig(h_max=10.0)
    f = flow_rhs(j, params)
    event = EventSpec(fn=lambda y: y[0] - section_i1, direction=direction, tol=1e-12)
    out = []
    for orbit_id, (i1, i2, th1g, th2) in enumerate(seeds):
        y = adjust_seed_to_level(j, i1, i2, th1g, th2, level, params, width=adjust_width)
        t = 0.0
        got = 0
        while got < max_crossings and t < t_max:
            try:
                y, te = integrate_to_event(
                    f, y, event, cfg, t_span=(t, t_max), t_skip=1e-9
                )
            except EventNotFound:
                if got == 0:
                    raise EventNotFound(
                        f"orbit {orbit_id} never crossed I1={section_i1}"
                    ) from None
                break
            out.append(SectionPoint(orbit_id, te, y[1], float(wrap_angle(y[3])), y.copy()))
            t = te
            got += 1
    return out


def transversality_certificate(j, state, params, eps=None):
    """Poisson brackets of the rotor integrals with -L*_j at a reduced state.

    {F_i, -L*_j} = eps a_i Omega_i sin(theta_i) (A_i' cos psi_i + tau* A_i sin psi_i)
                   - omega_i A_i sin(psi_i);
    nonvanishing along an orbit certifies the inner and scattering flows
    share no trajectory there.
    """
    eps = params.eps if eps is None else eps
    i1, i2, t1, t2 = state
    w1, w2 = params.frequencies(i1, i2)
    ts = melnikov.solve_tau_star(j, state, params)
    tau = ts.value
    out = []
    for (w, a, om, th) in ((w1, params.a1, params.Omega1, t1), (w2, params.a2, params.Omega2, t2)):
        psi = th - w * tau
        A = kernels.coeff(w, a)
        dA = kernels.coeff_deriv(w, a)
        inner_part = eps * a * om * math.sin(th) * (dA * math.cos(psi) + tau * A * math.sin(psi))
        out.append(inner_part - w * A * math.sin(psi))
    return tuple(out)


def find_equilibria(j, params, box=5.0, grid_i=17, grid_th=16, norm_tol=1e-10):
    """Certified zero scan of the scattering flow field over a 4D box.

    Evaluates ||field|| on a grid over I in [-box, box]^2, theta in [0, 2pi)^2,
    runs Newton (via fsolve) from every local minimum below a loose cut, and
    returns the distinct converged zeros inside the box.
    """
    iv = np.linspace(-box, box, grid_i)
    tv = np.linspace(0.0, TWO_PI, grid_th, endpoint=False)
    I1g, I2g, T1g, T2g = np.meshgrid(iv, iv, tv, tv, indexing="ij")

    w1 = params.Omega1 * I1g
    w2 = params.Omega2 * I2g
    tau = _tau_grid_4d(j, w1, w2, T1g, T2g, params)
    A1 = melnikov.coeff_array(w1, params.a1)
    A2 = melnikov.coeff_array(w2, params.a2)
    dA1 = _coeff_deriv_array(w1, params.a1)
    dA2 = _coeff_deriv_array(w2, params.a2)
    ps1 = T1g - w1 * tau
    ps2 = T2g - w2 * tau
    f1 = -A1 * np.sin(ps1)
    f2 = -A2 * np.sin(ps2)
    f3 = -params.Omega1 * (dA1 * np.cos(ps1) + tau * A1 * np.sin(ps1))
    f4 = -params.Omega2 * (dA2 * np.cos(ps2) + tau * A2 * np.sin(ps2))
    norm = np.sqrt(f1**2 + f2**2 + f3**2 + f4**2)

    # local minima of ||field|| over the grid: wrap in the angle axes,
    # one-sided comparison at the action-box faces
    is_min = np.ones_like(norm, dtype=bool)
    for ax in range(4):
        fwd = np.roll(norm, -1, axis=ax)
        bwd = np.roll(norm, 1, axis=ax)
        if ax < 2:  # no wraparound in the actions
            sl_lo = [slice(None)] * 4
            sl_hi = [slice(None)] * 4
            sl_lo[ax] = 0
            sl_hi[ax] = -1
            bwd[tuple(sl_lo)] = np.inf
            fwd[tuple(sl_hi)] = np.inf
        is_min &= (norm <= fwd) & (norm <= bwd)
    cand_idx = np.argwhere(is_min)

    def field(z):
        return scattering_flow_field(j, z, params)

    zeros = []
    for idx in cand_idx:
        z0 = np.array(
            [I1g[tuple(idx)], I2g[tuple(idx)], T1g[tuple(idx)], T2g[tuple(idx)]]
        )
        z, info, ok, _msg = fsolve(field, z0, full_output=True, xtol=1e-13)
        if ok != 1:
            continue
        if np.linalg.norm(field(z)) > norm_tol:
            continue
        if abs(z[0]) > box + 1e-6 or abs(z[1]) > box + 1e-6:
            continue
        z[2] = wrap_angle(z[2])
        z[3] = wrap_angle(z[3])
        if not any(_same_point(z, w_) for w_ in zeros):
            zeros.append(z)
    zeros.sort(key=lambda z: (round(z[2], 6), round(z[3], 6), round(z[0], 6)))
    return zeros


def _same_point(a, b, tol=1e-6):
    di = np.hypot(a[0] - b[0], a[1] - b[1])
    dt1 = min(abs(a[2] - b[2]), TWO_PI - abs(a[2] - b[2]))
    dt2 = min(abs(a[3] - b[3]), TWO_PI - abs(a[3] - b[3]))
    return di < tol and dt1 < tol and dt2 < tol


def _tau_grid_4d(j, w1, w2, TH1, TH2, params):
    b1 = params.mu1 * melnikov.alpha(w1)
    b2 = params.mu2 * melnikov.alpha(w2)
    smax = np.abs(b1) + np.abs(b2)
    kap = np.arcsin(np.minimum(smax, 1.0 - 1e-12))
    sgn = -1.0 if j % 2 == 0 else 1.0
    pj = np.pi * j
    lo = -pj - kap - 1e-9
    hi = -pj + kap + 1e-9

    def g(tau):
        x = np.clip(b1 * np.sin(TH1 - tau * w1) + b2 * np.sin(TH2 - tau * w2), -1.0, 1.0)
        return tau + pj + sgn * np.arcsin(x)

    glo = g(lo)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        same = (gm < 0.0) == (glo < 0.0)
        lo = np.where(same, mid, lo)
        glo = np.where(same, gm, glo)
        hi = np.where(same, hi, mid)
    return 0.5 * (lo + hi)


def _coeff_deriv_array(w, a):
    w = np.asarray(w, dtype=float)
    x = 0.5 * np.pi * w
    out = np.empty_like(w)
    small = np.abs(x) < 1.0
    xs = x[small]
    x2 = xs * xs
    p = np.zeros_like(xs)
    for c in (
        1.1221229687119662e-13, 1.6059043836821613e-11, 1.9270852604185938e-09,
        1.0 / 3991680.0, 1.0 / 45360.0, 1.0 / 840.0, 1.0 / 30.0, 1.0 / 3.0,
    ):
        p = (p + c) * x2
    sh_s = np.sinh(xs)
    out[small] = 2.0 * np.pi * a * (-p * xs) / np.where(sh_s == 0.0, 1.0, sh_s) ** 2
    out[small] = np.where(xs == 0.0, 0.0, out[small])
    big = np.abs(x) > 700.0
    rest = ~small & ~big
    xr = x[rest]
    shr = np.sinh(xr)
    out[rest] = 2.0 * np.pi * a * (shr - xr * np.cosh(xr)) / shr**2
    out[big] = 0.0
    return out


def calibrate_remainder(j, params, eps, box=5.0, n=6, rng=None):
    """Empirical constant K with |L*_j(S_j z) - L*_j(z)| <= K eps^2 on a grid."""
    rng = rng or np.random.default_rng(0)
    worst = 0.0
    iv = np.linspace(-box, box, n)
    tv = np.linspace(0.1, TWO_PI, n, endpoint=False)
    for i1 in iv:
        for i2 in iv:
            for t1 in tv:
                for t2 in tv:
                    step = scattering_map(j, (i1, i2, t1, t2), params, eps=eps)
                    worst = max(worst, abs(step.level_change) / eps**2)
    return worst
