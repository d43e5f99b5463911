# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of arnolddiff.kernels.pure: same functions, same results.

Keep this file in lockstep with pure.py; tests/test_kernels_equivalence.py
compares the two backends to near machine precision.
"""

from libc.math cimport sin, cos, sinh, cosh, asin, sqrt, fabs, pi

cdef double SINH_HALF_PI = sinh(0.5 * pi)
cdef double _X_OVERFLOW = 700.0

ALPHA_SUP = 1.0302892
OMEGA_ALPHA_SUP = 1.6003615


cdef inline double _alpha(double w) nogil:
    cdef double x, x2, s
    if w == 0.0:
        return 0.0
    x = 0.5 * pi * w
    if fabs(x) > _X_OVERFLOW:
        return 0.0
    if fabs(x) < 0.1:
        x2 = x * x
        s = 1.0 - x2 / 6.0 + 7.0 * x2 * x2 / 360.0 - 31.0 * x2 * x2 * x2 / 15120.0
        return (2.0 / pi) * w * SINH_HALF_PI * s
    return w * w * SINH_HALF_PI / sinh(x)


cdef inline double _coeff(double w, double a) nogil:
    cdef double x, x2, s
    x = 0.5 * pi * w
    if fabs(x) > _X_OVERFLOW:
        return 0.0
    if fabs(x) < 0.1:
        x2 = x * x
        s = 1.0 - x2 / 6.0 + 7.0 * x2 * x2 / 360.0 - 31.0 * x2 * x2 * x2 / 15120.0
        return 4.0 * a * s
    return 2.0 * pi * w * a / sinh(x)


cdef double[8] _DCOEF
_DCOEF[0] = 1.0 / 3.0
_DCOEF[1] = 1.0 / 30.0
_DCOEF[2] = 1.0 / 840.0
_DCOEF[3] = 1.0 / 45360.0
_DCOEF[4] = 1.0 / 3991680.0
_DCOEF[5] = 1.9270852604185938e-09
_DCOEF[6] = 1.6059043836821613e-11
_DCOEF[7] = 1.1221229687119662e-13


cdef inline double _coeff_deriv(double w, double a) nogil:
    cdef double x, sh, x2, p, num
    cdef int k
    x = 0.5 * pi * w
    if fabs(x) > _X_OVERFLOW:
        return 0.0
    sh = sinh(x)
    if fabs(x) < 1.0:
        x2 = x * x
        p = 0.0
        for k in range(7, -1, -1):
            p = (p + _DCOEF[k]) * x2
        num = -p * x
    else:
        num = sh - x * cosh(x)
    if sh == 0.0:
        return 0.0
    return 2.0 * pi * a * num / (sh * sh)


def alpha(double w):
    return _alpha(w)


def coeff(double w, double a):
    return _coeff(w, a)


def coeff_deriv(double w, double a):
    return _coeff_deriv(w, a)


def branch_offset(int j, double w1, double w2, double mu1, double mu2,
                  double p1, double p2):
    cdef double arg = mu1 * _alpha(w1) * sin(p1) + mu2 * _alpha(w2) * sin(p2)
    if arg > 1.0 or arg < -1.0:
        raise ValueError("crest is not a horizontal graph at this (I, phi)")
    if j % 2 == 0:
        return pi * j - asin(arg)
    return pi * j + asin(arg)


cdef int _tau_core(int j, double w1, double w2, double b1, double b2,
                   double t1, double t2, double tol, double guess,
                   bint has_guess, double* out_tau, double* out_res) nogil:
    cdef double smax, kap, sgn, pj, lo, hi, tau, g, dg, x, dx, den, glo, cand
    cdef int it
    smax = fabs(b1) + fabs(b2)
    if smax >= 1.0:
        return -1
    kap = asin(smax) if smax > 0.0 else 0.0
    sgn = -1.0 if j % 2 == 0 else 1.0
    pj = pi * j
    lo = -pj - kap - 1e-9
    hi = -pj + kap + 1e-9

    x = b1 * sin(t1 - lo * w1) + b2 * sin(t2 - lo * w2)
    if x > 1.0:
        x = 1.0
    elif x < -1.0:
        x = -1.0
    glo = lo + pj + sgn * asin(x)

    if has_guess and lo < guess < hi:
        tau = guess
    else:
        tau = 0.5 * (lo + hi)
    for it in range(1, 121):
        x = b1 * sin(t1 - tau * w1) + b2 * sin(t2 - tau * w2)
        if x > 1.0:
            x = 1.0
        elif x < -1.0:
            x = -1.0
        g = tau + pj + sgn * asin(x)
        if fabs(g) <= tol:
            out_tau[0] = tau
            out_res[0] = g
            return it
        dx = -(b1 * w1 * cos(t1 - tau * w1) + b2 * w2 * cos(t2 - tau * w2))
        den = 1.0 - x * x
        if den < 1e-30:
            den = 1e-30
        dg = 1.0 + sgn * dx / sqrt(den)
        if (g < 0.0) == (glo < 0.0):
            lo = tau
        else:
            hi = tau
        if dg > 0.0:
            cand = tau - g / dg
        else:
            cand = lo - 1.0
        if cand <= lo or cand >= hi:
            cand = 0.5 * (lo + hi)
        tau = cand
        if hi - lo < 1e-16 * (1.0 + fabs(tau)):
            break
    x = b1 * sin(t1 - tau * w1) + b2 * sin(t2 - tau * w2)
    if x > 1.0:
        x = 1.0
    elif x < -1.0:
        x = -1.0
    g = tau + pj + sgn * asin(x)
    if fabs(g) > 1e-10:
        return -2
    out_tau[0] = tau
    out_res[0] = g
    return 120


def tau_star(int j, double w1, double w2, double mu1, double mu2,
             double t1, double t2, double tol=1e-14, guess=None):
    cdef double b1 = mu1 * _alpha(w1)
    cdef double b2 = mu2 * _alpha(w2)
    cdef double tau = 0.0, res = 0.0, gv = 0.0
    cdef bint hg = guess is not None
    if hg:
        gv = guess
    cdef int it = _tau_core(j, w1, w2, b1, b2, t1, t2, tol, gv, hg, &tau, &res)
    if it == -1:
        raise ValueError("crest is not a horizontal graph at this I")
    if it == -2:
        raise ArithmeticError("tau_star iteration failed to converge")
    return tau, res, it


def lstar(int j, double a1, double a2, double a3, double om1, double om2,
          double i1, double i2, double t1, double t2, guess=None):
    cdef double w1 = om1 * i1
    cdef double w2 = om2 * i2
    cdef double b1 = (a1 / a3) * _alpha(w1)
    cdef double b2 = (a2 / a3) * _alpha(w2)
    cdef double tau = 0.0, res = 0.0, gv = 0.0
    cdef bint hg = guess is not None
    if hg:
        gv = guess
    cdef int it = _tau_core(j, w1, w2, b1, b2, t1, t2, 1e-14, gv, hg, &tau, &res)
    if it == -1:
        raise ValueError("crest is not a horizontal graph at this I")
    if it == -2:
        raise ArithmeticError("tau_star iteration failed to converge")
    cdef double v = (_coeff(w1, a1) * cos(t1 - w1 * tau)
                     + _coeff(w2, a2) * cos(t2 - w2 * tau)
                     + _coeff(1.0, a3) * cos(tau))
    return v, tau


def lstar_grad(int j, double a1, double a2, double a3, double om1, double om2,
               double i1, double i2, double t1, double t2, guess=None):
    cdef double w1 = om1 * i1
    cdef double w2 = om2 * i2
    cdef double b1 = (a1 / a3) * _alpha(w1)
    cdef double b2 = (a2 / a3) * _alpha(w2)
    cdef double tau = 0.0, res = 0.0, gv = 0.0
    cdef bint hg = guess is not None
    if hg:
        gv = guess
    cdef int it = _tau_core(j, w1, w2, b1, b2, t1, t2, 1e-14, gv, hg, &tau, &res)
    if it == -1:
        raise ValueError("crest is not a horizontal graph at this I")
    if it == -2:
        raise ArithmeticError("tau_star iteration failed to converge")
    cdef double ps1 = t1 - w1 * tau
    cdef double ps2 = t2 - w2 * tau
    cdef double A1 = _coeff(w1, a1)
    cdef double A2 = _coeff(w2, a2)
    cdef double A3 = _coeff(1.0, a3)
    cdef double s1 = sin(ps1), s2 = sin(ps2), c1 = cos(ps1), c2 = cos(ps2)
    cdef double val = A1 * c1 + A2 * c2 + A3 * cos(tau)
    cdef double dth1 = -A1 * s1
    cdef double dth2 = -A2 * s2
    cdef double di1 = om1 * (_coeff_deriv(w1, a1) * c1 + tau * A1 * s1)
    cdef double di2 = om2 * (_coeff_deriv(w2, a2) * c2 + tau * A2 * s2)
    return val, tau, di1, di2, dth1, dth2


def flow_rhs(int j, double a1, double a2, double a3, double om1, double om2,
             double i1, double i2, double t1, double t2, guess=None):
    v = lstar_grad(j, a1, a2, a3, om1, om2, i1, i2, t1, t2, guess)
    return v[4], v[5], -v[2], -v[3], v[1]


def full_rhs(double sign, double a1, double a2, double a3, double om1,
             double om2, double eps, double p, double q, double i1, double i2,
             double f1, double f2, double s):
    cdef double sq = sin(q)
    cdef double g = a1 * cos(f1) + a2 * cos(f2) + a3 * cos(s)
    cdef double cq = cos(q)
    return (sign * sq + eps * sq * g, sign * p,
            eps * a1 * sin(f1) * cq, eps * a2 * sin(f2) * cq,
            om1 * i1, om2 * i2, 1.0)
