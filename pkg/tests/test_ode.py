import math

import numpy as np
import pytest

from arnolddiff.errors import EventNotFound, MaxStepsExceeded, StepSizeUnderflow
from arnolddiff.model import ModelParams, rhs, separatrix
from arnolddiff.ode import (
    EventSpec,
    IntegratorConfig,
    fixed_step_integrate,
    integrate,
    integrate_to_event,
    rkf78_step,
)


def harmonic(t, y):
    return np.array([y[1], -y[0]])


class TestIntegrate:
    def test_harmonic_period(self):
        traj = integrate(harmonic, [1.0, 0.0], (0.0, 2 * math.pi))
        assert np.abs(traj.final - [1.0, 0.0]).max() < 1e-10

    def test_separatrix_closed_form(self):
        p = ModelParams(0.3, 0.1, 1.0, eps=0.0)
        p0, q0 = separatrix(-3.0)
        traj = integrate(rhs(p), [p0, q0, 0, 0, 0, 0, 0], (0.0, 6.0))
        pe, qe = separatrix(3.0)
        assert abs(traj.final[0] - pe) < 1e-9
        assert abs(traj.final[1] - qe) < 1e-9

    def test_backward(self):
        traj = integrate(harmonic, [1.0, 0.0], (0.0, -math.pi / 2))
        assert np.abs(traj.final - [0.0, 1.0]).max() < 1e-10

    def test_time_reversal_roundtrip(self):
        cfg = IntegratorConfig()
        y0 = np.array([0.3, -0.9])
        fwd = integrate(harmonic, y0, (0.0, 7.3), cfg)
        back = integrate(harmonic, fwd.final, (7.3, 0.0), cfg)
        tol = 10 * (cfg.abs_tol + cfg.rel_tol)
        assert np.abs(back.final - y0).max() < 10 * tol

    def test_order_eight_fixed_steps(self):
        # global error on one oscillator period shrinks ~ h^8
        errs = []
        for n in (16, 32, 64):
            y = fixed_step_integrate(harmonic, [1.0, 0.0], 0.0, 2 * math.pi, n)
            errs.append(np.abs(y - [1.0, 0.0]).max())
        rate1 = math.log(errs[0] / errs[1], 2.0)
        rate2 = math.log(errs[1] / errs[2], 2.0)
        assert 7.5 < rate1 < 8.6
        assert 7.5 < rate2 < 8.6

    def test_step_size_underflow(self):
        def blowup(t, y):
            return np.array([1.0 / (1.0 - y[0])])

        with pytest.raises((StepSizeUnderflow, MaxStepsExceeded)):
            integrate(blowup, [0.0], (0.0, 1.0), IntegratorConfig(h_min=1e-12, max_steps=20000))

    def test_max_steps(self):
        with pytest.raises(MaxStepsExceeded):
            integrate(harmonic, [1.0, 0.0], (0.0, 1e9), IntegratorConfig(max_steps=50))

    def test_rejected_steps_counted(self):
        traj = integrate(harmonic, [1.0, 0.0], (0.0, 10.0), IntegratorConfig(h_init=1e-2))
        assert traj.n_accepted == len(traj.t) - 1

    def test_csv_export(self, tmp_path):
        traj = integrate(harmonic, [1.0, 0.0], (0.0, 1.0))
        path = tmp_path / "traj.csv"
        traj.to_csv(path, columns=["t", "x", "v"])
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "t,x,v"
        assert len(lines) == len(traj.t) + 1
        first = [float(v) for v in lines[1].split(",")]
        assert first == [0.0, 1.0, 0.0]


class TestEvents:
    def test_harmonic_quarter_period(self):
        ev = EventSpec(fn=lambda y: y[0], direction=-1, tol=1e-13)
        y, t = integrate_to_event(harmonic, [1.0, 0.0], ev, t_span=(0.0, 10.0))
        assert abs(t - math.pi / 2) < 1e-9
        assert abs(y[0]) < 1e-12

    def test_direction_filter(self):
        # x crosses zero upward only at t = 3pi/2
        ev = EventSpec(fn=lambda y: y[0], direction=+1, tol=1e-13)
        _y, t = integrate_to_event(harmonic, [1.0, 0.0], ev, t_span=(0.0, 10.0))
        assert abs(t - 3 * math.pi / 2) < 1e-9

    def test_no_crossing(self):
        ev = EventSpec(fn=lambda y: 1.0, direction=0)
        with pytest.raises(EventNotFound):
            integrate_to_event(harmonic, [1.0, 0.0], ev, t_span=(0.0, 5.0))

    def test_skip_initial_section(self):
        # starting exactly on the section must not retrigger immediately
        ev = EventSpec(fn=lambda y: y[0], direction=0, tol=1e-13)
        _y, t = integrate_to_event(harmonic, [0.0, 1.0], ev, t_span=(0.0, 10.0), t_skip=1e-6)
        assert abs(t - math.pi) < 1e-9


def test_single_step_error_estimate():
    y8, err = rkf78_step(harmonic, 0.0, np.array([1.0, 0.0]), 0.3)
    exact = np.array([math.cos(0.3), -math.sin(0.3)])
    assert np.abs(y8 - exact).max() < 1e-10
    assert np.abs(err).max() < 1e-9


def test_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(h_min=1.0, h_init=0.1)
    with pytest.raises(ValueError):
        IntegratorConfig(abs_tol=0.0)


def test_against_independent_integrator():
    # same scattering-flow orbit through scipy's DOP853 as an external oracle
    from scipy.integrate import solve_ivp

    from arnolddiff import scattering
    from arnolddiff.model import ModelParams

    p = ModelParams(0.3, 0.1, 1.0, 1.0, 1.0, eps=1e-3)
    f = scattering.flow_rhs(0, p)
    z0 = np.array([1.3, 0.6, 2.2, 5.1])
    mine = integrate(f, z0, (0.0, 50.0), IntegratorConfig(h_max=5.0))
    ref = solve_ivp(f, (0.0, 50.0), z0, method="DOP853", rtol=1e-12, atol=1e-12)
    assert np.abs(mine.final - ref.y[:, -1]).max() < 1e-8
