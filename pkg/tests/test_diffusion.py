import math

import numpy as np
import pytest

from arnolddiff import diffusion, highway, melnikov
from arnolddiff.errors import DegenerateDirection, RangeNotCovered
from arnolddiff.model import ModelParams

TWO_PI = 2.0 * math.pi


class TestPaths:
    def test_axis_aligned_unchanged(self):
        p = diffusion.ActionPath(np.array([[1.0, 1.0], [3.0, 1.0], [3.0, 2.0]]), 0.1)
        s = diffusion.stairstep(p)
        assert np.allclose(s.waypoints, p.waypoints)

    def test_quarter_circle_hausdorff(self):
        t = np.linspace(0.0, math.pi / 2, 60)
        arc = np.column_stack([2.0 + 2.0 * np.cos(t + math.pi), 2.0 + 2.0 * np.sin(t + math.pi)])
        arc = arc + np.array([2.0, 2.0])  # quarter circle radius 2 in the first quadrant
        p = diffusion.ActionPath(arc, 0.1)
        s = diffusion.stairstep(p, resolution=0.05)
        # every stairstep vertex within resolution of the arc, and vice versa
        for q in s.waypoints:
            assert p.distance_to(q) <= 0.05 + 1e-9
        for q in p.waypoints:
            assert s.distance_to(q) <= 0.05 + 1e-9

    def test_origin_reroute_clearance(self):
        p = diffusion.ActionPath(np.array([[-1.0, 0.02], [1.0, 0.02]]), 0.1)
        s = diffusion.stairstep(p)
        for a, b in zip(s.waypoints[:-1], s.waypoints[1:]):
            for frac in np.linspace(0.0, 1.0, 21):
                q = a + frac * (b - a)
                assert np.max(np.abs(q)) >= 0.05 - 1e-12  # clearance >= delta/2

    def test_rejects_waypoint_in_guard(self):
        with pytest.raises(ValueError):
            diffusion.stairstep(diffusion.ActionPath(np.array([[0.0, 0.0], [1.0, 0.0]]), 0.1))

    def test_length_and_distance(self):
        p = diffusion.ActionPath(np.array([[1.0, 1.0], [3.0, 1.0], [3.0, 2.0]]), 0.1)
        assert p.length() == pytest.approx(3.0)
        assert p.distance_to([2.0, 1.4]) == pytest.approx(0.4)


class TestBuilder:
    def test_short_path_terminates_quickly(self, params):
        path = diffusion.ActionPath(np.array([[1.0, 1.0], [1.05, 1.0]]), 0.1)
        start = np.array([1.0, 1.0, 2.0, 4.4])
        orb = diffusion.build_pseudo_orbit(path, start, params)
        # already inside the final ball: no jumps needed
        assert orb.n_scatter == 0

    def test_tracks_horizontal_segment(self, params):
        path = diffusion.ActionPath(np.array([[1.0, 1.0], [1.6, 1.0]]), 0.1)
        start = np.array([1.0, 1.0, 2.0, 4.4])
        orb = diffusion.build_pseudo_orbit(path, start, params)
        assert orb.max_deviation <= 0.1
        assert orb.meta["final_gap"] <= 0.1
        assert orb.n_scatter > 100
        # jumps in the tracked component are positive on average
        rec = orb.scatter_records()
        assert np.mean(np.sin(rec[:, 2])) < 0.0  # psi1 mostly in (pi, 2pi)

    def test_detour_on_resonant_diagonal(self, params):
        # both window components must be active at the blocked state, so aim
        # the first ball diagonally away from the equal-frequency start
        path = diffusion.ActionPath(np.array([[1.0, 1.08], [1.45, 1.08]]), 0.1)
        start = np.array([1.0, 1.0, 0.3, 0.3 + math.pi])
        events = []
        orb = diffusion.build_pseudo_orbit(
            path, start, params, on_event=lambda kind, z, t: events.append(kind)
        )
        assert orb.n_detour > 0
        assert "detour" in events
        assert orb.meta["final_gap"] <= 0.1

    def test_requires_safe_regime(self):
        p = ModelParams(0.5, 0.3, 1.0, eps=1e-3)
        path = diffusion.ActionPath(np.array([[1.0, 1.0], [2.0, 1.0]]), 0.1)
        with pytest.raises(ValueError):
            diffusion.build_pseudo_orbit(path, np.array([1.0, 1.0, 2.0, 4.4]), p)

    def test_step_accounting_bracket(self, params):
        path = diffusion.ActionPath(np.array([[1.0, 1.0], [1.8, 1.0]]), 0.1)
        orb = diffusion.build_pseudo_orbit(path, np.array([1.0, 1.0, 2.0, 4.4]), params)
        ns_eps, t_quad = diffusion.step_accounting(orb, params)
        assert 0.5 * t_quad <= ns_eps <= 2.0 * t_quad


class TestEpsilonThreshold:
    def test_degenerate_direction(self):
        p = ModelParams(0.3, 0.0, 1.0, eps=1e-3)
        path = diffusion.ActionPath(np.array([[1.0, 1.0], [1.0, 2.0]]), 0.1)
        with pytest.raises(DegenerateDirection):
            diffusion.epsilon_threshold(path, 0.1, 3.0, p, remainder_const=1.0)

    def test_linear_in_delta(self, params):
        path = diffusion.ActionPath(np.array([[1.0, 1.0], [3.0, 1.0]]), 0.1)
        vals = [
            diffusion.epsilon_threshold(path, d, 4.0, params, remainder_const=2.0)[0]
            for d in (1e-5, 2e-5, 4e-5)
        ]
        assert vals[1] == pytest.approx(2 * vals[0], rel=1e-9)
        assert vals[2] == pytest.approx(2 * vals[1], rel=1e-9)

    def test_reference_value(self, params):
        path = diffusion.ActionPath(np.array([[1.0, 1.0], [3.0, 1.0], [3.0, 2.0]]), 0.1)
        eps0, parts = diffusion.epsilon_threshold(path, 0.1, 5.0, params, remainder_const=2.0)
        assert eps0 == min(parts["branch_m_over_2M"], parts["branch_2delta_over_m"])
        assert eps0 > 1e-3  # the acceptance run at eps = 1e-3 is admissible


class TestJumpOracle:
    def test_zero_eps_zero_jump(self, params):
        c = diffusion.verify_scattering_jump(
            np.array([1.0, 1.0, 5 * math.pi / 4, 5 * math.pi / 4]), 0, 0.0, params
        )
        assert np.all(c.measured == 0.0)
        assert np.all(c.predicted == 0.0)

    def test_quadratic_scaling_single_state(self, params):
        z = np.array([1.0, 1.0, 5 * math.pi / 4, 5 * math.pi / 4])
        c1 = diffusion.verify_scattering_jump(z, 0, 1e-3, params)
        c2 = diffusion.verify_scattering_jump(z, 0, 5e-4, params)
        assert 3.0 <= c1.discrepancy / c2.discrepancy <= 5.0

    def test_prediction_matches_at_small_eps(self, params):
        z = np.array([0.8, 1.3, 4.0, 4.6])
        c = diffusion.verify_scattering_jump(z, 0, 1e-4, params)
        assert c.discrepancy <= 0.1 * np.linalg.norm(c.predicted)

    def test_raw_delta_includes_rotor_drift(self, params):
        # the uncompensated action change differs from the jump by O(eps)
        z = np.array([1.0, 1.0, 5 * math.pi / 4, 5 * math.pi / 4])
        c = diffusion.verify_scattering_jump(z, 0, 1e-3, params)
        assert np.linalg.norm(c.raw_delta - c.measured) > 5 * c.discrepancy


@pytest.fixture(scope="module")
def orbit():
    p = ModelParams(0.3, 0.1, 1.0, 1.0, 1.0, eps=1e-3)
    st, _ = highway.highway_seed(7.0, -7.0, p)
    return highway.highway_trace(st, p, stop=(0, 8.3, +1), drift_tol=1e-6), p


class TestTimeEstimate:

    def test_positive_time(self, orbit):
        orb, p = orbit
        est = diffusion.time_estimate((7.05, 8.2), orb, 1e-3, p)
        assert est.T_s > 0.0
        assert est.T_h == pytest.approx(2.0 * math.log(est.C / est.eps), rel=1e-14)
        assert est.T_d == pytest.approx(est.T_s / est.eps * est.T_h, rel=1e-14)

    def test_matches_wall_clock(self, orbit):
        orb, p = orbit
        est = diffusion.time_estimate((7.05, 8.2), orb, 1e-3, p)
        w1 = orb.omega1(p)
        t_lo = float(np.interp(7.05, w1, orb.t))
        t_hi = float(np.interp(8.2, w1, orb.t))
        assert est.T_s == pytest.approx(t_hi - t_lo, rel=0.01)

    def test_range_guard(self, orbit):
        orb, p = orbit
        with pytest.raises(RangeNotCovered):
            diffusion.time_estimate((1.0, 7.0), orb, 1e-3, p)


def test_epsilon_threshold_calibrated_fixture(params):
    # frozen value with the auto-calibrated quadratic-remainder constant
    path = diffusion.ActionPath(np.array([[1.0, 1.0], [3.0, 1.0], [3.0, 2.0]]), 0.1)
    eps0, parts = diffusion.epsilon_threshold(path, 0.1, 5.0, params)
    assert eps0 == pytest.approx(0.0501731675354988, rel=1e-9)
    assert parts["m"] == pytest.approx(0.030026870660797025, rel=1e-9)


def test_tracks_with_negative_amplitude():
    # the quadrant windows flip sign with the coupling amplitude
    p = ModelParams(-0.3, 0.1, 1.0, eps=1e-3)
    path = diffusion.ActionPath(np.array([[1.0, 1.0], [1.5, 1.0]]), 0.1)
    orb = diffusion.build_pseudo_orbit(path, np.array([1.0, 1.0, 2.0, 4.4]), p)
    assert orb.meta["final_gap"] <= 0.1
    assert orb.max_deviation <= 0.1


def test_tracks_decreasing_and_negative_actions(params):
    # downhill tracking and negative-action territory
    path = diffusion.ActionPath(np.array([[2.0, 1.0], [1.4, 1.0]]), 0.1)
    orb = diffusion.build_pseudo_orbit(path, np.array([2.0, 1.0, 2.0, 1.1]), params)
    assert orb.meta["final_gap"] <= 0.1
    path2 = diffusion.ActionPath(np.array([[1.0, -1.0], [1.5, -1.0]]), 0.1)
    orb2 = diffusion.build_pseudo_orbit(path2, np.array([1.0, -1.0, 2.0, 4.4]), params)
    assert orb2.meta["final_gap"] <= 0.1
    assert orb2.max_deviation <= 0.1


def test_tracks_on_second_branch(params):
    # the odd-branch map works the same way through its own crossing times
    path = diffusion.ActionPath(np.array([[1.0, 1.0], [1.4, 1.0]]), 0.1)
    orb = diffusion.build_pseudo_orbit(path, np.array([1.0, 1.0, 2.0, 4.4]), params, j=1)
    assert orb.meta["final_gap"] <= 0.1
    assert orb.max_deviation <= 0.1
