import numpy as np
import pytest

from acaslab import kernels as k
from acaslab.core import Advisory, EncounterState, Params
from acaslab.dynamics import ControlFrame, EventKind, next_event, nmac, propagate, puck_entry


def rk4(state, a_rel, r_v, dt, h=1e-4):
    """Independent fourth-order integration of r' = -r_v, h' = -v, v' = a_rel."""
    y = np.array(state, float)

    def f(y):
        return np.array([-r_v, -y[2], a_rel])

    n = int(round(dt / h))
    for _ in range(n):
        k1 = f(y)
        k2 = f(y + h / 2 * k1)
        k3 = f(y + h / 2 * k2)
        k4 = f(y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


class TestPropagate:
    def test_linear_motion(self):
        s = propagate(EncounterState(10000, 0, 10), ControlFrame(r_v=500), 4)
        assert (s.r, s.h, s.v, s.t) == (8000, -40, 10, 4)

    def test_accelerating(self):
        s = propagate(EncounterState(10000, 0, 0), ControlFrame(a_o=8.05, r_v=500), 4)
        assert (s.r, s.v) == (8000, 32.2)
        assert s.h == pytest.approx(-64.4, abs=1e-12)
        ref = rk4((10000, 0, 0), 8.05, 500, 4)
        assert np.allclose([s.r, s.h, s.v], ref, atol=1e-8)

    def test_relative_acceleration(self):
        u = ControlFrame(a_o=3.0, a_i=1.0, r_v=0.0)
        assert u.a_rel == 2.0
        s = propagate(EncounterState(0, 0, 0), u, 2.0)
        assert s.v == 4.0 and s.h == -4.0

    def test_negative_dt(self):
        with pytest.raises(ValueError):
            propagate(EncounterState(0, 0, 0), ControlFrame(), -1)


class TestNextEvent:
    def test_reach_up(self):
        adv = Advisory(1, 0.0, 166.67)
        kind, tau = next_event(EncounterState(0, 0, 0), ControlFrame(a_o=8.05), adv, -1.0, 1e9)
        assert kind is EventKind.REACH_UP
        assert tau == pytest.approx(166.67 / 8.05)
        assert tau == pytest.approx(20.7043478, abs=1e-6)
        s = propagate(EncounterState(0, 0, 0), ControlFrame(a_o=8.05), tau)
        assert abs(s.v - 166.67) < 1e-9

    def test_horizon_without_crossing(self):
        adv = Advisory(1, 0.0, 50.0)
        kind, tau = next_event(EncounterState(0, 0, 20.0), ControlFrame(), adv, -1.0, 30.0)
        assert kind is EventKind.HORIZON and tau == 30.0

    def test_time_bound_at_zero(self):
        adv = Advisory(1, 0.0, 50.0)
        kind, tau = next_event(EncounterState(0, 0, 20.0, t=1.0), ControlFrame(), adv, 1.0, 30.0)
        assert kind is EventKind.TIME_BOUND and tau == 0.0

    def test_reach_lo_downsense(self):
        adv = Advisory(-1, -25.0)
        kind, tau = next_event(EncounterState(0, 0, 0), ControlFrame(a_o=-5.0), adv, -1.0, 100.0)
        assert kind is EventKind.REACH_LO and tau == pytest.approx(5.0)

    def test_leaving_level_is_not_an_event(self):
        adv = Advisory(1, 25.0)
        kind, _ = next_event(EncounterState(0, 0, 25.0), ControlFrame(a_o=1.0), adv, -1.0, 10.0)
        assert kind is EventKind.HORIZON


class TestNmac:
    p = Params()

    @pytest.mark.parametrize("r,h,expected", [
        (0, 0, True), (500, 100, True), (-500, -100, True),
        (500.01, 0, False), (0, 100.0001, False),
    ])
    def test_puck(self, r, h, expected):
        assert nmac(EncounterState(r, h, 0), self.p) is expected

    def test_puck_entry_matches_dense_sampling(self, rng):
        # 10^3 random segments against sampling at dt = 1e-3
        disagreements = 0
        for _ in range(1000):
            r, h, v = rng.uniform(-100, 1500), rng.uniform(-400, 400), rng.uniform(-60, 60)
            a, r_v, dt = rng.uniform(-20, 20), rng.uniform(0, 500), rng.uniform(0.1, 5)
            s = EncounterState(r, h, v)
            tau = puck_entry(s, ControlFrame(a_o=a, r_v=r_v), dt, self.p)
            ts = np.arange(0.0, dt + 1e-12, 1e-3)
            rr = r - r_v * ts
            hh = h - (v * ts + a * ts * ts / 2)
            inside = (np.abs(rr) <= 500) & (np.abs(hh) <= 100)
            if inside.any() != (tau is not None):
                # only the grazing contacts a 1 ms grid can miss are allowed
                assert tau is not None
                disagreements += 1
                continue
            if tau is not None:
                assert tau <= ts[np.argmax(inside)] + 1e-9
                assert abs(tau - ts[np.argmax(inside)]) <= 1e-3 + 1e-9
                q = propagate(s, ControlFrame(a_o=a, r_v=r_v), tau)
                assert nmac(q, self.p)
        assert disagreements <= 5

    def test_segment_entry_lands_inside(self):
        tau = k.segment_nmac(1000.0, 300.0, 50.0, 0.0, 250.0, 10.0, 500.0, 100.0)
        r, h, _ = k.propagate(1000.0, 300.0, 50.0, 0.0, 250.0, tau)
        assert k.in_puck(r, h, 500.0, 100.0)
        assert tau == pytest.approx(4.0)
