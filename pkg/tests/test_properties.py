"""Hypothesis invariants across the package."""

import math

import numpy as np
from hypothesis import assume, given
from hypothesis import strategies as st

from acaslab import kernels as k
from acaslab.agents import IntruderKind, IntruderPolicy, Selection
from acaslab.core import (Advisory, ConstraintViolation, EncounterState, ModelVariant, Params, RegionKind,
                          convert_rate, default_catalog, to_fpm, validate_params)
from acaslab.dynamics import ControlFrame, EventKind, next_event, propagate
from acaslab.engine import Status, run
from acaslab.regions import check, holds_many, variant_params
from acaslab.sampling import sample_safe_scenario

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)
rates = st.floats(-200.0, 200.0)
signs = st.sampled_from([-1, 1])
accels = st.floats(0.5, 40.0)
variants = st.sampled_from(list(ModelVariant))

states = st.builds(EncounterState, st.floats(-600.0, 8000.0), st.floats(-1500.0, 1500.0), st.floats(-80.0, 80.0))


@given(st.floats(0.0, 2000.0), st.floats(0.0, 500.0), st.floats(-10.0, 600.0), variants)
def test_validate_params_total_and_idempotent(r_p, h_p, r_v, variant):
    p = Params(r_p=r_p, h_p=h_p, r_v=r_v)
    try:
        vp = validate_params(p, variant)
    except ConstraintViolation as e:
        assert e.name
        return
    assert validate_params(vp, variant) == vp


@given(st.floats(-1e5, 1e5))
def test_rate_round_trip(fps):
    back = convert_rate(to_fpm(fps))
    assert back == fps or abs(back - fps) <= math.ulp(fps)


def test_catalog_entries_well_formed():
    for adv in default_catalog().advisories():
        assert adv.w in (-1, 1)


@given(rates, signs, rates, accels)
def test_branch_continuity(v0, w, target, a):
    t_sw = k.switch_time(v0, float(w), target, a)
    quad = 0.5 * w * a * t_sw * t_sw + v0 * t_sw
    d = max(0.0, w * (target - v0))
    linear = target * t_sw - w * d * d / (2 * a) if d > 0 else k.nominal_height(t_sw, v0, float(w), target, a, False)
    assert abs(quad - linear) <= 1e-9 * max(1.0, abs(quad))


@given(states, signs, st.floats(-30.0, 60.0), st.floats(0.0, 40.0))
def test_l_inf_monotone_in_strength(s, w, lo, extra):
    p = variant_params(ModelVariant.INF_NON)
    weak = check(s, Advisory(w, w * lo), p).holds
    strong = check(s, Advisory(w, w * (lo + extra)), p).holds
    assert strong or not weak


@given(states, signs, st.floats(-30.0, 60.0), st.floats(0.0, 100.0), st.floats(0.0, 20.0), st.floats(0.0, 20.0))
def test_c_eps_shrinking_window(s, w, lo, spread, eps, shrink):
    big = variant_params(ModelVariant.BOUND_NON, epsilon=eps + shrink)
    small = variant_params(ModelVariant.BOUND_NON, epsilon=eps)
    adv = Advisory(w, w * lo, w * (lo + spread))
    if check(s, adv, big).holds:
        assert check(s, adv, small).holds


@given(st.lists(st.tuples(st.floats(-600, 8000), st.floats(-1500, 1500), st.floats(-80, 80)), min_size=1, max_size=40),
       signs, st.floats(-30.0, 60.0), st.floats(0.0, 500.0))
def test_horizontal_region_inside_fixed_closure(rows, w, lo, r_v):
    r, h, v = (np.array(x) for x in zip(*rows))
    inner = holds_many(RegionKind.L_INF_HORIZ, variant_params(ModelVariant.INF_HORIZ), r, h, v, w, w * lo)
    outer = holds_many(RegionKind.L_INF, Params(r_v=r_v), r, h, v, w, w * lo)
    assert not (inner & ~outer).any()


@given(st.floats(-80, 80), st.floats(-20, 20), signs, st.floats(-80, 80), st.floats(0, 100))
def test_event_exactness(v, a, w, lo, spread):
    adv = Advisory(w, lo, lo + w * spread)
    kind, tau = next_event(EncounterState(0, 0, v), ControlFrame(a_o=a), adv, -1.0, 1e6)
    assume(kind in (EventKind.REACH_LO, EventKind.REACH_UP))
    target = adv.v_lo if kind is EventKind.REACH_LO else adv.v_up
    s = propagate(EncounterState(0, 0, v), ControlFrame(a_o=a), tau)
    assert abs(w * s.v - w * target) <= 1e-9 * max(1.0, abs(target))


@given(states, st.floats(-20, 20), st.floats(0, 500), st.floats(0.001, 30))
def test_rate_is_height_derivative(s, a, r_v, t):
    u = ControlFrame(a_o=a, r_v=r_v)
    step = 1e-4
    hp = propagate(s, u, t + step).h
    hm = propagate(s, u, t - step).h if t > step else None
    assume(hm is not None)
    # h is the intruder above the ownship, so h' = -v
    assert abs(-(hp - hm) / (2 * step) - propagate(s, u, t).v) <= 1e-6 * max(1.0, abs(s.h) + abs(s.v) * t)


@given(st.tuples(st.floats(-1500, 1500), st.floats(-80, 80)), signs, st.floats(-40, 60),
       st.floats(-1.0, 1.0), st.floats(0.0, 10.0))
def test_compensating_strategy_keeps_compliance(hv, w, lo, frac, dt):
    h, v0 = hv
    p = variant_params(ModelVariant.INF_VERT)
    v_lo = w * lo
    assume(w * v0 >= w * v_lo)
    a_o = k.ownship_accel(k.S_COMP, float(w), v0, v_lo, math.nan, p.a_lo, p.c, p.c)
    a_i = frac * p.c * (1 - 1e-9)
    _, _, v = k.propagate(0.0, h, v0, a_o - a_i, 0.0, dt)
    assert w * v >= w * v_lo


def _runs(variant, seed):
    rng = np.random.default_rng(seed)
    kinds = [IntruderKind.NONE]
    if variant.vertical_intruder:
        kinds = [IntruderKind.BANG_BANG, IntruderKind.RANDOM]
    elif variant.horizontal_intruder:
        kinds = [IntruderKind.BANG_BANG, IntruderKind.RANDOM]
    for kind in kinds:
        sc = sample_safe_scenario(rng, variant, intruder=IntruderPolicy(kind, seed=seed),
                                  selection=Selection.RANDOM, seed=seed)
        yield sc, run(sc)


@given(variants, st.integers(0, 2**31))
def test_run_invariants(variant, seed):
    for sc, out in _runs(variant, seed):
        d = out.trace.data
        p = sc.params
        assert np.all(np.abs(d[:, k.COL_AO]) <= p.a_max)
        assert np.all(np.diff(d[:, k.COL_T]) >= 0)
        assert out.trace.replay_mismatches() == []
        assert (out.status is Status.NMAC) == out.trace.has_nmac
        assert out.status is not Status.NMAC
        if variant.vertical_intruder:
            assert np.all(np.abs(d[:, k.COL_AI]) < (p.c if sc.c_o is None else sc.c_o))
        if variant.horizontal_intruder:
            assert np.all((d[:, k.COL_RV] >= 0) & (d[:, k.COL_RV] <= p.v_max))
        # a tested advisory always passed its region test
        assert not np.any(d[:, k.COL_HOLDS] == 0) or out.status is Status.NO_SAFE_ADVISORY
        if variant in (ModelVariant.SAFEABLE_NON, ModelVariant.SAFEABLE_VERT):
            assert out.status is Status.SAFE_TO_HORIZON


@given(st.sampled_from([ModelVariant.BOUND_VERT, ModelVariant.SAFEABLE_VERT]), st.integers(0, 2**31))
def test_two_sided_domain_faithful(variant, seed):
    for sc, out in _runs(variant, seed):
        d = out.trace.data
        for i in range(len(d) - 1):
            w, lo, up = d[i, k.COL_W], d[i, k.COL_VLO], d[i, k.COL_VUP]
            a_rel = d[i, k.COL_AO] - d[i, k.COL_AI]
            span = d[i + 1, k.COL_T] - d[i, k.COL_T]
            ts = np.linspace(0.0, span, 102)[1:-1]
            wv0 = w * d[i, k.COL_V]
            wv = w * (d[i, k.COL_V] + a_rel * ts)
            tol = 1e-9 * max(1.0, abs(lo), abs(up))
            if wv0 < w * lo - tol:
                assert np.all(wv <= w * lo + tol)
            elif wv0 > w * up + tol:
                assert np.all(wv >= w * up - tol)
            else:
                assert np.all((wv >= w * lo - tol) & (wv <= w * up + tol))
