"""Scalar numeric kernels shared by the region evaluators, the engine and the
falsifier.

Every function here works on plain floats and is compiled with numba. The
public modules wrap them in typed APIs; the game loop :func:`play` is the
single implementation of the model semantics, so the engine and the search
harness can never disagree about what a run does.
"""

import math

import numpy as np
from numba import njit

INF = math.inf

# Params vector layout.
R_P, H_P, R_V, A_LO, A_UP, A_MAX, C, V_MAX, EPS, VCM = range(10)
N_PARAMS = 10

# Region kinds.
K_LINF, K_LHORIZ, K_CEPS, K_CSAFE = 0, 1, 2, 3

# Ownship strategies: sigma_1/3/4/6, sigma_2, sigma_5/7.
S_LO, S_COMP, S_TWO = 0, 1, 2

# Intruder policies and control channels.
I_NONE, I_BANGBANG, I_RANDOM, I_SCRIPTED, I_CLOSURE, I_COOP = range(6)
CH_NONE, CH_AI, CH_RV = 0, 1, 2

# Event codes stored in trace records.
EV_NONE, EV_LO, EV_UP, EV_TB, EV_HOR, EV_INTR, EV_CAD, EV_NMAC, EV_START = range(9)

# Run status codes.
ST_SAFE, ST_NMAC, ST_NOSAFE, ST_OVERFLOW, ST_BOUNDS, ST_STALL = range(6)

# Issuer selection.
SEL_STICKY, SEL_FIRST, SEL_RANDOM, SEL_ADVERSARIAL = range(4)

# Trace record columns.
(COL_T, COL_R, COL_H, COL_V, COL_AO, COL_AI, COL_RV, COL_W, COL_VLO, COL_VUP,
 COL_EVENT, COL_NMAC, COL_HOLDS) = range(13)
N_COLS = 13

MIN_DWELL = 0.1
INTRUDER_MARGIN = 1e-9
LEVEL_TOL = 1e-9

_jit = njit(cache=True)


# ---------------------------------------------------------------- nominal

@_jit
def switch_time(v0, w, target, a):
    return max(0.0, w * (target - v0)) / a


@_jit
def post_slope(v0, w, target, upper):
    if upper:
        return w * max(w * target, w * v0)
    return target


@_jit
def nominal_height(t, v0, w, target, a, upper):
    d = max(0.0, w * (target - v0))
    if t < d / a:
        return 0.5 * w * a * t * t + v0 * t
    return post_slope(v0, w, target, upper) * t - w * d * d / (2.0 * a)


@_jit
def nominal_rate(t, v0, w, target, a, upper):
    d = max(0.0, w * (target - v0))
    if t < d / a:
        return v0 + w * a * t
    return post_slope(v0, w, target, upper)


@_jit
def parabola_height(t, v0, w, a):
    return 0.5 * w * a * t * t + v0 * t


@_jit
def linear_height(t, v0, w, target, a, upper):
    d = max(0.0, w * (target - v0))
    return post_slope(v0, w, target, upper) * t - w * d * d / (2.0 * a)


@_jit
def extreme(v, w, target, a, eps, upper):
    """Nominal (height, rate) after eps seconds."""
    return nominal_height(eps, v, w, target, a, upper), nominal_rate(eps, v, w, target, a, upper)


# ---------------------------------------------------------------- regions

@_jit
def conflict_window(r, r_v, r_p, eps):
    """Times t >= 0 (and t <= eps when eps >= 0) with |r - r_v t| <= r_p."""
    if r_v > 0.0:
        hi = (r + r_p) / r_v
        if hi < 0.0:
            return 0.0, 0.0, False
        lo = max(0.0, (r - r_p) / r_v)
        if lo == INF:
            # a closure rate so small the window never opens
            return 0.0, 0.0, False
    else:
        if abs(r) > r_p:
            return 0.0, 0.0, False
        lo = 0.0
        hi = INF
    if eps >= 0.0:
        hi = min(hi, eps)
        if lo > hi:
            return 0.0, 0.0, False
    return lo, hi, True


@_jit
def _clearance(t, h, v0, w, target, a, upper, side, h_p):
    return side * w * (nominal_height(t, v0, w, target, a, upper) - h) - h_p


@_jit
def window_min(lo, hi, h, v0, w, target, a, upper, side, h_p):
    """Minimum over [lo, hi] of the clearance side*w*(h_n - h) - h_p.

    Returns (margin, argmin). ``hi`` may be infinite; a decreasing tail gives
    margin -inf and some time where the clearance is already negative.
    """
    big_t = switch_time(v0, w, target, a)
    if hi == INF:
        tail = side * w * post_slope(v0, w, target, upper)
        ta = max(lo, big_t)
        if tail < 0.0:
            ca = _clearance(ta, h, v0, w, target, a, upper, side, h_p)
            return -INF, ta + max(0.0, ca) / (-tail) + 1.0
        hi = ta
    best_t = lo
    best = _clearance(lo, h, v0, w, target, a, upper, side, h_p)
    c_hi = _clearance(hi, h, v0, w, target, a, upper, side, h_p)
    if c_hi < best:
        best, best_t = c_hi, hi
    if lo < big_t < hi:
        c_sw = _clearance(big_t, h, v0, w, target, a, upper, side, h_p)
        if c_sw < best:
            best, best_t = c_sw, big_t
    tv = -w * v0 / a
    if lo < tv < hi and tv < big_t:
        c_v = _clearance(tv, h, v0, w, target, a, upper, side, h_p)
        if c_v < best:
            best, best_t = c_v, tv
    return best, best_t


@_jit
def margin_lower(r, h, v, w, v_lo, a_lo, r_v, r_p, h_p, eps):
    lo, hi, ok = conflict_window(r, r_v, r_p, eps)
    if not ok:
        return INF, -1.0
    return window_min(lo, hi, h, v, w, v_lo, a_lo, False, 1.0, h_p)


@_jit
def margin_upper(r, h, v, w, v_up, a_up, r_v, r_p, h_p, eps):
    lo, hi, ok = conflict_window(r, r_v, r_p, eps)
    if not ok:
        return INF, -1.0
    return window_min(lo, hi, h, v, w, v_up, a_up, True, -1.0, h_p)


@_jit
def horiz_window(r, v_max, r_p):
    if r + r_p < 0.0:
        return 0.0, False
    return max(0.0, (r - r_p) / v_max), True


@_jit
def margin_horiz(r, h, v, w, v_lo, a_lo, v_max, r_p, h_p):
    lo, ok = horiz_window(r, v_max, r_p)
    if not ok:
        return INF, -1.0
    return window_min(lo, INF, h, v, w, v_lo, a_lo, False, 1.0, h_p)


@_jit
def margin_ceps(r, h, v, w, v_lo, v_up, P):
    if w * v_lo > w * v_up:
        return -INF
    m_l = margin_lower(r, h, v, w, v_lo, P[A_LO], P[R_V], P[R_P], P[H_P], P[EPS])[0]
    m_u = margin_upper(r, h, v, w, v_up, P[A_UP], P[R_V], P[R_P], P[H_P], P[EPS])[0]
    return max(m_l, m_u)


@_jit
def safeable_lower(r, h, v, w, v_lo, P):
    """L-clause pieces: (margin of L^eps, best follow-up margin, follow-up target or nan)."""
    eps = P[EPS]
    m_eps = margin_lower(r, h, v, w, v_lo, P[A_LO], P[R_V], P[R_P], P[H_P], eps)[0]
    h_ex, v_ex = extreme(v, w, v_lo, P[A_LO], eps, False)
    r_e = r - P[R_V] * eps
    h_e = h - h_ex
    m1 = margin_lower(r_e, h_e, v_ex, w, v_lo, P[A_LO], P[R_V], P[R_P], P[H_P], -1.0)[0]
    v_top = w * P[VCM]
    m2 = margin_lower(r_e, h_e, v_ex, w, v_top, P[A_LO], P[R_V], P[R_P], P[H_P], -1.0)[0]
    if m1 > 0.0:
        target = v_lo
    elif m2 > 0.0:
        target = v_top
    else:
        target = math.nan
    return m_eps, max(m1, m2), target


@_jit
def safeable_upper(r, h, v, w, v_up, P):
    """U-clause pieces; the follow-up is a reversal with sense -w."""
    eps = P[EPS]
    m_eps = margin_upper(r, h, v, w, v_up, P[A_UP], P[R_V], P[R_P], P[H_P], eps)[0]
    h_ex, v_ex = extreme(v, w, v_up, P[A_UP], eps, True)
    v_top = -w * P[VCM]
    m2 = margin_lower(r - P[R_V] * eps, h - h_ex, v_ex, -w, v_top, P[A_LO], P[R_V], P[R_P], P[H_P], -1.0)[0]
    target = v_top if m2 > 0.0 else math.nan
    return m_eps, m2, target


@_jit
def margin_csafe(r, h, v, w, v_lo, v_up, P):
    if w * v_lo > w * v_up:
        return -INF
    le, lf, _ = safeable_lower(r, h, v, w, v_lo, P)
    ue, uf, _ = safeable_upper(r, h, v, w, v_up, P)
    return max(min(le, lf), min(ue, uf))


@_jit
def region_margin(kind, r, h, v, w, v_lo, v_up, P):
    """Signed clearance margin; the region holds iff the margin is > 0."""
    if kind == K_LINF:
        return margin_lower(r, h, v, w, v_lo, P[A_LO], P[R_V], P[R_P], P[H_P], -1.0)[0]
    if kind == K_LHORIZ:
        return margin_horiz(r, h, v, w, v_lo, P[A_LO], P[V_MAX], P[R_P], P[H_P])[0]
    if kind == K_CEPS:
        return margin_ceps(r, h, v, w, v_lo, v_up, P)
    return margin_csafe(r, h, v, w, v_lo, v_up, P)


@_jit
def region_margins(kind, r, h, v, w, v_lo, v_up, P):
    """Array version of :func:`region_margin` (all arrays of equal length)."""
    n = r.shape[0]
    out = np.empty(n)
    for i in range(n):
        out[i] = region_margin(kind, r[i], h[i], v[i], w[i], v_lo[i], v_up[i], P)
    return out


@_jit
def region_grid(kind, rs, hs, v, w, v_lo, v_up, P):
    """Margins on the grid hs x rs (rows indexed by h, columns by r)."""
    out = np.empty((hs.shape[0], rs.shape[0]))
    for i in range(hs.shape[0]):
        for j in range(rs.shape[0]):
            out[i, j] = region_margin(kind, rs[j], hs[i], v, w, v_lo, v_up, P)
    return out


# --------------------------------------------------------------- dynamics

@_jit
def propagate(r, h, v, a_rel, r_v, dt):
    return r - r_v * dt, h - (v * dt + a_rel * dt * dt * 0.5), v + a_rel * dt


@_jit
def in_puck(r, h, r_p, h_p):
    return abs(r) <= r_p and abs(h) <= h_p


@_jit
def level_tol(level):
    return LEVEL_TOL * max(1.0, abs(level))


@_jit
def level_crossing(v, a_rel, w, level):
    """Time until w*v reaches w*level, or inf. Being at the level (within
    tolerance) does not count as a crossing."""
    x0 = w * (v - level)
    if abs(x0) <= level_tol(level):
        return INF
    xr = w * a_rel
    if (x0 < 0.0 and xr > 0.0) or (x0 > 0.0 and xr < 0.0):
        return -x0 / xr
    return INF


@_jit
def next_event(v, t_adv, a_rel, w, v_lo, v_up, has_up, eps, horizon_rem):
    """Earliest (event code, delay); ties go TimeBound > ReachUp > ReachLo > Horizon."""
    kind = EV_HOR
    best = horizon_rem
    t_lo = level_crossing(v, a_rel, w, v_lo)
    if t_lo <= best:
        kind, best = EV_LO, t_lo
    if has_up:
        t_up = level_crossing(v, a_rel, w, v_up)
        if t_up <= best:
            kind, best = EV_UP, t_up
    if eps >= 0.0:
        t_tb = max(0.0, eps - t_adv)
        if t_tb <= best:
            kind, best = EV_TB, t_tb
    return kind, best


@_jit
def _quad_roots(a2, b, c):
    """Real roots of a2*x^2 + b*x + c = 0 in ascending order (nan if absent)."""
    if a2 == 0.0:
        if b == 0.0:
            return math.nan, math.nan
        return -c / b, math.nan
    disc = b * b - 4.0 * a2 * c
    if disc < 0.0:
        return math.nan, math.nan
    sq = math.sqrt(disc)
    q = -0.5 * (b + sq) if b >= 0.0 else -0.5 * (b - sq)
    x1 = q / a2
    x2 = c / q if q != 0.0 else x1
    if x1 > x2:
        x1, x2 = x2, x1
    return x1, x2


@_jit
def segment_nmac(r, h, v, a_rel, r_v, dt, r_p, h_p):
    """Earliest tau in [0, dt] at which the propagated state is inside the
    puck, or -1. Exact up to rounding; the returned tau is checked against the
    closed-form propagation."""
    if r_v > 0.0:
        lo = max(0.0, (r - r_p) / r_v)
        hi = min(dt, (r + r_p) / r_v)
    else:
        if abs(r) > r_p:
            return -1.0
        lo, hi = 0.0, dt
    if lo > hi:
        return -1.0
    pts = np.empty(6)
    pts[0] = lo
    n = 1
    for sgn in (1.0, -1.0):
        x1, x2 = _quad_roots(-0.5 * a_rel, -v, h - sgn * h_p)
        for x in (x1, x2):
            if x == x and lo < x < hi:
                pts[n] = x
                n += 1
    pts[n] = hi
    n += 1
    pts = np.sort(pts[:n])
    for i in range(n):
        b = pts[i]
        rb, hb, _ = propagate(r, h, v, a_rel, r_v, b)
        if in_puck(rb, hb, r_p, h_p):
            return b
        if i + 1 < n and pts[i + 1] > b:
            m = 0.5 * (b + pts[i + 1])
            rm, hm, _ = propagate(r, h, v, a_rel, r_v, m)
            if in_puck(rm, hm, r_p, h_p):
                lo_b, hi_b = b, m
                for _ in range(80):
                    mid = 0.5 * (lo_b + hi_b)
                    if mid <= lo_b or mid >= hi_b:
                        break
                    rq, hq, _ = propagate(r, h, v, a_rel, r_v, mid)
                    if in_puck(rq, hq, r_p, h_p):
                        hi_b = mid
                    else:
                        lo_b = mid
                return hi_b
    return -1.0


@_jit
def nmac_distance(r, h, r_p, h_p):
    """Normalized distance to the puck: <= 0 inside."""
    return max((abs(r) - r_p) / max(r_p, 1.0), (abs(h) - h_p) / max(h_p, 1.0))


@_jit
def segment_distance(r, h, v, a_rel, r_v, dt, r_p, h_p):
    best = nmac_distance(r, h, r_p, h_p)
    rr, hh, _ = propagate(r, h, v, a_rel, r_v, dt)
    best = min(best, nmac_distance(rr, hh, r_p, h_p))
    if r_v > 0.0:
        tc = r / r_v
        if 0.0 < tc < dt:
            rr, hh, _ = propagate(r, h, v, a_rel, r_v, tc)
            best = min(best, nmac_distance(rr, hh, r_p, h_p))
    if a_rel != 0.0:
        tv = -v / a_rel
        if 0.0 < tv < dt:
            rr, hh, _ = propagate(r, h, v, a_rel, r_v, tv)
            best = min(best, nmac_distance(rr, hh, r_p, h_p))
    return best


# -------------------------------------------------------------- strategies

@_jit
def snap(v, level):
    if abs(v - level) <= level_tol(level):
        return level
    return v


@_jit
def ownship_accel(strat, w, v, v_lo, v_up, a_lo, c, c_o):
    """Winning strategies of the seven models. A rate within tolerance of a level is
    treated as being exactly on it, matching event detection."""
    v = snap(v, v_lo)
    if strat == S_LO:
        return w * a_lo if w * v < w * v_lo else 0.0
    if strat == S_COMP:
        return w * (a_lo + c) if w * v < w * v_lo else w * c
    v = snap(v, v_up)
    if w * v < w * v_lo:
        return w * (a_lo + c_o)
    if w * v > w * v_up:
        return -w * c_o
    # On a level, drift into the band so the segment stays in its domain
    # whatever the intruder does; both values are allowed in the band.
    if v == v_lo and v != v_up:
        return w * c_o
    if v == v_up and v != v_lo:
        return -w * c_o
    return 0.0


# ------------------------------------------------------------------- rng

@_jit
def _mix64(x):
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


@_jit
def uniform(seed, counter):
    """Counter-based uniform in [0, 1): stateless, so replays are exact."""
    z = _mix64(np.uint64(seed) * np.uint64(0x9E3779B97F4A7C15) + _mix64(np.uint64(counter) + np.uint64(1)))
    return float(z >> np.uint64(11)) * (1.0 / 9007199254740992.0)


# ---------------------------------------------------------------- intruder

@_jit
def intruder_decide(kind, channel, seed, k, t, r, h, v, a_o, w, v_lo, v_up, has_up,
                    eps, t_adv, c_o, v_max, r_v_cur, dwell, mean_dwell,
                    sched_t, sched_v, horizon_rem):
    """Next intruder control on ``channel`` and the absolute time it ends."""
    if kind == I_NONE or channel == CH_NONE:
        return (0.0 if channel != CH_RV else r_v_cur), INF
    if kind == I_SCRIPTED or kind == I_CLOSURE:
        idx = -1
        for j in range(sched_t.shape[0]):
            if sched_t[j] <= t:
                idx = j
        if idx < 0:
            value = 0.0 if channel == CH_AI else r_v_cur
            nxt = sched_t[0] if sched_t.shape[0] > 0 else INF
            return value, nxt
        nxt = sched_t[idx + 1] if idx + 1 < sched_t.shape[0] else INF
        return sched_v[idx], nxt
    if kind == I_COOP:
        return -w * 0.5 * c_o, INF
    bound = c_o * (1.0 - INTRUDER_MARGIN)
    if kind == I_RANDOM:
        u1 = uniform(seed, 2 * k)
        u2 = uniform(seed, 2 * k + 1)
        hold = MIN_DWELL + (-mean_dwell * math.log(1.0 - u2))
        if channel == CH_AI:
            return (2.0 * u1 - 1.0) * bound, t + hold
        return u1 * v_max, t + hold
    # Bang-bang: greedy extreme with one-segment lookahead.
    hold = max(dwell, MIN_DWELL)
    if channel == CH_RV:
        look = min(hold, horizon_rem) if horizon_rem > 0.0 else hold
        best_v = 0.0
        best = abs(r)
        for cand in (v_max, min(v_max, max(0.0, r / look))):
            d = abs(r - cand * look)
            if d < best:
                best, best_v = d, cand
        return best_v, t + hold
    best_s = -float(w)
    best = INF
    for s in (-float(w), float(w)):
        a_i = s * bound
        a_rel = a_o - a_i
        _, tau = next_event(v, t_adv, a_rel, w, v_lo, v_up, has_up, eps, horizon_rem)
        look = min(hold, tau)
        _, hh, _ = propagate(0.0, h, v, a_rel, 0.0, look)
        if abs(hh) < best:
            best, best_s = abs(hh), s
    return best_s * bound, t + hold


# ------------------------------------------------------------------ issuer

@_jit
def _passes(kind, r, h, v, w, v_lo, v_up, P):
    return region_margin(kind, r, h, v, w, v_lo, v_up, P) > 0.0


@_jit
def reissue(forced, sel, kind, r, h, v, cw, clo, cup, cands, P, choices, ck, iseed, look):
    """Advisory issuance. Returns (found, w, v_lo, v_up, ck, holds) where holds
    is 1 when the issued advisory was tested, -1 when kept untested."""
    if not forced and sel == SEL_STICKY:
        return True, cw, clo, cup, ck, -1
    if forced and sel == SEL_STICKY and _passes(kind, r, h, v, cw, clo, cup, P):
        return True, cw, clo, cup, ck, 1
    n = cands.shape[0]
    total = n + 1 if forced else n
    ok = np.zeros(total, dtype=np.bool_)
    count = 0
    for i in range(total):
        if i < n:
            cw_i, lo_i, up_i = cands[i, 0], cands[i, 1], cands[i, 2]
        else:
            cw_i, lo_i, up_i = cw, clo, cup
        if _passes(kind, r, h, v, cw_i, lo_i, up_i, P):
            ok[i] = True
            count += 1
            if sel != SEL_RANDOM and sel != SEL_ADVERSARIAL:
                break
    if count == 0:
        if forced:
            return False, cw, clo, cup, ck, 0
        return True, cw, clo, cup, ck, -1
    pick = -1
    if sel == SEL_RANDOM:
        u = choices[ck] if ck < choices.shape[0] else uniform(iseed, ck)
        ck += 1
        nth = min(int(u * count), count - 1)
        for i in range(total):
            if ok[i]:
                if nth == 0:
                    pick = i
                    break
                nth -= 1
    elif sel == SEL_ADVERSARIAL:
        best = INF
        for i in range(total):
            if ok[i]:
                if i < n:
                    cw_i, lo_i = cands[i, 0], cands[i, 1]
                else:
                    cw_i, lo_i = cw, clo
                sep = abs(h - nominal_height(look, v, cw_i, lo_i, P[A_LO], False))
                if sep < best:
                    best, pick = sep, i
    else:
        for i in range(total):
            if ok[i]:
                pick = i
                break
    if pick < n:
        return True, cands[pick, 0], cands[pick, 1], cands[pick, 2], ck, 1
    return True, cw, clo, cup, ck, 1


# --------------------------------------------------------------- game loop

@_jit
def variant_codes(variant):
    """(region kind, strategy, intruder channel) of Models 1-7."""
    if variant == 1:
        return K_LINF, S_LO, CH_NONE
    if variant == 2:
        return K_LINF, S_COMP, CH_AI
    if variant == 3:
        return K_LHORIZ, S_LO, CH_RV
    if variant == 4:
        return K_CEPS, S_LO, CH_NONE
    if variant == 5:
        return K_CEPS, S_TWO, CH_AI
    if variant == 6:
        return K_CSAFE, S_LO, CH_NONE
    return K_CSAFE, S_TWO, CH_AI


@_jit
def _write(rec, n, record, t, r, h, v, a_o, a_i, r_v, w, v_lo, v_up, ev, nmac, holds):
    if not record:
        return n + 1
    if n > 0 and rec[n - 1, COL_T] == t:
        n -= 1  # zero-length segment: merge into the previous record
    if n >= rec.shape[0]:
        return -1
    rec[n, COL_T] = t
    rec[n, COL_R] = r
    rec[n, COL_H] = h
    rec[n, COL_V] = v
    rec[n, COL_AO] = a_o
    rec[n, COL_AI] = a_i
    rec[n, COL_RV] = r_v
    rec[n, COL_W] = w
    rec[n, COL_VLO] = v_lo
    rec[n, COL_VUP] = v_up
    rec[n, COL_EVENT] = ev
    rec[n, COL_NMAC] = 1.0 if nmac else 0.0
    rec[n, COL_HOLDS] = holds
    return n + 1


@_jit
def play(variant, P, r, h, v, w, v_lo, v_up, cands, sel, choices, iseed,
         ikind, int_seed, idwell, imean, sched_t, sched_v, horizon, cadence, c_o0,
         rec, record):
    """Run one game. Returns (status, records written, min puck distance, end time)."""
    kind, strat, channel = variant_codes(variant)
    bounded = variant >= 4
    eps = P[EPS] if bounded else -1.0
    has_up = bounded
    if not has_up:
        v_up = math.nan
    r_p, h_p, a_lo, a_max, c = P[R_P], P[H_P], P[A_LO], P[A_MAX], P[C]
    r_v = P[R_V]
    a_i = 0.0
    c_o = c_o0
    t = 0.0
    t_adv = 0.0
    ck = 0
    kint = 0
    look = eps if eps > 0.0 else (cadence if cadence > 0.0 else 1.0)
    active = ikind != I_NONE and channel != CH_NONE

    a_o = ownship_accel(strat, w, v, v_lo, v_up, a_lo, c, c_o)
    if abs(a_o) > a_max:
        return ST_BOUNDS, 0, INF, t
    nxt = INF
    if active:
        val, nxt = intruder_decide(ikind, channel, int_seed, kint, t, r, h, v, a_o, w, v_lo, v_up,
                                   has_up, eps, t_adv, c_o, P[V_MAX], r_v, idwell, imean,
                                   sched_t, sched_v, horizon - t)
        kint += 1
        if channel == CH_AI:
            a_i = val
            if abs(a_i) >= c_o:
                c_o = c
                a_o = ownship_accel(strat, w, v, v_lo, v_up, a_lo, c, c_o)
        else:
            r_v = val
    n_cad = 1
    next_cad = cadence if (not bounded and cadence > 0.0) else INF
    min_d = nmac_distance(r, h, r_p, h_p)
    n = _write(rec, 0, record, t, r, h, v, a_o, a_i, r_v, w, v_lo, v_up, EV_START,
               in_puck(r, h, r_p, h_p), 1)
    if n < 0:
        return ST_OVERFLOW, 0, min_d, t
    if in_puck(r, h, r_p, h_p):
        return ST_NMAC, n, min_d, t
    stalls = 0
    while True:
        a_rel = a_o - a_i
        ek, tau = next_event(v, t_adv, a_rel, w, v_lo, v_up, has_up, eps, horizon - t)
        t_ev = t + tau
        t_next = t_ev
        if nxt < t_next:
            t_next = nxt
        if next_cad < t_next:
            t_next = next_cad
        dt = t_next - t
        if dt < 0.0:
            dt = 0.0
            t_next = t
        if dt == 0.0:
            stalls += 1
            if stalls > 1000:
                return ST_STALL, n, min_d, t
        else:
            stalls = 0
        tn = segment_nmac(r, h, v, a_rel, r_v, dt, r_p, h_p)
        if tn >= 0.0:
            t_hit = t + tn
            rr, hh, vv = propagate(r, h, v, a_rel, r_v, t_hit - t)
            for _ in range(64):
                if in_puck(rr, hh, r_p, h_p) or t_hit >= t_next:
                    break
                t_hit = np.nextafter(t_hit, INF)
                rr, hh, vv = propagate(r, h, v, a_rel, r_v, t_hit - t)
            n = _write(rec, n, record, t_hit, rr, hh, vv, a_o, a_i, r_v, w, v_lo, v_up, EV_NMAC, True, -1)
            if n < 0:
                return ST_OVERFLOW, 0, -1.0, t_hit
            return ST_NMAC, n, min(min_d, nmac_distance(rr, hh, r_p, h_p)), t_hit
        min_d = min(min_d, segment_distance(r, h, v, a_rel, r_v, dt, r_p, h_p))
        r, h, v = propagate(r, h, v, a_rel, r_v, t_next - t)
        t_adv += t_next - t
        t = t_next

        own = t_ev <= t_next
        ev = EV_NONE
        if own and ek == EV_HOR:
            n = _write(rec, n, record, t, r, h, v, a_o, a_i, r_v, w, v_lo, v_up, EV_HOR, False, -1)
            if n < 0:
                return ST_OVERFLOW, 0, min_d, t
            return ST_SAFE, n, min_d, t
        holds = -1
        repick = False
        if nxt <= t_next:
            ev = EV_INTR
        if next_cad <= t_next:
            ev = EV_CAD
            n_cad += 1
            next_cad = n_cad * cadence
            found, w2, lo2, up2, ck, holds = reissue(False, sel, kind, r, h, v, w, v_lo, v_up, cands,
                                                     P, choices, ck, iseed, look)
            w, v_lo, v_up = w2, lo2, up2
            repick = True
        if own and (ek == EV_LO or ek == EV_UP):
            ev = ek
            repick = True
        if own and ek == EV_TB:
            ev = EV_TB
            found, w2, lo2, up2, ck, holds = reissue(True, sel, kind, r, h, v, w, v_lo, v_up, cands,
                                                     P, choices, ck, iseed, look)
            if not found:
                n = _write(rec, n, record, t, r, h, v, a_o, a_i, r_v, w, v_lo, v_up, EV_TB, False, 0)
                if n < 0:
                    return ST_OVERFLOW, 0, min_d, t
                return ST_NOSAFE, n, min_d, t
            w, v_lo, v_up = w2, lo2, up2
            t_adv = 0.0
            repick = True
        # The ownship moves first so the intruder sees the current a_o.
        if repick:
            a_o = ownship_accel(strat, w, v, v_lo, v_up, a_lo, c, c_o)
        if nxt <= t_next:
            val, nxt = intruder_decide(ikind, channel, int_seed, kint, t, r, h, v, a_o, w, v_lo, v_up,
                                       has_up, eps, t_adv, c_o, P[V_MAX], r_v, idwell, imean,
                                       sched_t, sched_v, horizon - t)
            kint += 1
            if channel == CH_AI:
                a_i = val
                if abs(a_i) >= c_o:
                    c_o = c
                    a_o = ownship_accel(strat, w, v, v_lo, v_up, a_lo, c, c_o)
            else:
                r_v = val
        if abs(a_o) > a_max:
            return ST_BOUNDS, n, min_d, t
        n = _write(rec, n, record, t, r, h, v, a_o, a_i, r_v, w, v_lo, v_up, ev, False, holds)
        if n < 0:
            return ST_OVERFLOW, 0, min_d, t
