"""Exact safe-region evaluators and an independent sampling oracle.

Each evaluator reduces the universally quantified time of the region's
defining formula to at most four candidate times (window ends, the switch
point of the nominal, the parabola vertex), so every verdict is exact up to
floating-point rounding. The existential follow-up of the safeable region is
decided at the strongest admissible target (membership is monotone in it).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels as k
from .core import (Advisory, EncounterState, ModelVariant, Params, RegionKind, ValidatedParams,
                   validate_params)

_KIND_CODE = {
    RegionKind.L_INF: k.K_LINF,
    RegionKind.L_INF_HORIZ: k.K_LHORIZ,
    RegionKind.C_EPS: k.K_CEPS,
    RegionKind.C_SAFEABLE: k.K_CSAFE,
}


class TrajectoryKind(enum.Enum):
    LO = "lo"
    UP = "up"


class Side(enum.Enum):
    LOWER = "lower"
    UPPER = "upper"


def params_vector(p: Params) -> np.ndarray:
    out = np.empty(k.N_PARAMS)
    out[k.R_P] = p.r_p
    out[k.H_P] = p.h_p
    out[k.R_V] = p.r_v
    out[k.A_LO] = p.a_lo
    out[k.A_UP] = p.a_up
    out[k.A_MAX] = p.a_max
    out[k.C] = p.c
    out[k.V_MAX] = p.v_max
    out[k.EPS] = p.epsilon
    out[k.VCM] = p.v_climb_max
    return out


def kind_code(kind: RegionKind) -> int:
    return _KIND_CODE[kind]


@dataclass(frozen=True)
class NominalTrajectory:
    """Minimally compliant ownship path relative to the intruder."""

    kind: TrajectoryKind
    w: int
    v0: float
    v_target: float
    a: float
    r_v: float

    @property
    def upper(self) -> bool:
        return self.kind is TrajectoryKind.UP

    @property
    def t_switch(self) -> float:
        return k.switch_time(self.v0, float(self.w), self.v_target, self.a)

    def height(self, t: float) -> float:
        return k.nominal_height(t, self.v0, float(self.w), self.v_target, self.a, self.upper)

    def rate(self, t: float) -> float:
        return k.nominal_rate(t, self.v0, float(self.w), self.v_target, self.a, self.upper)

    @classmethod
    def lower(cls, s: EncounterState, adv: Advisory, p: Params) -> NominalTrajectory:
        return cls(TrajectoryKind.LO, adv.w, s.v, adv.v_lo, p.a_lo, p.r_v)

    @classmethod
    def upper_of(cls, s: EncounterState, adv: Advisory, p: Params) -> NominalTrajectory:
        return cls(TrajectoryKind.UP, adv.w, s.v, _require_up(adv), p.a_up, p.r_v)


def nominal_point(traj: NominalTrajectory, t: float) -> tuple[float, float]:
    if t < 0:
        raise ValueError("nominal_point needs t >= 0")
    return traj.r_v * t, traj.height(t)


@dataclass(frozen=True)
class ExtremeState:
    h_ex: float
    v_ex: float
    side: Side


def extreme_state(side: Side, v: float, w: int, v_target: float, a: float, eps: float,
                  params: Params | None = None) -> ExtremeState:
    """Height and rate of the lower (a_lo) or upper (a_up) nominal after eps seconds."""
    if eps < 0:
        raise ValueError("extreme_state needs eps >= 0")
    h_ex, v_ex = k.extreme(v, float(w), v_target, a, eps, side is Side.UPPER)
    return ExtremeState(h_ex, v_ex, side)


@dataclass(frozen=True)
class Witness:
    """A concrete instantiation of a region formula's quantifiers.

    For a false verdict, ``t`` is a conflict time where the nominal point
    (r_n, h_n) fails the vertical test. ``r_v`` is set for the horizontally
    maneuvering region. For safeable verdicts ``follow_up`` holds the target
    of the follow-up advisory found (nan when none exists).
    """

    clause: str
    t: float | None = None
    r_n: float | None = None
    h_n: float | None = None
    r_v: float | None = None
    follow_up: float | None = None
    follow_up_w: int | None = None

    def to_dict(self) -> dict:
        out = {"clause": self.clause}
        for name in ("t", "r_n", "h_n", "r_v", "follow_up", "follow_up_w"):
            value = getattr(self, name)
            if value is not None:
                out[name] = None if isinstance(value, float) and math.isnan(value) else value
        return out


@dataclass(frozen=True)
class RegionVerdict:
    holds: bool
    kind: RegionKind
    margin: float
    witnesses: tuple[Witness, ...] = ()
    reason: str = ""
    degenerate_window: bool = False
    climb_bound: float | None = None

    @property
    def witness(self) -> Witness | None:
        return self.witnesses[0] if self.witnesses else None

    def to_dict(self) -> dict:
        out = {
            "holds": self.holds,
            "kind": self.kind.value,
            "margin_ft": _json_float(self.margin),
            "witness": [w.to_dict() for w in self.witnesses],
        }
        if self.reason:
            out["reason"] = self.reason
        if self.degenerate_window:
            out["degenerate_window"] = True
        if self.climb_bound is not None:
            out["climb_bound_fps"] = self.climb_bound
        return out


def _json_float(x: float):
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


@dataclass(frozen=True)
class RegionQuery:
    state: EncounterState
    advisory: Advisory
    params: ValidatedParams
    kind: RegionKind = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if not isinstance(self.params, ValidatedParams):
            raise TypeError("RegionQuery needs ValidatedParams (see validate_params)")
        if self.kind is None:
            object.__setattr__(self, "kind", self.params.variant.region_kind)
        if self.kind in (RegionKind.C_EPS, RegionKind.C_SAFEABLE) and self.advisory.v_up is None:
            raise ValueError(f"{self.kind.value} queries need an advisory with v_up")
        if self.kind is RegionKind.C_SAFEABLE and self.params.epsilon < 0:
            raise ValueError("safeable regions need epsilon >= 0")


def _require_up(adv: Advisory) -> float:
    if adv.v_up is None:
        raise ValueError("advisory has no v_up")
    return adv.v_up


# ------------------------------------------------------------- exact side

def _puck_entry(r, h, v, w, target, a, r_v, r_p, h_p, lo, hi):
    """Earliest t in [lo, hi] where the nominal is inside the puck, or None."""
    if hi == math.inf:
        hi = lo + 1e6
    t_sw = k.switch_time(v, float(w), target, a)
    pieces = [(lo, min(hi, t_sw))] if t_sw > lo else []
    start = max(lo, t_sw)
    if start <= hi:
        pieces.append((start, hi))
    for a0, b0 in pieces:
        if b0 < a0:
            continue
        # Relative height h - h_n(t) restricted to the piece is quadratic in (t - a0).
        h0 = h - k.nominal_height(a0, v, float(w), target, a, False)
        v0 = k.nominal_rate(a0, v, float(w), target, a, False)
        acc = w * a if a0 < t_sw else 0.0
        r0 = r - r_v * a0
        tau = k.segment_nmac(r0, h0, v0, acc, r_v, b0 - a0, r_p, h_p)
        if tau >= 0:
            return a0 + tau
    return None


def _lower_falsifier(s: EncounterState, w: int, target: float, p: Params, eps: float, clause: str,
                     r_v: float | None = None) -> tuple[float, Witness | None]:
    m, t_star = k.margin_lower(s.r, s.h, s.v, float(w), target, p.a_lo,
                               p.r_v if r_v is None else r_v, p.r_p, p.h_p, eps)
    if m > 0:
        return m, None
    traj = NominalTrajectory(TrajectoryKind.LO, w, s.v, target, p.a_lo, p.r_v if r_v is None else r_v)
    lo, hi, _ = k.conflict_window(s.r, traj.r_v, p.r_p, eps)
    entry = _puck_entry(s.r, s.h, s.v, w, target, p.a_lo, traj.r_v, p.r_p, p.h_p, lo, hi)
    t = entry if entry is not None else t_star
    return m, Witness(clause, t=t, r_n=traj.r_v * t, h_n=traj.height(t))


def eval_L_inf(q: RegionQuery) -> RegionVerdict:
    s, adv, p = q.state, q.advisory, q.params
    m, wit = _lower_falsifier(s, adv.w, adv.v_lo, p, -1.0, "L")
    degenerate = p.r_v == 0 and abs(s.r) > p.r_p
    return RegionVerdict(m > 0, RegionKind.L_INF, m, (wit,) if wit else (), degenerate_window=degenerate)


def eval_L_inf_horiz(q: RegionQuery) -> RegionVerdict:
    s, adv, p = q.state, q.advisory, q.params
    m, t_star = k.margin_horiz(s.r, s.h, s.v, float(adv.w), adv.v_lo, p.a_lo, p.v_max, p.r_p, p.h_p)
    if m > 0:
        return RegionVerdict(True, RegionKind.L_INF_HORIZ, m)
    traj = NominalTrajectory(TrajectoryKind.LO, adv.w, s.v, adv.v_lo, p.a_lo, 0.0)
    r_v = 0.0 if t_star <= 0 else min(p.v_max, max(0.0, s.r / t_star))
    wit = Witness("L", t=t_star, r_n=r_v * t_star, h_n=traj.height(t_star), r_v=r_v)
    return RegionVerdict(False, RegionKind.L_INF_HORIZ, m, (wit,))


def _upper_falsifier(s: EncounterState, adv: Advisory, p: Params, eps: float) -> tuple[float, Witness | None]:
    m, t_star = k.margin_upper(s.r, s.h, s.v, float(adv.w), _require_up(adv), p.a_up, p.r_v, p.r_p, p.h_p, eps)
    if m > 0:
        return m, None
    traj = NominalTrajectory.upper_of(s, adv, p)
    return m, Witness("U", t=t_star, r_n=p.r_v * t_star, h_n=traj.height(t_star))


def eval_C_eps(q: RegionQuery) -> RegionVerdict:
    s, adv, p = q.state, q.advisory, q.params
    if not adv.well_formed:
        return RegionVerdict(False, RegionKind.C_EPS, -math.inf, reason="advisory bounds: w*v_lo > w*v_up")
    m_l, wit_l = _lower_falsifier(s, adv.w, adv.v_lo, p, p.epsilon, "L")
    m_u, wit_u = _upper_falsifier(s, adv, p, p.epsilon)
    m = max(m_l, m_u)
    wits = tuple(w for w in (wit_l, wit_u) if w is not None) if m <= 0 else ()
    return RegionVerdict(m > 0, RegionKind.C_EPS, m, wits)


def eval_C_safeable(q: RegionQuery) -> RegionVerdict:
    s, adv, p = q.state, q.advisory, q.params
    pv = params_vector(p)
    bound = p.v_climb_max
    if not adv.well_formed:
        return RegionVerdict(False, RegionKind.C_SAFEABLE, -math.inf,
                             reason="advisory bounds: w*v_lo > w*v_up", climb_bound=bound)
    w = float(adv.w)
    le, lf, lt = k.safeable_lower(s.r, s.h, s.v, w, adv.v_lo, pv)
    ue, uf, ut = k.safeable_upper(s.r, s.h, s.v, w, _require_up(adv), pv)
    m_l, m_u = min(le, lf), min(ue, uf)
    m = max(m_l, m_u)
    wits = []
    if m_l > 0 or m <= 0:
        wits.append(_safeable_witness(s, adv, p, "L", le, lt, adv.w))
    if m_u > 0 or m <= 0:
        wits.append(_safeable_witness(s, adv, p, "U", ue, ut, -adv.w))
    if m_u > 0 and m_l <= 0:
        wits.reverse()
    return RegionVerdict(m > 0, RegionKind.C_SAFEABLE, m, tuple(wits), climb_bound=bound)


def _safeable_witness(s, adv, p, clause, m_eps, target, follow_w) -> Witness:
    if m_eps <= 0:
        if clause == "L":
            _, wit = _lower_falsifier(s, adv.w, adv.v_lo, p, p.epsilon, "L")
        else:
            _, wit = _upper_falsifier(s, adv, p, p.epsilon)
        return Witness(clause, t=wit.t, r_n=wit.r_n, h_n=wit.h_n, follow_up=target, follow_up_w=follow_w)
    return Witness(clause, follow_up=target, follow_up_w=follow_w)


_EVALUATORS = {
    RegionKind.L_INF: eval_L_inf,
    RegionKind.L_INF_HORIZ: eval_L_inf_horiz,
    RegionKind.C_EPS: eval_C_eps,
    RegionKind.C_SAFEABLE: eval_C_safeable,
}


def evaluate(q: RegionQuery) -> RegionVerdict:
    return _EVALUATORS[q.kind](q)


def check(state: EncounterState, advisory: Advisory, params: ValidatedParams,
          kind: RegionKind | None = None) -> RegionVerdict:
    return evaluate(RegionQuery(state, advisory, params, kind))


def margins(kind: RegionKind, p: Params, r, h, v, w, v_lo, v_up=None) -> np.ndarray:
    """Vectorized margins; the region holds where the margin is > 0."""
    r, h, v, w, v_lo = (np.ascontiguousarray(np.broadcast_to(np.asarray(x, float), np.shape(r)))
                        for x in (r, h, v, w, v_lo))
    v_up = np.full(r.shape, np.nan) if v_up is None else np.ascontiguousarray(
        np.broadcast_to(np.asarray(v_up, float), r.shape))
    flat = [np.ravel(x) for x in (r, h, v, w, v_lo, v_up)]
    return k.region_margins(kind_code(kind), *flat, params_vector(p)).reshape(r.shape)


def holds_many(kind: RegionKind, p: Params, r, h, v, w, v_lo, v_up=None) -> np.ndarray:
    return margins(kind, p, r, h, v, w, v_lo, v_up) > 0


def raster(kind: RegionKind, p: Params, rs: np.ndarray, hs: np.ndarray, v: float, adv: Advisory) -> np.ndarray:
    """Boolean grid indexed [h, r]."""
    v_up = math.nan if adv.v_up is None else adv.v_up
    grid = k.region_grid(kind_code(kind), np.asarray(rs, float), np.asarray(hs, float), v,
                         float(adv.w), adv.v_lo, v_up, params_vector(p))
    return grid > 0


# ------------------------------------------------------------------ oracle

def _oracle_profile(t: np.ndarray, v0: float, w: int, target: float, a: float, upper: bool) -> np.ndarray:
    """Nominal height by trapezoidal integration of the nominal rate."""
    big_t = max(0.0, w * (target - v0)) / a
    final = w * max(w * target, w * v0) if upper else target
    rate = np.where(t < big_t, v0 + w * a * t, final)
    h = np.zeros_like(t)
    h[1:] = np.cumsum(0.5 * (rate[1:] + rate[:-1]) * np.diff(t))
    # One cell contains the rate kink; integrate it exactly from the rate profile.
    j = np.searchsorted(t, big_t)
    if 0 < j < len(t) and big_t > 0:
        t0, t1 = t[j - 1], t[j]
        part = (v0 + w * a * t0 + v0 + w * a * big_t) / 2 * (big_t - t0) + final * (t1 - big_t)
        h[j:] += part - 0.5 * (rate[j] + rate[j - 1]) * (t1 - t0)
    return h, final


def _grid(t_end: float, dt: float) -> np.ndarray:
    t = np.arange(0.0, t_end, dt)
    return np.append(t, t_end)


def _oracle_side(r, h, v, w, target, a, upper, side, r_v_grid, p, dt, t_max, eps):
    """Sampled min clearance of one side; returns (holds, min clearance)."""
    t_end = t_max if eps < 0 else min(eps, t_max)
    t = _grid(t_end, dt)
    hn, final = _oracle_profile(t, v, w, target, a, upper)
    if r_v_grid is None:
        conflict = np.abs(r - p.r_v * t) <= p.r_p
    else:
        conflict = _horizontal_any(r, t, r_v_grid, p.r_p)
    clear = side * w * (hn - h) - p.h_p
    vals = clear[conflict]
    worst = vals.min() if vals.size else math.inf
    # Beyond the sampled horizon the nominal is linear; decide the tail analytically.
    if eps < 0 and conflict[-1]:
        tail = side * w * final
        if r_v_grid is not None or p.r_v == 0:
            t_out = math.inf
        else:
            t_out = (r + p.r_p) / p.r_v
        if t_out > t_max:
            if tail < 0:
                worst = min(worst, -math.inf if t_out == math.inf else clear[-1] + tail * (t_out - t_max))
    return worst > 0, worst


def _horizontal_any(r, t, grid, r_p):
    """For each t: does some closure rate on the grid put the intruder within r_p?"""
    out = np.abs(r) <= r_p
    res = np.empty(t.shape, bool)
    pos = t > 0
    res[~pos] = out
    tt = t[pos]
    x = r / tt
    idx = np.clip(np.searchsorted(grid, x), 1, len(grid) - 1)
    d = np.minimum(np.abs(r - grid[idx] * tt), np.abs(r - grid[idx - 1] * tt))
    res[pos] = d <= r_p
    return res


def oracle_eval(q: RegionQuery, dt: float = 0.01, t_max: float = 300.0) -> RegionVerdict:
    """Brute-force verdict by sampling the defining formula's quantifiers."""
    if dt <= 0 or t_max <= 0:
        raise ValueError("oracle needs dt > 0 and t_max > 0")
    s, adv, p = q.state, q.advisory, q.params
    w = adv.w
    if q.kind is RegionKind.L_INF:
        ok, m = _oracle_side(s.r, s.h, s.v, w, adv.v_lo, p.a_lo, False, 1, None, p, dt, t_max, -1.0)
    elif q.kind is RegionKind.L_INF_HORIZ:
        grid = np.linspace(0.0, p.v_max, 1000)
        ok, m = _oracle_side(s.r, s.h, s.v, w, adv.v_lo, p.a_lo, False, 1, grid, p, dt, t_max, -1.0)
    elif not adv.well_formed:
        ok, m = False, -math.inf
    elif q.kind is RegionKind.C_EPS:
        ok_l, m_l = _oracle_side(s.r, s.h, s.v, w, adv.v_lo, p.a_lo, False, 1, None, p, dt, t_max, p.epsilon)
        ok_u, m_u = _oracle_side(s.r, s.h, s.v, w, adv.v_up, p.a_up, True, -1, None, p, dt, t_max, p.epsilon)
        ok, m = ok_l or ok_u, max(m_l, m_u)
    else:
        ok, m = _oracle_safeable(s, adv, p, dt, t_max)
    return RegionVerdict(bool(ok), q.kind, float(m))


def _oracle_extreme(v, w, target, a, upper, eps, dt):
    t = _grid(eps, dt) if eps > 0 else np.zeros(1)
    hn, final = _oracle_profile(t, v, w, target, a, upper)
    big_t = max(0.0, w * (target - v)) / a
    v_ex = v + w * a * eps if eps < big_t else final
    return hn[-1], v_ex


def _oracle_safeable(s, adv, p, dt, t_max):
    eps, w = p.epsilon, adv.w
    targets = np.linspace(0.0, p.v_climb_max, 9)
    results = []
    for side, target, a, upper, sense in ((1, adv.v_lo, p.a_lo, False, w), (-1, adv.v_up, p.a_up, True, -w)):
        ok_e, m_e = _oracle_side(s.r, s.h, s.v, w, target, a, upper, side, None, p, dt, t_max, eps)
        h_ex, v_ex = _oracle_extreme(s.v, w, target, a, upper, eps, dt)
        r_e = s.r - p.r_v * eps
        cands = [sense * x for x in targets]
        if side == 1:
            cands.insert(0, adv.v_lo)
        best = -math.inf
        for c in cands:
            ok_f, m_f = _oracle_side(r_e, s.h - h_ex, v_ex, sense, c, p.a_lo, False, 1, None, p, dt, t_max, -1.0)
            best = max(best, m_f)
            if ok_f:
                break
        results.append(min(m_e, best))
    m = max(results)
    return m > 0, m


def oracle_band(q: RegionQuery, dt: float, t_max: float) -> float:
    """Tolerance band of the oracle: 2*dt*(|v| + a*t_max)."""
    a = q.params.a_up if q.kind in (RegionKind.C_EPS, RegionKind.C_SAFEABLE) else q.params.a_lo
    return 2 * dt * (abs(q.state.v) + a * t_max)


class Agreement(enum.Enum):
    AGREE = "agree"
    BOUNDARY = "boundary"
    DISAGREE = "disagree"


def compare(exact: RegionVerdict, oracle: RegionVerdict, band: float) -> Agreement:
    if exact.holds == oracle.holds:
        return Agreement.AGREE
    if abs(exact.margin) <= band:
        return Agreement.BOUNDARY
    return Agreement.DISAGREE


def variant_params(variant: ModelVariant, **kw) -> ValidatedParams:
    """Default params with overrides, validated for ``variant``."""
    return validate_params(Params(**kw), variant)
