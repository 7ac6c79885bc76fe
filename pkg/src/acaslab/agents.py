"""Ownship winning strategies, intruder policies and advisory issuers."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels as k
from .core import (Advisory, AdvisoryCatalog, EncounterState, ModelVariant, Params, RegionKind,
                   ValidatedParams, convert_rate, default_catalog)
from .regions import kind_code, params_vector


class StrategyBoundsError(RuntimeError):
    pass


class PolicyCapabilityError(ValueError):
    pass


class NoSafeAdvisory(RuntimeError):
    pass


_STRATEGY = {
    ModelVariant.INF_NON: k.S_LO,
    ModelVariant.INF_VERT: k.S_COMP,
    ModelVariant.INF_HORIZ: k.S_LO,
    ModelVariant.BOUND_NON: k.S_LO,
    ModelVariant.BOUND_VERT: k.S_TWO,
    ModelVariant.SAFEABLE_NON: k.S_LO,
    ModelVariant.SAFEABLE_VERT: k.S_TWO,
}


@dataclass(frozen=True)
class OwnshipStrategy:
    variant: ModelVariant
    params: ValidatedParams
    c_o: float | None = None

    @property
    def estimate(self) -> float:
        return self.params.c if self.c_o is None else self.c_o


def ownship_accel(strategy: OwnshipStrategy, s: EncounterState, adv: Advisory) -> float:
    p = strategy.params
    v_up = math.nan if adv.v_up is None else adv.v_up
    if _STRATEGY[strategy.variant] == k.S_TWO and adv.v_up is None:
        raise ValueError("two-sided strategies need an advisory with v_up")
    a_o = k.ownship_accel(_STRATEGY[strategy.variant], float(adv.w), s.v, adv.v_lo, v_up,
                          p.a_lo, p.c, strategy.estimate)
    if abs(a_o) > p.a_max:
        raise StrategyBoundsError(f"prescribed a_o={a_o} exceeds a_max={p.a_max}")
    return a_o


def strategy_code(variant: ModelVariant) -> int:
    return _STRATEGY[variant]


# ---------------------------------------------------------------- intruder

class IntruderKind(enum.Enum):
    NONE = "none"
    BANG_BANG = "bang-bang"
    RANDOM = "random"
    SCRIPTED = "scripted"
    CLOSURE_SCHEDULE = "closure-schedule"
    COOPERATIVE = "cooperative"


_KIND_CODE = {
    IntruderKind.NONE: k.I_NONE,
    IntruderKind.BANG_BANG: k.I_BANGBANG,
    IntruderKind.RANDOM: k.I_RANDOM,
    IntruderKind.SCRIPTED: k.I_SCRIPTED,
    IntruderKind.CLOSURE_SCHEDULE: k.I_CLOSURE,
    IntruderKind.COOPERATIVE: k.I_COOP,
}


class Channel(enum.Enum):
    NONE = k.CH_NONE
    ACCEL = k.CH_AI
    CLOSURE = k.CH_RV


def channel_of(variant: ModelVariant) -> Channel:
    if variant.vertical_intruder:
        return Channel.ACCEL
    if variant.horizontal_intruder:
        return Channel.CLOSURE
    return Channel.NONE


@dataclass(frozen=True)
class IntruderPolicy:
    """How the intruder picks its control.

    ``schedule`` is a tuple of (start time s, value) pairs: a_i in ft/s^2 for
    SCRIPTED, r_v in ft/s for CLOSURE_SCHEDULE. ``dwell`` is the bang-bang
    decision period; random dwell times are 0.1 s plus an exponential with
    mean ``mean_dwell``.
    """

    kind: IntruderKind = IntruderKind.NONE
    seed: int = 0
    dwell: float = 1.0
    mean_dwell: float = 2.0
    schedule: tuple[tuple[float, float], ...] = ()

    @property
    def code(self) -> int:
        return _KIND_CODE[self.kind]

    def check(self, variant: ModelVariant, p: Params, c_o: float | None = None) -> None:
        """Raise PolicyCapabilityError if the policy does not fit the model."""
        if self.kind is IntruderKind.NONE:
            return
        channel = channel_of(variant)
        if channel is Channel.NONE:
            raise PolicyCapabilityError(f"{variant.value} has a non-maneuvering intruder; policy {self.kind.value} not allowed")
        if self.kind is IntruderKind.CLOSURE_SCHEDULE and channel is not Channel.CLOSURE:
            raise PolicyCapabilityError(f"closure schedules need the horizontal model, not {variant.value}")
        if self.kind in (IntruderKind.SCRIPTED, IntruderKind.COOPERATIVE) and channel is not Channel.ACCEL:
            raise PolicyCapabilityError(f"{self.kind.value} controls a_i, which {variant.value} lacks")
        if self.dwell <= 0 or self.mean_dwell < 0:
            raise ValueError("dwell times must be positive")
        if self.kind in (IntruderKind.SCRIPTED, IntruderKind.CLOSURE_SCHEDULE):
            if not self.schedule:
                raise ValueError("schedule must not be empty")
            times = [t for t, _ in self.schedule]
            if times[0] < 0 or any(b <= a for a, b in zip(times, times[1:])):
                raise ValueError("schedule times must start at >= 0 and strictly increase")
            bound = p.c if c_o is None else c_o
            for _, value in self.schedule:
                if channel is Channel.ACCEL and not abs(value) < bound:
                    raise ValueError(f"scripted a_i={value} outside (-c, c)")
                if channel is Channel.CLOSURE and not 0 <= value <= p.v_max:
                    raise ValueError(f"scheduled r_v={value} outside [0, v_max]")

    def schedule_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.schedule:
            return np.zeros(0), np.zeros(0)
        arr = np.asarray(self.schedule, dtype=float)
        return np.ascontiguousarray(arr[:, 0]), np.ascontiguousarray(arr[:, 1])


@dataclass(frozen=True)
class Visible:
    """What the intruder may observe of the ownship."""

    advisory: Advisory
    a_o: float


@dataclass(frozen=True)
class IntruderMove:
    a_i: float | None
    r_v: float | None
    dwell: float


def intruder_move(policy: IntruderPolicy, s: EncounterState, visible: Visible, *,
                  variant: ModelVariant, params: Params, t_abs: float = 0.0, k_move: int = 0,
                  r_v: float | None = None, c_o: float | None = None,
                  horizon: float = math.inf) -> IntruderMove:
    """The intruder's next control and how long it is held."""
    channel = channel_of(variant)
    policy.check(variant, params, c_o)
    adv = visible.advisory
    has_up = adv.v_up is not None
    eps = params.epsilon if variant.bounded else -1.0
    sched_t, sched_v = policy.schedule_arrays()
    value, nxt = k.intruder_decide(
        policy.code, channel.value, policy.seed, k_move, t_abs, s.r, s.h, s.v, visible.a_o,
        float(adv.w), adv.v_lo, adv.v_up if has_up else math.nan, has_up, eps, s.t,
        params.c if c_o is None else c_o, params.v_max, params.r_v if r_v is None else r_v,
        policy.dwell, policy.mean_dwell, sched_t, sched_v, horizon)
    dwell = nxt - t_abs
    if channel is Channel.CLOSURE:
        return IntruderMove(None, value, dwell)
    return IntruderMove(value if channel is Channel.ACCEL else 0.0, None, dwell)


# ------------------------------------------------------------------ issuer

class IssuerMode(enum.Enum):
    KEEP_OR_FILTER = "keep-or-filter"
    FORCED_REISSUE = "forced-reissue"


class Selection(enum.Enum):
    """How an issuer picks among passing candidates.

    STICKY keeps the current advisory when allowed. FIRST takes the first
    passing candidate in search order. RANDOM picks uniformly (seeded).
    ADVERSARIAL picks the one whose nominal ends up closest to the intruder
    after one re-issue interval.
    """

    STICKY = "sticky"
    FIRST = "first"
    RANDOM = "random"
    ADVERSARIAL = "adversarial"


_SELECTION_CODE = {
    Selection.STICKY: k.SEL_STICKY,
    Selection.FIRST: k.SEL_FIRST,
    Selection.RANDOM: k.SEL_RANDOM,
    Selection.ADVERSARIAL: k.SEL_ADVERSARIAL,
}

# Synthesized relative targets (ft/min, in the advisory's sense): weakening,
# level-off and strengthening rates up to the climb bound.
SYNTH_RATES_FPM = (-2000.0, -1000.0, 0.0, 1500.0, 2500.0, 4000.0, 6000.0, 10000.0)


def synthesized_advisories(v_climb_max: float | None = None) -> list[Advisory]:
    top = convert_rate(10000.0) if v_climb_max is None else v_climb_max
    out = []
    for w in (1, -1):
        for rate in SYNTH_RATES_FPM:
            v = min(convert_rate(rate), top)
            out.append(Advisory(w=w, v_lo=w * v, label=f"{'UP' if w > 0 else 'DN'}{rate:+.0f}"))
        if convert_rate(SYNTH_RATES_FPM[-1]) != top:
            out.append(Advisory(w=w, v_lo=w * top, label=f"{'UP' if w > 0 else 'DN'}MAX"))
    return out


@dataclass(frozen=True)
class AdvisoryIssuer:
    mode: IssuerMode
    selection: Selection = Selection.STICKY
    catalog: AdvisoryCatalog = field(default_factory=default_catalog)
    synthesize: bool = True
    seed: int = 0
    choices: tuple[float, ...] = ()

    @classmethod
    def for_variant(cls, variant: ModelVariant, **kw) -> AdvisoryIssuer:
        mode = IssuerMode.FORCED_REISSUE if variant.bounded else IssuerMode.KEEP_OR_FILTER
        return cls(mode=mode, **kw)

    def candidates(self, two_sided: bool, v_climb_max: float | None = None) -> list[Advisory]:
        """Search order: catalog (COC skipped), then the synthesized grid."""
        out = self.catalog.advisories()
        if self.synthesize:
            out += synthesized_advisories(v_climb_max)
        if two_sided:
            out = [a.with_upper() for a in out]
        return out

    def candidate_array(self, two_sided: bool, v_climb_max: float | None = None) -> np.ndarray:
        cands = self.candidates(two_sided, v_climb_max)
        arr = np.empty((len(cands), 3))
        for i, a in enumerate(cands):
            arr[i] = (a.w, a.v_lo, math.nan if a.v_up is None else a.v_up)
        return arr

    @property
    def selection_code(self) -> int:
        return _SELECTION_CODE[self.selection]


def issue_advisory(issuer: AdvisoryIssuer, s: EncounterState, current: Advisory, kind: RegionKind,
                   params: Params, lookahead: float = 1.0) -> Advisory:
    """Pick the next advisory. Keep-or-filter may keep ``current`` untested;
    forced re-issue tests every candidate including ``current``."""
    two_sided = kind in (RegionKind.C_EPS, RegionKind.C_SAFEABLE)
    cands = issuer.candidates(two_sided, params.v_climb_max)
    arr = issuer.candidate_array(two_sided, params.v_climb_max)
    forced = issuer.mode is IssuerMode.FORCED_REISSUE
    v_up = math.nan if current.v_up is None else current.v_up
    found, w, v_lo, v_up2, _, _ = k.reissue(
        forced, issuer.selection_code, kind_code(kind), s.r, s.h, s.v, float(current.w), current.v_lo,
        v_up, arr, params_vector(params), np.asarray(issuer.choices, float), 0, issuer.seed, lookahead)
    if not found:
        raise NoSafeAdvisory("no candidate advisory passes the region test")
    for a in cands:
        if a.w == w and a.v_lo == v_lo and (a.v_up == v_up2 or (a.v_up is None and math.isnan(v_up2))):
            return a
    return current
