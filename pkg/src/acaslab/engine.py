"""Game execution: scenarios, the event-driven run loop, traces and horizons."""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np

from . import kernels as k
from .agents import (AdvisoryIssuer, IntruderPolicy, StrategyBoundsError, channel_of,
                     Channel)
from .core import Advisory, EncounterState, ModelVariant, Params, RegionKind, ValidatedParams
from .dynamics import EVENT_CODES, ControlFrame, propagate
from .regions import RegionVerdict, check, params_vector


class HorizonUndefined(ValueError):
    pass


class ScenarioError(ValueError):
    def __init__(self, message: str, verdict: RegionVerdict | None = None):
        super().__init__(message)
        self.verdict = verdict


class Horizon(NamedTuple):
    seconds: float
    region_attested: bool


def default_horizon(variant: ModelVariant, params: Params, r0: float, *, margin: float = 10.0,
                    r_v_floor: float | None = None, configured: float | None = None) -> Horizon:
    """(r0 + r_p)/r_v_min + margin, after which |r| > r_p for good.

    Model 3 uses ``r_v_floor`` (default v_max/4) since the intruder picks r_v.
    With r_v_min = 0 the configured horizon is used and flagged: safety past
    it rests on the region evaluator, not on simulation.
    """
    if variant.horizontal_intruder:
        r_v_min = params.v_max / 4 if r_v_floor is None else r_v_floor
    else:
        r_v_min = params.r_v
    if r_v_min <= 0:
        if configured is None:
            raise HorizonUndefined("closure rate 0 and no configured horizon")
        return Horizon(configured, True)
    if configured is not None:
        return Horizon(configured, False)
    return Horizon(max(0.0, (r0 + params.r_p) / r_v_min) + margin, False)


@dataclass(frozen=True)
class Scenario:
    variant: ModelVariant
    params: ValidatedParams
    initial: EncounterState
    initial_advisory: Advisory
    issuer: AdvisoryIssuer | None = None
    intruder: IntruderPolicy = field(default_factory=IntruderPolicy)
    horizon: float | None = None
    seed: int = 0
    cadence: float = 1.0
    c_o: float | None = None
    check_region: bool = True
    horizon_margin: float = 10.0
    r_v_floor: float | None = None

    def __post_init__(self):
        if not isinstance(self.params, ValidatedParams) or self.params.variant is not self.variant:
            raise ScenarioError("params must be validated for the scenario's model")
        if self.issuer is None:
            object.__setattr__(self, "issuer", AdvisoryIssuer.for_variant(self.variant))
        if self.horizon is not None and not self.horizon > 0:
            raise ScenarioError("horizon must be > 0")
        if self.seed < 0:
            raise ScenarioError("seed must be >= 0")
        if self.variant.bounded:
            if self.params.epsilon == 0:
                raise ScenarioError("epsilon = 0 would re-issue continuously")
        elif not self.cadence > 0:
            raise ScenarioError("cadence must be > 0")
        adv = self.initial_advisory
        if adv.coc:
            raise ScenarioError("the initial advisory must constrain the ownship (not COC)")
        if self.variant.two_sided and adv.v_up is None:
            raise ScenarioError(f"{self.variant.value} needs an advisory with v_up")
        if not adv.well_formed:
            raise ScenarioError("advisory has w*v_lo > w*v_up")
        if self.c_o is not None and not 0 < self.c_o <= self.params.c:
            raise ScenarioError("c_o must lie in (0, c]")
        self.intruder.check(self.variant, self.params, self.c_o)
        if self.check_region:
            verdict = check(self.initial, adv, self.params)
            if not verdict.holds:
                raise ScenarioError(
                    f"initial state is outside the {self.variant.region_kind.value} region", verdict)
        _ = self.run_horizon

    @cached_property
    def run_horizon(self) -> Horizon:
        return simulate_horizon(self)

    @property
    def region_kind(self) -> RegionKind:
        return self.variant.region_kind

    def replace(self, **changes) -> Scenario:
        return dataclasses.replace(self, **changes)


def simulate_horizon(sc: Scenario) -> Horizon:
    return default_horizon(sc.variant, sc.params, sc.initial.r, margin=sc.horizon_margin,
                           r_v_floor=sc.r_v_floor, configured=sc.horizon)


class Status(enum.Enum):
    SAFE_TO_HORIZON = "SafeToHorizon"
    NMAC = "NMAC"
    NO_SAFE_ADVISORY = "NoSafeAdvisory"


_STATUS = {k.ST_SAFE: Status.SAFE_TO_HORIZON, k.ST_NMAC: Status.NMAC, k.ST_NOSAFE: Status.NO_SAFE_ADVISORY}


@dataclass(frozen=True)
class TraceRecord:
    t: float
    r: float
    h: float
    v: float
    a_o: float
    a_i: float
    r_v: float
    w: int
    v_lo: float
    v_up: float | None
    event: str
    nmac: bool
    region_holds: bool | None

    @property
    def controls(self) -> ControlFrame:
        return ControlFrame(self.a_o, self.a_i, self.r_v)

    @property
    def state(self) -> EncounterState:
        return EncounterState(self.r, self.h, self.v)


class Trace:
    """Ordered run records backed by an (n, 13) float array.

    Record i holds the state at ``t`` and the controls applied until record
    i+1, so consecutive records replay exactly through ``propagate``.
    """

    def __init__(self, data: np.ndarray):
        self.data = np.ascontiguousarray(data, dtype=float)

    def __len__(self):
        return self.data.shape[0]

    def __getitem__(self, i: int) -> TraceRecord:
        row = self.data[i]
        holds = row[k.COL_HOLDS]
        return TraceRecord(
            t=row[k.COL_T], r=row[k.COL_R], h=row[k.COL_H], v=row[k.COL_V],
            a_o=row[k.COL_AO], a_i=row[k.COL_AI], r_v=row[k.COL_RV], w=int(row[k.COL_W]),
            v_lo=row[k.COL_VLO], v_up=None if math.isnan(row[k.COL_VUP]) else row[k.COL_VUP],
            event=EVENT_CODES[int(row[k.COL_EVENT])], nmac=bool(row[k.COL_NMAC]),
            region_holds=None if holds < 0 else bool(holds))

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @property
    def times(self) -> np.ndarray:
        return self.data[:, k.COL_T]

    def state_at(self, t: float) -> EncounterState:
        """Relative state at absolute time t, replayed from the last record before it."""
        times = self.times
        if not times[0] <= t <= times[-1]:
            raise ValueError(f"t={t} outside the trace")
        i = int(np.searchsorted(times, t, side="right")) - 1
        rec = self[i]
        return propagate(rec.state, rec.controls, t - rec.t)

    def replay_mismatches(self) -> list[int]:
        """Indices i where propagating record i does not reproduce record i+1 exactly."""
        bad = []
        d = self.data
        for i in range(len(self) - 1):
            a_rel = d[i, k.COL_AO] - d[i, k.COL_AI]
            r, h, v = k.propagate(d[i, k.COL_R], d[i, k.COL_H], d[i, k.COL_V], a_rel,
                                  d[i, k.COL_RV], d[i + 1, k.COL_T] - d[i, k.COL_T])
            if (r, h, v) != (d[i + 1, k.COL_R], d[i + 1, k.COL_H], d[i + 1, k.COL_V]):
                bad.append(i)
        return bad

    @property
    def has_nmac(self) -> bool:
        return bool(self.data[:, k.COL_NMAC].any())


@dataclass(frozen=True)
class RunOutcome:
    status: Status
    t_end: float
    trace: Trace | None
    min_distance: float

    @property
    def nmac(self) -> bool:
        return self.status is Status.NMAC


def _seed(base: int, sub: int) -> int:
    return (base * 1_000_003 + sub) % (1 << 63)


def kernel_args(sc: Scenario, *, schedule: tuple[np.ndarray, np.ndarray] | None = None,
                choices: np.ndarray | None = None) -> tuple:
    """Positional arguments of :func:`kernels.play` for ``sc`` (minus buffers)."""
    p = sc.params
    adv = sc.initial_advisory
    two_sided = sc.variant.two_sided
    cands = sc.issuer.candidate_array(two_sided, p.v_climb_max)
    if choices is None:
        choices = np.asarray(sc.issuer.choices, dtype=float)
    if schedule is None:
        sched_t, sched_v = sc.intruder.schedule_arrays()
    else:
        sched_t, sched_v = schedule
    ikind = sc.intruder.code if channel_of(sc.variant) is not Channel.NONE else k.I_NONE
    return (
        sc.variant.number, params_vector(p), sc.initial.r, sc.initial.h, sc.initial.v,
        float(adv.w), adv.v_lo, math.nan if adv.v_up is None else adv.v_up,
        cands, sc.issuer.selection_code, choices, _seed(sc.seed, sc.issuer.seed),
        ikind, _seed(sc.seed, sc.intruder.seed), sc.intruder.dwell, sc.intruder.mean_dwell,
        sched_t, sched_v, sc.run_horizon.seconds, sc.cadence,
        p.c if sc.c_o is None else sc.c_o,
    )


def _buffer_size(sc: Scenario) -> int:
    step = min(sc.cadence if not sc.variant.bounded else sc.params.epsilon or 1.0, 1.0)
    step = max(min(step, sc.intruder.dwell, k.MIN_DWELL * 5), 1e-3)
    return int(sc.run_horizon.seconds / step * 4) + 256


def run(sc: Scenario, *, record: bool = True) -> RunOutcome:
    """Play the scenario's game to the horizon, an NMAC, or a failed re-issue."""
    args = kernel_args(sc)
    size = _buffer_size(sc) if record else 1
    while True:
        buf = np.empty((size, k.N_COLS))
        status, n, min_d, t_end = k.play(*args, buf, record)
        if status != k.ST_OVERFLOW:
            break
        size *= 4
    if status == k.ST_BOUNDS:
        raise StrategyBoundsError("strategy exceeded a_max; params are inconsistent")
    if status == k.ST_STALL:
        raise RuntimeError("run stalled on zero-length segments")
    trace = Trace(buf[:n].copy()) if record else None
    return RunOutcome(_STATUS[status], t_end, trace, min_d)
