"""Closed-form relative motion under piecewise-constant accelerations, event
detection and the NMAC predicate."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from . import kernels as k
from .core import Advisory, EncounterState, Params


@dataclass(frozen=True)
class ControlFrame:
    a_o: float = 0.0
    a_i: float = 0.0
    r_v: float = 0.0

    @property
    def a_rel(self) -> float:
        return self.a_o - self.a_i


class EventKind(enum.Enum):
    REACH_LO = "reach-lo"
    REACH_UP = "reach-up"
    TIME_BOUND = "time-bound"
    HORIZON = "horizon"


EVENT_CODES = {
    k.EV_LO: "reach-lo",
    k.EV_UP: "reach-up",
    k.EV_TB: "time-bound",
    k.EV_HOR: "horizon",
    k.EV_INTR: "intruder",
    k.EV_CAD: "cadence",
    k.EV_NMAC: "nmac",
    k.EV_START: "start",
    k.EV_NONE: "",
}
EVENT_NAMES = {name: code for code, name in EVENT_CODES.items()}

_KIND_OF = {k.EV_LO: EventKind.REACH_LO, k.EV_UP: EventKind.REACH_UP,
            k.EV_TB: EventKind.TIME_BOUND, k.EV_HOR: EventKind.HORIZON}


def propagate(s: EncounterState, u: ControlFrame, dt: float) -> EncounterState:
    if dt < 0:
        raise ValueError("propagate needs dt >= 0")
    r, h, v = k.propagate(s.r, s.h, s.v, u.a_rel, u.r_v, dt)
    return EncounterState(r, h, v, s.t + dt)


def next_event(s: EncounterState, u: ControlFrame, adv: Advisory, eps: float,
               horizon: float) -> tuple[EventKind, float]:
    """Earliest event after ``s``; ``s.t`` is the time since the advisory and
    ``horizon`` the remaining time until the external stop."""
    if horizon <= 0:
        raise ValueError("next_event needs horizon > 0")
    has_up = adv.v_up is not None
    code, tau = k.next_event(s.v, s.t, u.a_rel, float(adv.w), adv.v_lo,
                             adv.v_up if has_up else math.nan, has_up, eps, horizon)
    return _KIND_OF[code], tau


def nmac(s: EncounterState, p: Params) -> bool:
    return k.in_puck(s.r, s.h, p.r_p, p.h_p)


def puck_entry(s: EncounterState, u: ControlFrame, dt: float, p: Params) -> float | None:
    """Earliest time in [0, dt] at which constant controls bring the state into the puck."""
    tau = k.segment_nmac(s.r, s.h, s.v, u.a_rel, u.r_v, dt, p.r_p, p.h_p)
    return None if tau < 0 else tau
