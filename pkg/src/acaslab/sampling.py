"""Random scenario generators for property suites and campaigns."""

from __future__ import annotations

import math

import numpy as np

from . import kernels as k
from .agents import AdvisoryIssuer, IntruderPolicy, Selection
from .core import (Advisory, EncounterState, ModelVariant, Params, ValidatedParams,
                   validate_params)
from .engine import Scenario
from .regions import check, kind_code, params_vector


def candidate_advisories(variant: ModelVariant, params: Params) -> list[Advisory]:
    return AdvisoryIssuer.for_variant(variant).candidates(False, params.v_climb_max)


def random_advisory(rng: np.random.Generator, variant: ModelVariant, params: Params) -> Advisory:
    """A catalog or synthesized advisory; two-sided models get a random v_up."""
    cands = candidate_advisories(variant, params)
    adv = cands[rng.integers(len(cands))]
    if variant.two_sided:
        lo = adv.w * adv.v_lo
        top = max(params.v_climb_max, lo + 1.0)
        adv = adv.with_upper(adv.w * rng.uniform(lo + 1.0, top))
    return adv


def random_state(rng: np.random.Generator, params: Params) -> EncounterState:
    r = rng.uniform(-params.r_p, 6000.0)
    h = rng.uniform(-1500.0, 1500.0)
    v = rng.uniform(-80.0, 80.0)
    return EncounterState(r, h, v)


def _margin(variant, params, s, adv) -> float:
    v_up = math.nan if adv.v_up is None else adv.v_up
    return k.region_margin(kind_code(variant.region_kind), s.r, s.h, s.v, float(adv.w),
                           adv.v_lo, v_up, params_vector(params))


def sample_safe_encounter(rng: np.random.Generator, variant: ModelVariant, params: ValidatedParams,
                          *, near_boundary: float = 0.5, max_tries: int = 100_000):
    """(state, advisory) inside the model's region.

    With probability ``near_boundary`` the sample must also have a finite
    margin below 150 ft, so the ownship has to work for its safety.
    """
    tight = rng.random() < near_boundary
    for _ in range(max_tries):
        s = random_state(rng, params)
        adv = random_advisory(rng, variant, params)
        m = _margin(variant, params, s, adv)
        if m > 0 and (not tight or m < 150.0):
            return s, adv
    raise RuntimeError("no region-safe sample found")


def sample_safe_scenario(rng: np.random.Generator, variant: ModelVariant, *,
                         params: ValidatedParams | None = None, intruder: IntruderPolicy | None = None,
                         selection: Selection = Selection.STICKY, cadence: float = 1.0,
                         seed: int = 0, near_boundary: float = 0.5) -> Scenario:
    params = params or validate_params(Params(), variant)
    s, adv = sample_safe_encounter(rng, variant, params, near_boundary=near_boundary)
    return Scenario(variant, params, s, adv,
                    issuer=AdvisoryIssuer.for_variant(variant, selection=selection),
                    intruder=intruder or IntruderPolicy(), seed=seed, cadence=cadence)


def violating_scenario(rng: np.random.Generator, variant: ModelVariant, *,
                       epsilon: float = 10.0, max_tries: int = 1000) -> Scenario:
    """A scenario outside the region whose minimally compliant nominal meets
    the intruder.

    The intruder is placed so that the lower nominal (relative acceleration
    a_lo) passes through the puck at a random time t_c before the first
    re-issue. ``epsilon`` doubles as the re-issue cadence of Models 1-3.
    """
    params = validate_params(Params(epsilon=epsilon), variant)
    r_v = params.v_max if variant.horizontal_intruder else params.r_v
    for _ in range(max_tries):
        adv = random_advisory(rng, variant, params)
        # Meet the intruder while still accelerating towards the target: there
        # every winning strategy tracks the nominal (relative to a worst-case
        # intruder), whereas at the target the two-sided one may overshoot.
        t_c = rng.uniform(4.0, 0.9 * epsilon)
        v = adv.w * (adv.w * adv.v_lo - params.a_lo * (t_c + rng.uniform(0.5, 3.0)))
        h_n = k.nominal_height(t_c, v, float(adv.w), adv.v_lo, params.a_lo, False)
        r0 = r_v * t_c + rng.uniform(-0.5, 0.5) * params.r_p
        h0 = h_n + rng.uniform(-0.5, 0.5) * params.h_p
        s = EncounterState(r0, h0, v)
        if k.in_puck(r0, h0, params.r_p, params.h_p):
            continue
        if check(s, adv, params).holds:
            continue
        return Scenario(variant, params, s, adv, cadence=epsilon, check_region=False)
    raise RuntimeError("could not build a violating scenario")
