"""Search for intruder schedules (and advisory choices) that defeat the
ownship's winning strategy.

Rollouts run inside one compiled loop: random piecewise-constant schedules
with dwell times of at least 0.1 s, then coordinate-wise perturbation of the
closest miss so far. Any NMAC the kernel reports is replayed through
:func:`engine.run` before it is returned, so every counterexample is a
replay-exact trace.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from numba import njit

from . import kernels as k
from .agents import Channel, IntruderKind, IntruderPolicy, Selection, channel_of
from .engine import RunOutcome, Scenario, Trace, kernel_args, run

MAX_SCHEDULE = 256
N_CHOICES = 64


@njit(cache=True)
def _exp(u, mean):
    return -mean * math.log(1.0 - u)


@njit(cache=True)
def _random_schedule(seed, ctr, channel, bound, v_max, horizon, st, sv):
    mean = (0.3, 1.0, 3.0)[min(int(k.uniform(seed, ctr) * 3.0), 2)]
    ctr += 1
    t = 0.0
    n = 0
    while n < MAX_SCHEDULE and t < horizon:
        u = k.uniform(seed, ctr)
        u2 = k.uniform(seed, ctr + 1)
        ctr += 2
        st[n] = t
        if channel == k.CH_AI:
            sv[n] = (1.0 if u2 < 0.5 else -1.0) * bound if u < 0.8 else (2.0 * u2 - 1.0) * bound
        else:
            sv[n] = (v_max if u2 < 0.5 else 0.0) if u < 0.8 else u2 * v_max
        n += 1
        t += k.MIN_DWELL + _exp(k.uniform(seed, ctr), mean)
        ctr += 1
    return n, ctr


@njit(cache=True)
def _perturb(seed, ctr, channel, bound, v_max, st, sv, n):
    j = min(int(k.uniform(seed, ctr) * n), n - 1)
    op = k.uniform(seed, ctr + 1)
    u = k.uniform(seed, ctr + 2)
    ctr += 3
    if op < 0.4 or j == 0:
        if channel == k.CH_AI:
            sv[j] = -sv[j] if op < 0.3 else (2.0 * u - 1.0) * bound
        else:
            sv[j] = v_max - sv[j] if op < 0.3 else u * v_max
    else:
        lo = st[j - 1] + k.MIN_DWELL
        hi = st[j + 1] - k.MIN_DWELL if j + 1 < n else st[j] + 5.0
        if hi > lo:
            shift = (2.0 * u - 1.0) * 0.5
            st[j] = min(hi, max(lo, st[j] + shift))
    return ctr


@njit(cache=True)
def search(variant, P, r, h, v, w, v_lo, v_up, cands, sel, iseed, horizon, cadence, c_o0,
           channel, explore, budget, seed):
    """Run up to ``budget`` rollouts. Returns (found, rollouts, sched_t, sched_v,
    choices, used_sel, best_distance)."""
    bound = c_o0 * (1.0 - k.INTRUDER_MARGIN)
    v_max = P[k.V_MAX]
    ikind = k.I_NONE if channel == k.CH_NONE else k.I_SCRIPTED
    st = np.zeros(MAX_SCHEDULE)
    sv = np.zeros(MAX_SCHEDULE)
    best_t = np.zeros(MAX_SCHEDULE)
    best_v = np.zeros(MAX_SCHEDULE)
    best_n = 0
    best_d = math.inf
    choices = np.zeros(N_CHOICES)
    best_c = np.zeros(N_CHOICES)
    rec = np.empty((1, k.N_COLS))
    ctr = 0
    if channel == k.CH_AI:
        seeds = (bound, -bound, 0.0)
    elif channel == k.CH_RV:
        seeds = (v_max, 0.0, 0.5 * v_max)
    else:
        seeds = (0.0, 0.0, 0.0)
    n_seed = 3 if channel != k.CH_NONE else 1
    if channel == k.CH_NONE and not explore:
        budget = min(budget, 1)
    for i in range(budget):
        use_sel = sel
        if i < n_seed:
            st[0] = 0.0
            sv[0] = seeds[i]
            n = 1
        else:
            if explore:
                use_sel = k.SEL_RANDOM
            if best_n == 0 or i < budget // 2 or k.uniform(seed, ctr) < 0.2:
                n, ctr = _random_schedule(seed, ctr + 1, channel, bound, v_max, horizon, st, sv)
                if n == 0:
                    n = 1
                    st[0] = 0.0
                    sv[0] = seeds[0]
                for j in range(N_CHOICES):
                    choices[j] = k.uniform(seed, ctr + j)
                ctr += N_CHOICES
            else:
                n = best_n
                st[:n] = best_t[:n]
                sv[:n] = best_v[:n]
                choices[:] = best_c
                ctr = _perturb(seed, ctr + 1, channel, bound, v_max, st, sv, n)
                if explore and k.uniform(seed, ctr) < 0.5:
                    choices[min(int(k.uniform(seed, ctr + 1) * N_CHOICES), N_CHOICES - 1)] = k.uniform(seed, ctr + 2)
                ctr += 3
        status, _, min_d, _ = k.play(variant, P, r, h, v, w, v_lo, v_up, cands, use_sel, choices, iseed,
                                     ikind, 0, 1.0, 1.0, st[:n], sv[:n], horizon, cadence, c_o0,
                                     rec, False)
        if status == k.ST_NMAC:
            return True, i + 1, st[:n].copy(), sv[:n].copy(), choices.copy(), use_sel, min_d
        if i >= n_seed and min_d < best_d:
            best_d = min_d
            best_n = n
            best_t[:n] = st[:n]
            best_v[:n] = sv[:n]
            best_c[:] = choices
    return False, budget, st[:0].copy(), sv[:0].copy(), choices.copy(), sel, best_d


@dataclass(frozen=True)
class Counterexample:
    scenario: Scenario
    outcome: RunOutcome
    rollouts: int
    worker: int

    @property
    def trace(self) -> Trace:
        return self.outcome.trace


def _replay_scenario(sc: Scenario, sched_t, sched_v, choices, used_sel) -> Scenario:
    changes = {}
    channel = channel_of(sc.variant)
    if channel is not Channel.NONE:
        kind = IntruderKind.SCRIPTED if channel is Channel.ACCEL else IntruderKind.CLOSURE_SCHEDULE
        changes["intruder"] = IntruderPolicy(kind, schedule=tuple(zip(map(float, sched_t), map(float, sched_v))))
    if used_sel == k.SEL_RANDOM:
        changes["issuer"] = dataclasses.replace(sc.issuer, selection=Selection.RANDOM,
                                                choices=tuple(map(float, choices)))
    return sc.replace(**changes)


def _worker(args) -> tuple:
    sc, budget, seed = args
    return _search(sc, budget, seed)


def _search(sc: Scenario, budget: int, seed: int) -> tuple:
    a = kernel_args(sc)
    channel = channel_of(sc.variant)
    explore = sc.issuer.selection in (Selection.RANDOM, Selection.ADVERSARIAL)
    variant, P, r, h, v, w, v_lo, v_up, cands, sel, _choices, iseed = a[:12]
    horizon, cadence, c_o0 = a[18], a[19], a[20]
    return search(variant, P, r, h, v, w, v_lo, v_up, cands, sel, iseed, horizon, cadence, c_o0,
                  channel.value, explore, budget, seed)


def find_counterexample(sc: Scenario, budget: int, *, workers: int = 1,
                        seed: int | None = None) -> Counterexample | None:
    """Search for an NMAC against the winning strategy.

    Worker k searches with seed ``seed + k`` on its share of the budget; the
    lowest worker index with a hit wins, so results depend only on
    (seed, budget, workers).
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    seed = sc.seed if seed is None else seed
    shares = [budget // workers + (1 if i < budget % workers else 0) for i in range(workers)]
    jobs = [(sc, b, seed + i) for i, b in enumerate(shares) if b > 0]
    if len(jobs) == 1:
        results = [_worker(jobs[0])]
    else:
        with ProcessPoolExecutor(max_workers=len(jobs)) as pool:
            results = list(pool.map(_worker, jobs))
    for idx, (found, used, st, sv, choices, used_sel, _) in enumerate(results):
        if not found:
            continue
        replay = _replay_scenario(sc, st, sv, choices, used_sel)
        outcome = run(replay)
        if outcome.nmac and outcome.trace.has_nmac:
            return Counterexample(replay, outcome, used, idx)
    return None


def falsify(sc: Scenario, budget: int, *, workers: int = 1, seed: int | None = None) -> Trace | None:
    """Replay-exact NMAC trace against the winning strategy, or None."""
    cx = find_counterexample(sc, budget, workers=workers, seed=seed)
    return None if cx is None else cx.trace
