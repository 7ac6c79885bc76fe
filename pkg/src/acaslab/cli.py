"""Command-line front end.

Exit codes: 0 success (region holds, safe run, nothing found), 1 input or
validation error, 2 region does not hold, 3 NMAC (simulate) or
counterexample found (falsify), 4 no safe advisory, 5 raster containment
violated.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .agents import NoSafeAdvisory, PolicyCapabilityError, StrategyBoundsError
from .core import AdvisoryBoundsError, ConstraintViolation, RegionKind
from .engine import HorizonUndefined, ScenarioError, Status, run
from .falsify import find_counterexample
from .regions import check, raster
from .scenario_io import (ScenarioFormatError, dump_scenario, env_seed, parse_grid,
                          parse_scenario_file, write_raster, write_trace)

EXIT_OK, EXIT_INPUT, EXIT_REGION_FALSE, EXIT_NMAC, EXIT_NO_ADVISORY, EXIT_CONTAINMENT = 0, 1, 2, 3, 4, 5

EXIT_OF_STATUS = {
    Status.SAFE_TO_HORIZON: EXIT_OK,
    Status.NMAC: EXIT_NMAC,
    Status.NO_SAFE_ADVISORY: EXIT_NO_ADVISORY,
}

# (inner, outer): the inner region must be contained in the outer one.
CONTAINMENTS = {
    (RegionKind.C_SAFEABLE, RegionKind.C_EPS),
    (RegionKind.L_INF_HORIZ, RegionKind.L_INF),
}

_INPUT_ERRORS = (ScenarioFormatError, ScenarioError, ConstraintViolation, AdvisoryBoundsError,
                 PolicyCapabilityError, HorizonUndefined, StrategyBoundsError, ValueError, OSError)


class InputError(Exception):
    pass


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from None


def _scenario_file(path: str):
    return parse_scenario_file(_read(path))


def cmd_check_region(args) -> int:
    spec = _scenario_file(args.scenario)
    variant, params, state, adv = spec.encounter()
    kind = RegionKind(args.kind) if args.kind else variant.region_kind
    if kind in (RegionKind.C_EPS, RegionKind.C_SAFEABLE) and adv.v_up is None:
        adv = adv.with_upper()
    verdict = check(state, adv, params, kind)
    print(json.dumps(verdict.to_dict()))
    return EXIT_OK if verdict.holds else EXIT_REGION_FALSE


def cmd_simulate(args) -> int:
    sc = _scenario_file(args.scenario).build(env_seed())
    outcome = run(sc)
    if args.out:
        write_trace(outcome.trace, args.out)
    print(f"{outcome.status.value} t={outcome.t_end:.6g} records={len(outcome.trace)}")
    return EXIT_OF_STATUS[outcome.status]


def cmd_falsify(args) -> int:
    if args.budget < 1:
        raise InputError("--budget must be >= 1")
    if args.workers < 1:
        raise InputError("--workers must be >= 1")
    sc = _scenario_file(args.scenario).build(env_seed())
    cx = find_counterexample(sc, args.budget, workers=args.workers)
    if cx is None:
        print(f"none found (budget {args.budget})")
        return EXIT_OK
    out = Path(args.out)
    dump_scenario(cx.scenario, out)
    trace_path = out.with_suffix(".csv")
    write_trace(cx.trace, trace_path)
    print(f"counterexample: {out} (trace {trace_path}, NMAC at t={cx.outcome.t_end:.6g}, "
          f"rollout {cx.rollouts}, worker {cx.worker})")
    return EXIT_NMAC


def cmd_raster(args) -> int:
    variant, params, kinds, rs, hs, v, adv = parse_grid(_read(args.grid))
    grids = [raster(kind, params, rs, hs, v, adv) for kind in kinds]
    names = [kind.value for kind in kinds]
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            write_raster(fh, rs, hs, grids, names)
    else:
        write_raster(sys.stdout, rs, hs, grids, names)
    if len(kinds) == 2:
        for inner, outer in ((0, 1), (1, 0)):
            if (kinds[inner], kinds[outer]) in CONTAINMENTS:
                bad = int((grids[inner] & ~grids[outer]).sum())
                if bad:
                    print(f"containment violated: {bad} cells in {names[inner]} "
                          f"but not {names[outer]}", file=sys.stderr)
                    return EXIT_CONTAINMENT
    return EXIT_OK


def cmd_filter_advisories(args) -> int:
    spec = _scenario_file(args.scenario)
    variant, params, state, _ = spec.encounter()
    kind = RegionKind(args.kind) if args.kind else variant.region_kind
    issuer = spec.issuer.build(variant)
    two_sided = kind in (RegionKind.C_EPS, RegionKind.C_SAFEABLE)
    cands = issuer.catalog.advisories()
    if args.synthesized:
        cands = issuer.candidates(False, params.v_climb_max)
    n = 0
    for adv in cands:
        if two_sided:
            adv = adv.with_upper()
        verdict = check(state, adv, params, kind)
        if verdict.holds:
            n += 1
            print(json.dumps({"label": adv.label, "w": adv.w, "v_lo_fps": adv.v_lo,
                              "v_up_fps": adv.v_up, "margin_ft": verdict.to_dict()["margin_ft"]}))
    if n == 0:
        print(json.dumps({"passing": 0}))
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors (exit 1), not argparse's default 2,
    # which means "region does not hold" here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="acaslab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    kinds = [k.value for k in RegionKind]

    p = sub.add_parser("check-region", help="evaluate the model's safe region at the initial state")
    p.add_argument("scenario")
    p.add_argument("--kind", choices=kinds)
    p.set_defaults(func=cmd_check_region)

    p = sub.add_parser("simulate", help="run the game and write the trace")
    p.add_argument("scenario")
    p.add_argument("--out", help="trace CSV path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("falsify", help="search intruder schedules for an NMAC")
    p.add_argument("scenario")
    p.add_argument("--budget", type=int, default=10_000)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="counterexample.json", help="replay scenario path")
    p.set_defaults(func=cmd_falsify)

    p = sub.add_parser("raster", help="evaluate a region on an (r, h) grid")
    p.add_argument("grid")
    p.add_argument("--out")
    p.set_defaults(func=cmd_raster)

    p = sub.add_parser("filter-advisories", help="list advisories whose region holds at the state")
    p.add_argument("scenario")
    p.add_argument("--kind", choices=kinds)
    p.add_argument("--synthesized", action="store_true", help="include synthesized targets")
    p.set_defaults(func=cmd_filter_advisories)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NoSafeAdvisory as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NO_ADVISORY
    except (InputError, *_INPUT_ERRORS) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
