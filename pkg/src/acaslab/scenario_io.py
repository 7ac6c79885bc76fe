"""JSON scenario and grid files, CSV traces and rasters.

Every key carries its unit as a suffix and is converted on load. Where a
replay must be exact, the writer emits the native unit (``v_fps``,
``a_lo_fps2``) instead of the human one, and all floats go out with 17
significant digits.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from pathlib import Path
from typing import Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .agents import AdvisoryIssuer, IntruderKind, IntruderPolicy, IssuerMode, Selection
from .core import (G_FPS2, Advisory, AdvisoryCatalog, CatalogEntry, EncounterState, ModelVariant, Params, RegionKind,
                   ValidatedParams, convert_rate, default_catalog, validate_params)
from .engine import Scenario, Trace
from . import kernels as k
from .dynamics import EVENT_NAMES

TRACE_HEADER = ("t_s", "r_ft", "h_ft", "v_fps", "a_o_fps2", "a_i_fps2", "r_v_fps",
                "adv_w", "adv_vlo_fps", "adv_vup_fps", "event", "nmac")


class ScenarioFormatError(ValueError):
    pass


def fmt(x: float) -> str:
    return format(x, ".17g")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


def _one_of(obj, a: str, b: str, required: bool = True):
    va, vb = getattr(obj, a), getattr(obj, b)
    if va is not None and vb is not None:
        raise ValueError(f"give only one of {a}, {b}")
    if required and va is None and vb is None:
        raise ValueError(f"one of {a}, {b} is required")


_ACCELS = ("a_lo", "a_up", "a_max", "c")


class ParamsSpec(_Strict):
    r_p_ft: float | None = None
    h_p_ft: float | None = None
    r_v_fps: float | None = None
    a_lo_g: float | None = None
    a_up_g: float | None = None
    a_max_g: float | None = None
    c_g: float | None = None
    a_lo_fps2: float | None = None
    a_up_fps2: float | None = None
    a_max_fps2: float | None = None
    c_fps2: float | None = None
    v_max_fps: float | None = None
    epsilon_s: float | None = None
    g_fps2: float | None = None
    v_climb_max_fpm: float | None = None
    v_climb_max_fps: float | None = None

    @model_validator(mode="after")
    def _exclusive(self):
        for name in _ACCELS:
            _one_of(self, f"{name}_g", f"{name}_fps2", required=False)
        _one_of(self, "v_climb_max_fpm", "v_climb_max_fps", required=False)
        return self

    def build(self) -> Params:
        g = G_FPS2 if self.g_fps2 is None else self.g_fps2
        kw: dict[str, float] = {"g": g}
        for src, dst in (("r_p_ft", "r_p"), ("h_p_ft", "h_p"), ("r_v_fps", "r_v"),
                         ("v_max_fps", "v_max"), ("epsilon_s", "epsilon"),
                         ("v_climb_max_fps", "v_climb_max")):
            if getattr(self, src) is not None:
                kw[dst] = getattr(self, src)
        if self.v_climb_max_fpm is not None:
            kw["v_climb_max"] = convert_rate(self.v_climb_max_fpm)
        defaults = Params()
        for name in _ACCELS:
            in_g, native = getattr(self, f"{name}_g"), getattr(self, f"{name}_fps2")
            if native is not None:
                kw[name] = native
            elif in_g is not None:
                kw[name] = in_g * g
            else:
                # defaults are fractions of the standard g; rescale with a custom g
                kw[name] = getattr(defaults, name) / G_FPS2 * g if g != G_FPS2 else getattr(defaults, name)
        return Params(**kw)


class InitialSpec(_Strict):
    r_ft: float
    h_ft: float
    v_fpm: float | None = None
    v_fps: float | None = None

    @model_validator(mode="after")
    def _rate(self):
        _one_of(self, "v_fpm", "v_fps")
        return self

    def build(self) -> EncounterState:
        v = self.v_fps if self.v_fps is not None else convert_rate(self.v_fpm)
        return EncounterState(self.r_ft, self.h_ft, v)


class AdvisorySpec(_Strict):
    label: str | None = None
    w: Literal[-1, 1] | None = None
    v_lo_fpm: float | None = None
    v_lo_fps: float | None = None
    v_up_fpm: float | None = None
    v_up_fps: float | None = None

    @model_validator(mode="after")
    def _shape(self):
        if self.label is not None:
            if any(x is not None for x in (self.w, self.v_lo_fpm, self.v_lo_fps)):
                raise ValueError("give either label or {w, v_lo_fpm}")
        else:
            if self.w is None:
                raise ValueError("advisory needs label or w")
            _one_of(self, "v_lo_fpm", "v_lo_fps")
        _one_of(self, "v_up_fpm", "v_up_fps", required=False)
        return self

    def build(self, two_sided: bool, v_climb_max: float) -> Advisory:
        v_up = self.v_up_fps if self.v_up_fps is not None else (
            convert_rate(self.v_up_fpm) if self.v_up_fpm is not None else None)
        if self.label is not None:
            try:
                adv = default_catalog().lookup(self.label, v_up)
            except KeyError:
                raise ValueError(f"unknown advisory label {self.label!r}") from None
        else:
            v_lo = self.v_lo_fps if self.v_lo_fps is not None else convert_rate(self.v_lo_fpm)
            adv = Advisory(w=self.w, v_lo=v_lo, v_up=v_up)
        if two_sided and adv.v_up is None and not adv.coc:
            adv = adv.with_upper(adv.w * max(v_climb_max, adv.w * adv.v_lo))
        return adv


class AccelPoint(_Strict):
    t_s: float
    a_i_fps2: float


class ClosurePoint(_Strict):
    t_s: float
    r_v_fps: float


class IntruderSpec(_Strict):
    kind: Literal["none", "bang-bang", "random", "scripted", "closure-schedule", "cooperative"] = "none"
    seed: int = Field(default=0, ge=0)
    dwell_s: float = 1.0
    mean_dwell_s: float = 2.0
    schedule: list[Union[AccelPoint, ClosurePoint]] = Field(default_factory=list)

    def build(self) -> IntruderPolicy:
        sched = tuple((p.t_s, p.a_i_fps2 if isinstance(p, AccelPoint) else p.r_v_fps)
                      for p in self.schedule)
        kind = IntruderKind(self.kind)
        if kind is IntruderKind.SCRIPTED and any(isinstance(p, ClosurePoint) for p in self.schedule):
            raise ValueError("scripted schedules carry a_i_fps2")
        if kind is IntruderKind.CLOSURE_SCHEDULE and any(isinstance(p, AccelPoint) for p in self.schedule):
            raise ValueError("closure schedules carry r_v_fps")
        return IntruderPolicy(kind, self.seed, self.dwell_s, self.mean_dwell_s, sched)


class CatalogEntrySpec(_Strict):
    label: str
    w: Literal[-1, 1]
    rate_fpm: float
    coc: bool = False


class IssuerSpec(_Strict):
    """Issuer options; ``catalog`` replaces the default advisory catalog."""

    mode: Literal["keep-or-filter", "forced-reissue"] | None = None
    selection: Literal["sticky", "first", "random", "adversarial"] = "sticky"
    synthesize: bool = True
    seed: int = Field(default=0, ge=0)
    choices: list[float] = Field(default_factory=list)
    catalog: list[CatalogEntrySpec] | None = None

    def build(self, variant: ModelVariant) -> AdvisoryIssuer:
        mode = IssuerMode(self.mode) if self.mode else (
            IssuerMode.FORCED_REISSUE if variant.bounded else IssuerMode.KEEP_OR_FILTER)
        expected = IssuerMode.FORCED_REISSUE if variant.bounded else IssuerMode.KEEP_OR_FILTER
        if mode is not expected:
            raise ValueError(f"{variant.value} uses the {expected.value} issuer")
        catalog = default_catalog() if self.catalog is None else AdvisoryCatalog(
            tuple(CatalogEntry(e.label, e.w, e.rate_fpm, e.coc) for e in self.catalog))
        return AdvisoryIssuer(mode=mode, selection=Selection(self.selection), catalog=catalog,
                              synthesize=self.synthesize, seed=self.seed, choices=tuple(self.choices))


class ScenarioFile(_Strict):
    model: Literal["inf-non", "inf-vert", "inf-horiz", "bound-non", "bound-vert",
                   "safeable-non", "safeable-vert"]
    params: ParamsSpec = Field(default_factory=ParamsSpec)
    initial: InitialSpec
    advisory: AdvisorySpec
    intruder: IntruderSpec = Field(default_factory=IntruderSpec)
    issuer: IssuerSpec = Field(default_factory=IssuerSpec)
    horizon_s: float | None = None
    seed: int = Field(default=0, ge=0)
    cadence_s: float = 1.0
    c_o_fps2: float | None = None
    check_region: bool = True
    horizon_margin_s: float = 10.0
    r_v_floor_fps: float | None = None

    def encounter(self) -> tuple[ModelVariant, ValidatedParams, EncounterState, Advisory]:
        """The parts a region query needs, without building the game."""
        variant = ModelVariant(self.model)
        params = validate_params(self.params.build(), variant)
        adv = self.advisory.build(variant.two_sided, params.v_climb_max)
        return variant, params, self.initial.build(), adv

    def build(self, seed_override: int | None = None) -> Scenario:
        variant, params, initial, adv = self.encounter()
        return Scenario(
            variant=variant, params=params, initial=initial, initial_advisory=adv,
            issuer=self.issuer.build(variant), intruder=self.intruder.build(),
            horizon=self.horizon_s, seed=self.seed if seed_override is None else seed_override,
            cadence=self.cadence_s, c_o=self.c_o_fps2, check_region=self.check_region,
            horizon_margin=self.horizon_margin_s, r_v_floor=self.r_v_floor_fps)


def _describe(err: ValidationError) -> str:
    parts = []
    for e in err.errors():
        loc = ".".join(str(x) for x in e["loc"])
        parts.append(f"{loc}: {e['msg']}" if loc else e["msg"])
    return "; ".join(parts)


def parse_scenario_file(doc: dict | str) -> ScenarioFile:
    try:
        raw = json.loads(doc) if isinstance(doc, str) else doc
        return ScenarioFile.model_validate(raw)
    except json.JSONDecodeError as e:
        raise ScenarioFormatError(f"invalid JSON: {e}") from None
    except ValidationError as e:
        raise ScenarioFormatError(_describe(e)) from None


def parse_scenario(doc: dict | str, seed_override: int | None = None) -> Scenario:
    """Scenario from a JSON document (text or decoded dict)."""
    return parse_scenario_file(doc).build(seed_override)


def env_seed() -> int | None:
    value = os.environ.get("ACASLAB_SEED")
    if value is None or value == "":
        return None
    try:
        seed = int(value)
    except ValueError:
        raise ScenarioFormatError(f"ACASLAB_SEED must be an integer, got {value!r}") from None
    if seed < 0:
        raise ScenarioFormatError("ACASLAB_SEED must be >= 0")
    return seed


def load_scenario(path: str | Path, seed_override: int | None = None) -> Scenario:
    text = Path(path).read_text(encoding="utf-8")
    return parse_scenario(text, seed_override)


def scenario_to_dict(sc: Scenario) -> dict:
    """Exact JSON form of a scenario; loading it back rebuilds the same game."""
    p = sc.params
    adv = sc.initial_advisory
    advisory = {"w": adv.w, "v_lo_fps": adv.v_lo}
    if adv.v_up is not None:
        advisory["v_up_fps"] = adv.v_up
    pol = sc.intruder
    if pol.kind is IntruderKind.CLOSURE_SCHEDULE:
        sched = [{"t_s": t, "r_v_fps": x} for t, x in pol.schedule]
    else:
        sched = [{"t_s": t, "a_i_fps2": x} for t, x in pol.schedule]
    iss = sc.issuer
    out = {
        "model": sc.variant.value,
        "params": {
            "r_p_ft": p.r_p, "h_p_ft": p.h_p, "r_v_fps": p.r_v,
            "a_lo_fps2": p.a_lo, "a_up_fps2": p.a_up, "a_max_fps2": p.a_max, "c_fps2": p.c,
            "v_max_fps": p.v_max, "epsilon_s": p.epsilon, "g_fps2": p.g,
            "v_climb_max_fps": p.v_climb_max,
        },
        "initial": {"r_ft": sc.initial.r, "h_ft": sc.initial.h, "v_fps": sc.initial.v},
        "advisory": advisory,
        "intruder": {"kind": pol.kind.value, "seed": pol.seed, "dwell_s": pol.dwell,
                     "mean_dwell_s": pol.mean_dwell, "schedule": sched},
        "issuer": {"mode": iss.mode.value, "selection": iss.selection.value,
                   "synthesize": iss.synthesize, "seed": iss.seed, "choices": list(iss.choices)},
        "seed": sc.seed,
        "cadence_s": sc.cadence,
        "check_region": sc.check_region,
        "horizon_margin_s": sc.horizon_margin,
    }
    if sc.horizon is not None:
        out["horizon_s"] = sc.horizon
    if sc.c_o is not None:
        out["c_o_fps2"] = sc.c_o
    if sc.r_v_floor is not None:
        out["r_v_floor_fps"] = sc.r_v_floor
    if iss.catalog != default_catalog():
        out["issuer"]["catalog"] = [{"label": e.label, "w": e.w, "rate_fpm": e.rate_fpm, "coc": e.coc}
                                    for e in iss.catalog]
    return out


def dump_scenario(sc: Scenario, path: str | Path) -> None:
    # json writes floats with repr(), which round-trips exactly
    Path(path).write_text(json.dumps(scenario_to_dict(sc), indent=2) + "\n", encoding="utf-8")


# ----------------------------------------------------------------- traces

def write_trace(trace: Trace, out) -> None:
    """CSV trace; ``out`` is a path or a text stream."""
    if isinstance(out, (str, Path)):
        with open(out, "w", newline="", encoding="utf-8") as fh:
            write_trace(trace, fh)
        return
    w = csv.writer(out, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    for rec in trace:
        w.writerow([fmt(rec.t), fmt(rec.r), fmt(rec.h), fmt(rec.v), fmt(rec.a_o), fmt(rec.a_i),
                    fmt(rec.r_v), rec.w, fmt(rec.v_lo), "" if rec.v_up is None else fmt(rec.v_up),
                    rec.event, int(rec.nmac)])


def trace_csv(trace: Trace) -> str:
    buf = io.StringIO()
    write_trace(trace, buf)
    return buf.getvalue()


def parse_trace(text: str) -> Trace:
    return read_trace(io.StringIO(text))


def read_trace(src) -> Trace:
    """Trace from a CSV path or text stream. Region verdicts are not stored."""
    if isinstance(src, (str, Path)):
        with open(src, newline="", encoding="utf-8") as fh:
            return read_trace(fh)
    rows = list(csv.reader(src))
    if not rows or tuple(rows[0]) != TRACE_HEADER:
        raise ScenarioFormatError("trace CSV header mismatch")
    data = np.empty((len(rows) - 1, k.N_COLS))
    for i, row in enumerate(rows[1:]):
        t, r, h, v, a_o, a_i, r_v, w, vlo, vup, event, nmac = row
        data[i] = (float(t), float(r), float(h), float(v), float(a_o), float(a_i), float(r_v),
                   float(w), float(vlo), math.nan if vup == "" else float(vup),
                   EVENT_NAMES[event], float(nmac), -1.0)
    return Trace(data)


# ------------------------------------------------------------------ grids

class RangeSpec(_Strict):
    start: float
    stop: float
    step: float = Field(gt=0)

    def values(self) -> np.ndarray:
        if self.stop < self.start:
            raise ValueError("empty range")
        n = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return self.start + self.step * np.arange(n)


class GridSpec(_Strict):
    """Raster request: ``kind`` and optionally ``compare_kind`` for two columns."""

    model: Literal["inf-non", "inf-vert", "inf-horiz", "bound-non", "bound-vert",
                   "safeable-non", "safeable-vert"] = "inf-non"
    kind: Literal["l-inf", "l-inf-horiz", "c-eps", "c-safeable"] | None = None
    compare_kind: Literal["l-inf", "l-inf-horiz", "c-eps", "c-safeable"] | None = None
    params: ParamsSpec = Field(default_factory=ParamsSpec)
    r_ft: RangeSpec
    h_ft: RangeSpec
    v_fpm: float | None = None
    v_fps: float | None = None
    advisory: AdvisorySpec

    @model_validator(mode="after")
    def _rate(self):
        _one_of(self, "v_fpm", "v_fps")
        return self


def parse_grid(doc: dict | str):
    """(variant, params, kinds, rs, hs, v, advisory) from a grid document."""
    try:
        raw = json.loads(doc) if isinstance(doc, str) else doc
        spec = GridSpec.model_validate(raw)
        rs, hs = spec.r_ft.values(), spec.h_ft.values()
    except json.JSONDecodeError as e:
        raise ScenarioFormatError(f"invalid JSON: {e}") from None
    except ValidationError as e:
        raise ScenarioFormatError(_describe(e)) from None
    except ValueError as e:
        raise ScenarioFormatError(str(e)) from None
    variant = ModelVariant(spec.model)
    params = validate_params(spec.params.build(), variant)
    kind = RegionKind(spec.kind) if spec.kind else variant.region_kind
    kinds = [kind] + ([RegionKind(spec.compare_kind)] if spec.compare_kind else [])
    two_sided = any(x in (RegionKind.C_EPS, RegionKind.C_SAFEABLE) for x in kinds)
    adv = spec.advisory.build(two_sided, params.v_climb_max)
    v = spec.v_fps if spec.v_fps is not None else convert_rate(spec.v_fpm)
    return variant, params, kinds, rs, hs, v, adv


def write_raster(out, rs: np.ndarray, hs: np.ndarray, grids: list[np.ndarray], names: list[str]) -> None:
    """Rows r_ft,h_ft,holds... ordered h outer, r inner (both ascending)."""
    w = csv.writer(out, lineterminator="\n")
    cols = ["holds"] if len(grids) == 1 else [f"holds_{n}" for n in names]
    w.writerow(["r_ft", "h_ft", *cols])
    for i, h in enumerate(hs):
        for j, r in enumerate(rs):
            w.writerow([fmt(r), fmt(h), *(int(g[i, j]) for g in grids)])
