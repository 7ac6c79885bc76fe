"""Canonical types, units, parameter validation and the advisory catalog.

Everything internal is in feet and seconds. Rates in ft/min are accepted
only at ingestion and converted with :func:`convert_rate`.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field

G_FPS2 = 32.174
SECONDS_PER_MINUTE = 60.0

R_P_DEFAULT = 500.0
H_P_DEFAULT = 100.0
V_UP_DEFAULT_FPM = 10000.0
V_CLIMB_MAX_DEFAULT_FPM = 10000.0


def convert_rate(fpm: float) -> float:
    """Convert a climb rate from ft/min to ft/s."""
    return fpm / SECONDS_PER_MINUTE


def to_fpm(fps: float) -> float:
    return fps * SECONDS_PER_MINUTE


class ModelVariant(enum.Enum):
    """The seven hybrid-game models, in order."""

    INF_NON = "inf-non"
    INF_VERT = "inf-vert"
    INF_HORIZ = "inf-horiz"
    BOUND_NON = "bound-non"
    BOUND_VERT = "bound-vert"
    SAFEABLE_NON = "safeable-non"
    SAFEABLE_VERT = "safeable-vert"

    @property
    def number(self) -> int:
        return list(ModelVariant).index(self) + 1

    @property
    def region_kind(self) -> RegionKind:
        return _REGION_OF[self]

    @property
    def vertical_intruder(self) -> bool:
        return self in (ModelVariant.INF_VERT, ModelVariant.BOUND_VERT, ModelVariant.SAFEABLE_VERT)

    @property
    def horizontal_intruder(self) -> bool:
        return self is ModelVariant.INF_HORIZ

    @property
    def maneuvering(self) -> bool:
        return self.vertical_intruder or self.horizontal_intruder

    @property
    def bounded(self) -> bool:
        """Models 4-7 re-issue advisories every epsilon seconds."""
        return self.number >= 4

    @property
    def two_sided(self) -> bool:
        return self.bounded

    @classmethod
    def from_number(cls, n: int) -> ModelVariant:
        return list(cls)[n - 1]


class RegionKind(enum.Enum):
    L_INF = "l-inf"
    L_INF_HORIZ = "l-inf-horiz"
    C_EPS = "c-eps"
    C_SAFEABLE = "c-safeable"


_REGION_OF = {
    ModelVariant.INF_NON: RegionKind.L_INF,
    ModelVariant.INF_VERT: RegionKind.L_INF,
    ModelVariant.INF_HORIZ: RegionKind.L_INF_HORIZ,
    ModelVariant.BOUND_NON: RegionKind.C_EPS,
    ModelVariant.BOUND_VERT: RegionKind.C_EPS,
    ModelVariant.SAFEABLE_NON: RegionKind.C_SAFEABLE,
    ModelVariant.SAFEABLE_VERT: RegionKind.C_SAFEABLE,
}


class ConstraintViolation(ValueError):
    """A model's init constraint does not hold; ``name`` is the violated conjunct."""

    def __init__(self, name: str, detail: str = ""):
        self.name = name
        super().__init__(f"constraint violated: {name}" + (f" ({detail})" if detail else ""))


@dataclass(frozen=True)
class Params:
    r_p: float = R_P_DEFAULT
    h_p: float = H_P_DEFAULT
    r_v: float = 250.0
    a_lo: float = G_FPS2 / 4
    a_up: float = G_FPS2 / 2
    a_max: float = G_FPS2 / 2
    c: float = G_FPS2 / 16
    v_max: float = 500.0
    epsilon: float = 1.0
    g: float = G_FPS2
    v_climb_max: float = convert_rate(V_CLIMB_MAX_DEFAULT_FPM)

    @classmethod
    def from_g_fractions(cls, g: float = G_FPS2, **kw) -> Params:
        """Build params with accelerations given as multiples of g (keys ``*_g``)."""
        out = {}
        for key, value in kw.items():
            if key.endswith("_g"):
                out[key[:-2]] = value * g
            else:
                out[key] = value
        return cls(g=g, **out)


@dataclass(frozen=True)
class ValidatedParams(Params):
    """Params that passed :func:`validate_params` for ``variant``."""

    variant: ModelVariant = ModelVariant.INF_NON

    @property
    def params(self) -> Params:
        fields = {f.name: getattr(self, f.name) for f in dataclasses.fields(Params)}
        return Params(**fields)


def _require(ok: bool, name: str, detail: str = "") -> None:
    if not ok:
        raise ConstraintViolation(name, detail)


def validate_params(p: Params, variant: ModelVariant) -> ValidatedParams:
    """Check the init constraints of ``variant``'s model and tag ``p`` with it."""
    if isinstance(p, ValidatedParams) and p.variant is variant:
        return p
    for name in ("r_p", "h_p", "r_v", "a_lo", "a_up", "a_max", "c", "v_max", "epsilon", "g", "v_climb_max"):
        _require(math.isfinite(getattr(p, name)), f"{name} finite")
    _require(p.r_p >= 0, "r_p ≥ 0")
    _require(p.h_p > 0, "h_p > 0")
    _require(p.r_v >= 0, "r_v ≥ 0")
    _require(p.a_lo > 0, "a_lo > 0")
    _require(p.v_climb_max > 0, "v_climb_max > 0")
    m = variant.number
    if m in (1, 3, 4, 6):
        _require(p.a_max >= p.a_lo, "a_max ≥ a_lo")
    if m == 2:
        _require(p.c > 0, "c > 0")
        _require(p.a_max >= p.a_lo + p.c, "a_max ≥ a_lo + c")
    if m == 3:
        _require(p.v_max > 0, "v_max > 0")
        _require(p.r_v <= p.v_max, "r_v ≤ v_max")
    if m == 4:
        _require(p.a_up > p.a_lo, "a_up > a_lo")
    if m == 5:
        _require(p.a_up > p.a_lo, "a_up > a_lo")
        _require(p.c > 0, "c > 0")
        _require(p.a_up >= p.a_lo + 2 * p.c, "a_up ≥ a_lo + 2c")
        _require(p.a_max >= p.a_lo + p.c, "a_max ≥ a_lo + c")
    if m in (6, 7):
        _require(p.c >= 0, "c ≥ 0")
        _require(p.a_up > p.a_lo + 2 * p.c, "a_up > a_lo + 2c")
        if m == 7:
            _require(p.c > 0, "c > 0")
            _require(p.a_max >= p.a_lo + p.c, "a_max ≥ a_lo + c")
        _require(p.epsilon >= 0, "ε ≥ 0")
    fields = {f.name: getattr(p, f.name) for f in dataclasses.fields(Params)}
    return ValidatedParams(**fields, variant=variant)


@dataclass(frozen=True)
class EncounterState:
    """Relative state: r, h in ft; v in ft/s; t is time since the last advisory."""

    r: float
    h: float
    v: float
    t: float = 0.0

    def __post_init__(self):
        for name in ("r", "h", "v", "t"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"state field {name} must be finite")
        if self.t < 0:
            raise ValueError("state time must be non-negative")


class AdvisoryBoundsError(ValueError):
    pass


@dataclass(frozen=True)
class Advisory:
    """Relative advisory (w, v_lo[, v_up]); rates in ft/s."""

    w: int
    v_lo: float
    v_up: float | None = None
    label: str = ""
    coc: bool = False

    def __post_init__(self):
        if self.w not in (-1, 1):
            raise ValueError("advisory sense w must be -1 or +1")
        if not math.isfinite(self.v_lo) or (self.v_up is not None and not math.isfinite(self.v_up)):
            raise ValueError("advisory rates must be finite")

    @property
    def well_formed(self) -> bool:
        return self.v_up is None or self.w * self.v_lo <= self.w * self.v_up

    def with_upper(self, v_up: float | None = None) -> Advisory:
        """Return a two-sided copy; by default the upper bound is w*10000 ft/min
        (or v_lo itself if that is already stronger)."""
        if v_up is None:
            v_up = self.w * max(convert_rate(V_UP_DEFAULT_FPM), self.w * self.v_lo)
        return dataclasses.replace(self, v_up=v_up)

    def describe(self) -> str:
        return self.label or f"w={self.w:+d},v_lo={self.v_lo:g}"


COC = Advisory(w=1, v_lo=0.0, label="COC", coc=True)


@dataclass(frozen=True)
class CatalogEntry:
    label: str
    w: int
    rate_fpm: float
    coc: bool = False

    def advisory(self, v_up: float | None = None) -> Advisory:
        if self.coc:
            return COC
        # Catalog rates are signed climb rates ("DNC2000" has w=-1 and
        # v_lo=+2000 ft/min); they are used directly as relative targets.
        return Advisory(w=self.w, v_lo=convert_rate(self.rate_fpm), v_up=v_up, label=self.label)


@dataclass(frozen=True)
class AdvisoryCatalog:
    entries: tuple[CatalogEntry, ...] = field(default_factory=tuple)

    def __post_init__(self):
        labels = [e.label for e in self.entries]
        if len(set(labels)) != len(labels):
            raise ValueError("catalog labels must be unique")
        for e in self.entries:
            if e.w not in (-1, 1) or not math.isfinite(e.rate_fpm):
                raise ValueError(f"bad catalog entry {e.label}")

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def entry(self, label: str) -> CatalogEntry:
        for e in self.entries:
            if e.label == label:
                return e
        raise KeyError(label)

    def lookup(self, label: str, v_up: float | None = None) -> Advisory:
        return self.entry(label).advisory(v_up)

    def advisories(self) -> list[Advisory]:
        """All constraining advisories (COC skipped), in catalog order."""
        return [e.advisory() for e in self.entries if not e.coc]

    def extended(self, *extra: CatalogEntry) -> AdvisoryCatalog:
        return AdvisoryCatalog(self.entries + tuple(extra))


def default_catalog() -> AdvisoryCatalog:
    return AdvisoryCatalog((
        CatalogEntry("COC", 1, 0.0, coc=True),
        CatalogEntry("DND", 1, 0.0),
        CatalogEntry("CL1500", 1, 1500.0),
        CatalogEntry("SCL2500", 1, 2500.0),
        CatalogEntry("DNC2000", -1, 2000.0),
        CatalogEntry("DNC", -1, 0.0),
    ))
