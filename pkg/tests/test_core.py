import math

import pytest

from acaslab.core import (COC, G_FPS2, Advisory, ConstraintViolation,
                          EncounterState, ModelVariant, Params, RegionKind, convert_rate,
                          default_catalog, to_fpm, validate_params)


def test_rate_conversion():
    assert convert_rate(1500) == 25.0
    assert convert_rate(0) == 0.0
    assert convert_rate(10000) == pytest.approx(166.6666666666, rel=1e-12)
    assert to_fpm(convert_rate(2500)) == pytest.approx(2500)


def test_defaults_are_exact():
    p = Params()
    assert p.r_p == 500 and p.h_p == 100
    assert p.a_lo == G_FPS2 / 4
    assert p.a_up == G_FPS2 / 2
    assert p.c == G_FPS2 / 16


def test_from_g_fractions():
    p = Params.from_g_fractions(a_lo_g=0.25, c_g=0.5, r_p=400)
    assert p.a_lo == G_FPS2 * 0.25
    assert p.c == G_FPS2 * 0.5
    assert p.r_p == 400


class TestValidate:
    def test_boundary_a_max_equals_a_lo(self):
        p = Params(a_lo=G_FPS2 / 4, a_max=G_FPS2 / 4)
        vp = validate_params(p, ModelVariant.INF_NON)
        assert vp.variant is ModelVariant.INF_NON
        assert vp.params == p

    def test_inf_vert_needs_compensation_headroom(self):
        p = Params(c=1.0, a_max=Params().a_lo + 1.0 - 0.001)
        with pytest.raises(ConstraintViolation) as e:
            validate_params(p, ModelVariant.INF_VERT)
        assert e.value.name == "a_max ≥ a_lo + c"

    def test_safeable_strict_inequality(self):
        base = Params()
        p = Params(a_up=base.a_lo + 2 * base.c)
        with pytest.raises(ConstraintViolation) as e:
            validate_params(p, ModelVariant.SAFEABLE_NON)
        assert e.value.name == "a_up > a_lo + 2c"

    @pytest.mark.parametrize("field,value,name", [
        ("h_p", 0.0, "h_p > 0"),
        ("r_p", -1.0, "r_p ≥ 0"),
        ("a_lo", 0.0, "a_lo > 0"),
        ("r_v", -5.0, "r_v ≥ 0"),
    ])
    def test_common_constraints(self, field, value, name):
        with pytest.raises(ConstraintViolation) as e:
            validate_params(Params(**{field: value}), ModelVariant.INF_NON)
        assert e.value.name == name

    def test_horizontal_closure_bound(self):
        with pytest.raises(ConstraintViolation, match="r_v ≤ v_max"):
            validate_params(Params(r_v=600.0, v_max=500.0), ModelVariant.INF_HORIZ)

    def test_maneuvering_safeable_needs_positive_c(self):
        with pytest.raises(ConstraintViolation, match="c > 0"):
            validate_params(Params(c=0.0), ModelVariant.SAFEABLE_VERT)
        validate_params(Params(c=0.0), ModelVariant.SAFEABLE_NON)

    def test_nan_rejected(self):
        with pytest.raises(ConstraintViolation, match="finite"):
            validate_params(Params(r_p=math.nan), ModelVariant.INF_NON)

    def test_defaults_valid_everywhere(self):
        for v in ModelVariant:
            validate_params(Params(), v)


def test_variant_properties():
    v = ModelVariant.SAFEABLE_VERT
    assert v.number == 7 and v.bounded and v.two_sided and v.vertical_intruder
    assert v.region_kind is RegionKind.C_SAFEABLE
    assert ModelVariant.INF_HORIZ.horizontal_intruder
    assert not ModelVariant.INF_NON.maneuvering
    assert ModelVariant.from_number(4) is ModelVariant.BOUND_NON
    assert [m.number for m in ModelVariant] == list(range(1, 8))


class TestCatalog:
    def test_cl1500(self):
        adv = default_catalog().lookup("CL1500")
        assert (adv.w, adv.v_lo) == (1, 25.0)

    def test_dnc2000(self):
        adv = default_catalog().lookup("DNC2000")
        assert adv.w == -1
        assert adv.v_lo == convert_rate(2000)

    def test_dnd(self):
        adv = default_catalog().lookup("DND")
        assert (adv.w, adv.v_lo) == (1, 0.0)

    def test_coc_skipped_by_advisories(self):
        cat = default_catalog()
        assert cat.lookup("COC") is COC
        assert all(not a.coc for a in cat.advisories())
        assert [a.label for a in cat.advisories()] == ["DND", "CL1500", "SCL2500", "DNC2000", "DNC"]

    def test_unknown_label(self):
        with pytest.raises(KeyError):
            default_catalog().lookup("CL9999")


class TestAdvisory:
    def test_malformed_is_representable(self):
        # evaluators report it as a false verdict with a reason
        assert not Advisory(w=1, v_lo=30.0, v_up=20.0).well_formed
        assert Advisory(w=-1, v_lo=30.0, v_up=20.0).well_formed
        with pytest.raises(ValueError):
            Advisory(w=0, v_lo=0.0)

    def test_default_upper(self):
        adv = Advisory(w=1, v_lo=25.0).with_upper()
        assert adv.v_up == pytest.approx(10000 / 60)
        down = Advisory(w=-1, v_lo=-25.0).with_upper()
        assert down.v_up == pytest.approx(-10000 / 60)
        assert down.well_formed


def test_state_validation():
    with pytest.raises(ValueError):
        EncounterState(math.inf, 0.0, 0.0)
    with pytest.raises(ValueError):
        EncounterState(0.0, 0.0, 0.0, t=-1.0)
