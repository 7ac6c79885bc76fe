import math

import pytest

from acaslab.agents import (AdvisoryIssuer, Channel, IntruderKind, IntruderPolicy, IssuerMode,
                            NoSafeAdvisory, OwnshipStrategy, PolicyCapabilityError, Selection,
                            StrategyBoundsError, Visible, channel_of, intruder_move, issue_advisory,
                            ownship_accel, synthesized_advisories)
from acaslab.core import Advisory, AdvisoryCatalog, EncounterState, ModelVariant, RegionKind
from acaslab.regions import check, variant_params

A_LO = 32.174 / 4
C = 32.174 / 16


def strat(variant, c_o=None, **kw):
    return OwnshipStrategy(variant, variant_params(variant, **kw), c_o)


class TestOwnship:
    @pytest.mark.parametrize("v,expected", [(0.0, A_LO), (24.9, A_LO), (25.0, 0.0), (40.0, 0.0)])
    def test_lower_nominal(self, v, expected):
        a = ownship_accel(strat(ModelVariant.INF_NON), EncounterState(1, 1, v), Advisory(1, 25.0))
        assert a == pytest.approx(expected)

    def test_lower_nominal_downsense(self):
        a = ownship_accel(strat(ModelVariant.INF_NON), EncounterState(1, 1, 0.0), Advisory(-1, -25.0))
        assert a == pytest.approx(-A_LO)

    @pytest.mark.parametrize("v,expected", [(0.0, A_LO + C), (30.0, C)])
    def test_compensating(self, v, expected):
        a = ownship_accel(strat(ModelVariant.INF_VERT), EncounterState(1, 1, v), Advisory(1, 25.0))
        assert a == pytest.approx(expected)

    @pytest.mark.parametrize("v,expected", [(0.0, A_LO + C), (25.0, C), (60.0, 0.0), (100.0, -C),
                                            (120.0, -C)])
    def test_two_sided(self, v, expected):
        a = ownship_accel(strat(ModelVariant.BOUND_VERT), EncounterState(1, 1, v), Advisory(1, 25.0, 100.0))
        assert a == pytest.approx(expected)

    def test_two_sided_uses_estimate(self):
        a = ownship_accel(strat(ModelVariant.BOUND_VERT, c_o=2.0), EncounterState(1, 1, 0.0),
                          Advisory(1, 25.0, 100.0))
        assert a == pytest.approx(A_LO + 2.0)

    def test_two_sided_needs_v_up(self):
        with pytest.raises(ValueError):
            ownship_accel(strat(ModelVariant.BOUND_VERT), EncounterState(1, 1, 0.0), Advisory(1, 25.0))

    def test_bounds(self):
        # a_max between a_lo + c and a_lo + c + 1: validation passes, but an
        # estimate above c pushes the prescription over a_max
        s = strat(ModelVariant.INF_VERT)
        assert ownship_accel(s, EncounterState(1, 1, 0.0), Advisory(1, 25.0)) <= s.params.a_max
        wide = OwnshipStrategy(ModelVariant.BOUND_VERT, variant_params(ModelVariant.BOUND_VERT,
                               a_max=A_LO + C + 0.5), C + 1.0)
        with pytest.raises(StrategyBoundsError):
            ownship_accel(wide, EncounterState(1, 1, 0.0), Advisory(1, 25.0, 100.0))


class TestIntruder:
    def test_channels(self):
        assert channel_of(ModelVariant.INF_NON) is Channel.NONE
        assert channel_of(ModelVariant.SAFEABLE_VERT) is Channel.ACCEL
        assert channel_of(ModelVariant.INF_HORIZ) is Channel.CLOSURE

    @pytest.mark.parametrize("variant,kind", [
        (ModelVariant.INF_NON, IntruderKind.BANG_BANG),
        (ModelVariant.INF_VERT, IntruderKind.CLOSURE_SCHEDULE),
        (ModelVariant.INF_HORIZ, IntruderKind.SCRIPTED),
        (ModelVariant.BOUND_NON, IntruderKind.RANDOM),
    ])
    def test_capability(self, variant, kind):
        pol = IntruderPolicy(kind, schedule=((0.0, 1.0),))
        with pytest.raises(PolicyCapabilityError):
            pol.check(variant, variant_params(variant))

    def test_schedule_validation(self):
        p = variant_params(ModelVariant.INF_VERT)
        with pytest.raises(ValueError):
            IntruderPolicy(IntruderKind.SCRIPTED, schedule=((0.0, C),)).check(ModelVariant.INF_VERT, p)
        with pytest.raises(ValueError):
            IntruderPolicy(IntruderKind.SCRIPTED, schedule=((1.0, 0.0), (1.0, 0.5))).check(ModelVariant.INF_VERT, p)
        with pytest.raises(ValueError):
            IntruderPolicy(IntruderKind.SCRIPTED).check(ModelVariant.INF_VERT, p)
        IntruderPolicy(IntruderKind.SCRIPTED, schedule=((0.0, C * 0.99),)).check(ModelVariant.INF_VERT, p)

    def test_bang_bang_chases_climbing_ownship(self):
        # the ownship climbs away (w=+1), so the intruder accelerates up too
        p = variant_params(ModelVariant.INF_VERT)
        vis = Visible(Advisory(1, 25.0), a_o=A_LO + C)
        mv = intruder_move(IntruderPolicy(IntruderKind.BANG_BANG), EncounterState(3000, 0.0, 0.0), vis,
                           variant=ModelVariant.INF_VERT, params=p)
        assert mv.a_i == pytest.approx(C * (1 - 1e-9), rel=1e-12)
        assert abs(mv.a_i) < C
        assert mv.dwell == 1.0

    def test_scripted_follows_schedule(self):
        p = variant_params(ModelVariant.INF_VERT)
        pol = IntruderPolicy(IntruderKind.SCRIPTED, schedule=((0.0, 1.0), (2.0, -1.5)))
        vis = Visible(Advisory(1, 25.0), 0.0)
        kw = dict(variant=ModelVariant.INF_VERT, params=p)
        assert intruder_move(pol, EncounterState(1, 1, 1), vis, t_abs=0.5, **kw).a_i == 1.0
        mv = intruder_move(pol, EncounterState(1, 1, 1), vis, t_abs=2.5, **kw)
        assert mv.a_i == -1.5 and math.isinf(mv.dwell)

    def test_random_is_seeded_and_bounded(self):
        p = variant_params(ModelVariant.INF_HORIZ)
        vis = Visible(Advisory(1, 25.0), 0.0)
        moves = [intruder_move(IntruderPolicy(IntruderKind.RANDOM, seed=5), EncounterState(1, 1, 1), vis,
                               variant=ModelVariant.INF_HORIZ, params=p, k_move=i) for i in range(50)]
        again = [intruder_move(IntruderPolicy(IntruderKind.RANDOM, seed=5), EncounterState(1, 1, 1), vis,
                               variant=ModelVariant.INF_HORIZ, params=p, k_move=i) for i in range(50)]
        assert moves == again
        assert all(0 <= m.r_v <= p.v_max and m.dwell >= 0.1 for m in moves)


class TestIssuer:
    def test_modes(self):
        assert AdvisoryIssuer.for_variant(ModelVariant.INF_NON).mode is IssuerMode.KEEP_OR_FILTER
        assert AdvisoryIssuer.for_variant(ModelVariant.SAFEABLE_VERT).mode is IssuerMode.FORCED_REISSUE

    def test_synthesized_grid(self):
        advs = synthesized_advisories()
        assert {a.w for a in advs} == {1, -1}
        assert max(a.v_lo for a in advs) == pytest.approx(10000 / 60)
        assert all(a.w * a.v_lo <= 10000 / 60 + 1e-9 for a in advs)

    def test_keep_returns_current_untested(self):
        p = variant_params(ModelVariant.INF_NON)
        cur = Advisory(1, 25.0, label="CL1500")
        issuer = AdvisoryIssuer.for_variant(ModelVariant.INF_NON)
        assert issue_advisory(issuer, EncounterState(0, 0, 0), cur, RegionKind.L_INF, p) == cur

    def test_forced_keeps_passing_current(self):
        p = variant_params(ModelVariant.SAFEABLE_NON)
        cur = Advisory(1, 25.0, label="CL1500").with_upper()
        s = EncounterState(8000.0, 0.0, 0.0)
        issuer = AdvisoryIssuer.for_variant(ModelVariant.SAFEABLE_NON)
        assert issue_advisory(issuer, s, cur, RegionKind.C_SAFEABLE, p) == cur

    def test_forced_reverses_when_only_reversal_passes(self):
        p = variant_params(ModelVariant.SAFEABLE_NON)
        cur = Advisory(1, 25.0, label="CL1500").with_upper()
        issuer = AdvisoryIssuer.for_variant(ModelVariant.SAFEABLE_NON, selection=Selection.FIRST)
        for r in (500.0, 600.0):
            s = EncounterState(r, 120.0, 0.0)
            assert not check(s, cur, p).holds
            new = issue_advisory(issuer, s, cur, RegionKind.C_SAFEABLE, p)
            assert new.w == -1
            assert check(s, new, p).holds

    def test_no_safe_advisory(self):
        p = variant_params(ModelVariant.BOUND_NON)
        issuer = AdvisoryIssuer.for_variant(ModelVariant.BOUND_NON, catalog=AdvisoryCatalog(()),
                                            synthesize=False)
        cur = Advisory(1, 25.0, 166.67)
        with pytest.raises(NoSafeAdvisory):
            issue_advisory(issuer, EncounterState(0.0, 0.0, 0.0), cur, RegionKind.C_EPS, p)

    def test_random_selection_uses_choices(self):
        p = variant_params(ModelVariant.SAFEABLE_NON)
        cur = Advisory(1, 25.0).with_upper()
        s = EncounterState(20000.0, 0.0, 0.0)
        picks = set()
        for u in (0.0, 0.3, 0.6, 0.99):
            issuer = AdvisoryIssuer.for_variant(ModelVariant.SAFEABLE_NON, selection=Selection.RANDOM,
                                                choices=(u,))
            picks.add(issue_advisory(issuer, s, cur, RegionKind.C_SAFEABLE, p).label)
        assert len(picks) > 1
