"""Tests for shadowing, closing, the bracket and the suspension dichotomy."""

import math

import pytest

from thermoflow.battery import full_shift, golden_mean, golden_roof_12, phase_toy, unit_roof
from thermoflow.errors import DeltaTooLarge, HorizonTooShort, NotAperiodic, NotIrreducible
from thermoflow.flows import SuspensionFlow
from thermoflow.potentials import coboundary, from_values, linear_combination
from thermoflow.shift import Sft, fixed_point, periodic_point, shift_point, splice
from thermoflow.topology import (
    ClosingResult,
    SuspensionKind,
    TraceCertificate,
    bracket,
    close_periodic,
    expansivity_certificate,
    jump_distances,
    make_pseudo_orbit,
    shadow,
    suspension_dichotomy,
    symbolic_window,
)


def _flow() -> SuspensionFlow:
    return unit_roof(full_shift(2))


def _two_blocks():
    """Five units at the fixed point of 0, then a jump to a point agreeing with it below 3."""
    flow = _flow()
    p = flow.point(fixed_point("0"), 0.0)
    q = flow.point(splice(fixed_point("0"), periodic_point(("0", "1")), 3), 0.0)
    return flow, make_pseudo_orbit(flow, [(p, 5.0), (q, 2.0)], delta=0.1, t_min=1.0)


class TestScales:
    def test_symbolic_window(self):
        flow = _flow()
        assert symbolic_window(flow, 1.0) == 1
        assert symbolic_window(flow, 0.5) == 2
        assert symbolic_window(flow, 0.01) == 6

    def test_expansivity(self):
        assert expansivity_certificate(_flow(), 1.0) == pytest.approx(math.exp(-1) / 2)
        assert expansivity_certificate(golden_roof_12(), 1.0) == pytest.approx(math.exp(-1) / 4)


class TestPseudoOrbits:
    def test_jump_sizes(self):
        flow, po = _two_blocks()
        assert jump_distances(flow, po.entries) == pytest.approx([math.exp(-4)])
        assert po.period == 7.0

    def test_duration_below_t_min(self):
        flow = _flow()
        p = flow.point(fixed_point("0"), 0.0)
        with pytest.raises(HorizonTooShort):
            make_pseudo_orbit(flow, [(p, 0.5), (p, 2.0)], delta=0.1, t_min=1.0)

    def test_jump_above_delta(self):
        flow = _flow()
        p = flow.point(fixed_point("0"), 0.0)
        q = flow.point(fixed_point("1"), 0.0)
        with pytest.raises(DeltaTooLarge):
            make_pseudo_orbit(flow, [(p, 1.0), (q, 1.0)], delta=0.1, t_min=1.0)


class TestShadow:
    def test_true_orbit_traces_itself(self):
        flow = _flow()
        x = periodic_point(("0", "1"))
        p0 = flow.point(x, 0.25)
        p1 = flow.point(shift_point(x, 1), 0.75)
        po = make_pseudo_orbit(flow, [(p0, 1.5), (p1, 2.0)], delta=0.01, t_min=1.0)
        cert = shadow(flow, po, 0.5)
        assert cert.max_distance == 0.0
        assert cert.slopes == [1.0, 1.0]
        assert cert.rho(2.0) == 2.0
        assert cert.traced_point.base_point.window(-4, 4) == x.window(-4, 4)

    def test_periodic(self):
        flow = _flow()
        x = periodic_point(("0", "1"))
        po = make_pseudo_orbit(
            flow, [(flow.point(x, 0.0), 2.0)], delta=0.01, t_min=1.0, periodic=True
        )
        cert = shadow(flow, po, 0.5)
        assert cert.max_distance == 0.0
        assert cert.traced_point.base_point.window(-6, 6) == x.window(-6, 6)

    def test_spliced_orbit(self):
        flow, po = _two_blocks()
        cert = shadow(flow, po, 0.5)
        traced = cert.traced_point.base_point
        assert traced.window(-3, 11) == ("0",) * 11 + ("1", "0", "1")
        assert cert.traced_point.fiber == 0.0
        assert 0.0 < cert.max_distance <= math.exp(-3) + 1e-12
        assert cert.slopes == [1.0, 1.0]

    def test_jump_too_coarse_for_epsilon(self):
        flow = _flow()
        p = flow.point(fixed_point("0"), 0.0)
        q = flow.point(splice(fixed_point("0"), periodic_point(("0", "1")), 1), 0.0)
        po = make_pseudo_orbit(flow, [(p, 2.0), (q, 2.0)], delta=0.5, t_min=1.0)
        with pytest.raises(DeltaTooLarge) as info:
            shadow(flow, po, 0.5)
        assert info.value.required == 2
        assert info.value.available == 1

    def test_certificate_checks_slopes(self):
        p = _flow().point(fixed_point("0"), 0.0)
        with pytest.raises(DeltaTooLarge, match="slope"):
            TraceCertificate(
                traced_point=p,
                reparam_breakpoints=((0.0, 0.0), (1.0, 2.0)),
                epsilon=0.5,
                max_distance=0.0,
            )

    def test_rho_interpolates(self):
        p = _flow().point(fixed_point("0"), 0.0)
        cert = TraceCertificate(
            traced_point=p,
            reparam_breakpoints=((0.0, 0.0), (2.0, 2.5)),
            epsilon=0.5,
            max_distance=0.0,
        )
        assert cert.rho(1.0) == pytest.approx(1.25)
        assert cert.rho(3.0) == pytest.approx(3.5)


class TestClosing:
    @pytest.mark.parametrize("t", [6.0, 6.3])
    def test_closes_periodic_orbit(self, t):
        flow = _flow()
        x = periodic_point(("0", "1"))
        result = close_periodic(flow, flow.point(x, 0.0), t, 0.5)
        assert result.period == pytest.approx(6.0)
        assert result.point.fiber == 0.0
        assert result.point.base_point.window(-6, 6) == x.window(-6, 6)
        assert result.max_distance == 0.0

    def test_near_periodic_orbit(self):
        flow = _flow()
        x = splice(periodic_point(("0", "1")), fixed_point("0"), 20)
        result = close_periodic(flow, flow.point(x, 0.0), 6.0, 0.5)
        assert result.period == pytest.approx(6.0)
        assert result.point.base_point.window(0, 6) == x.window(0, 6)
        assert 0.0 < result.max_distance <= math.exp(-symbolic_window(flow, 0.5))

    def test_result_checks_distance(self):
        p = _flow().point(fixed_point("0"), 0.0)
        with pytest.raises(DeltaTooLarge, match="closing distance"):
            ClosingResult(point=p, period=1.0, epsilon=0.5, max_distance=0.6)

    def test_horizon_below_roof(self):
        flow = _flow()
        with pytest.raises(HorizonTooShort):
            close_periodic(flow, flow.point(fixed_point("0"), 0.0), 0.5, 0.5)

    def test_orbit_does_not_return(self):
        flow = _flow()
        x = splice(periodic_point(("0", "1")), fixed_point("0"), 1)
        with pytest.raises(DeltaTooLarge):
            close_periodic(flow, flow.point(x, 0.0), 6.0, 0.5)

    def test_golden_roof_period_is_roof_sum(self):
        flow = golden_roof_12()
        x = periodic_point(("0", "0", "1"))
        result = close_periodic(flow, flow.point(x, 0.0), 4.0, 0.5)
        assert result.period == pytest.approx(4.0)


class TestBracket:
    def test_future_of_x_past_of_y(self):
        flow = _flow()
        x = flow.point(periodic_point(("0", "1")), 0.2)
        inner = splice(fixed_point("1"), periodic_point(("0", "1")), -1)
        y_base = splice(inner, fixed_point("1"), 2)
        y = flow.point(y_base, 0.3)
        result = bracket(flow, x, y, 0.5)
        assert result.tau == pytest.approx(0.1)
        z = result.point
        assert z.fiber == 0.3
        assert z.base_point.window(0, 4) == x.base_point.window(0, 4)
        assert z.base_point.window(-4, 0) == y.base_point.window(-4, 0)

    def test_bracket_of_point_with_itself(self):
        flow = _flow()
        x = flow.point(periodic_point(("0", "1")), 0.2)
        result = bracket(flow, x, x, 0.5)
        assert result.tau == 0.0
        assert result.point.base_point.window(-6, 6) == x.base_point.window(-6, 6)

    def test_fibers_too_far_apart(self):
        flow = _flow()
        x = flow.point(periodic_point(("0", "1")), 0.2)
        y = flow.point(periodic_point(("0", "1")), 0.9)
        with pytest.raises(DeltaTooLarge, match="time shift"):
            bracket(flow, x, y, 0.5)


class TestDichotomy:
    def test_unit_roof_is_constant(self):
        d = suspension_dichotomy(_flow())
        assert d.kind == SuspensionKind.CONSTANT
        assert d.constant == pytest.approx(1.0)

    def test_golden_roof_mixes(self):
        d = suspension_dichotomy(golden_roof_12())
        assert d.kind == SuspensionKind.MIXING
        assert d.constant is None

    def test_constant_plus_coboundary(self):
        g = golden_mean()
        cob = coboundary(g, from_values(g, {"0": 0.25, "1": -0.5}))
        flow = SuspensionFlow(base=g, roof=linear_combination(g, [(1.0, cob)], const=2.0))
        d = suspension_dichotomy(flow)
        assert d.kind == SuspensionKind.CONSTANT
        assert d.constant == pytest.approx(2.0, abs=1e-10)

    def test_periodic_base(self):
        g = Sft(states=("0", "1"), edges=frozenset({("0", "1"), ("1", "0")}))
        with pytest.raises(NotAperiodic):
            suspension_dichotomy(unit_roof(g))

    def test_reducible_base(self):
        with pytest.raises(NotIrreducible):
            suspension_dichotomy(unit_roof(phase_toy()))
