"""Battery-level checks over seeded random models."""

import math

import networkx as nx
import numpy as np
import pytest

from thermoflow.battery import (
    flow_battery,
    random_markov_measure,
    random_periodic_point,
    random_potential,
    random_roof,
    random_sft,
)
from thermoflow.cli import RunConfig, run
from thermoflow.flows import FiberPotential, SuspensionFlow
from thermoflow.flows.suspension import (
    bowen_residual,
    flow_distance,
    flow_entropy,
    flow_equilibrium,
    flow_evaluate,
    flow_integral,
    flow_pressure,
    lift_measure,
    roof_crossings,
)
from thermoflow.flows.timechange import (
    ell,
    find_horizon,
    inverse_time_change,
    is_hyperbolic,
    kappa,
    time_changed_roof,
    verify_theorem_b,
)
from thermoflow.potentials import (
    coboundary,
    constant,
    from_function,
    max_birkhoff_average,
    max_mean_cycle,
    max_ratio_cycle,
)
from thermoflow.shift import (
    Sft,
    SymbolicPoint,
    admissible_words,
    agreement_radius,
    enumerate_cycles,
    periodic_point,
    shift_point,
    splice,
)
from thermoflow.thermo import entropy
from thermoflow.topology import (
    close_periodic,
    expansivity_certificate,
    make_pseudo_orbit,
    shadow,
    symbolic_window,
)

BATTERY = flow_battery(seed=0, size=20)
HYPERBOLIC = [c for c in BATTERY if is_hyperbolic(c.flow, c.potential).hyperbolic]


def _cycle_sum(f, cycle: tuple[str, ...]) -> float:
    doubled = cycle * (f.window + 1)
    return sum(f.at(doubled[i : i + f.window]) for i in range(len(cycle)))


def _rate(rng: np.random.Generator, g: Sft) -> FiberPotential:
    a = random_potential(rng, g, 1, 0.5, 1.5)
    b = random_potential(rng, g, 1, -0.1, 0.1)
    return FiberPotential.of(a).plus(FiberPotential.of(b, degree=1))


def _random_flow(rng: np.random.Generator) -> SuspensionFlow:
    g = random_sft(rng)
    return SuspensionFlow(base=g, roof=random_roof(rng, g))


def _random_flow_point(rng: np.random.Generator, flow: SuspensionFlow):
    x = random_periodic_point(rng, flow.base, 4)
    return flow.point(x, float(rng.uniform(0.0, flow.roof_at(x))))


def _branch(rng: np.random.Generator, g: Sft, x: SymbolicPoint, cut: int) -> SymbolicPoint:
    """x below `cut`, then an admissible periodic continuation leaving x at `cut` if it can."""
    succ = g.successors[x.coord(cut - 1)]
    other = [v for v in succ if v != x.coord(cut)] or list(succ)
    v = other[int(rng.integers(len(other)))]
    nxt = g.successors[v]
    w = nxt[int(rng.integers(len(nxt)))]
    back = nx.shortest_path(g.digraph, w, v)
    y = periodic_point([v, *back[:-1]])
    return splice(x, shift_point(y, -cut), cut)


class TestBowenBattery:
    @pytest.mark.parametrize("case", BATTERY, ids=lambda c: c.name)
    def test_variational_identity(self, case):
        c = flow_pressure(case.flow, case.potential)
        assert bowen_residual(case.flow, case.potential, c) <= 1e-9
        mu = flow_equilibrium(case.flow, case.potential)
        value = flow_entropy(case.flow, mu) + flow_integral(case.flow, mu, case.potential)
        assert abs(value - c) <= 1e-9


class TestSynchronizationBattery:
    @pytest.mark.parametrize("case", HYPERBOLIC, ids=lambda c: c.name)
    def test_synchronized_flow_has_entropy_one(self, case):
        t = find_horizon(case.flow, case.potential).spec.t_horizon
        report = verify_theorem_b(case.flow, case.potential, t)
        assert abs(report.h_top_synchronized - 1.0) <= 1e-8
        assert report.max_cylinder_discrepancy <= 1e-6
        assert report.density_check_max_error <= 1e-8
        assert report.passed

    def test_battery_has_hyperbolic_cases(self):
        assert len(HYPERBOLIC) >= len(BATTERY) // 2


class TestPhaseTransitionRun:
    def test_curve_and_coexistence(self, capsys):
        config = RunConfig(
            command="phase-curve",
            model_path="builtin:phase-toy",
            potential_path="builtin:phase-toy-potential",
            steps=41,
        )
        assert run(config) == 0
        rows = capsys.readouterr().out.strip().splitlines()[1:]
        assert len(rows) == 41
        worst = 0.0
        for row in rows:
            q, p = (float(v) for v in row.split(","))
            worst = max(worst, abs(p - max(0.0, (1.0 - q) * math.log(2))))
        assert worst <= 1e-9
        config = config.model_copy(update={"command": "equilibrium", "q": 1.0})
        assert run(config) == 1
        assert "NonUniqueEquilibrium" in capsys.readouterr().err


class TestAbramovBattery:
    def test_random_markov_measures(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            flow = _random_flow(rng)
            nu = random_markov_measure(rng, flow.base)
            mu = lift_measure(flow, nu)
            assert abs(flow_entropy(flow, mu) * mu.roof_integral - entropy(nu)) <= 1e-10

    def test_constant_roof_scaling(self):
        rng = np.random.default_rng(12)
        for _ in range(10):
            g = random_sft(rng)
            h1 = flow_pressure(SuspensionFlow(base=g, roof=constant(g, 1.0)), FiberPotential.zero())
            c = float(rng.uniform(0.2, 5.0))
            hc = flow_pressure(SuspensionFlow(base=g, roof=constant(g, c)), FiberPotential.zero())
            assert abs(hc - h1 / c) <= 1e-10


class TestCycleBattery:
    def test_against_enumeration(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            g = random_sft(rng, max_states=7)
            f = random_potential(rng, g, 2, -1.0, 1.0)
            den = random_potential(rng, g, 2, 0.5, 2.0)
            cycles = [c.symbols for c in enumerate_cycles(g, len(g.states))]
            best_mean = max(_cycle_sum(f, c) / len(c) for c in cycles)
            best_ratio = max(_cycle_sum(f, c) / _cycle_sum(den, c) for c in cycles)
            assert abs(max_mean_cycle(g, f)[0] - best_mean) <= 1e-10
            assert abs(max_ratio_cycle(g, f, den)[0] - best_ratio) <= 1e-10

    def test_birkhoff_gap_shrinks(self):
        rng = np.random.default_rng(14)
        g = random_sft(rng, max_states=5)
        f = random_potential(rng, g, 2, -1.0, 1.0)
        top, _ = max_mean_cycle(g, f)
        spread = f.max_value - f.min_value
        for horizon in (10, 100, 1000):
            gap = max_birkhoff_average(g, f, horizon) - top
            assert abs(gap) <= len(g.states) * spread / horizon + 1e-12


class TestHyperbolicityBattery:
    @pytest.mark.parametrize("case", BATTERY, ids=lambda c: c.name)
    def test_equivalent_verdicts(self, case):
        report = is_hyperbolic(case.flow, case.potential)
        assert report.hyperbolic == report.entropy_positive
        assert report.hyperbolic == (report.gap > 1e-10)

        g, roof = case.flow.base, case.flow.roof
        eta = random_potential(np.random.default_rng(19), g, 1, -1.0, 1.0)
        cob = coboundary(g, eta)
        k = max(cob.window, roof.window)
        moved = from_function(g, k, lambda w: cob.at(w) / roof.at(w))
        other = is_hyperbolic(case.flow, case.potential.plus(FiberPotential.of(moved)))
        assert other.hyperbolic == report.hyperbolic
        assert abs(other.gap - report.gap) <= 1e-10


class TestTopologyBattery:
    @pytest.mark.parametrize("epsilon", [0.5, 0.2, 0.05])
    def test_shadowing(self, epsilon):
        rng = np.random.default_rng(15)
        for _ in range(100):
            flow = _random_flow(rng)
            delta = expansivity_certificate(flow, epsilon)
            spread = math.ceil(math.log(4.0 * flow.r_max / flow.r_min))
            cut = symbolic_window(flow, epsilon) + spread + 1
            p = _random_flow_point(rng, flow)
            entries = []
            for _ in range(3):
                duration = float(rng.uniform(1.0, 4.0))
                entries.append((p, duration))
                end = roof_crossings(flow, p, duration)[0]
                x = _branch(rng, flow.base, end.base_point, cut)
                nudge = float(rng.uniform(-delta / 4, delta / 4))
                fiber = end.fiber + nudge
                if not 0.0 <= fiber < flow.roof_at(x):
                    fiber = end.fiber - nudge
                p = flow.point(x, fiber)
            po = make_pseudo_orbit(flow, entries, delta, min(d for _, d in entries))
            cert = shadow(flow, po, epsilon)
            assert cert.max_distance <= epsilon
            assert all(abs(s - 1.0) < epsilon for s in cert.slopes)

    @pytest.mark.parametrize("epsilon", [0.5, 0.2])
    def test_closing(self, epsilon):
        rng = np.random.default_rng(16)
        departed = 0
        for _ in range(100):
            flow = _random_flow(rng)
            x0 = random_periodic_point(rng, flow.base, 3)
            length = len(x0.future_cycle.symbols)
            laps = int(rng.integers(1, 3))
            while laps * length < 3:
                laps += 1
            m = laps * length
            cut = m + symbolic_window(flow, epsilon) + 2 + int(rng.integers(0, 4))
            while len(flow.base.successors[x0.coord(cut - 1)]) < 2:
                cut += 1
            x = _branch(rng, flow.base, x0, cut)
            period = sum(flow.roof_at(shift_point(x, i)) for i in range(m))
            s = float(rng.uniform(0.0, flow.roof_at(x)))
            t = period + float(rng.uniform(-0.4, 0.4)) * epsilon
            result = close_periodic(flow, flow.point(x, s), t, epsilon)
            assert abs(result.period - period) <= 1e-9
            assert abs(result.period - t) <= epsilon
            assert result.max_distance <= epsilon
            back = flow_evaluate(flow, result.point, result.period)
            assert flow_distance(flow, back, result.point) <= 1e-9
            departed += agreement_radius(x, result.point.base_point) < math.inf
        assert departed == 100


class TestTimeChangeBattery:
    def test_round_trip(self):
        rng = np.random.default_rng(17)
        for _ in range(20):
            flow = _random_flow(rng)
            rate = _rate(rng, flow.base)
            back = inverse_time_change(time_changed_roof(flow, rate), rate, source=flow)
            for w in admissible_words(flow.base, back.roof.window):
                assert abs(back.roof.at(w) - flow.roof.at(w)) <= 1e-10

    def test_cocycle_and_inversion(self):
        rng = np.random.default_rng(18)
        flow = _random_flow(rng)
        rate = _rate(rng, flow.base)
        for _ in range(100):
            p = _random_flow_point(rng, flow)
            t1, t2 = (float(v) for v in rng.uniform(-5.0, 5.0, size=2))
            first = ell(flow, rate, p, t1)
            later = flow_evaluate(flow, p, first)
            assert abs(ell(flow, rate, p, t1 + t2) - (first + ell(flow, rate, later, t2))) <= 1e-10
            assert abs(kappa(flow, rate, p, first) - t1) <= 1e-10

