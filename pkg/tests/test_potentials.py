"""Tests for locally constant potentials and cycle optimization."""

import itertools

import numpy as np
import pytest

from thermoflow.battery import full_shift, golden_mean, random_potential, random_sft
from thermoflow.errors import NonpositiveDenominator, WindowMismatch
from thermoflow.potentials import (
    Potential,
    birkhoff_sum,
    check_potential,
    coboundary,
    constant,
    edge_weights,
    from_function,
    from_values,
    is_cohomologous_to_constant,
    karp_max_mean,
    lift_window,
    linear_combination,
    max_birkhoff_average,
    max_mean_cycle,
    max_ratio_cycle,
    weight_combination,
)
from thermoflow.shift import enumerate_cycles, fixed_point, periodic_point


def _cycle_sum(f: Potential, cycle: tuple[str, ...]) -> float:
    k = f.window
    doubled = cycle * (k + 1)
    return sum(f.at(doubled[i : i + k]) for i in range(len(cycle)))


class TestPotential:
    def test_lookup(self):
        f = from_values(golden_mean(), {"0": 1.5, "1": -2.0})
        assert f.at(("1", "0")) == -2.0
        assert f(periodic_point(("0", "1"))) == 1.5
        assert f.min_value == -2.0

    def test_point_outside_table(self):
        f = from_values(golden_mean(), {"0": 1.5, "1": -2.0})
        with pytest.raises(WindowMismatch, match="no table entry"):
            f(fixed_point("2"))

    def test_key_length_must_match_window(self):
        with pytest.raises(WindowMismatch):
            Potential(window=2, table={("0",): 1.0})

    def test_table_must_cover_words(self):
        f = Potential(window=2, table={("0", "0"): 1.0})
        with pytest.raises(WindowMismatch, match="missing"):
            check_potential(golden_mean(), f)

    def test_lift_keeps_values(self):
        g = golden_mean()
        f = from_values(g, {"0": 1.0, "1": 3.0})
        lifted = lift_window(g, f, 3)
        assert lifted.window == 3
        assert lifted.at(("1", "0", "0")) == 3.0

    def test_linear_combination(self):
        g = golden_mean()
        f = from_values(g, {"0": 1.0, "1": 3.0})
        h = linear_combination(g, [(2.0, f)], const=-1.0)
        assert h.at(("1",)) == 5.0


class TestBirkhoff:
    def test_sum_along_periodic_point(self):
        g = golden_mean()
        f = from_values(g, {"0": 1.0, "1": 3.0})
        assert birkhoff_sum(f, periodic_point(("0", "1")), 4) == 8.0

    def test_coboundary_sums_vanish_on_cycles(self):
        g = full_shift(2)
        eta = from_values(g, {"0": 0.3, "1": -1.1})
        cob = coboundary(g, eta)
        assert cob.window == 2
        for cycle in enumerate_cycles(g, 4):
            assert _cycle_sum(cob, cycle.symbols) == pytest.approx(0.0, abs=1e-12)


class TestCycleOptimization:
    def test_golden_max_mean(self):
        g = golden_mean()
        f = from_values(g, {"0": 0.0, "1": 2.0})
        value, witness = max_mean_cycle(g, f)
        assert value == pytest.approx(1.0)
        assert witness.symbols == ("0", "1")

    def test_karp_on_matrix(self):
        w = np.array([[1.0, 4.0], [0.0, -np.inf]])
        assert karp_max_mean(w) == pytest.approx(2.0)

    def test_ratio_on_golden_roof(self):
        g = golden_mean()
        num = constant(g, 1.0)
        den = from_values(g, {"0": 1.0, "1": 2.0})
        ratio, witness = max_ratio_cycle(g, num, den)
        assert ratio == pytest.approx(1.0)
        assert witness.symbols == ("0",)

    @pytest.mark.filterwarnings("error")
    def test_weight_combination_skips_non_edges(self):
        g = golden_mean()
        w = edge_weights(g, constant(g, 1.0))
        out = weight_combination([(1.0, w), (-2.0, w)])
        assert np.array_equal(np.isfinite(out), np.isfinite(w))
        assert out[np.isfinite(out)].tolist() == [-1.0, -1.0, -1.0]

    @pytest.mark.filterwarnings("error")
    def test_ratio_search_on_sparse_graph_is_warning_free(self):
        g = golden_mean()
        ratio, _ = max_ratio_cycle(g, from_values(g, {"0": 2.0, "1": 1.0}), constant(g, 1.0))
        assert ratio == pytest.approx(2.0)

    def test_ratio_needs_positive_denominator(self):
        g = golden_mean()
        with pytest.raises(NonpositiveDenominator):
            max_ratio_cycle(g, constant(g, 1.0), from_values(g, {"0": 1.0, "1": 0.0}))

    def test_birkhoff_average_converges(self):
        g = golden_mean()
        f = from_values(g, {"0": 0.0, "1": 2.0})
        top, _ = max_mean_cycle(g, f)
        for horizon in (10, 100, 1000):
            gap = max_birkhoff_average(g, f, horizon) - top
            assert 0.0 <= gap <= 2.0 / horizon + 1e-12

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        g = random_sft(rng)
        f = random_potential(rng, g, 2, -1.0, 1.0)
        den = random_potential(rng, g, 2, 0.5, 2.0)
        cycles = [c.symbols for c in enumerate_cycles(g, len(g.states))]
        best_mean = max(_cycle_sum(f, c) / len(c) for c in cycles)
        best_ratio = max(_cycle_sum(f, c) / _cycle_sum(den, c) for c in cycles)
        assert max_mean_cycle(g, f)[0] == pytest.approx(best_mean, abs=1e-10)
        assert max_ratio_cycle(g, f, den)[0] == pytest.approx(best_ratio, abs=1e-9)


class TestCohomology:
    def test_constant_plus_coboundary(self):
        g = golden_mean()
        eta = from_values(g, {"0": 0.25, "1": -0.5})
        f = linear_combination(g, [(1.0, coboundary(g, eta))], const=2.0)
        assert is_cohomologous_to_constant(g, f) == pytest.approx(2.0, abs=1e-10)

    def test_golden_roof_is_not_constant(self):
        g = golden_mean()
        assert is_cohomologous_to_constant(g, from_values(g, {"0": 1.0, "1": 2.0})) is None

    def test_window_two_constant(self):
        g = full_shift(2)
        tilt = {("0", "1"): 0.5, ("1", "0"): -0.5}
        f = from_function(g, 2, lambda w: 1.0 + tilt.get(w, 0.0))
        assert is_cohomologous_to_constant(g, f) == pytest.approx(1.0, abs=1e-10)

    def test_brute_force_agreement(self):
        g = full_shift(2)
        for values in itertools.product((1.0, 2.0), repeat=2):
            f = from_values(g, dict(zip(g.states, values)))
            expected = values[0] if values[0] == values[1] else None
            assert is_cohomologous_to_constant(g, f) == expected
