"""Built-in models and seeded random batteries of small flows."""

from __future__ import annotations

import logging
import math

import networkx as nx
import numpy as np
from pydantic import BaseModel

from thermoflow.factors import BlockCode
from thermoflow.flows.fiber import FiberPotential, FiberTerm
from thermoflow.flows.suspension import SuspensionFlow
from thermoflow.potentials import Potential, constant, from_function, from_values
from thermoflow.shift import Sft, SymbolicPoint, is_aperiodic, is_irreducible, periodic_point
from thermoflow.thermo import MarkovMeasure, pressure, stationary_measure

log = logging.getLogger(__name__)

Model = Sft | SuspensionFlow | Potential | FiberPotential | BlockCode


def full_shift(n: int = 2) -> Sft:
    states = tuple(str(i) for i in range(n))
    return Sft(states=states, edges=frozenset((u, v) for u in states for v in states))


def golden_mean() -> Sft:
    return Sft(states=("0", "1"), edges=frozenset({("0", "0"), ("0", "1"), ("1", "0")}))


def unit_roof(g: Sft) -> SuspensionFlow:
    return SuspensionFlow(base=g, roof=constant(g, 1.0))


def golden_roof_12() -> SuspensionFlow:
    """Golden mean shift with R(0) = 1, R(1) = 2."""
    g = golden_mean()
    return SuspensionFlow(base=g, roof=from_values(g, {"0": 1.0, "1": 2.0}))


def phase_toy() -> Sft:
    """A neutral loop `a` next to a full shift on b0, b1 (disjoint components)."""
    bs = ("b0", "b1")
    edges = {("a", "a")} | {(u, v) for u in bs for v in bs}
    return Sft(states=("a", *bs), edges=frozenset(edges))


def phase_toy_potential() -> Potential:
    """0 on the neutral loop, -log 2 on the full shift: P(q f) = max(0, (1 - q) log 2)."""
    return from_values(phase_toy(), {"a": 0.0, "b0": -math.log(2), "b1": -math.log(2)})


def xor_code() -> BlockCode:
    """x_i + x_{i+1} mod 2 on the full 2-shift; every image has two preimages."""
    g = full_shift(2)
    table = {(u, v): str((int(u) + int(v)) % 2) for u, v in g.edge_list}
    return BlockCode(window=2, map=table, source=g, target=g)


def collapse_code() -> BlockCode:
    """Full 2-shift onto a single loop; uncountable fibers."""
    g = full_shift(2)
    loop = Sft(states=("a",), edges=frozenset({("a", "a")}))
    return BlockCode(window=1, map={(s,): "a" for s in g.states}, source=g, target=loop)


BUILTINS = {
    "golden-mean": lambda: unit_roof(golden_mean()),
    "full-2-shift": lambda: unit_roof(full_shift(2)),
    "golden-roof-12": golden_roof_12,
    "phase-toy": lambda: unit_roof(phase_toy()),
    "phase-toy-potential": phase_toy_potential,
    "xor": xor_code,
    "collapse": collapse_code,
}


def builtin_model(name: str) -> Model:
    try:
        return BUILTINS[name]()
    except KeyError:
        raise KeyError(f"unknown built-in model {name!r}; known: {sorted(BUILTINS)}") from None


# ── Random models ────────────────────────────────────────────────


def random_sft(rng: np.random.Generator, max_states: int = 4) -> Sft:
    """Irreducible aperiodic graph with positive entropy and at most max_states states."""
    while True:
        n = int(rng.integers(2, max_states + 1))
        states = tuple(f"s{i}" for i in range(n))
        adj = rng.random((n, n)) < 0.55
        digraph = nx.DiGraph()
        digraph.add_nodes_from(range(n))
        digraph.add_edges_from(zip(*np.nonzero(adj)))
        if not nx.is_strongly_connected(digraph):
            continue
        g = Sft(
            states=states,
            edges=frozenset((states[i], states[j]) for i, j in digraph.edges),
        )
        if not (is_irreducible(g) and is_aperiodic(g)):
            continue
        if pressure(g, constant(g, 0.0)) > 1e-3:
            return g


def random_potential(
    rng: np.random.Generator, g: Sft, window: int, lo: float, hi: float
) -> Potential:
    return from_function(g, window, lambda _w: float(rng.uniform(lo, hi)))


def random_roof(rng: np.random.Generator, g: Sft, hi: float = 2.0) -> Potential:
    return random_potential(rng, g, int(rng.integers(1, 3)), 1.0, hi)


def random_fiber_potential(rng: np.random.Generator, g: Sft) -> FiberPotential:
    """A degree-0 term of window <= 2 plus a small degree-1 term."""
    return FiberPotential(
        terms=(
            FiberTerm(
                degree=0, potential=random_potential(rng, g, int(rng.integers(1, 3)), -1.0, 1.0)
            ),
            FiberTerm(degree=1, potential=random_potential(rng, g, 1, -0.5, 0.5)),
        )
    )


def random_markov_measure(rng: np.random.Generator, g: Sft) -> MarkovMeasure:
    weights = g.adjacency * rng.uniform(0.1, 1.0, size=g.adjacency.shape)
    return stationary_measure(g, weights / weights.sum(axis=1, keepdims=True))


def random_periodic_point(rng: np.random.Generator, g: Sft, length: int) -> SymbolicPoint:
    """Periodic point of a random walk of the given length closed by a shortest return."""
    start = g.states[int(rng.integers(len(g.states)))]
    walk = [start]
    for _ in range(length - 1):
        nxt = g.successors[walk[-1]]
        walk.append(nxt[int(rng.integers(len(nxt)))])
    back = min(
        (nx.shortest_path(g.digraph, v, start) for v in g.successors[walk[-1]]),
        key=len,
    )
    return periodic_point(walk + back[:-1])


class BatteryCase(BaseModel):
    model_config = {"frozen": True}

    name: str
    flow: SuspensionFlow
    potential: FiberPotential


def flow_battery(seed: int = 0, size: int = 20, roof_max: float = 2.0) -> list[BatteryCase]:
    """Random (graph, roof, fiber potential) triples with <= 4 states and windows <= 2."""
    rng = np.random.default_rng(seed)
    cases = []
    for i in range(size):
        g = random_sft(rng)
        flow = SuspensionFlow(base=g, roof=random_roof(rng, g, roof_max))
        f = random_fiber_potential(rng, g)
        cases.append(BatteryCase(name=f"case-{seed}-{i}", flow=flow, potential=f))
    log.debug("built battery of %d cases from seed %d", size, seed)
    return cases
