"""Sliding-block factor codes between suspension flows.

A code of window k maps x to pi(x)_i = map[x_i ... x_{i+k-1}]. Factors of flows are
time-preserving: (x, s) -> (pi(x), s), which needs the source roof to be a function
of the image.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from functools import cached_property

import networkx as nx
import numpy as np
from pydantic import BaseModel, Field, model_validator
from scipy.special import logsumexp

from thermoflow.config import Tolerances, settings
from thermoflow.errors import (
    CodeNotOnto,
    InadmissibleWord,
    NotFiniteToOne,
    RoofNotFiberConstant,
    UnknownState,
    WindowMismatch,
)
from thermoflow.flows.fiber import FiberPotential, FiberTerm
from thermoflow.flows.suspension import (
    FlowMeasure,
    FlowPoint,
    SuspensionFlow,
    flow_entropy,
    flow_equilibrium,
    flow_pressure,
)
from thermoflow.potentials import Potential, birkhoff_sum, from_function
from thermoflow.shift import (
    Recoding,
    Sft,
    SymbolicPoint,
    admissible_words,
    count_words,
    higher_block,
    periodic_point,
    point_from_coords,
)
from thermoflow.thermo import cylinder_mass

log = logging.getLogger(__name__)


class BlockCode(BaseModel):
    model_config = {"frozen": True}

    window: int = Field(ge=1)
    map: dict[tuple[str, ...], str]
    source: Sft
    target: Sft

    @model_validator(mode="after")
    def _check(self) -> BlockCode:
        check_code(self)
        return self

    def image_word(self, word: Sequence[str]) -> tuple[str, ...]:
        k, w = self.window, tuple(word)
        try:
            return tuple(self.map[w[i : i + k]] for i in range(len(w) - k + 1))
        except KeyError as e:
            raise InadmissibleWord(f"{e.args[0]} is not an admissible source window") from None

    def image_point(self, x: SymbolicPoint) -> SymbolicPoint:
        k = self.window
        return point_from_coords(
            lambda i: self.map[x.window(i, i + k)],
            x.past_start - k + 1,
            x.future_start,
            len(x.past_cycle.symbols),
            len(x.future_cycle.symbols),
        )

    @cached_property
    def labelled(self) -> tuple[Sft, dict[str, str]]:
        """k-block presentation of the source with each block state's image symbol."""
        block, rec = higher_block(self.source, self.window)
        return block, {name: self.map[w] for name, w in rec.blocks.items()}


def check_code(code: BlockCode) -> None:
    expected = set(admissible_words(code.source, code.window))
    if set(code.map) != expected:
        raise WindowMismatch(f"code table does not cover the admissible {code.window}-words")
    known = set(code.target.states)
    for w, a in code.map.items():
        if a not in known:
            raise UnknownState(f"{w} maps to undeclared target state {a!r}")
    k = code.window
    for w in admissible_words(code.source, k + 1):
        a, b = code.map[w[:k]], code.map[w[1:]]
        if not code.target.has_edge(a, b):
            raise InadmissibleWord(f"image of {w} uses the non-edge {a!r} -> {b!r}")


def identity_code(g: Sft) -> BlockCode:
    return BlockCode(window=1, map={(s,): s for s in g.states}, source=g, target=g)


def code_from_recoding(rec: Recoding, *, decode: bool = True) -> BlockCode:
    """The conjugacy between a shift and its n-block presentation.

    decode=True maps block states back to their first symbol; otherwise the source
    is encoded into blocks with a window-n code.
    """
    if decode:
        return BlockCode(
            window=1,
            map={(name,): w[0] for name, w in rec.blocks.items()},
            source=rec.sft,
            target=rec.source,
        )
    return BlockCode(
        window=rec.n,
        map={w: name for name, w in rec.blocks.items()},
        source=rec.source,
        target=rec.sft,
    )


# ── Flow factors ─────────────────────────────────────────────────


class Factor(BaseModel):
    """Target flow of a time-preserving code, with the point map."""

    model_config = {"frozen": True}

    code: BlockCode
    source: SuspensionFlow
    flow: SuspensionFlow

    def point(self, p: FlowPoint) -> FlowPoint:
        return FlowPoint(base_point=self.code.image_point(p.base_point), fiber=p.fiber)


def _check_onto(code: BlockCode, length: int) -> None:
    k = code.window
    image = {code.image_word(w) for w in admissible_words(code.source, length + k - 1)}
    for u in admissible_words(code.target, length):
        if u not in image:
            raise CodeNotOnto(f"target word {u} has no preimage")


def _pushed_roof(
    code: BlockCode, flow: SuspensionFlow, kt: int, tol: Tolerances
) -> Potential | None:
    """Target roof of window kt agreeing with the source roof, if one exists."""
    k, r = code.window, flow.roof.window
    length = max(r, kt + k - 1)
    table: dict[tuple[str, ...], float] = {}
    for w in admissible_words(code.source, length):
        u = code.image_word(w)[:kt]
        value = flow.roof.at(w)
        seen = table.setdefault(u, value)
        if abs(seen - value) > tol.segment * max(1.0, abs(value)):
            return None
    return Potential(window=kt, table=table)


def apply_code(code: BlockCode, flow: SuspensionFlow, tol: Tolerances | None = None) -> Factor:
    """Push the flow through the code; the roof must be constant on code fibers."""
    tol = tol or settings.tol
    if flow.base != code.source:
        raise WindowMismatch("code source is not the flow's base")
    k = code.window
    for kt in range(1, settings.max_block + 1):
        if count_words(code.source, max(flow.roof.window, kt + k - 1)) > settings.max_block_states:
            break
        roof = _pushed_roof(code, flow, kt, tol)
        if roof is None:
            continue
        _check_onto(code, max(kt, 2))
        log.debug("pushed roof has window %d", kt)
        return Factor(code=code, source=flow, flow=SuspensionFlow(base=code.target, roof=roof))
    raise RoofNotFiberConstant("source roof is not a function of the image sequence")


# ── Finite-to-one ────────────────────────────────────────────────


class FiniteToOneReport(BaseModel):
    model_config = {"frozen": True}

    finite_to_one: bool
    degree: int | None = None
    right_resolving: bool
    left_resolving: bool


def _label_pair_graph(code: BlockCode) -> tuple[nx.DiGraph, set[tuple[str, str]]]:
    """Pairs of block states with equal labels, moving along source edges together."""
    g, label = code.labelled
    pairs = nx.DiGraph()
    for u1, v1 in g.edge_list:
        for u2, v2 in g.edge_list:
            if label[u1] == label[u2] and label[v1] == label[v2]:
                pairs.add_edge((u1, u2), (v1, v2))
    return pairs, {(s, s) for s in g.states}


def has_diamond(code: BlockCode) -> bool:
    """Two distinct source paths with equal image, start and end."""
    pairs, diagonal = _label_pair_graph(code)
    leaving: set[tuple[str, str]] = set()
    for d in diagonal & set(pairs):
        leaving |= nx.descendants(pairs, d)
    for node in leaving - diagonal:
        if nx.descendants(pairs, node) & diagonal:
            return True
    return False


def _resolving(code: BlockCode, *, right: bool) -> bool:
    g, label = code.labelled
    for s in g.states:
        nbrs = g.successors[s] if right else [u for u, v in g.edge_list if v == s]
        labels = [label[v] for v in nbrs]
        if len(labels) != len(set(labels)):
            return False
    return True


def _min_compatible_states(code: BlockCode, depth: int) -> int:
    """min over image words of length depth and positions of the number of source states
    seen at that position along preimage paths."""
    g, label = code.labelled
    by_label: dict[str, set[str]] = {}
    for s in g.states:
        by_label.setdefault(label[s], set()).add(s)
    preds: dict[str, set[str]] = {s: set() for s in g.states}
    for u, v in g.edge_list:
        preds[v].add(u)
    best = len(g.states)
    for u in admissible_words(code.target, depth):
        fwd = [by_label.get(u[0], set())]
        for a in u[1:]:
            reach = {v for s in fwd[-1] for v in g.successors[s]}
            fwd.append(reach & by_label.get(a, set()))
        if not fwd[-1]:
            continue
        back = [fwd[-1]]
        for i in range(depth - 2, -1, -1):
            back.append({s for v in back[-1] for s in preds[v]} & fwd[i])
        best = min(best, min(len(b) for b in back))
        if best == 1:
            break
    return best


def check_finite_to_one(code: BlockCode, depth: int = 6) -> FiniteToOneReport:
    """Diamond-free test; the degree is the minimum number of source symbols a
    long image word forces at one coordinate."""
    right = _resolving(code, right=True)
    left = _resolving(code, right=False)
    if has_diamond(code):
        return FiniteToOneReport(finite_to_one=False, right_resolving=right, left_resolving=left)
    degree = _min_compatible_states(code, depth)
    log.debug("finite-to-one code of degree %d", degree)
    return FiniteToOneReport(
        finite_to_one=True, degree=degree, right_resolving=right, left_resolving=left
    )


def preimage_count(code: BlockCode, word: Sequence[str]) -> int:
    """Number of admissible source words of length |word| + k - 1 mapping to word."""
    g, label = code.labelled
    counts = {s: 1 for s in g.states if label[s] == word[0]}
    for a in word[1:]:
        nxt: dict[str, int] = {}
        for s, c in counts.items():
            for v in g.successors[s]:
                if label[v] == a:
                    nxt[v] = nxt.get(v, 0) + c
        counts = nxt
    return sum(counts.values())


def periodic_fiber_size(code: BlockCode, cycle: Sequence[str]) -> int:
    """Source points of period len(cycle) over the target periodic point (cycle)^inf."""
    g, label = code.labelled
    a = g.adjacency.astype(float)
    idx = g.state_index
    product = np.eye(len(g.states))
    for symbol in cycle:
        mask = np.zeros(len(g.states))
        for s in g.states:
            if label[s] == symbol:
                mask[idx[s]] = 1.0
        product = product @ np.diag(mask) @ a
    return int(round(np.trace(product)))


class PeriodicLift(BaseModel):
    """Equal-weight average over the source points of period len(cycle) above cycle^inf."""

    model_config = {"frozen": True}

    cycle: tuple[str, ...]
    points: tuple[tuple[str, ...], ...]

    @property
    def size(self) -> int:
        return len(self.points)


def periodic_lift(code: BlockCode, cycle: Sequence[str]) -> PeriodicLift:
    """Fiber-average lift of the periodic orbit measure on cycle^inf.

    Each source point is listed by its symbols at coordinates 0..len(cycle)-1.
    """
    g, label = code.labelled
    _, rec = higher_block(code.source, code.window)
    target = tuple(cycle)
    n = len(target)
    found: list[tuple[str, ...]] = []
    stack = [[s] for s in reversed(g.states) if label[s] == target[0]]
    while stack:
        path = stack.pop()
        if len(path) == n:
            if g.has_edge(path[-1], path[0]):
                found.append(tuple(rec.blocks[s][0] for s in path))
            continue
        for v in reversed(g.successors[path[-1]]):
            if label[v] == target[len(path)]:
                stack.append([*path, v])
    return PeriodicLift(cycle=target, points=tuple(found))


def lift_average(code: BlockCode, lift: PeriodicLift, f: Potential) -> float:
    """Integral of f o pi against the lifted measure."""
    if not lift.points:
        raise CodeNotOnto(f"no source point of period {len(lift.cycle)} over {lift.cycle}")
    pulled = pullback_potential(code, f)
    n = len(lift.cycle)
    sums = [birkhoff_sum(pulled, periodic_point(x), n) for x in lift.points]
    return float(np.mean(sums)) / n


def periodic_pressures(code: BlockCode, f: Potential, n: int) -> tuple[float, float]:
    """(1/n) log of the weighted periodic-point sums of period n on target and source.

    The source sum runs over the fiber lifts of every target periodic orbit, so for a
    finite-to-one code both estimates approach the same pressure.
    """
    t_terms: list[float] = []
    s_terms: list[float] = []
    pulled = pullback_potential(code, f)
    for u in admissible_words(code.target, n):
        if not code.target.has_edge(u[-1], u[0]):
            continue
        t_terms.append(birkhoff_sum(f, periodic_point(u), n))
        lift = periodic_lift(code, u)
        s_terms.extend(birkhoff_sum(pulled, periodic_point(x), n) for x in lift.points)
    return float(logsumexp(t_terms)) / n, float(logsumexp(s_terms)) / n


# ── Pullbacks and transport ──────────────────────────────────────


def pullback_potential(code: BlockCode, f: Potential) -> Potential:
    """f o pi, with window grown by the code window."""
    window = f.window + code.window - 1
    return from_function(code.source, window, lambda w: f.at(code.image_word(w)))


def pullback(code: BlockCode, f: FiberPotential) -> FiberPotential:
    return FiberPotential(
        terms=tuple(
            FiberTerm(degree=t.degree, potential=pullback_potential(code, t.potential))
            for t in f.terms
        )
    )


class FactorReport(BaseModel):
    model_config = {"frozen": True}

    degree: int
    pressure_source: float
    pressure_target: float
    max_cylinder_discrepancy: float
    entropy_source: float
    entropy_target: float
    pressure_ok: bool
    cylinders_ok: bool

    @property
    def pressure_gap(self) -> float:
        return abs(self.pressure_source - self.pressure_target)

    @property
    def passed(self) -> bool:
        return self.pressure_ok and self.cylinders_ok


def pushforward_discrepancy(
    code: BlockCode, mu_source: FlowMeasure, mu_target: FlowMeasure, max_len: int = 6
) -> float:
    """max over target cylinders of length <= max_len of |pi_* mu[u] - mu'[u]|."""
    k = code.window
    worst = 0.0
    for length in range(1, max_len + 1):
        pushed: dict[tuple[str, ...], float] = {}
        for w in admissible_words(code.source, length + k - 1):
            mass = cylinder_mass(mu_source.base_measure, w, mu_source.recoding)
            u = code.image_word(w)
            pushed[u] = pushed.get(u, 0.0) + mass
        for u in admissible_words(code.target, length):
            there = cylinder_mass(mu_target.base_measure, u, mu_target.recoding)
            worst = max(worst, abs(pushed.get(u, 0.0) - there))
    return worst


def pressure_preservation(
    code: BlockCode,
    flow: SuspensionFlow,
    f: FiberPotential,
    tol: Tolerances | None = None,
    max_len: int = 6,
) -> FactorReport:
    """Compare P(target, f) with P(source, f o pi) and the two equilibrium states."""
    tol = tol or settings.tol
    fin = check_finite_to_one(code)
    if not fin.finite_to_one:
        raise NotFiniteToOne("code has a diamond")
    factor = apply_code(code, flow, tol)
    pulled = pullback(code, f)

    p_target = flow_pressure(factor.flow, f, tol)
    p_source = flow_pressure(flow, pulled, tol)
    mu_target = flow_equilibrium(factor.flow, f, tol)
    mu_source = flow_equilibrium(flow, pulled, tol)
    worst = pushforward_discrepancy(code, mu_source, mu_target, max_len)

    report = FactorReport(
        degree=fin.degree or 0,
        pressure_source=p_source,
        pressure_target=p_target,
        max_cylinder_discrepancy=worst,
        entropy_source=flow_entropy(flow, mu_source),
        entropy_target=flow_entropy(factor.flow, mu_target),
        pressure_ok=abs(p_source - p_target) <= tol.factor_pressure,
        cylinders_ok=worst <= tol.cylinder,
    )
    if not report.passed:
        log.warning(
            "factor transport off: pressure gap %.3g, cylinders %.3g", report.pressure_gap, worst
        )
    return report
