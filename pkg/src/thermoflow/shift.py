"""Finite subshifts of finite type: graphs, words, points, recoding, cycles."""

from __future__ import annotations

import logging
import math
from collections import deque
from collections.abc import Callable, Sequence
from functools import cache, cached_property

import networkx as nx
import numpy as np
from pydantic import BaseModel, model_validator

from thermoflow.errors import (
    DuplicateState,
    InadmissibleWord,
    NotIrreducible,
    StrandedState,
    UnknownState,
    WindowMismatch,
)

log = logging.getLogger(__name__)

# Separator inside higher-block state names, e.g. "0|1"
BLOCK_SEP = "|"


class Sft(BaseModel):
    """Two-sided vertex shift on a finite directed graph."""

    model_config = {"frozen": True}

    states: tuple[str, ...]
    edges: frozenset[tuple[str, str]]

    @model_validator(mode="after")
    def _check_graph(self) -> Sft:
        validate_sft(self)
        return self

    # Cached arrays live in __dict__, so compare the defining fields only
    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Sft):
            return NotImplemented
        return self.states == other.states and self.edges == other.edges

    def __hash__(self) -> int:
        return hash((self.states, self.edges))

    @cached_property
    def state_index(self) -> dict[str, int]:
        return {s: i for i, s in enumerate(self.states)}

    @cached_property
    def edge_list(self) -> list[tuple[str, str]]:
        idx = self.state_index
        return sorted(self.edges, key=lambda e: (idx[e[0]], idx[e[1]]))

    @cached_property
    def successors(self) -> dict[str, tuple[str, ...]]:
        out: dict[str, list[str]] = {s: [] for s in self.states}
        for u, v in self.edge_list:
            out[u].append(v)
        return {s: tuple(vs) for s, vs in out.items()}

    @cached_property
    def adjacency(self) -> np.ndarray:
        a = np.zeros((len(self.states), len(self.states)), dtype=np.int64)
        idx = self.state_index
        for u, v in self.edges:
            a[idx[u], idx[v]] = 1
        return a

    @cached_property
    def digraph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(self.states)
        g.add_edges_from(self.edge_list)
        return g

    @cached_property
    def components(self) -> list[list[int]]:
        """Strongly connected components carrying at least one cycle, as index lists."""
        idx = self.state_index
        comps = []
        for comp in nx.strongly_connected_components(self.digraph):
            members = sorted(idx[s] for s in comp)
            if len(members) > 1 or (self.states[members[0]],) * 2 in self.edges:
                comps.append(members)
        return sorted(comps)

    def has_edge(self, u: str, v: str) -> bool:
        return (u, v) in self.edges


class Word(BaseModel):
    """Finite path in an Sft."""

    model_config = {"frozen": True}

    symbols: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.symbols)


class SymbolicPoint(BaseModel):
    """Eventually periodic bi-infinite path.

    Layout: ... past_cycle past_cycle core future_cycle future_cycle ...
    with coordinate 0 at position `origin_index` of core (any integer; the origin may
    sit inside either periodic tail).
    """

    model_config = {"frozen": True}

    past_cycle: Word
    core: Word
    future_cycle: Word
    origin_index: int = 0

    @model_validator(mode="after")
    def _check_cycles(self) -> SymbolicPoint:
        if not self.past_cycle.symbols or not self.future_cycle.symbols:
            raise InadmissibleWord("periodic tails must be nonempty")
        return self

    @property
    def past_start(self) -> int:
        """Coordinates below this lie in the past periodic tail."""
        return -self.origin_index

    @property
    def future_start(self) -> int:
        """Coordinates at or above this lie in the future periodic tail."""
        return len(self.core.symbols) - self.origin_index

    def coord(self, i: int) -> str:
        j = i + self.origin_index
        core = self.core.symbols
        if 0 <= j < len(core):
            return core[j]
        if j >= len(core):
            fc = self.future_cycle.symbols
            return fc[(j - len(core)) % len(fc)]
        pc = self.past_cycle.symbols
        return pc[j % len(pc)]

    def window(self, lo: int, hi: int) -> tuple[str, ...]:
        return tuple(self.coord(i) for i in range(lo, hi))


# ── Validation ───────────────────────────────────────────────────


def validate_sft(g: Sft) -> None:
    """Raise on duplicate, unknown or stranded states."""
    seen: set[str] = set()
    for s in g.states:
        if s in seen:
            raise DuplicateState(s)
        seen.add(s)
    outgoing: set[str] = set()
    incoming: set[str] = set()
    for u, v in g.edges:
        for s in (u, v):
            if s not in seen:
                raise UnknownState(f"edge ({u!r}, {v!r}) uses undeclared state {s!r}")
        outgoing.add(u)
        incoming.add(v)
    for s in g.states:
        if s not in outgoing:
            raise StrandedState(s, "outgoing")
        if s not in incoming:
            raise StrandedState(s, "incoming")


def check_word(g: Sft, word: Sequence[str], *, cyclic: bool = False) -> None:
    symbols = list(word)
    for s in symbols:
        if s not in g.state_index:
            raise UnknownState(f"symbol {s!r} is not a state")
    pairs = list(zip(symbols, symbols[1:]))
    if cyclic and symbols:
        pairs.append((symbols[-1], symbols[0]))
    for u, v in pairs:
        if not g.has_edge(u, v):
            raise InadmissibleWord(f"{u!r} -> {v!r} is not an edge")


def check_point(g: Sft, x: SymbolicPoint) -> None:
    check_word(g, x.past_cycle.symbols, cyclic=True)
    check_word(g, x.future_cycle.symbols, cyclic=True)
    check_word(
        g,
        (x.past_cycle.symbols[-1], *x.core.symbols, x.future_cycle.symbols[0]),
    )


# ── Graph properties ─────────────────────────────────────────────


def is_irreducible(g: Sft) -> bool:
    return nx.is_strongly_connected(g.digraph)


def is_aperiodic(g: Sft) -> bool:
    if not is_irreducible(g):
        raise NotIrreducible("aperiodicity is only defined here for irreducible graphs")
    return nx.is_aperiodic(g.digraph)


@cache
def admissible_words(g: Sft, k: int) -> tuple[tuple[str, ...], ...]:
    """All admissible k-words, ordered lexicographically by state index."""
    words: list[tuple[str, ...]] = [(s,) for s in g.states]
    for _ in range(k - 1):
        words = [w + (v,) for w in words for v in g.successors[w[-1]]]
    return tuple(words)


def count_words(g: Sft, k: int) -> int:
    if k <= 1:
        return len(g.states)
    return int(np.linalg.matrix_power(g.adjacency, k - 1).sum())


def enumerate_cycles(g: Sft, max_len: int) -> list[Word]:
    """Simple cycles of length <= max_len, shortest first, then lexicographic."""
    idx = g.state_index
    found = []
    for cyc in nx.simple_cycles(g.digraph, length_bound=max_len):
        start = min(range(len(cyc)), key=lambda i: idx[cyc[i]])
        rotated = tuple(cyc[start:] + cyc[:start])
        found.append(rotated)
    found.sort(key=lambda c: (len(c), [idx[s] for s in c]))
    return [Word(symbols=c) for c in found]


# ── Points ───────────────────────────────────────────────────────


def point_from_coords(
    coords: Callable[[int], str],
    lo: int,
    hi: int,
    past_period: int,
    future_period: int,
) -> SymbolicPoint:
    """Build a point from a coordinate function periodic below lo and from hi on."""
    hi = max(hi, lo)
    return SymbolicPoint(
        past_cycle=Word(symbols=tuple(coords(lo - past_period + m) for m in range(past_period))),
        core=Word(symbols=tuple(coords(i) for i in range(lo, hi))),
        future_cycle=Word(symbols=tuple(coords(hi + m) for m in range(future_period))),
        origin_index=-lo,
    )


def periodic_point(cycle: Word | Sequence[str], phase: int = 0) -> SymbolicPoint:
    """The periodic point (cycle)^inf with coordinate 0 at cycle[phase]."""
    w = cycle if isinstance(cycle, Word) else Word(symbols=tuple(cycle))
    return SymbolicPoint(
        past_cycle=w,
        core=Word(symbols=()),
        future_cycle=w,
        origin_index=phase,
    )


def fixed_point(state: str) -> SymbolicPoint:
    return periodic_point((state,))


def shift_point(x: SymbolicPoint, n: int) -> SymbolicPoint:
    """sigma^n(x): coordinate i of the result is coordinate i+n of x."""
    if n == 0:
        return x
    return x.model_copy(update={"origin_index": x.origin_index + n})


def splice(left: SymbolicPoint, right: SymbolicPoint, cut: int) -> SymbolicPoint:
    """Coordinates below `cut` from left, the rest from right."""
    return point_from_coords(
        lambda i: left.coord(i) if i < cut else right.coord(i),
        min(cut, left.past_start),
        max(cut, right.future_start),
        len(left.past_cycle.symbols),
        len(right.future_cycle.symbols),
    )


def agreement_radius(x: SymbolicPoint, y: SymbolicPoint) -> float:
    """min{|n| : x_n != y_n}, or inf when the points coincide."""
    periods = [
        len(p.symbols) for p in (x.past_cycle, x.future_cycle, y.past_cycle, y.future_cycle)
    ]
    edge = max(abs(x.past_start), abs(y.past_start), abs(x.future_start), abs(y.future_start))
    bound = edge + math.lcm(*periods) + 1
    for n in range(bound + 1):
        if x.coord(n) != y.coord(n) or x.coord(-n) != y.coord(-n):
            return float(n)
    return math.inf


def shift_distance(x: SymbolicPoint, y: SymbolicPoint) -> float:
    """d(x, y) = exp(-min{|n| : x_n != y_n})."""
    return math.exp(-agreement_radius(x, y))


# ── Higher-block recoding ────────────────────────────────────────


class Recoding(BaseModel):
    """n-block presentation of `source`; block state names map to their n-words."""

    model_config = {"frozen": True}

    source: Sft
    sft: Sft
    n: int
    blocks: dict[str, tuple[str, ...]]

    @cached_property
    def state_of(self) -> dict[tuple[str, ...], str]:
        return {w: name for name, w in self.blocks.items()}

    def encode_word(self, word: Sequence[str]) -> tuple[str, ...]:
        """Block path of an admissible word of length >= n."""
        w = tuple(word)
        if len(w) < self.n:
            raise InadmissibleWord(f"word of length {len(w)} is shorter than block length {self.n}")
        try:
            return tuple(self.state_of[w[i : i + self.n]] for i in range(len(w) - self.n + 1))
        except KeyError as e:
            raise InadmissibleWord(f"{e.args[0]} is not an admissible block") from None

    def decode_word(self, blocks: Sequence[str]) -> tuple[str, ...]:
        return tuple(self.blocks[b][0] for b in blocks)

    def encode_point(self, x: SymbolicPoint) -> SymbolicPoint:
        n = self.n
        return point_from_coords(
            lambda i: self.state_of[x.window(i, i + n)],
            x.past_start - n + 1,
            x.future_start,
            len(x.past_cycle.symbols),
            len(x.future_cycle.symbols),
        )

    def decode_point(self, y: SymbolicPoint) -> SymbolicPoint:
        return point_from_coords(
            lambda i: self.blocks[y.coord(i)][0],
            y.past_start,
            y.future_start,
            len(y.past_cycle.symbols),
            len(y.future_cycle.symbols),
        )


@cache
def higher_block(g: Sft, n: int) -> tuple[Sft, Recoding]:
    """n-block presentation: states are admissible n-words, edges are overlaps."""
    if n < 1:
        raise WindowMismatch(f"block length {n} is not positive")
    if n == 1:
        return g, Recoding(source=g, sft=g, n=1, blocks={s: (s,) for s in g.states})
    words = admissible_words(g, n)
    names = {w: BLOCK_SEP.join(w) for w in words}
    by_prefix: dict[tuple[str, ...], list[tuple[str, ...]]] = {}
    for w in words:
        by_prefix.setdefault(w[:-1], []).append(w)
    edges = frozenset(
        (names[w], names[v]) for w in words for v in by_prefix.get(w[1:], [])
    )
    block = Sft(states=tuple(names[w] for w in words), edges=edges)
    log.debug("%d-block presentation: %d states, %d edges", n, len(words), len(edges))
    return block, Recoding(source=g, sft=block, n=n, blocks={names[w]: w for w in words})


def breadth_first_cycle(
    g: Sft, allowed: Callable[[str, str], bool]
) -> tuple[str, ...] | None:
    """Shortest, then lexicographically first, cycle using only allowed edges."""
    idx = g.state_index
    best: tuple[str, ...] | None = None
    for s in g.states:
        floor = idx[s]
        parent: dict[str, str | None] = {s: None}
        queue = deque([s])
        closing = None
        while queue and closing is None:
            u = queue.popleft()
            for v in g.successors[u]:
                if not allowed(u, v) or idx[v] < floor:
                    continue
                if v == s:
                    closing = u
                    break
                if v not in parent:
                    parent[v] = u
                    queue.append(v)
        if closing is None:
            continue
        path = [closing]
        while parent[path[-1]] is not None:
            path.append(parent[path[-1]])
        cyc = tuple(reversed(path))
        key = (len(cyc), [idx[c] for c in cyc])
        if best is None or key < (len(best), [idx[c] for c in best]):
            best = cyc
    return best
