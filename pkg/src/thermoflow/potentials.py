"""Locally constant potentials: Birkhoff sums, cycle optimization, cohomology."""

from __future__ import annotations

import logging
import math
from collections import deque
from collections.abc import Callable, Iterable, Mapping, Sequence

import numpy as np
from pydantic import BaseModel, Field, model_validator

from thermoflow.config import Tolerances, settings
from thermoflow.errors import (
    IncompatibleRecoding,
    NonpositiveDenominator,
    NotIrreducible,
    WindowMismatch,
)
from thermoflow.shift import (
    Recoding,
    Sft,
    SymbolicPoint,
    Word,
    admissible_words,
    breadth_first_cycle,
    enumerate_cycles,
    is_irreducible,
)

log = logging.getLogger(__name__)


class Potential(BaseModel):
    """f(x) = table[x_0 ... x_{k-1}] for a window of k symbols."""

    model_config = {"frozen": True}

    window: int = Field(ge=1)
    table: dict[tuple[str, ...], float]

    @model_validator(mode="after")
    def _check_table(self) -> Potential:
        for word, value in self.table.items():
            if len(word) != self.window:
                raise WindowMismatch(f"key {word} has length {len(word)}, window is {self.window}")
            if not math.isfinite(value):
                raise WindowMismatch(f"value at {word} is not finite")
        return self

    def at(self, word: Sequence[str]) -> float:
        key = tuple(word[: self.window])
        try:
            return self.table[key]
        except KeyError:
            raise WindowMismatch(f"no table entry for {key}") from None

    def __call__(self, x: SymbolicPoint) -> float:
        return self.at(x.window(0, self.window))

    @property
    def min_value(self) -> float:
        return min(self.table.values())

    @property
    def max_value(self) -> float:
        return max(self.table.values())


def check_potential(g: Sft, f: Potential) -> None:
    """The table must cover exactly the admissible words of g."""
    expected = set(admissible_words(g, f.window))
    keys = set(f.table)
    if keys != expected:
        missing = sorted(expected - keys)[:3]
        extra = sorted(keys - expected)[:3]
        raise WindowMismatch(f"window-{f.window} table mismatch: missing {missing}, extra {extra}")


# ── Constructors and arithmetic ──────────────────────────────────


def from_function(g: Sft, window: int, fn: Callable[[tuple[str, ...]], float]) -> Potential:
    return Potential(window=window, table={w: float(fn(w)) for w in admissible_words(g, window)})


def from_values(g: Sft, values: Mapping[str, float]) -> Potential:
    """Window-1 potential from per-state values."""
    return Potential(window=1, table={(s,): float(values[s]) for s in g.states})


def constant(g: Sft, c: float, window: int = 1) -> Potential:
    return from_function(g, window, lambda _w: c)


def lift_window(g: Sft, f: Potential, window: int) -> Potential:
    """Same function, tabulated over longer words."""
    if window < f.window:
        raise WindowMismatch(f"cannot shrink window {f.window} to {window}")
    if window == f.window:
        return f
    return from_function(g, window, f.at)


def linear_combination(
    g: Sft, terms: Iterable[tuple[float, Potential]], const: float = 0.0
) -> Potential:
    """const + sum of coefficient * potential, on the widest window present."""
    terms = list(terms)
    window = max((f.window for _, f in terms), default=1)
    return from_function(g, window, lambda w: const + sum(a * f.at(w) for a, f in terms))


def scale(g: Sft, f: Potential, q: float) -> Potential:
    return linear_combination(g, [(q, f)])


def coboundary(g: Sft, eta: Potential) -> Potential:
    """eta o sigma - eta, with window one larger than eta's."""
    return from_function(g, eta.window + 1, lambda w: eta.at(w[1:]) - eta.at(w[:-1]))


# ── Evaluation ───────────────────────────────────────────────────


def birkhoff_sum(f: Potential, x: SymbolicPoint, n: int) -> float:
    """sum_{i<n} f(sigma^i x)."""
    k = f.window
    return float(sum(f.at(x.window(i, i + k)) for i in range(n)))


def recode_window(f: Potential, target: Recoding) -> Potential:
    """Window-1 potential on the n-block presentation taking the same values."""
    if target.n < f.window:
        raise IncompatibleRecoding(
            f"{target.n}-block presentation cannot carry a window-{f.window} potential"
        )
    return Potential(
        window=1,
        table={(name,): f.at(block) for name, block in target.blocks.items()},
    )


def edge_weights(g: Sft, f: Potential) -> np.ndarray:
    """W[u, v] = weight of edge u -> v (f(u) for window 1, f(u, v) for window 2), -inf off edges."""
    if f.window > 2:
        raise WindowMismatch(f"window {f.window} potential needs recoding to window <= 2")
    idx = g.state_index
    w = np.full((len(g.states), len(g.states)), -np.inf)
    for u, v in g.edge_list:
        w[idx[u], idx[v]] = f.at((u, v))
    return w


def weight_combination(terms: Sequence[tuple[float, np.ndarray]]) -> np.ndarray:
    """sum of c * W over the shared edge set, -inf off edges."""
    on_edges = np.isfinite(terms[0][1])
    out = np.zeros_like(terms[0][1])
    for c, w in terms:
        out += c * np.where(on_edges, w, 0.0)
    out[~on_edges] = -np.inf
    return out


# ── Cycle optimization ───────────────────────────────────────────


def karp_max_mean(w: np.ndarray) -> float:
    """Maximum cycle mean of an edge-weighted digraph (Karp)."""
    n = w.shape[0]
    d = np.full((n + 1, n), -np.inf)
    d[0] = 0.0
    for k in range(1, n + 1):
        d[k] = np.max(d[k - 1][:, None] + w, axis=0)
    best = -np.inf
    for v in range(n):
        if d[n, v] == -np.inf:
            continue
        ks = [k for k in range(n) if d[k, v] > -np.inf]
        best = max(best, min((d[n, v] - d[k, v]) / (n - k) for k in ks))
    return float(best)


def cycle_weight(g: Sft, w: np.ndarray, cycle: Sequence[str]) -> float:
    idx = g.state_index
    c = [idx[s] for s in cycle]
    return float(sum(w[c[i], c[(i + 1) % len(c)]] for i in range(len(c))))


def critical_cycle(g: Sft, w: np.ndarray, lam: float, tol: Tolerances) -> tuple[str, ...]:
    """A cycle of mean lam: shortest, then lexicographically first, on critical edges."""
    n = len(g.states)
    finite = np.isfinite(w)
    reduced = np.where(finite, w - lam, -np.inf)
    pi = np.zeros(n)
    for _ in range(n):
        pi = np.maximum(pi, np.max(pi[:, None] + reduced, axis=0))
    slack = tol.cycle * (1.0 + float(np.max(np.abs(w[finite]))))
    idx = g.state_index

    def critical(u: str, v: str) -> bool:
        i, j = idx[u], idx[v]
        return bool(pi[i] + reduced[i, j] >= pi[j] - slack)

    found = breadth_first_cycle(g, critical)
    if found is None:
        # numerical fallback: exhaustive search among simple cycles
        log.debug("no critical cycle at slack %.3g; enumerating", slack)
        found = max(
            (c.symbols for c in enumerate_cycles(g, n)),
            key=lambda c: cycle_weight(g, w, c) / len(c),
        )
    return found


def _require_irreducible(g: Sft) -> None:
    if not is_irreducible(g):
        raise NotIrreducible("cycle optimization needs an irreducible graph")


def max_mean_cycle(g: Sft, f: Potential, tol: Tolerances | None = None) -> tuple[float, Word]:
    """Maximum over cycles of the average f-weight, with a witness cycle."""
    tol = tol or settings.tol
    _require_irreducible(g)
    w = edge_weights(g, f)
    lam = karp_max_mean(w)
    witness = critical_cycle(g, w, lam, tol)
    return cycle_weight(g, w, witness) / len(witness), Word(symbols=witness)


def max_ratio_cycle(
    g: Sft, num: Potential, den: Potential, tol: Tolerances | None = None
) -> tuple[float, Word]:
    """Maximum over cycles of num-sum / den-sum, by bisection on num - lam * den."""
    tol = tol or settings.tol
    if den.min_value <= 0:
        raise NonpositiveDenominator(f"denominator reaches {den.min_value:g}")
    _require_irreducible(g)
    wn, wd = edge_weights(g, num), edge_weights(g, den)
    on_edges = np.isfinite(wn)
    ratios = wn[on_edges] / wd[on_edges]
    lo, hi = float(ratios.min()), float(ratios.max())
    steps = 0
    while hi - lo > tol.ratio:
        mid = 0.5 * (lo + hi)
        if karp_max_mean(weight_combination([(1.0, wn), (-mid, wd)])) >= 0:
            lo = mid
        else:
            hi = mid
        steps += 1
    log.debug("cycle ratio bracket [%.12g, %.12g] after %d steps", lo, hi, steps)
    shifted = weight_combination([(1.0, wn), (-lo, wd)])
    witness = critical_cycle(g, shifted, karp_max_mean(shifted), tol)
    ratio = cycle_weight(g, wn, witness) / cycle_weight(g, wd, witness)
    return ratio, Word(symbols=witness)


def max_birkhoff_average(g: Sft, f: Potential, horizon: int) -> float:
    """max over admissible paths of T steps of the average f-weight."""
    w = edge_weights(g, f)
    d = np.zeros(len(g.states))
    for _ in range(horizon):
        d = np.max(d[:, None] + w, axis=0)
    return float(d.max()) / horizon


def is_cohomologous_to_constant(
    g: Sft, f: Potential, tol: Tolerances | None = None
) -> float | None:
    """The constant c if every cycle has f-average c, else None."""
    tol = tol or settings.tol
    _require_irreducible(g)
    w = edge_weights(g, f)
    idx = g.state_index
    _, cycle = max_mean_cycle(g, f, tol)
    c = cycle_weight(g, w, cycle.symbols) / len(cycle)

    # transfer function along a spanning tree; every edge must then be consistent
    root = g.states[0]
    eta = {root: 0.0}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for v in g.successors[u]:
            if v not in eta:
                eta[v] = eta[u] + w[idx[u], idx[v]] - c
                queue.append(v)
    scale_ = 1.0 + float(np.max(np.abs(w[np.isfinite(w)])))
    for u, v in g.edge_list:
        if abs(eta[u] + w[idx[u], idx[v]] - c - eta[v]) > tol.cohomology * scale_:
            return None
    return c
