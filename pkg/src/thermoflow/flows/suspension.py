"""Suspension flows over SFTs: evaluation, Bowen's equation, Abramov formulas."""

from __future__ import annotations

import logging

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from scipy.optimize import brentq

from thermoflow.config import Tolerances, settings
from thermoflow.errors import NonpositiveRoof, NotIrreducible, WindowMismatch
from thermoflow.flows.base import FiberRate
from thermoflow.flows.fiber import FiberPotential
from thermoflow.potentials import (
    Potential,
    check_potential,
    constant,
    edge_weights,
    from_function,
    linear_combination,
    recode_window,
    weight_combination,
)
from thermoflow.shift import (
    Recoding,
    Sft,
    SymbolicPoint,
    check_point,
    higher_block,
    is_irreducible,
    shift_distance,
    shift_point,
)
from thermoflow.thermo import (
    MarkovMeasure,
    entropy,
    equilibrium_measure,
    integrate,
    presentation,
    weights_pressure,
)

log = logging.getLogger(__name__)


class SuspensionFlow(BaseModel):
    """Base shift with a positive locally constant roof."""

    model_config = {"frozen": True}

    base: Sft
    roof: Potential

    @model_validator(mode="after")
    def _check_roof(self) -> SuspensionFlow:
        check_potential(self.base, self.roof)
        if self.roof.min_value <= 0:
            raise NonpositiveRoof(f"roof reaches {self.roof.min_value:g}")
        return self

    @property
    def r_min(self) -> float:
        return self.roof.min_value

    @property
    def r_max(self) -> float:
        return self.roof.max_value

    def roof_at(self, x: SymbolicPoint) -> float:
        return self.roof(x)

    def point(self, x: SymbolicPoint, s: float = 0.0) -> FlowPoint:
        """Validated FlowPoint over this flow."""
        check_point(self.base, x)
        r = self.roof_at(x)
        if not 0.0 <= s < r:
            raise WindowMismatch(f"fiber {s:g} outside [0, {r:g})")
        return FlowPoint(base_point=x, fiber=s)


class FlowPoint(BaseModel):
    """Canonical (v, s) with 0 <= s < R(v)."""

    model_config = {"frozen": True}

    base_point: SymbolicPoint
    fiber: float


class FlowMeasure(BaseModel):
    """Flow-invariant measure represented by its base measure.

    With a recoding, base_measure lives on the recoding's block graph.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    base_measure: MarkovMeasure
    roof_integral: float
    recoding: Recoding | None = None

    @model_validator(mode="after")
    def _check(self) -> FlowMeasure:
        if self.roof_integral <= 0:
            raise NonpositiveRoof(f"mean roof {self.roof_integral:g}")
        return self


# ── Evaluation ───────────────────────────────────────────────────


def roof_crossings(flow: SuspensionFlow, p: FlowPoint, t: float) -> tuple[FlowPoint, int]:
    """theta^t(p) together with the signed number of roof crossings on the way."""
    x, s, n = p.base_point, p.fiber + t, 0
    if s >= 0:
        r = flow.roof_at(x)
        while s >= r:
            s -= r
            x = shift_point(x, 1)
            n += 1
            r = flow.roof_at(x)
    else:
        while s < 0:
            x = shift_point(x, -1)
            n -= 1
            s += flow.roof_at(x)
        if s >= flow.roof_at(x):
            s, x, n = 0.0, shift_point(x, 1), n + 1
    return FlowPoint(base_point=x, fiber=s), n


def flow_evaluate(flow: SuspensionFlow, p: FlowPoint, t: float) -> FlowPoint:
    """Canonical representative of theta^t(p)."""
    if t == 0:
        return p
    return roof_crossings(flow, p, t)[0]


def representatives(flow: SuspensionFlow, p: FlowPoint) -> list[tuple[SymbolicPoint, float]]:
    """(v, s) and its neighbours across the adjacent roof crossings."""
    x, s = p.base_point, p.fiber
    prev = shift_point(x, -1)
    return [
        (x, s),
        (shift_point(x, 1), s - flow.roof_at(x)),
        (prev, s + flow.roof_at(prev)),
    ]


def flow_distance(flow: SuspensionFlow, p: FlowPoint, q: FlowPoint) -> float:
    """d_shift + |fiber difference|, minimized over neighbouring representatives."""
    return min(
        shift_distance(x, y) + abs(s - u)
        for x, s in representatives(flow, p)
        for y, u in representatives(flow, q)
    )


# ── Delta and Bowen's equation ───────────────────────────────────


def delta(flow: SuspensionFlow, f: FiberPotential | FiberRate) -> Potential:
    """Delta f(v) = integral of f(v, s) over [0, R(v)]."""
    g, roof = flow.base, flow.roof
    if isinstance(f, FiberPotential):
        k = max(f.window, roof.window)

        def fiber_integral(w: tuple[str, ...]) -> float:
            r = roof.at(w)
            return float(
                sum(t.potential.at(w) * r ** (t.degree + 1) / (t.degree + 1) for t in f.terms)
            )

        return from_function(g, k, fiber_integral)
    k = max(f.window, roof.window)
    return from_function(g, k, lambda w: f.integral(w, 0.0, roof.at(w)))


class _BowenProblem:
    """c -> P(sigma, Delta f - c R) on a fixed window <= 2 presentation."""

    def __init__(self, flow: SuspensionFlow, df: Potential, tol: Tolerances) -> None:
        self.tol = tol
        self.graph, (d2, r2), self.recoding = presentation(flow.base, df, flow.roof)
        self.wd = edge_weights(self.graph, d2)
        self.wr = edge_weights(self.graph, r2)
        self.df = df

    def __call__(self, c: float) -> float:
        return weights_pressure(
            self.graph, weight_combination([(1.0, self.wd), (-c, self.wr)]), self.tol
        )

    def bracket(self, r_min: float) -> tuple[float, float]:
        h = weights_pressure(self.graph, np.where(np.isfinite(self.wr), 0.0, -np.inf), self.tol)
        span = (abs(h) + max(abs(self.df.min_value), abs(self.df.max_value))) / r_min + 1.0
        return -span, span


def bowen_root(flow: SuspensionFlow, df: Potential, tol: Tolerances | None = None) -> float:
    tol = tol or settings.tol
    if not is_irreducible(flow.base):
        raise NotIrreducible("Bowen's equation needs an irreducible base")
    problem = _BowenProblem(flow, df, tol)
    lo, hi = problem.bracket(flow.r_min)
    c = float(brentq(problem, lo, hi, xtol=tol.bowen, rtol=4 * np.finfo(float).eps))
    log.info("Bowen root %.12g in [%.3g, %.3g]", c, lo, hi)
    return c


def flow_pressure(
    flow: SuspensionFlow, f: FiberPotential | FiberRate, tol: Tolerances | None = None
) -> float:
    """The c solving P(sigma, Delta f - c R) = 0."""
    return bowen_root(flow, delta(flow, f), tol)


def _measure_on_presentation(
    flow: SuspensionFlow, phi: Potential, tol: Tolerances | None
) -> FlowMeasure:
    g, roof = flow.base, flow.roof
    rec = None
    if phi.window > 2:
        g, rec = higher_block(g, phi.window)
        phi, roof = recode_window(phi, rec), recode_window(roof, rec)
    nu = equilibrium_measure(g, phi, tol)
    return FlowMeasure(base_measure=nu, roof_integral=integrate(nu, roof), recoding=rec)


def flow_equilibrium(
    flow: SuspensionFlow, f: FiberPotential | FiberRate, tol: Tolerances | None = None
) -> FlowMeasure:
    """Equilibrium state of f, represented by the equilibrium of Delta f - P R."""
    df = delta(flow, f)
    c = bowen_root(flow, df, tol)
    phi = linear_combination(flow.base, [(1.0, df), (-c, flow.roof)])
    return _measure_on_presentation(flow, phi, tol)


def flow_mme(flow: SuspensionFlow, tol: Tolerances | None = None) -> tuple[float, FlowMeasure]:
    """(h_top of the flow, its measure of maximal entropy)."""
    zero = constant(flow.base, 0.0)
    h = bowen_root(flow, zero, tol)
    mu = _measure_on_presentation(flow, linear_combination(flow.base, [(-h, flow.roof)]), tol)
    return h, mu


# ── Measures ─────────────────────────────────────────────────────


def lift_measure(flow: SuspensionFlow, nu: MarkovMeasure) -> FlowMeasure:
    """mu(nu): the flow measure over a base measure on flow.base."""
    if nu.sft != flow.base:
        raise WindowMismatch("measure does not live on the flow's base graph")
    return FlowMeasure(base_measure=nu, roof_integral=integrate(nu, flow.roof))


def project_measure(flow: SuspensionFlow, mu: FlowMeasure) -> MarkovMeasure:
    return mu.base_measure


def flow_entropy(flow: SuspensionFlow, mu: FlowMeasure) -> float:
    """h_mu(flow) = h_nu(shift) / integral of R."""
    return entropy(mu.base_measure) / mu.roof_integral


def on_measure_graph(potential: Potential, mu: FlowMeasure) -> Potential:
    """Transport a base potential to the graph the measure lives on."""
    if mu.recoding is None or mu.recoding.n == 1:
        return potential
    if potential.window > mu.recoding.n:
        raise WindowMismatch(
            f"window {potential.window} exceeds the measure's block length {mu.recoding.n}"
        )
    return recode_window(potential, mu.recoding)


def flow_integral(
    flow: SuspensionFlow, mu: FlowMeasure, f: FiberPotential | FiberRate
) -> float:
    """integral of f d mu = integral of Delta f d nu / integral of R d nu."""
    return integrate(mu.base_measure, on_measure_graph(delta(flow, f), mu)) / mu.roof_integral


def recode_flow(flow: SuspensionFlow, n: int) -> tuple[SuspensionFlow, Recoding]:
    """The same flow over the n-block presentation."""
    block, rec = higher_block(flow.base, n)
    if n == 1:
        return flow, rec
    return SuspensionFlow(base=block, roof=recode_window(flow.roof, rec)), rec


def bowen_residual(
    flow: SuspensionFlow, f: FiberPotential, c: float, tol: Tolerances | None = None
) -> float:
    """|P(sigma, Delta f - c R)|."""
    return abs(_BowenProblem(flow, delta(flow, f), tol or settings.tol)(c))
