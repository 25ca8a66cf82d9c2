"""Time-changes of suspension flows and the synchronizing time-change.

A rate r > 0 on the suspension space reparametrizes the flow: the new time tau
spent along an orbit segment is the integral of r over it. Rates are either
FiberPotentials (converted to one polynomial piece per fiber) or any FiberRate.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial import polynomial as poly
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.integrate import quad
from scipy.optimize import brentq

from thermoflow.config import Tolerances, settings
from thermoflow.errors import (
    HorizonTooShort,
    NonpositiveRate,
    NotHyperbolicAtHorizon,
    NotIrreducible,
    WindowExplosion,
)
from thermoflow.flows.base import FiberRate
from thermoflow.flows.fiber import FiberPotential, Piece, PiecewiseFiber, ReciprocalRate, poly_range
from thermoflow.flows.suspension import (
    FlowMeasure,
    FlowPoint,
    SuspensionFlow,
    bowen_root,
    delta,
    flow_entropy,
    flow_equilibrium,
    flow_evaluate,
    flow_integral,
    flow_mme,
    flow_pressure,
    on_measure_graph,
    recode_flow,
)
from thermoflow.potentials import from_function, linear_combination, max_ratio_cycle
from thermoflow.shift import (
    Recoding,
    admissible_words,
    count_words,
    is_irreducible,
    shift_point,
)
from thermoflow.thermo import cylinder_mass, equilibrium_measure, integrate, presentation

log = logging.getLogger(__name__)

Rate = FiberPotential | FiberRate


def as_rate(flow: SuspensionFlow, rate: Rate) -> FiberRate:
    if isinstance(rate, FiberPotential):
        return rate.piecewise(flow.base, flow.roof)
    return rate


def positive_rate(flow: SuspensionFlow, rate: Rate) -> FiberRate:
    r = as_rate(flow, rate)
    low = r.minimum()
    if low <= 0:
        raise NonpositiveRate(f"rate reaches {low:.6g}")
    return r


# ── Clocks ───────────────────────────────────────────────────────


def _forward_root(
    r: FiberRate, word: tuple[str, ...], a: float, top: float, need: float, xtol: float
) -> float:
    """u in [a, top] with the integral of r over [a, u] equal to need."""
    return float(brentq(lambda v: r.integral(word, a, v) - need, a, top, xtol=xtol))


def _backward_root(
    r: FiberRate, word: tuple[str, ...], b: float, need: float, xtol: float
) -> float:
    """u in [0, b] with the integral of r over [u, b] equal to need."""
    return float(brentq(lambda v: r.integral(word, v, b) - need, 0.0, b, xtol=xtol))


def ell(
    flow: SuspensionFlow, rate: Rate, p: FlowPoint, t: float, tol: Tolerances | None = None
) -> float:
    """The flow time l with integral of r over [0, l] along the orbit of p equal to t."""
    tol = tol or settings.tol
    r = positive_rate(flow, rate)
    if t == 0:
        return 0.0
    x, s, k = p.base_point, p.fiber, r.window
    remaining, elapsed = abs(t), 0.0
    if t > 0:
        while True:
            word, top = x.window(0, k), flow.roof_at(x)
            seg = r.integral(word, s, top)
            if seg >= remaining:
                u = _forward_root(r, word, s, top, remaining, tol.ell)
                return elapsed + u - s
            remaining -= seg
            elapsed += top - s
            x, s = shift_point(x, 1), 0.0
    while True:
        word = x.window(0, k)
        seg = r.integral(word, 0.0, s)
        if seg >= remaining:
            u = _backward_root(r, word, s, remaining, tol.ell)
            return -(elapsed + s - u)
        remaining -= seg
        elapsed += s
        x = shift_point(x, -1)
        s = flow.roof_at(x)


def kappa(flow: SuspensionFlow, rate: Rate, p: FlowPoint, t: float) -> float:
    """k(p, t): integral of r along the orbit of p over flow time [0, t]."""
    r = positive_rate(flow, rate)
    x, s, k = p.base_point, p.fiber, r.window
    remaining, total = abs(t), 0.0
    if t >= 0:
        while True:
            word, top = x.window(0, k), flow.roof_at(x)
            if top - s >= remaining:
                return total + r.integral(word, s, s + remaining)
            total += r.integral(word, s, top)
            remaining -= top - s
            x, s = shift_point(x, 1), 0.0
    while True:
        word = x.window(0, k)
        if s >= remaining:
            return -(total + r.integral(word, s - remaining, s))
        total += r.integral(word, 0.0, s)
        remaining -= s
        x = shift_point(x, -1)
        s = flow.roof_at(x)


def time_changed_evaluate(
    flow: SuspensionFlow, rate: Rate, p: FlowPoint, tau: float, tol: Tolerances | None = None
) -> FlowPoint:
    return flow_evaluate(flow, p, ell(flow, rate, p, tau, tol))


# ── Time-changed suspensions ─────────────────────────────────────


def time_changed_roof(flow: SuspensionFlow, rate: Rate) -> SuspensionFlow:
    """Same base under R'(v) = integral of r(v, s) over [0, R(v)]."""
    r = positive_rate(flow, rate)
    return SuspensionFlow(base=flow.base, roof=delta(flow, r))


def transform_measure(flow: SuspensionFlow, rate: Rate, mu: FlowMeasure) -> FlowMeasure:
    """mu_r on the time-changed flow: same base measure, mean roof against R'."""
    changed = time_changed_roof(flow, rate)
    return FlowMeasure(
        base_measure=mu.base_measure,
        roof_integral=integrate(mu.base_measure, on_measure_graph(changed.roof, mu)),
        recoding=mu.recoding,
    )


def inverse_time_change(
    changed: SuspensionFlow, rate: Rate, source: SuspensionFlow | None = None
) -> SuspensionFlow:
    """Time-change `changed` by 1/r; recovers the roof r was applied to.

    A FiberPotential rate only knows its fiber extents through the source roof.
    """
    if isinstance(rate, FiberPotential):
        if source is None:
            raise NonpositiveRate("a polynomial rate needs the source flow to be inverted")
        rate = rate.piecewise(source.base, source.roof)
    if not isinstance(rate, PiecewiseFiber):
        raise NonpositiveRate(f"cannot invert a {type(rate).__name__}")
    if rate.minimum() <= 0:
        raise NonpositiveRate(f"rate reaches {rate.minimum():.6g}")
    return time_changed_roof(changed, ReciprocalRate(rate=rate))


# ── Hyperbolicity ────────────────────────────────────────────────


class HyperbolicityReport(BaseModel):
    model_config = {"frozen": True}

    hyperbolic: bool
    pressure: float
    max_average: float
    witness: tuple[str, ...]
    equilibrium_entropy: float
    entropy_positive: bool

    @property
    def gap(self) -> float:
        return self.pressure - self.max_average


def is_hyperbolic(
    flow: SuspensionFlow, f: FiberPotential, tol: Tolerances | None = None
) -> HyperbolicityReport:
    """Compare P(f) with the largest flow average of f over invariant measures."""
    tol = tol or settings.tol
    df = delta(flow, f)
    p = bowen_root(flow, df, tol)
    g, (d2, r2), rec = presentation(flow.base, df, flow.roof)
    top, witness = max_ratio_cycle(g, d2, r2, tol)
    cycle = rec.decode_word(witness.symbols) if rec else witness.symbols
    ent = flow_entropy(flow, flow_equilibrium(flow, f, tol))
    return HyperbolicityReport(
        hyperbolic=p - top > tol.hyperbolic,
        pressure=p,
        max_average=top,
        witness=cycle,
        equilibrium_entropy=ent,
        entropy_positive=ent > tol.hyperbolic,
    )


# ── Synchronization ──────────────────────────────────────────────


class TimeChangeSpec(BaseModel):
    """The synchronizing rate r = P - (time-t average of f), over m-block fibers."""

    model_config = ConfigDict(frozen=True)

    source: SuspensionFlow
    rate: PiecewiseFiber
    t_horizon: float = Field(gt=0)
    pressure_const: float
    window: int
    recoding: Recoding

    @model_validator(mode="after")
    def _check_rate(self) -> TimeChangeSpec:
        if self.rate.minimum() <= 0:
            raise NonpositiveRate(f"rate reaches {self.rate.minimum():.6g}")
        return self


class Synchronization(BaseModel):
    model_config = {"frozen": True}

    spec: TimeChangeSpec
    flow: SuspensionFlow
    max_average: float


def synchronization_window(flow: SuspensionFlow, f: FiberPotential, t: float) -> int:
    """Block length carrying every roof segment met within time t of a fiber start."""
    return math.ceil((t + flow.r_max) / flow.r_min) + max(flow.roof.window, f.window) - 1


def _sync_pieces(
    word: Sequence[str],
    flow: SuspensionFlow,
    f: FiberPotential,
    p: float,
    t: float,
    tol: Tolerances,
) -> tuple[tuple[Piece, ...], float]:
    """Rate pieces along the fiber of `word`, and the largest time-t average there."""
    r0 = flow.roof.at(word)
    bounds, antis, cums = [0.0], [], [0.0]
    while bounds[-1] < r0 + t:
        seg = word[len(antis) :]
        rj = flow.roof.at(seg)
        anti = poly.polyint(f.coefficients(seg))
        antis.append(anti)
        cums.append(cums[-1] + float(poly.polyval(rj, anti)))
        bounds.append(bounds[-1] + rj)

    cuts = sorted(b - t for b in bounds[1:-1] if tol.segment < b - t < r0 - tol.segment)
    edges = [0.0, *cuts, r0]
    start = Polynomial(antis[0])
    pieces, best = [], -math.inf
    for lo, hi in zip(edges, edges[1:]):
        mid = 0.5 * (lo + hi) + t
        j = max(i for i in range(len(antis)) if bounds[i] <= mid)
        end = Polynomial(antis[j])(Polynomial([t - bounds[j], 1.0])) + cums[j]
        average = (end - start) / t
        best = max(best, poly_range(average.coef, lo, hi)[1])
        pieces.append(Piece(start=lo, end=hi, coeffs=tuple((p - average).coef)))
    return tuple(pieces), best


def synchronize(
    flow: SuspensionFlow, f: FiberPotential, t_horizon: float, tol: Tolerances | None = None
) -> Synchronization:
    """Time-change making the equilibrium state of f the entropy-1 MME."""
    tol = tol or settings.tol
    if t_horizon <= 0:
        raise HorizonTooShort(f"horizon {t_horizon:g} must be positive")
    if not is_irreducible(flow.base):
        raise NotIrreducible("synchronization needs an irreducible base")
    m = synchronization_window(flow, f, t_horizon)
    if m > settings.max_block:
        raise WindowExplosion(f"window {m} exceeds the {settings.max_block}-block limit")
    size = count_words(flow.base, m)
    if size > settings.max_block_states:
        raise WindowExplosion(f"{m}-block presentation has {size} states")

    p = flow_pressure(flow, f, tol)
    source, rec = recode_flow(flow, m)
    pieces, best = {}, -math.inf
    for name, block in rec.blocks.items():
        ps, top = _sync_pieces(block, flow, f, p, t_horizon, tol)
        pieces[(name,)] = ps
        best = max(best, top)
    if p - best <= tol.hyperbolic:
        raise NotHyperbolicAtHorizon(best, p, t_horizon)
    log.info(
        "synchronized at t=%g: window %d, %d fibers, margin %.3g",
        t_horizon, m, len(pieces), p - best,
    )

    rate = PiecewiseFiber(window=1, pieces=pieces)
    spec = TimeChangeSpec(
        source=source, rate=rate, t_horizon=t_horizon, pressure_const=p, window=m, recoding=rec
    )
    return Synchronization(spec=spec, flow=time_changed_roof(source, rate), max_average=best)


def find_horizon(
    flow: SuspensionFlow, f: FiberPotential, tol: Tolerances | None = None
) -> Synchronization:
    """First t in 1, 2, 4, ... up to the horizon cap at which synchronization works."""
    t, last = 1.0, None
    while t <= settings.horizon_cap:
        try:
            return synchronize(flow, f, t, tol)
        except NotHyperbolicAtHorizon as e:
            log.debug("horizon %g fails: %s", t, e)
            last = e
        t *= 2
    assert last is not None
    raise last


def synchronized_pressure_curve(
    sync: Synchronization, q_grid: Sequence[float], tol: Tolerances | None = None
) -> list[tuple[float, float]]:
    """[(q, P(flow, -q r))]; zero exactly at q = 1."""
    src = sync.spec.source
    return [(float(q), flow_pressure(src, sync.spec.rate.scaled(-q), tol)) for q in q_grid]


# ── Synchronization checks ───────────────────────────────────────


class SynchronizationReport(BaseModel):
    """Entropy, cylinder and density checks for one synchronization."""

    model_config = {"frozen": True}

    pressure: float
    horizon: float
    window: int
    h_top_synchronized: float
    max_cylinder_discrepancy: float
    density_check_max_error: float
    entropy_ok: bool
    cylinders_ok: bool
    density_ok: bool

    @property
    def passed(self) -> bool:
        return self.entropy_ok and self.cylinders_ok and self.density_ok


def _test_functions(sync: Synchronization) -> list[FiberPotential]:
    block = sync.spec.source.base
    rec = sync.spec.recoding
    first = rec.source.states[0]
    indicator = from_function(block, 1, lambda w: 1.0 if rec.blocks[w[0]][0] == first else 0.0)
    return [
        FiberPotential.constant(block, 1.0),
        FiberPotential.constant(block, 1.0, degree=1),
        FiberPotential.of(indicator),
    ]


def _density_lhs(
    sync: Synchronization, nu_sync: np.ndarray, g: FiberPotential
) -> float:
    """integral of g / r against the time-changed measure, by quadrature in tau."""
    rate, block = sync.spec.rate, sync.spec.source.base
    roof = sync.flow.roof
    num = den = 0.0
    for name, weight in zip(block.states, nu_sync):
        if weight == 0:
            continue
        word = (name,)
        top = roof.at(word)
        cuts = [b for b in ReciprocalRate(rate=rate).breakpoints(word)[1:-1] if 0 < b < top]

        def integrand(tau: float, word: tuple[str, ...] = word) -> float:
            s = rate.invert(word, tau)
            return g.value(word, s) / rate.value(word, s)

        value, _ = quad(
            integrand, 0.0, top, points=cuts or None, epsabs=1e-14, epsrel=1e-12, limit=200
        )
        num += weight * value
        den += weight * top
    return num / den


def verify_theorem_b(
    flow: SuspensionFlow, f: FiberPotential, t_horizon: float, tol: Tolerances | None = None
) -> SynchronizationReport:
    """Check that synchronization turns the equilibrium state of f into the MME.

    (a) the synchronized flow has entropy 1; (b) its MME and the equilibrium state
    of f share base cylinders; (c) the density r / integral(r) transports integrals.
    """
    tol = tol or settings.tol
    sync = synchronize(flow, f, t_horizon, tol)
    spec = sync.spec
    src, rec, block = spec.source, spec.recoding, spec.source.base

    h_sync, mme = flow_mme(sync.flow, tol)

    f_block = f.recode(rec) if rec.n > 1 else f
    phi = linear_combination(block, [(1.0, delta(src, f_block)), (-spec.pressure_const, src.roof)])
    nu = equilibrium_measure(block, phi, tol)
    discrepancy = 0.0
    for length in range(1, 7):
        for w in admissible_words(flow.base, length):
            gap = abs(cylinder_mass(nu, w, rec) - cylinder_mass(mme.base_measure, w, rec))
            discrepancy = max(discrepancy, gap)

    mu = FlowMeasure(base_measure=nu, roof_integral=integrate(nu, src.roof))
    mean_rate = flow_integral(src, mu, spec.rate)
    density_error = 0.0
    for g in _test_functions(sync):
        rhs = flow_integral(src, mu, g) / mean_rate
        lhs = _density_lhs(sync, mme.base_measure.stationary, g)
        density_error = max(density_error, abs(lhs - rhs))

    return SynchronizationReport(
        pressure=spec.pressure_const,
        horizon=t_horizon,
        window=spec.window,
        h_top_synchronized=h_sync,
        max_cylinder_discrepancy=discrepancy,
        density_check_max_error=density_error,
        entropy_ok=abs(h_sync - 1.0) <= tol.entropy_one,
        cylinders_ok=discrepancy <= tol.cylinder,
        density_ok=density_error <= tol.density,
    )
