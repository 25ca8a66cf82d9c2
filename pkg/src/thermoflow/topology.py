"""Pseudo-orbits, shadowing, periodic closing, the local product bracket and the
mixing / constant-suspension dichotomy for symbolic suspension flows.

Distances use the flow metric of flows.suspension.flow_distance: the shift metric
plus the fiber difference, minimized over neighbouring representatives.
"""

from __future__ import annotations

import logging
import math
from enum import StrEnum

from pydantic import BaseModel, Field, model_validator

from thermoflow.config import Tolerances, settings
from thermoflow.errors import DeltaTooLarge, HorizonTooShort, NotAperiodic, NotIrreducible
from thermoflow.flows.suspension import (
    FlowPoint,
    SuspensionFlow,
    flow_distance,
    representatives,
    roof_crossings,
)
from thermoflow.potentials import is_cohomologous_to_constant
from thermoflow.shift import (
    SymbolicPoint,
    agreement_radius,
    is_aperiodic,
    is_irreducible,
    periodic_point,
    shift_distance,
    shift_point,
    splice,
)
from thermoflow.thermo import presentation

log = logging.getLogger(__name__)


class OrbitSegment(BaseModel):
    model_config = {"frozen": True}

    point: FlowPoint
    duration: float = Field(gt=0)


class PseudoOrbit(BaseModel):
    """(delta, t_min) pseudo-orbit; a periodic one lists a single period."""

    model_config = {"frozen": True}

    entries: tuple[OrbitSegment, ...]
    delta: float
    t_min: float
    periodic: bool = False

    @property
    def period(self) -> float:
        return sum(e.duration for e in self.entries)


class TraceCertificate(BaseModel):
    """Orbit of `traced_point` follows the pseudo-orbit under the time map rho."""

    model_config = {"frozen": True}

    traced_point: FlowPoint
    reparam_breakpoints: tuple[tuple[float, float], ...]
    epsilon: float
    max_distance: float

    @model_validator(mode="after")
    def _check(self) -> TraceCertificate:
        pts = self.reparam_breakpoints
        if pts[0] != (0.0, 0.0):
            raise DeltaTooLarge(0.0, abs(pts[0][1]), "rho(0)")
        for (s0, r0), (s1, r1) in zip(pts, pts[1:]):
            slope = (r1 - r0) / (s1 - s0)
            if abs(slope - 1.0) >= self.epsilon:
                raise DeltaTooLarge(self.epsilon, abs(slope - 1.0), "reparametrization slope")
        if self.max_distance > self.epsilon:
            raise DeltaTooLarge(self.epsilon, self.max_distance, "tracing distance")
        return self

    def rho(self, s: float) -> float:
        pts = self.reparam_breakpoints
        for (s0, r0), (s1, r1) in zip(pts, pts[1:]):
            if s <= s1:
                return r0 + (r1 - r0) * (s - s0) / (s1 - s0)
        s0, r0 = pts[-1]
        return r0 + (s - s0)

    @property
    def slopes(self) -> list[float]:
        pts = self.reparam_breakpoints
        return [(r1 - r0) / (s1 - s0) for (s0, r0), (s1, r1) in zip(pts, pts[1:])]


class ClosingResult(BaseModel):
    """Periodic point whose orbit stays within epsilon of the input orbit for one period."""

    model_config = {"frozen": True}

    point: FlowPoint
    period: float
    epsilon: float
    max_distance: float

    @model_validator(mode="after")
    def _check(self) -> ClosingResult:
        if self.max_distance > self.epsilon:
            raise DeltaTooLarge(self.epsilon, self.max_distance, "closing distance")
        return self


class BracketResult(BaseModel):
    model_config = {"frozen": True}

    point: FlowPoint
    tau: float


class SuspensionKind(StrEnum):
    MIXING = "Mixing"
    CONSTANT = "ConstantSuspension"


class Dichotomy(BaseModel):
    model_config = {"frozen": True}

    kind: SuspensionKind
    constant: float | None = None


# ── Scales ───────────────────────────────────────────────────────


def symbolic_window(flow: SuspensionFlow, epsilon: float) -> int:
    """N(eps) = ceil(-log eps) + window(R): agreement needed for eps-closeness."""
    return max(math.ceil(-math.log(epsilon)), 0) + flow.roof.window


def expansivity_certificate(flow: SuspensionFlow, epsilon: float) -> float:
    """delta(eps) = min(eps, exp(-N(eps))) * R_min / (2 R_max)."""
    n = symbolic_window(flow, epsilon)
    return min(epsilon, math.exp(-n)) * flow.r_min / (2.0 * flow.r_max)


def make_pseudo_orbit(
    flow: SuspensionFlow,
    entries: list[tuple[FlowPoint, float]],
    delta: float,
    t_min: float,
    *,
    periodic: bool = False,
) -> PseudoOrbit:
    """Validated pseudo-orbit: durations >= t_min and every jump <= delta."""
    segs = tuple(OrbitSegment(point=p, duration=d) for p, d in entries)
    for seg in segs:
        if seg.duration < t_min:
            raise HorizonTooShort(f"duration {seg.duration:g} below t_min {t_min:g}")
    for k, jump in enumerate(jump_distances(flow, segs, periodic=periodic)):
        if jump > delta:
            raise DeltaTooLarge(delta, jump, f"jump {k}")
    return PseudoOrbit(entries=segs, delta=delta, t_min=t_min, periodic=periodic)


def jump_distances(
    flow: SuspensionFlow, segs: tuple[OrbitSegment, ...], *, periodic: bool = False
) -> list[float]:
    count = len(segs) if periodic else len(segs) - 1
    out = []
    for k in range(count):
        end = roof_crossings(flow, segs[k].point, segs[k].duration)[0]
        out.append(flow_distance(flow, end, segs[(k + 1) % len(segs)].point))
    return out


# ── Shadowing ────────────────────────────────────────────────────


def _crossing_times(flow: SuspensionFlow, p: FlowPoint, horizon: float) -> list[float]:
    """Times in (0, horizon) at which the orbit of p hits the roof."""
    times, x, elapsed = [], p.base_point, flow.roof_at(p.base_point) - p.fiber
    while elapsed < horizon:
        times.append(elapsed)
        x = shift_point(x, 1)
        elapsed += flow.roof_at(x)
    return times


def _pair_bound(
    flow: SuspensionFlow, p: FlowPoint, q: FlowPoint, width: float, slope: float
) -> float:
    """Upper bound for the distance between theta^u p and theta^(slope u) q on [0, width].

    No roof is crossed inside the interval, so each representative pairing moves
    linearly and its distance is maximal at an endpoint.
    """
    best = math.inf
    for x, s in representatives(flow, p):
        for y, u in representatives(flow, q):
            d = shift_distance(x, y)
            start = abs(s - u)
            stop = abs((s + width) - (u + slope * width))
            best = min(best, d + max(start, stop))
    return best


def _segment_bound(
    flow: SuspensionFlow, p: FlowPoint, q: FlowPoint, duration: float, slope: float
) -> float:
    events = sorted(
        {0.0, duration}
        | set(_crossing_times(flow, p, duration))
        | {t / slope for t in _crossing_times(flow, q, slope * duration)}
    )
    worst = 0.0
    for a, b in zip(events, events[1:]):
        if b - a <= 0:
            continue
        pa = roof_crossings(flow, p, a)[0]
        qa = roof_crossings(flow, q, slope * a)[0]
        worst = max(worst, _pair_bound(flow, pa, qa, b - a, slope))
    return worst


def shadow(
    flow: SuspensionFlow, po: PseudoOrbit, epsilon: float, tol: Tolerances | None = None
) -> TraceCertificate:
    """Splice the base words of a pseudo-orbit into one true orbit tracing it."""
    tol = tol or settings.tol
    n_eps = symbolic_window(flow, epsilon)
    segs = po.entries
    k_count = len(segs)
    junctions = k_count if po.periodic else k_count - 1

    crossings: list[int] = []
    gaps: list[float] = []
    for k in range(k_count):
        end, n = roof_crossings(flow, segs[k].point, segs[k].duration)
        crossings.append(n)
        if k < junctions:
            nxt = segs[(k + 1) % k_count].point
            radius = agreement_radius(end.base_point, nxt.base_point)
            if radius < n_eps:
                raise DeltaTooLarge(n_eps, radius)
            gaps.append(nxt.fiber - end.fiber)

    offsets = [0]
    for n in crossings:
        offsets.append(offsets[-1] + n)

    if po.periodic:
        word: list[str] = []
        for k, seg in enumerate(segs):
            word.extend(seg.point.base_point.window(0, crossings[k]))
        if not word:
            raise HorizonTooShort("periodic pseudo-orbit never crosses the roof")
        base = periodic_point(word)
    else:
        base = segs[0].point.base_point
        for k in range(1, k_count):
            c = offsets[k]
            base = splice(base, shift_point(segs[k].point.base_point, -c), c)
    traced = FlowPoint(base_point=base, fiber=segs[0].point.fiber)

    starts = [0.0]
    for seg in segs:
        starts.append(starts[-1] + seg.duration)
    shifts = [0.0]
    for g in gaps:
        shifts.append(shifts[-1] + g)
    if len(shifts) < len(starts):
        shifts.append(shifts[-1])
    breakpoints = tuple((s, s + d) for s, d in zip(starts, shifts))

    worst = 0.0
    for k, seg in enumerate(segs):
        slope = 1.0 + (shifts[k + 1] - shifts[k]) / seg.duration
        if abs(slope - 1.0) >= epsilon:
            raise DeltaTooLarge(epsilon, abs(slope - 1.0), "reparametrization slope")
        here = FlowPoint(base_point=shift_point(base, offsets[k]), fiber=seg.point.fiber)
        worst = max(worst, _segment_bound(flow, seg.point, here, seg.duration, slope))
    if worst > epsilon:
        raise DeltaTooLarge(epsilon, worst, "tracing distance")
    log.debug("traced %d segments, max distance %.3g", k_count, worst)
    return TraceCertificate(
        traced_point=traced,
        reparam_breakpoints=breakpoints,
        epsilon=epsilon,
        max_distance=worst,
    )


# ── Closing ──────────────────────────────────────────────────────


def close_periodic(
    flow: SuspensionFlow, p: FlowPoint, t: float, epsilon: float
) -> ClosingResult:
    """Periodic orbit of period near t following the orbit of p over [0, t]."""
    if t < flow.r_max:
        raise HorizonTooShort(f"t = {t:g} is below the longest roof {flow.r_max:g}")
    n_eps = symbolic_window(flow, epsilon)
    x, s = p.base_point, p.fiber
    end, n = roof_crossings(flow, p, t)

    candidates = [(n, end.fiber)]
    candidates.append((n + 1, end.fiber - flow.roof_at(end.base_point)))
    if n >= 2:
        candidates.append((n - 1, end.fiber + flow.roof_at(shift_point(end.base_point, -1))))

    best, best_radius = None, -1.0
    for m, fiber in candidates:
        if m < 1:
            continue
        radius = agreement_radius(shift_point(x, m), x)
        best_radius = max(best_radius, radius)
        if radius < n_eps:
            continue
        if best is None or abs(fiber - s) < abs(best[1] - s):
            best = (m, fiber)
    if best is None:
        raise DeltaTooLarge(n_eps, best_radius)
    m, fiber = best
    if abs(fiber - s) > epsilon:
        raise DeltaTooLarge(epsilon, abs(fiber - s), "period mismatch")

    y = periodic_point(x.window(0, m))
    period = sum(flow.roof_at(shift_point(y, i)) for i in range(m))
    distance = max(shift_distance(shift_point(x, i), shift_point(y, i)) for i in range(m + 1))
    log.debug("closed after %d symbols, period %.6g, distance %.3g", m, period, distance)
    return ClosingResult(
        point=FlowPoint(base_point=y, fiber=s),
        period=period,
        epsilon=epsilon,
        max_distance=distance,
    )


# ── Local product structure ──────────────────────────────────────


def bracket(flow: SuspensionFlow, x: FlowPoint, y: FlowPoint, epsilon: float) -> BracketResult:
    """[x, y]: future of x, past of y, fiber of y; tau aligns x's fiber with it."""
    n_eps = symbolic_window(flow, epsilon)
    radius = agreement_radius(x.base_point, y.base_point)
    if radius < n_eps:
        raise DeltaTooLarge(n_eps, radius)
    tau = y.fiber - x.fiber
    if abs(tau) > epsilon:
        raise DeltaTooLarge(epsilon, abs(tau), "time shift")
    z: SymbolicPoint = splice(y.base_point, x.base_point, 0)
    return BracketResult(point=FlowPoint(base_point=z, fiber=y.fiber), tau=tau)


# ── Dichotomy ────────────────────────────────────────────────────


def suspension_dichotomy(flow: SuspensionFlow, tol: Tolerances | None = None) -> Dichotomy:
    """ConstantSuspension(c) when the roof is cohomologous to c, else Mixing."""
    if not is_irreducible(flow.base):
        raise NotIrreducible("dichotomy needs an irreducible base")
    if not is_aperiodic(flow.base):
        raise NotAperiodic("dichotomy needs an aperiodic base")
    g, (roof,), _ = presentation(flow.base, flow.roof)
    c = is_cohomologous_to_constant(g, roof, tol)
    if c is None:
        return Dichotomy(kind=SuspensionKind.MIXING)
    return Dichotomy(kind=SuspensionKind.CONSTANT, constant=c)
