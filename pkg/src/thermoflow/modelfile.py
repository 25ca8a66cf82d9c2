"""Model files: graphs, potentials, flows, fiber potentials, codes, points.

Every file is JSON. Potential keys list states separated by spaces ("0 1"). A path
of the form `builtin:<name>` loads one of the models in thermoflow.battery.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from thermoflow.battery import Model, builtin_model
from thermoflow.errors import InvalidModel, ParseError, ThermoflowError
from thermoflow.factors import BlockCode
from thermoflow.flows.fiber import FiberPotential, FiberTerm
from thermoflow.flows.suspension import FlowPoint, SuspensionFlow
from thermoflow.potentials import Potential, check_potential
from thermoflow.shift import Sft, SymbolicPoint, Word
from thermoflow.topology import PseudoOrbit, jump_distances, make_pseudo_orbit

log = logging.getLogger(__name__)

BUILTIN_PREFIX = "builtin:"


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SftFile(_Strict):
    states: list[str]
    edges: list[tuple[str, str]]

    def build(self) -> Sft:
        return Sft(states=tuple(self.states), edges=frozenset(self.edges))


class PotentialFile(_Strict):
    window: int = Field(ge=1)
    table: dict[str, float]

    def build(self, g: Sft | None = None) -> Potential:
        table = {tuple(k.split()): v for k, v in self.table.items()}
        f = Potential(window=self.window, table=table)
        if g is not None:
            check_potential(g, f)
        return f


class FlowFile(SftFile):
    roof: PotentialFile

    def build(self) -> SuspensionFlow:
        g = super().build()
        return SuspensionFlow(base=g, roof=self.roof.build(g))


class FiberTermFile(_Strict):
    degree: int = Field(ge=0)
    potential: PotentialFile


class CodeFile(_Strict):
    """The target graph defaults to the source graph."""

    window: int = Field(ge=1)
    map: dict[str, str]
    target: SftFile | None = None

    def build(self, source: Sft) -> BlockCode:
        target = self.target.build() if self.target else source
        table = {tuple(k.split()): v for k, v in self.map.items()}
        return BlockCode(window=self.window, map=table, source=source, target=target)


class PointFile(_Strict):
    past: list[str]
    core: list[str] = []
    future: list[str]
    origin: int = 0
    fiber: float = 0.0

    def build(self) -> FlowPoint:
        x = SymbolicPoint(
            past_cycle=Word(symbols=tuple(self.past)),
            core=Word(symbols=tuple(self.core)),
            future_cycle=Word(symbols=tuple(self.future)),
            origin_index=self.origin,
        )
        return FlowPoint(base_point=x, fiber=self.fiber)


class OrbitEntryFile(_Strict):
    point: PointFile
    duration: float = Field(gt=0)


class PseudoOrbitFile(_Strict):
    entries: list[OrbitEntryFile]
    periodic: bool = False
    delta: float | None = None
    t_min: float | None = None


# ── Reading ──────────────────────────────────────────────────────


def _read_json(path: str | Path) -> Any:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise ParseError(f"{p}: {e.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"{p}: line {e.lineno}: {e.msg}") from None


def _parse_error(path: str | Path, e: ValidationError) -> ParseError:
    first = e.errors()[0]
    field = ".".join(str(part) for part in first["loc"]) or "<root>"
    return ParseError(f"{path}: field {field!r}: {first['msg']}")


def _validated(schema: type[BaseModel], data: Any, path: str | Path) -> Any:
    try:
        return schema.model_validate(data)
    except ValidationError as e:
        raise _parse_error(path, e) from None


def _built(path: str | Path, build: Any) -> Any:
    try:
        return build()
    except ThermoflowError as e:
        raise InvalidModel(e, str(path)) from None


def parse_model(path: str | Path, base: Sft | None = None) -> Model:
    """Load a graph, flow, potential, fiber potential or code, dispatching on its shape.

    Potentials and fiber potentials are checked against `base` when given; codes
    need it as their source graph.
    """
    text = str(path)
    if text.startswith(BUILTIN_PREFIX):
        try:
            return builtin_model(text.removeprefix(BUILTIN_PREFIX))
        except KeyError as e:
            raise ParseError(str(e.args[0])) from None

    data = _read_json(path)
    if isinstance(data, list):
        terms = [_validated(FiberTermFile, item, path) for item in data]
        return _built(
            path,
            lambda: FiberPotential(
                terms=tuple(
                    FiberTerm(degree=t.degree, potential=t.potential.build(base)) for t in terms
                )
            ),
        )
    if not isinstance(data, dict):
        raise ParseError(f"{path}: expected a JSON object or list")
    if "map" in data:
        code = _validated(CodeFile, data, path)
        if base is None:
            raise ParseError(f"{path}: a code file needs a source model")
        return _built(path, lambda: code.build(base))
    if "roof" in data:
        flow = _validated(FlowFile, data, path)
        return _built(path, flow.build)
    if "states" in data:
        g = _validated(SftFile, data, path)
        return _built(path, g.build)
    if "table" in data:
        f = _validated(PotentialFile, data, path)
        return _built(path, lambda: f.build(base))
    raise ParseError(f"{path}: cannot tell the model kind from fields {sorted(data)}")


def load_point(path: str | Path, flow: SuspensionFlow) -> FlowPoint:
    point = _validated(PointFile, _read_json(path), path)

    def build() -> FlowPoint:
        p = point.build()
        return flow.point(p.base_point, p.fiber)

    return _built(path, build)


def load_pseudo_orbit(path: str | Path, flow: SuspensionFlow) -> PseudoOrbit:
    """A list of {point, duration}, or an object with entries, periodic, delta, t_min.

    Missing delta and t_min default to the largest jump and the shortest duration.
    """
    data = _read_json(path)
    if isinstance(data, list):
        data = {"entries": data}
    po = _validated(PseudoOrbitFile, data, path)
    if not po.entries:
        raise ParseError(f"{path}: pseudo-orbit has no entries")

    def build() -> PseudoOrbit:
        entries = []
        for e in po.entries:
            p = e.point.build()
            entries.append((flow.point(p.base_point, p.fiber), e.duration))
        t_min = po.t_min if po.t_min is not None else min(d for _, d in entries)
        delta = po.delta
        if delta is None:
            unchecked = make_pseudo_orbit(flow, entries, float("inf"), t_min, periodic=po.periodic)
            delta = max(jump_distances(flow, unchecked.entries, periodic=po.periodic), default=0.0)
        return make_pseudo_orbit(flow, entries, delta, t_min, periodic=po.periodic)

    return _built(path, build)


def load_points(path: str | Path, flow: SuspensionFlow) -> list[FlowPoint]:
    """A JSON list of points."""
    data = _read_json(path)
    if not isinstance(data, list):
        raise ParseError(f"{path}: expected a list of points")
    points = [_validated(PointFile, item, path) for item in data]

    def build() -> list[FlowPoint]:
        out = []
        for point in points:
            p = point.build()
            out.append(flow.point(p.base_point, p.fiber))
        return out

    return _built(path, build)
