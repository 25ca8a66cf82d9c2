"""Command-line front end: load models, run one computation, emit one artifact."""

from __future__ import annotations

import json
import logging
import sys
from collections.abc import Callable
from pathlib import Path
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from rich.console import Console
from rich.logging import RichHandler
from rich.markup import escape

from thermoflow.battery import unit_roof
from thermoflow.config import Tolerances, settings
from thermoflow.errors import (
    NotFiniteToOne,
    ParseError,
    ThermoflowError,
    ToleranceBreach,
)
from thermoflow.factors import BlockCode, check_finite_to_one, pressure_preservation
from thermoflow.flows import FiberPotential, SuspensionFlow
from thermoflow.flows.suspension import (
    bowen_residual,
    flow_entropy,
    flow_equilibrium,
    flow_integral,
    flow_mme,
    flow_pressure,
)
from thermoflow.flows.timechange import (
    find_horizon,
    is_hyperbolic,
    synchronize,
    verify_theorem_b,
)
from thermoflow.modelfile import load_point, load_points, load_pseudo_orbit, parse_model
from thermoflow.potentials import Potential, constant, scale
from thermoflow.shift import Sft
from thermoflow.thermo import (
    entropy,
    equilibrium_measure,
    pressure,
    pressure_curve,
    presentation,
)
from thermoflow.topology import bracket, close_periodic, shadow, suspension_dichotomy

log = logging.getLogger(__name__)

console = Console(highlight=False)
err_console = Console(stderr=True, highlight=False)

Command = Literal[
    "pressure",
    "equilibrium",
    "flow-pressure",
    "mme",
    "synchronize",
    "verify-b",
    "hyperbolic",
    "phase-curve",
    "shadow",
    "close",
    "bracket",
    "dichotomy",
    "factor-check",
]


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    command: Command
    model_path: str
    potential_path: str | None = None
    input_path: str | None = None
    q: float = 1.0
    t_horizon: float | None = Field(default=None, gt=0)
    epsilon: float = Field(default=0.5, gt=0)
    q_min: float = 0.0
    q_max: float = 2.0
    steps: int = Field(default=41, ge=2)
    max_len: int = Field(default=6, ge=1)
    output_path: str | None = None
    tol: dict[str, float] | None = None

    @model_validator(mode="after")
    def _check_range(self) -> RunConfig:
        if self.q_min > self.q_max:
            raise ValueError(f"q_min {self.q_min} exceeds q_max {self.q_max}")
        return self

    @property
    def tolerances(self) -> Tolerances:
        """settings.tol with the run's overrides applied."""
        if not self.tol:
            return settings.tol
        return Tolerances.model_validate({**settings.tol.model_dump(), **self.tol})


def num(x: float) -> str:
    return f"{x:#.12g}"


def _emit(config: RunConfig, lines: list[str]) -> None:
    text = "\n".join(lines) + "\n"
    if config.output_path:
        try:
            Path(config.output_path).write_text(text)
        except OSError as e:
            raise ParseError(f"{config.output_path}: {e.strerror}") from None
        log.info("wrote %s", config.output_path)
    else:
        console.print(text, end="", markup=False, soft_wrap=True)


def _report(fields: dict[str, Any]) -> list[str]:
    lines = ["field,value"]
    for key, value in fields.items():
        match value:
            case bool():
                lines.append(f"{key},{str(value).lower()}")
            case float():
                lines.append(f"{key},{num(value)}")
            case _:
                lines.append(f"{key},{value}")
    return lines


# ── Model loading ────────────────────────────────────────────────


def _flow(config: RunConfig) -> SuspensionFlow:
    model = parse_model(config.model_path)
    match model:
        case SuspensionFlow():
            return model
        case Sft():
            return unit_roof(model)
    raise ParseError(f"{config.model_path}: expected a graph or flow model")


def _base_potential(config: RunConfig, g: Sft) -> Potential:
    if config.potential_path is None:
        return constant(g, 0.0)
    f = parse_model(config.potential_path, base=g)
    if not isinstance(f, Potential):
        raise ParseError(f"{config.potential_path}: expected a base potential")
    return f


def _fiber_potential(config: RunConfig, flow: SuspensionFlow) -> FiberPotential:
    if config.potential_path is None:
        return FiberPotential.zero()
    f = parse_model(config.potential_path, base=flow.base)
    match f:
        case FiberPotential():
            return f
        case Potential():
            return FiberPotential.of(f)
    raise ParseError(f"{config.potential_path}: expected a potential or fiber potential")


def _need_input(config: RunConfig) -> str:
    if config.input_path is None:
        raise ParseError(f"{config.command} needs --input_path")
    return config.input_path


# ── Commands ─────────────────────────────────────────────────────


def _pressure_cmd(config: RunConfig, tol: Tolerances) -> None:
    g = _flow(config).base
    f = _base_potential(config, g)
    _emit(config, [num(pressure(g, scale(g, f, config.q), tol))])


def _equilibrium_cmd(config: RunConfig, tol: Tolerances) -> None:
    g = _flow(config).base
    f = scale(g, _base_potential(config, g), config.q)
    g2, (f2,), _ = presentation(g, f)
    m = equilibrium_measure(g2, f2, tol)
    fields: dict[str, Any] = {"pressure": pressure(g, f, tol), "entropy": entropy(m)}
    for state, mass in zip(g2.states, m.stationary):
        fields[f"pi[{state}]"] = float(mass)
    _emit(config, _report(fields))


def _flow_pressure_cmd(config: RunConfig, tol: Tolerances) -> None:
    flow = _flow(config)
    f = _fiber_potential(config, flow)
    c = flow_pressure(flow, f, tol)
    _emit(config, [num(c)])
    residual = bowen_residual(flow, f, c, tol)
    if residual > tol.variational:
        raise ToleranceBreach(f"Bowen residual {residual:.3g} above {tol.variational:g}")
    mu = flow_equilibrium(flow, f, tol)
    gap = abs(flow_entropy(flow, mu) + flow_integral(flow, mu, f) - c)
    if gap > tol.variational:
        raise ToleranceBreach(f"variational gap {gap:.3g} above {tol.variational:g}")


def _mme_cmd(config: RunConfig, tol: Tolerances) -> None:
    flow = _flow(config)
    h, mu = flow_mme(flow, tol)
    fields: dict[str, Any] = {"h_top": h, "roof_integral": mu.roof_integral}
    for state, mass in zip(mu.base_measure.sft.states, mu.base_measure.stationary):
        fields[f"pi[{state}]"] = float(mass)
    _emit(config, _report(fields))


def _synchronize_cmd(config: RunConfig, tol: Tolerances) -> None:
    flow = _flow(config)
    f = _fiber_potential(config, flow)
    if config.t_horizon is None:
        sync = find_horizon(flow, f, tol)
    else:
        sync = synchronize(flow, f, config.t_horizon, tol)
    spec = sync.spec
    fields = {
        "pressure": spec.pressure_const,
        "horizon": spec.t_horizon,
        "window": spec.window,
        "max_average": sync.max_average,
        "rate_min": spec.rate.minimum(),
        "rate_max": spec.rate.maximum(),
    }
    _emit(config, _report(fields))


def _verify_b_cmd(config: RunConfig, tol: Tolerances) -> None:
    flow = _flow(config)
    f = _fiber_potential(config, flow)
    t = config.t_horizon
    if t is None:
        t = find_horizon(flow, f, tol).spec.t_horizon
    report = verify_theorem_b(flow, f, t, tol)
    fields = {
        "pressure": report.pressure,
        "horizon": report.horizon,
        "window": report.window,
        "h_top_synchronized": report.h_top_synchronized,
        "max_cylinder_discrepancy": report.max_cylinder_discrepancy,
        "density_check_max_error": report.density_check_max_error,
        "passed": report.passed,
    }
    _emit(config, _report(fields))
    if not report.passed:
        raise ToleranceBreach("synchronization checks failed")


def _hyperbolic_cmd(config: RunConfig, tol: Tolerances) -> None:
    flow = _flow(config)
    report = is_hyperbolic(flow, _fiber_potential(config, flow), tol)
    fields = {
        "hyperbolic": report.hyperbolic,
        "pressure": report.pressure,
        "max_average": report.max_average,
        "gap": report.gap,
        "witness": " ".join(report.witness),
        "equilibrium_entropy": report.equilibrium_entropy,
    }
    _emit(config, _report(fields))


def _phase_curve_cmd(config: RunConfig, tol: Tolerances) -> None:
    flow = _flow(config)
    grid = np.linspace(config.q_min, config.q_max, config.steps)
    f = parse_model(config.potential_path, base=flow.base) if config.potential_path else None
    if isinstance(f, FiberPotential):
        curve = [(float(q), flow_pressure(flow, f.scaled(q), tol)) for q in grid]
    else:
        curve = pressure_curve(flow.base, _base_potential(config, flow.base), grid, tol)
    _emit(config, ["q,pressure", *(f"{num(q)},{num(p)}" for q, p in curve)])


def _shadow_cmd(config: RunConfig, tol: Tolerances) -> None:
    flow = _flow(config)
    po = load_pseudo_orbit(_need_input(config), flow)
    cert = shadow(flow, po, config.epsilon, tol)
    lines = _report(
        {"epsilon": cert.epsilon, "delta": po.delta, "max_distance": cert.max_distance}
    )
    lines += ["s,rho", *(f"{num(s)},{num(r)}" for s, r in cert.reparam_breakpoints)]
    _emit(config, lines)


def _close_cmd(config: RunConfig, tol: Tolerances) -> None:
    flow = _flow(config)
    p = load_point(_need_input(config), flow)
    if config.t_horizon is None:
        raise ParseError("close needs --t_horizon")
    result = close_periodic(flow, p, config.t_horizon, config.epsilon)
    cycle = result.point.base_point.future_cycle.symbols
    fields = {
        "period": result.period,
        "max_distance": result.max_distance,
        "cycle": " ".join(cycle),
    }
    _emit(config, _report(fields))


def _bracket_cmd(config: RunConfig, tol: Tolerances) -> None:
    flow = _flow(config)
    points = load_points(_need_input(config), flow)
    if len(points) != 2:
        raise ParseError("bracket needs exactly two points in --input_path")
    x, y = points
    result = bracket(flow, x, y, config.epsilon)
    z = result.point.base_point
    fields = {
        "tau": result.tau,
        "fiber": result.point.fiber,
        "past": " ".join(z.window(-config.max_len, 0)),
        "future": " ".join(z.window(0, config.max_len)),
    }
    _emit(config, _report(fields))


def _dichotomy_cmd(config: RunConfig, tol: Tolerances) -> None:
    result = suspension_dichotomy(_flow(config), tol)
    fields: dict[str, Any] = {"kind": result.kind.value}
    if result.constant is not None:
        fields["constant"] = result.constant
    _emit(config, _report(fields))


def _factor_check_cmd(config: RunConfig, tol: Tolerances) -> None:
    flow = _flow(config)
    code = parse_model(_need_input(config), base=flow.base)
    if not isinstance(code, BlockCode):
        raise ParseError(f"{config.input_path}: expected a code file")
    fin = check_finite_to_one(code)
    if not fin.finite_to_one:
        _emit(config, _report({"finite_to_one": False}))
        raise NotFiniteToOne("two distinct source paths share image and endpoints")
    report = pressure_preservation(code, flow, _fiber_potential(config, flow), tol)
    fields = {
        "finite_to_one": True,
        "degree": report.degree,
        "pressure_source": report.pressure_source,
        "pressure_target": report.pressure_target,
        "max_cylinder_discrepancy": report.max_cylinder_discrepancy,
        "entropy_source": report.entropy_source,
        "entropy_target": report.entropy_target,
        "passed": report.passed,
    }
    _emit(config, _report(fields))
    if not report.passed:
        raise ToleranceBreach("factor transport checks failed")


COMMANDS: dict[str, tuple[Callable[[RunConfig, Tolerances], None], str]] = {
    "pressure": (_pressure_cmd, "P(sigma, q f) of a base potential"),
    "equilibrium": (_equilibrium_cmd, "Markov equilibrium state of q f"),
    "flow-pressure": (_flow_pressure_cmd, "Flow pressure via Bowen's equation"),
    "mme": (_mme_cmd, "Topological entropy and measure of maximal entropy"),
    "synchronize": (_synchronize_cmd, "Synchronizing time-change of f"),
    "verify-b": (_verify_b_cmd, "Check the synchronized flow's MME"),
    "hyperbolic": (_hyperbolic_cmd, "Compare P(f) with the top flow average"),
    "phase-curve": (_phase_curve_cmd, "CSV of q -> pressure"),
    "shadow": (_shadow_cmd, "Trace a pseudo-orbit file"),
    "close": (_close_cmd, "Close an almost periodic orbit"),
    "bracket": (_bracket_cmd, "Local product of two nearby points"),
    "dichotomy": (_dichotomy_cmd, "Mixing or constant suspension"),
    "factor-check": (_factor_check_cmd, "Finite-to-one test and pressure transport"),
}


def _first_error(e: ValidationError) -> str:
    first = e.errors()[0]
    field = ".".join(str(part) for part in first["loc"]) or "<root>"
    return f"field {field!r}: {first['msg']}"


def run(config: RunConfig) -> int:
    """Execute one command. 0 on success, 2 on a tolerance breach, 1 on any other error."""
    handler, _ = COMMANDS[config.command]
    try:
        handler(config, config.tolerances)
    except ToleranceBreach as e:
        err_console.print(f"[red]{escape(str(e))}[/red]")
        return 2
    except ThermoflowError as e:
        err_console.print(f"[red]{escape(str(e))}[/red]")
        return 1
    except ValidationError as e:
        err_console.print(f"[red]{escape(str(ParseError(_first_error(e))))}[/red]")
        return 1
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as e:
        # Solver and linear-algebra failures are numerical contract breaches
        log.debug("numerical failure in %s", config.command, exc_info=True)
        breach = ToleranceBreach(f"numerical failure: {e}")
        err_console.print(f"[red]{escape(str(breach))}[/red]")
        return 2
    return 0


# ── Entry point ──────────────────────────────────────────────────


def parse_args(args: list[str]) -> RunConfig:
    """`<command> [model_path] --field value ...` into a validated RunConfig."""
    cmd, *rest = args
    fields: dict[str, Any] = {"command": cmd}
    i = 0
    while i < len(rest):
        token = rest[i]
        if not token.startswith("--"):
            if "model_path" in fields:
                raise ParseError(f"unexpected argument {token!r}")
            fields["model_path"] = token
            i += 1
            continue
        if i + 1 >= len(rest):
            raise ParseError(f"{token} needs a value")
        name, value = token[2:], rest[i + 1]
        if name == "tol":
            try:
                value = json.loads(value)
            except json.JSONDecodeError as e:
                raise ParseError(f"--tol is not JSON: {e.msg}") from None
        fields[name] = value
        i += 2
    try:
        config = RunConfig.model_validate(fields)
        config.tolerances  # noqa: B018
    except ValidationError as e:
        raise ParseError(_first_error(e)) from None
    return config


def _usage() -> None:
    console.print("\n[bold]thermoflow[/bold] - thermodynamic formalism for symbolic flows\n")
    console.print("Usage: thermoflow <command> <model_path> [--field value ...]\n")
    console.print("Commands:")
    for name, (_, text) in COMMANDS.items():
        console.print(f"  [cyan]{name:<14}[/cyan] {text}")
    console.print("\nModels are JSON files or builtin:<name> (golden-mean, full-2-shift, ...).")


def app() -> None:
    logging.basicConfig(
        level=settings.log_level,
        format="%(message)s",
        handlers=[RichHandler(console=err_console, show_path=False)],
    )
    args = sys.argv[1:]
    if not args or args[0] in ("-h", "--help"):
        _usage()
        return
    try:
        config = parse_args(args)
    except ParseError as e:
        err_console.print(f"[red]{escape(str(e))}[/red]")
        _usage()
        sys.exit(1)
    sys.exit(run(config))


if __name__ == "__main__":
    app()
