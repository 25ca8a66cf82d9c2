"""Named errors. The CLI prints `code` and exits 1 (2 for ToleranceBreach)."""

from __future__ import annotations

from typing import Any


class ThermoflowError(Exception):
    """Base error. Subclasses set `code` to the documented error name."""

    code = "ThermoflowError"

    def __init__(self, message: str = "", **details: Any) -> None:
        super().__init__(message or self.code)
        self.message = message or self.code
        self.details = details

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


# ── Graphs and words ─────────────────────────────────────────────


class StrandedState(ThermoflowError):
    code = "StrandedState"

    def __init__(self, state: str, missing: str) -> None:
        super().__init__(f"state {state!r} has no {missing} edge", state=state)
        self.state = state


class DuplicateState(ThermoflowError):
    code = "DuplicateState"

    def __init__(self, state: str) -> None:
        super().__init__(f"state {state!r} listed more than once", state=state)
        self.state = state


class UnknownState(ThermoflowError):
    code = "UnknownState"


class InadmissibleWord(ThermoflowError):
    code = "InadmissibleWord"


class NotIrreducible(ThermoflowError):
    code = "NotIrreducible"


class NotAperiodic(ThermoflowError):
    code = "NotAperiodic"


# ── Potentials and measures ──────────────────────────────────────


class WindowMismatch(ThermoflowError):
    code = "WindowMismatch"


class IncompatibleRecoding(ThermoflowError):
    code = "IncompatibleRecoding"


class NonpositiveDenominator(ThermoflowError):
    code = "NonpositiveDenominator"


class EmptyShift(ThermoflowError):
    code = "EmptyShift"


class NonUniqueEquilibrium(ThermoflowError):
    code = "NonUniqueEquilibrium"


class InvalidMeasure(ThermoflowError):
    code = "InvalidMeasure"


# ── Flows and time-changes ───────────────────────────────────────


class NonpositiveRoof(ThermoflowError):
    code = "NonpositiveRoof"


class NonpositiveRate(ThermoflowError):
    code = "NonpositiveRate"


class NotHyperbolicAtHorizon(ThermoflowError):
    code = "NotHyperbolicAtHorizon"

    def __init__(self, max_value: float, pressure: float, horizon: float) -> None:
        super().__init__(
            f"max time-{horizon:g} average {max_value:.12g} is not below pressure {pressure:.12g}",
            max_value=max_value,
            pressure=pressure,
            horizon=horizon,
        )
        self.max_value = max_value
        self.pressure = pressure
        self.horizon = horizon


class WindowExplosion(ThermoflowError):
    code = "WindowExplosion"


# ── Topological dynamics ─────────────────────────────────────────


class DeltaTooLarge(ThermoflowError):
    code = "DeltaTooLarge"

    def __init__(self, required: float, available: float, what: str = "agreement window") -> None:
        super().__init__(
            f"{what}: need {required:g}, have {available:g}",
            required=required,
            available=available,
        )
        self.required = required
        self.available = available


class HorizonTooShort(ThermoflowError):
    code = "HorizonTooShort"


# ── Factors ──────────────────────────────────────────────────────


class RoofNotFiberConstant(ThermoflowError):
    code = "RoofNotFiberConstant"


class CodeNotOnto(ThermoflowError):
    code = "CodeNotOnto"


class NotFiniteToOne(ThermoflowError):
    code = "NotFiniteToOne"


# ── Files and runs ───────────────────────────────────────────────


class ParseError(ThermoflowError):
    code = "ParseError"


class InvalidModel(ThermoflowError):
    """An input file parsed but violates a domain invariant."""

    code = "ValidationError"

    def __init__(self, cause: ThermoflowError, path: str = "") -> None:
        where = f"{path}: " if path else ""
        super().__init__(f"{where}{cause.code}({cause.message})", cause=cause.code)
        self.cause = cause


class ToleranceBreach(ThermoflowError):
    """A numerical identity the run is meant to certify failed its tolerance."""

    code = "ToleranceBreach"
