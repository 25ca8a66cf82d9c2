"""Fiber data: polynomial-in-s potentials and piecewise-polynomial rates."""

from __future__ import annotations

import logging
from collections.abc import Sequence

import numpy as np
from numpy.polynomial import polynomial as poly
from pydantic import BaseModel, Field
from scipy.optimize import brentq

from thermoflow.errors import WindowMismatch
from thermoflow.potentials import Potential, constant, recode_window
from thermoflow.shift import Recoding, Sft, admissible_words

log = logging.getLogger(__name__)


def poly_range(coeffs: Sequence[float], a: float, b: float) -> tuple[float, float]:
    """Exact (min, max) of a polynomial on [a, b] from its critical points."""
    c = np.asarray(coeffs, dtype=float)
    pts = [a, b]
    d = poly.polytrim(poly.polyder(c)) if len(c) > 1 else np.zeros(1)
    if len(d) > 1:
        pts += [r.real for r in poly.polyroots(d) if abs(r.imag) < 1e-12 and a < r.real < b]
    vals = poly.polyval(np.asarray(pts), c)
    return float(vals.min()), float(vals.max())


class FiberTerm(BaseModel):
    """F(v) * s**degree."""

    model_config = {"frozen": True}

    degree: int = Field(ge=0)
    potential: Potential


class FiberPotential(BaseModel):
    """f(v, s) = sum_i F_i(v) * s**d_i."""

    model_config = {"frozen": True}

    terms: tuple[FiberTerm, ...] = ()

    @classmethod
    def zero(cls) -> FiberPotential:
        return cls()

    @classmethod
    def of(cls, potential: Potential, degree: int = 0) -> FiberPotential:
        return cls(terms=(FiberTerm(degree=degree, potential=potential),))

    @classmethod
    def constant(cls, g: Sft, c: float, degree: int = 0) -> FiberPotential:
        return cls.of(constant(g, c), degree)

    @property
    def window(self) -> int:
        return max((t.potential.window for t in self.terms), default=1)

    def coefficients(self, word: Sequence[str]) -> np.ndarray:
        """Polynomial coefficients in s, lowest degree first."""
        top = max((t.degree for t in self.terms), default=0)
        c = np.zeros(top + 1)
        for t in self.terms:
            c[t.degree] += t.potential.at(word)
        return c

    def value(self, word: Sequence[str], s: float) -> float:
        return float(poly.polyval(s, self.coefficients(word)))

    def integral(self, word: Sequence[str], a: float, b: float) -> float:
        anti = poly.polyint(self.coefficients(word))
        return float(poly.polyval(b, anti) - poly.polyval(a, anti))

    def plus(self, other: FiberPotential) -> FiberPotential:
        return FiberPotential(terms=self.terms + other.terms)

    def scaled(self, q: float) -> FiberPotential:
        return FiberPotential(
            terms=tuple(
                FiberTerm(
                    degree=t.degree,
                    potential=Potential(
                        window=t.potential.window,
                        table={w: q * v for w, v in t.potential.table.items()},
                    ),
                )
                for t in self.terms
            )
        )

    def recode(self, rec: Recoding) -> FiberPotential:
        return FiberPotential(
            terms=tuple(
                FiberTerm(degree=t.degree, potential=recode_window(t.potential, rec))
                for t in self.terms
            )
        )

    def piecewise(self, g: Sft, roof: Potential) -> PiecewiseFiber:
        """One polynomial piece per base window, spanning the whole fiber."""
        k = max(self.window, roof.window)
        return PiecewiseFiber(
            window=k,
            pieces={
                w: (Piece(start=0.0, end=roof.at(w), coeffs=tuple(self.coefficients(w))),)
                for w in admissible_words(g, k)
            },
        )


def _solve_area(p: Piece, need: float, xtol: float) -> float:
    """s in [p.start, p.end] with the area of p over [p.start, s] equal to need."""
    return float(brentq(lambda s: p.area(p.start, s) - need, p.start, p.end, xtol=xtol))


class Piece(BaseModel):
    """Polynomial in the absolute fiber coordinate s, valid on [start, end]."""

    model_config = {"frozen": True}

    start: float
    end: float
    coeffs: tuple[float, ...]

    def at(self, s: float) -> float:
        return float(poly.polyval(s, self.coeffs))

    def area(self, a: float, b: float) -> float:
        anti = poly.polyint(self.coeffs)
        return float(poly.polyval(b, anti) - poly.polyval(a, anti))


class PiecewiseFiber(BaseModel):
    """Rate given by consecutive polynomial pieces along each fiber."""

    model_config = {"frozen": True}

    window: int = Field(ge=1)
    pieces: dict[tuple[str, ...], tuple[Piece, ...]]

    def _pieces(self, word: Sequence[str]) -> tuple[Piece, ...]:
        key = tuple(word[: self.window])
        try:
            return self.pieces[key]
        except KeyError:
            raise WindowMismatch(f"no fiber data for {key}") from None

    def value(self, word: Sequence[str], s: float) -> float:
        ps = self._pieces(word)
        for p in ps:
            if s < p.end:
                return p.at(s)
        return ps[-1].at(s)

    def integral(self, word: Sequence[str], a: float, b: float) -> float:
        if b < a:
            return -self.integral(word, b, a)
        total = 0.0
        for p in self._pieces(word):
            lo, hi = max(a, p.start), min(b, p.end)
            if hi > lo:
                total += p.area(lo, hi)
        return total

    def invert(self, word: Sequence[str], target: float, xtol: float = 1e-12) -> float:
        """s with integral over [0, s] equal to target (clamped to the fiber)."""
        ps = self._pieces(word)
        acc = 0.0
        for p in ps:
            area = p.area(p.start, p.end)
            if acc + area >= target:
                need = target - acc
                if need <= 0:
                    return p.start
                return _solve_area(p, need, xtol)
            acc += area
        return ps[-1].end

    def breakpoints(self, word: Sequence[str]) -> list[float]:
        ps = self._pieces(word)
        return [p.start for p in ps] + [ps[-1].end]

    def extent(self, word: Sequence[str]) -> float:
        return self._pieces(word)[-1].end

    def _all(self) -> list[Piece]:
        return [p for ps in self.pieces.values() for p in ps]

    def minimum(self) -> float:
        return min(poly_range(p.coeffs, p.start, p.end)[0] for p in self._all())

    def maximum(self) -> float:
        return max(poly_range(p.coeffs, p.start, p.end)[1] for p in self._all())

    def scaled(self, q: float) -> PiecewiseFiber:
        def times(p: Piece) -> Piece:
            return p.model_copy(update={"coeffs": tuple(q * c for c in p.coeffs)})

        return PiecewiseFiber(
            window=self.window,
            pieces={w: tuple(times(p) for p in ps) for w, ps in self.pieces.items()},
        )


class ReciprocalRate(BaseModel):
    """1/r transported to the fibers of the flow time-changed by r.

    A time-changed fiber coordinate tau corresponds to s = r.invert(tau).
    """

    model_config = {"frozen": True}

    rate: PiecewiseFiber

    @property
    def window(self) -> int:
        return self.rate.window

    def value(self, word: Sequence[str], s: float) -> float:
        return 1.0 / self.rate.value(word, self.rate.invert(word, s))

    def integral(self, word: Sequence[str], a: float, b: float) -> float:
        return self.rate.invert(word, b) - self.rate.invert(word, a)

    def breakpoints(self, word: Sequence[str]) -> list[float]:
        return [self.rate.integral(word, 0.0, b) for b in self.rate.breakpoints(word)]

    def minimum(self) -> float:
        top = self.rate.maximum()
        return 1.0 / top if top > 0 else float("-inf")
