"""Fiber rate protocol: the contract time-change code integrates against."""

from __future__ import annotations

from collections.abc import Sequence
from typing import Protocol, runtime_checkable


@runtime_checkable
class FiberRate(Protocol):
    """Function r(v, s) on a suspension space, locally constant in v.

    `word` is the base window v_0 ... v_{window-1}; s is the fiber coordinate.
    """

    window: int

    def value(self, word: Sequence[str], s: float) -> float:
        """r(v, s)."""
        ...

    def integral(self, word: Sequence[str], a: float, b: float) -> float:
        """integral of r(v, s) ds over [a, b] inside one fiber."""
        ...

    def breakpoints(self, word: Sequence[str]) -> list[float]:
        """Fiber coordinates where the formula changes, including both ends."""
        ...

    def minimum(self) -> float:
        """Exact minimum over every fiber."""
        ...
