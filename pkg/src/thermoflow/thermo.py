"""Pressure, equilibrium states, entropy and integrals via transfer matrices."""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence

import numpy as np
import scipy.linalg
from pydantic import BaseModel, ConfigDict, model_validator
from scipy.special import xlogy

from thermoflow.config import Tolerances, settings
from thermoflow.errors import (
    EmptyShift,
    InvalidMeasure,
    NonUniqueEquilibrium,
    NotIrreducible,
    WindowMismatch,
)
from thermoflow.potentials import Potential, edge_weights, recode_window, scale
from thermoflow.shift import Recoding, Sft, admissible_words, higher_block, is_irreducible

log = logging.getLogger(__name__)


class TransferData(BaseModel):
    """Perron data of exp(f) on the edges of an irreducible graph.

    Eigenvectors are normalized so that right sums to 1 and left . right = 1.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    matrix: np.ndarray
    spectral_radius: float
    right_eigvec: np.ndarray
    left_eigvec: np.ndarray


class MarkovMeasure(BaseModel):
    """Shift-invariant Markov measure on the paths of `sft`."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    sft: Sft
    transition: np.ndarray
    stationary: np.ndarray

    @model_validator(mode="after")
    def _check(self) -> MarkovMeasure:
        check_measure(self)
        return self


def check_measure(m: MarkovMeasure, tol: Tolerances | None = None) -> None:
    tol = tol or settings.tol
    p, pi = m.transition, m.stationary
    n = len(m.sft.states)
    if p.shape != (n, n) or pi.shape != (n,):
        raise InvalidMeasure(f"shapes {p.shape} and {pi.shape} do not match {n} states")
    if (p < 0).any() or (pi < 0).any():
        raise InvalidMeasure("negative probability")
    if (p[m.sft.adjacency == 0] != 0).any():
        raise InvalidMeasure("transition charges a non-edge")
    if np.max(np.abs(p.sum(axis=1) - 1.0)) > tol.measure:
        raise InvalidMeasure("rows do not sum to 1")
    if abs(pi.sum() - 1.0) > tol.measure:
        raise InvalidMeasure("stationary vector does not sum to 1")
    if np.max(np.abs(pi @ p - pi)) > tol.measure:
        raise InvalidMeasure("stationary vector is not invariant")


# ── Presentations ────────────────────────────────────────────────


def presentation(g: Sft, *fs: Potential) -> tuple[Sft, list[Potential], Recoding | None]:
    """Recode so that every potential has window <= 2."""
    widest = max(f.window for f in fs)
    if widest <= 2:
        return g, list(fs), None
    block, rec = higher_block(g, widest)
    return block, [recode_window(f, rec) for f in fs], rec


# ── Perron data ──────────────────────────────────────────────────


def _power_polish(b: np.ndarray, v: np.ndarray, tol: Tolerances) -> np.ndarray:
    for _ in range(tol.power_max_iter):
        nxt = b @ v
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - v)) <= tol.power_step:
            return nxt
        v = nxt
    log.warning("power iteration hit its cap of %d steps", tol.power_max_iter)
    return v


def perron(m: np.ndarray, tol: Tolerances | None = None) -> tuple[float, np.ndarray, np.ndarray]:
    """(lambda, right, left) for an irreducible nonnegative matrix."""
    tol = tol or settings.tol
    vals, left, right = scipy.linalg.eig(m, left=True, right=True)
    k = int(np.argmax(vals.real))
    lam = float(vals[k].real)
    h = np.abs(right[:, k].real)
    l = np.abs(left[:, k].real)  # noqa: E741
    h /= h.sum()
    l /= l.sum()
    # M + lam I is primitive for every irreducible M, periodic or not
    shifted = m + lam * np.eye(m.shape[0])
    h = _power_polish(shifted, h, tol)
    l = _power_polish(shifted.T, l, tol)  # noqa: E741
    lam = float(l @ m @ h / (l @ h))
    l = l / (l @ h)  # noqa: E741
    residual = max(np.max(np.abs(m @ h - lam * h)), np.max(np.abs(l @ m - lam * l)))
    if residual > tol.eigen_residual * max(1.0, lam):
        log.warning("Perron residual %.3g above %.3g", residual, tol.eigen_residual)
    return lam, h, l


def transfer_matrix(w: np.ndarray) -> np.ndarray:
    return np.where(np.isfinite(w), np.exp(np.where(np.isfinite(w), w, 0.0)), 0.0)


def transfer_data(g: Sft, f: Potential, tol: Tolerances | None = None) -> TransferData:
    if not is_irreducible(g):
        raise NotIrreducible("transfer data needs an irreducible graph")
    m = transfer_matrix(edge_weights(g, f))
    lam, h, l = perron(m, tol)  # noqa: E741
    return TransferData(matrix=m, spectral_radius=lam, right_eigvec=h, left_eigvec=l)


def gibbs_constant(td: TransferData) -> float:
    """K with mu[w] * lam^(|w|-1) / exp(S_w) in [1/K, K] for every cylinder.

    S_w sums the |w|-1 edge weights along w.
    """
    h, l = td.right_eigvec, td.left_eigvec  # noqa: E741
    return float(max(l.max() * h.max(), 1.0 / (l.min() * h.min())))


def component_pressures(
    g: Sft, w: np.ndarray, tol: Tolerances | None = None
) -> list[tuple[float, list[int]]]:
    """(log spectral radius, member indices) per nontrivial strongly connected component."""
    if not g.components:
        raise EmptyShift("graph carries no cycle")
    m = transfer_matrix(w)
    out = []
    for comp in g.components:
        lam, _, _ = perron(m[np.ix_(comp, comp)], tol)
        out.append((math.log(lam), comp))
    return out


def weights_pressure(g: Sft, w: np.ndarray, tol: Tolerances | None = None) -> float:
    return max(p for p, _ in component_pressures(g, w, tol))


# ── Pressure and equilibrium ─────────────────────────────────────


def pressure(g: Sft, f: Potential, tol: Tolerances | None = None) -> float:
    """P(sigma, f): log Perron root, maximized over components."""
    g2, (f2,), _ = presentation(g, f)
    return weights_pressure(g2, edge_weights(g2, f2), tol)


def equilibrium_measure(g: Sft, f: Potential, tol: Tolerances | None = None) -> MarkovMeasure:
    """Markov equilibrium state of a window <= 2 potential.

    Reducible graphs are accepted when one component strictly carries the pressure;
    the measure then lives on that component.
    """
    tol = tol or settings.tol
    if f.window > 2:
        raise WindowMismatch(f"window {f.window} potential needs recoding to window <= 2")
    w = edge_weights(g, f)
    comps = sorted(component_pressures(g, w, tol), key=lambda pc: -pc[0])
    if len(comps) > 1 and comps[0][0] - comps[1][0] <= tol.coexistence:
        raise NonUniqueEquilibrium(
            f"components {comps[0][1]} and {comps[1][1]} both reach pressure {comps[0][0]:.12g}"
        )
    _, comp = comps[0]
    n = len(g.states)
    m = transfer_matrix(w)
    sub = m[np.ix_(comp, comp)]
    lam, h, l = perron(sub, tol)  # noqa: E741

    transition = g.adjacency / g.adjacency.sum(axis=1, keepdims=True)
    transition[np.ix_(comp, range(n))] = 0.0
    transition[np.ix_(comp, comp)] = sub * h[None, :] / (lam * h[:, None])
    stationary = np.zeros(n)
    stationary[comp] = l * h / (l @ h)
    return MarkovMeasure(sft=g, transition=transition, stationary=stationary)


def stationary_measure(g: Sft, transition: np.ndarray) -> MarkovMeasure:
    """Markov measure of an irreducible stochastic matrix supported on the edges."""
    vals, vecs = scipy.linalg.eig(transition.T)
    k = int(np.argmin(np.abs(vals - 1.0)))
    pi = np.abs(vecs[:, k].real)
    return MarkovMeasure(sft=g, transition=transition, stationary=pi / pi.sum())


def entropy(m: MarkovMeasure) -> float:
    """-sum pi(u) P(u,v) log P(u,v)."""
    p = m.transition
    return float(-(m.stationary @ xlogy(p, p).sum(axis=1)))


# ── Integrals and cylinders ──────────────────────────────────────


def word_masses(m: MarkovMeasure, k: int) -> dict[tuple[str, ...], float]:
    """mu[w] for every admissible k-word."""
    idx = m.sft.state_index
    masses = {}
    for w in admissible_words(m.sft, k):
        mass = m.stationary[idx[w[0]]]
        for u, v in zip(w, w[1:]):
            mass *= m.transition[idx[u], idx[v]]
        masses[w] = float(mass)
    return masses


def integrate(m: MarkovMeasure, f: Potential) -> float:
    """integral of f against the measure; f lives on the measure's graph."""
    masses = word_masses(m, f.window)
    try:
        return float(sum(mass * f.table[w] for w, mass in masses.items()))
    except KeyError as e:
        raise WindowMismatch(f"potential has no entry for {e.args[0]}") from None


def cylinder_mass(
    m: MarkovMeasure, word: Sequence[str], recoding: Recoding | None = None
) -> float:
    """mu[word]; with a recoding, `word` is over the source alphabet of the recoding."""
    w = tuple(word)
    sft = m.sft
    if recoding is not None and recoding.n > 1:
        if len(w) >= recoding.n:
            n = recoding.n
            w = tuple(recoding.state_of.get(w[i : i + n], "") for i in range(len(w) - n + 1))
            if "" in w:
                return 0.0
        else:
            idx = sft.state_index
            return float(
                sum(
                    m.stationary[idx[name]]
                    for name, block in recoding.blocks.items()
                    if block[: len(w)] == w
                )
            )
    idx = sft.state_index
    if any(s not in idx for s in w):
        return 0.0
    mass = m.stationary[idx[w[0]]]
    for u, v in zip(w, w[1:]):
        mass *= m.transition[idx[u], idx[v]]
    return float(mass)


def pressure_curve(
    g: Sft, f: Potential, q_grid: Sequence[float], tol: Tolerances | None = None
) -> list[tuple[float, float]]:
    """[(q, P(sigma, q f))] over the grid."""
    return [(float(q), pressure(g, scale(g, f, q), tol)) for q in q_grid]
