"""Projection chains, restriction chains, escape probability and the decomposition gap bound."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Distribution, Kernel, OrbitPartition, _check_n
from .errors import NotReversible
from .spectral import lambda2


@dataclass(frozen=True, eq=False)
class ProjectionChain:
    matrix: np.ndarray
    pibar: Distribution


@dataclass(frozen=True, eq=False)
class RestrictionChain:
    orbit_index: int
    states: tuple[int, ...]
    matrix: np.ndarray
    pi_i: Distribution


def projection_chain(P: Kernel, part: OrbitPartition) -> ProjectionChain:
    """k x k chain on orbit indices obtained by pi-aggregating P."""
    _check_n(P.n, part.n)
    mass = part.masses(P.reference)
    U = part.indicator()
    flow = U.T @ (P.pi[:, None] * P.matrix) @ U
    return ProjectionChain(flow / mass[:, None], Distribution(mass / mass.sum()))


def restriction_chain(P: Kernel, part: OrbitPartition, i: int) -> RestrictionChain:
    """P restricted to orbit ``i``; the diagonal absorbs all out-of-orbit mass."""
    _check_n(P.n, part.n)
    states = part.orbits[i]
    idx = list(states)
    block = np.array(P.matrix[np.ix_(idx, idx)])
    np.fill_diagonal(block, 0.0)
    np.fill_diagonal(block, 1.0 - block.sum(axis=1))
    w = P.pi[idx]
    return RestrictionChain(i, states, block, Distribution(w / w.sum()))


def gamma(P: Kernel, part: OrbitPartition) -> float:
    """Largest one-step probability of leaving the current orbit."""
    _check_n(P.n, part.n)
    escape = np.where(part.same_orbit(), 0.0, P.matrix).sum(axis=1)
    return float(escape.max())


def jerrum_gap_bound(P: Kernel, part: OrbitPartition) -> float:
    """Lower bound on the right spectral gap of reversible P from its orbit decomposition.

    ``min(gbar / 3, gbar * gmin / (3 gamma + gbar))`` with ``gbar`` the gap of
    the projection chain and ``gmin`` the smallest restriction-chain gap.
    A one-state chain counts as having gap 1.
    """
    if P.reversible is False:
        raise NotReversible("the decomposition bound needs a reversible kernel")
    pc = projection_chain(P, part)
    gbar = 1.0 - lambda2(pc.matrix, pc.pibar.probs)
    gmin = min(
        1.0 - lambda2(rc.matrix, rc.pi_i.probs)
        for rc in (restriction_chain(P, part, i) for i in range(part.k))
    )
    g = gamma(P, part)
    first = gbar / 3.0
    denom = 3.0 * g + gbar
    second = gbar * gmin / denom if denom > 0 else first
    return float(min(first, second))


def within_orbit_mass(P: Kernel, part: OrbitPartition, i: int) -> float:
    """pi_i-average probability of staying inside orbit ``i`` in one step."""
    idx = list(part.orbits[i])
    w = P.pi[idx] / P.pi[idx].sum()
    return float(w @ P.matrix[np.ix_(idx, idx)].sum(axis=1))


def gpg_restriction_spectrum(P: Kernel, part: OrbitPartition, i: int) -> tuple[float, float]:
    """Closed-form eigenvalues ``(1, 1 - abar_i)`` of the restriction of GPG to orbit i."""
    return (1.0, 1.0 - within_orbit_mass(P, part, i))
