"""Orbit-space samplers and their lifts, the star sampler, the KL-optimal partition and exact samplers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tolerances
from .core import Distribution, Kernel, OrbitPartition, _check_n, validate_kernel
from .errors import (
    DimensionMismatch,
    MassNotDominant,
    NegativeInducedEntry,
    NonStochastic,
    NotStationary,
    WrongPartitionShape,
)


@dataclass(frozen=True, eq=False)
class OrbitSampler:
    """Row-stochastic k x k chain on orbit indices, stationary for ``pibar``."""

    matrix: np.ndarray
    pibar: Distribution

    def __post_init__(self):
        a = np.array(self.matrix, dtype=float)
        tol = tolerances.get().stochastic
        if a.shape != (self.pibar.n, self.pibar.n):
            raise DimensionMismatch(f"orbit sampler shape {a.shape} does not match {self.pibar.n} orbits")
        if a.min() < -tol or np.max(np.abs(a.sum(axis=1) - 1)) > tol:
            raise NonStochastic("orbit sampler is not row-stochastic")
        if np.max(np.abs(self.pibar.probs @ a - self.pibar.probs)) > tol:
            raise NotStationary("orbit sampler does not preserve pibar")
        a.setflags(write=False)
        object.__setattr__(self, "matrix", a)

    @property
    def k(self) -> int:
        return self.pibar.n


def lift_orbit_sampler(ps: OrbitSampler, part: OrbitPartition, pi: Distribution) -> Kernel:
    """State-space kernel ``Q(x,y) = ps(i,j) pi(y) / pi(O_j)``."""
    _check_n(part.n, pi.n)
    if ps.k != part.k:
        raise DimensionMismatch(f"orbit sampler has {ps.k} orbits, partition has {part.k}")
    mass = part.masses(pi)
    if np.max(np.abs(mass - ps.pibar.probs)) > tolerances.get().stochastic:
        raise DimensionMismatch("orbit masses of pi do not match the sampler's pibar")
    s = part.state_to_orbit
    return validate_kernel((ps.matrix / mass[None, :])[s][:, s] * pi.probs[None, :], pi)


def orbit_isometry(f, part: OrbitPartition) -> np.ndarray:
    """Spread an orbit-space function to states: ``(Uf)(x) = f(orbit of x)``."""
    f = np.asarray(f, dtype=float)
    _check_n(f.size, part.k)
    return f[part.state_to_orbit]


def orbit_isometry_adjoint(g, part: OrbitPartition, pi: Distribution) -> np.ndarray:
    """pi-weighted orbit averages of a state-space function."""
    g = np.asarray(g, dtype=float)
    _check_n(g.size, part.n)
    mass = part.masses(pi)
    return np.bincount(part.state_to_orbit, weights=pi.probs * g, minlength=part.k) / mass


def star_orbit_sampler(pibar: Distribution) -> OrbitSampler:
    """Orbit sampler routing every move through the heaviest (last) orbit."""
    p = pibar.probs
    if np.any(np.diff(p) < 0):
        raise ValueError("orbit masses must be sorted non-decreasingly")
    top = p[-1]
    if top <= 0.5:
        raise MassNotDominant(f"largest orbit mass {top} must exceed 1/2")
    k = p.size
    a = np.zeros((k, k))
    a[:-1, -1] = 1.0
    a[-1, :-1] = p[:-1] / top
    a[-1, -1] = 2.0 - 1.0 / top
    return OrbitSampler(a, pibar)


def star_lift_closed_form(part: OrbitPartition, pi: Distribution, tail: int | None = None) -> np.ndarray:
    """Piecewise form of the lifted star sampler; ``tail`` defaults to the last orbit."""
    tail = part.k - 1 if tail is None else tail
    in_tail = part.state_to_orbit == tail
    mt = pi.probs[in_tail].sum()
    p = pi.probs[None, :]
    across = in_tail[:, None] != in_tail[None, :]
    both = in_tail[:, None] & in_tail[None, :]
    return np.where(across, p / mt, 0.0) + np.where(both, p * (2 * mt - 1) / mt**2, 0.0)


def optimal_partition_for_k(pi: Distribution, k: int) -> OrbitPartition:
    """k-1 lightest states as singletons, everything else in one orbit.

    Ties in mass are broken by state index (stable sort), which leaves
    the block-mass entropy unchanged.
    """
    n = pi.n
    if not 1 <= k <= n:
        raise ValueError(f"k={k} must lie in [1, {n}]")
    order = np.argsort(pi.probs, kind="stable")
    singles = [[int(x)] for x in order[: k - 1]]
    return OrbitPartition.from_orbits(singles + [order[k - 1 :].tolist()], n)


def entropy(p) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def _split_singletons_tail(part: OrbitPartition, pi: Distribution) -> tuple[np.ndarray, np.ndarray]:
    big = [i for i, o in enumerate(part.orbits) if len(o) > 1]
    if len(big) > 1:
        raise WrongPartitionShape("expected k-1 singleton orbits plus one tail orbit")
    if big:
        tail = big[0]
    else:
        # all singletons: the heaviest state plays the tail
        tail = int(part.state_to_orbit[pi.n - 1 - int(np.argmax(pi.probs[::-1]))])
    in_tail = part.state_to_orbit == tail
    return np.flatnonzero(~in_tail), np.flatnonzero(in_tail)


@dataclass(frozen=True)
class ExactSamplerVerdict:
    holds: bool
    residuals: tuple[float, float, float, float]


def exact_sampler_check(P: Kernel, part: OrbitPartition) -> ExactSamplerVerdict:
    """Check the four block conditions under which GPG equals the stationary projector."""
    _check_n(P.n, part.n)
    pi = P.pi
    S, T = _split_singletons_tail(part, P.reference)
    mt = pi[T].sum()
    M = P.matrix
    r1 = np.max(np.abs(M[np.ix_(S, S)] - pi[S][None, :]), initial=0.0)
    r2 = np.max(np.abs(M[np.ix_(S, T)].sum(axis=1) - mt), initial=0.0)
    r3 = np.max(np.abs(pi[T] @ M[np.ix_(T, S)] - mt * pi[S]), initial=0.0)
    r4 = abs(pi[T] @ M[np.ix_(T, T)].sum(axis=1) - mt**2)
    res = (float(r1), float(r2), float(r3), float(r4))
    return ExactSamplerVerdict(all(r <= 1e-10 for r in res), res)


def construct_exact_sampler(part: OrbitPartition, pi: Distribution, free_block) -> Kernel:
    """Kernel with GPG = Pi built from freely chosen singleton-to-tail rows.

    ``free_block`` has one row per singleton orbit (in partition order),
    with columns indexed by the tail's states in increasing order; each row
    must sum to the tail mass.
    """
    S, T = _split_singletons_tail(part, pi)
    p = pi.probs
    mt = p[T].sum()
    free = np.asarray(free_block, dtype=float).reshape(len(S), len(T))
    if free.size and np.max(np.abs(free.sum(axis=1) - mt)) > 1e-12:
        raise ValueError("each free row must sum to the tail mass")
    if free.size and free.min() < 0:
        raise NegativeInducedEntry("free rows must be non-negative")
    M = np.zeros((pi.n, pi.n))
    M[:, S] = p[S][None, :]
    M[np.ix_(S, T)] = free
    tail = (p[T] - p[S] @ free) / mt
    if tail.min() < -1e-12:
        raise NegativeInducedEntry("free rows are too concentrated; a tail entry would be negative")
    M[np.ix_(T, T)] = np.clip(tail, 0.0, None)[None, :]
    return validate_kernel(M, pi)


def random_star_feasible_kernel(part: OrbitPartition, pi: Distribution, rng: np.random.Generator) -> Kernel:
    """Random reversible kernel with no mass between (or within) the non-tail orbits.

    Built from a symmetric flow matrix whose row sums equal pi; the tail is
    taken to be the last orbit.
    """
    p = pi.probs
    in_tail = part.state_to_orbit == part.k - 1
    S, T = np.flatnonzero(~in_tail), np.flatnonzero(in_tail)
    mt = p[T].sum()
    if mt <= 0.5:
        raise MassNotDominant("the tail orbit must carry more than half the mass")
    F = np.zeros((pi.n, pi.n))
    base = p[T] / mt
    for a in (0.5, 0.25, 0.1, 0.0):
        w = (1 - a) * base[None, :] + a * rng.dirichlet(np.ones(len(T)), size=len(S))
        out = p[S][:, None] * w
        if np.all(out.sum(axis=0) <= p[T]):
            break
    F[np.ix_(S, T)] = out
    F[np.ix_(T, S)] = out.T
    rest = p[T] - out.sum(axis=0)
    # symmetric random exchanges inside the tail, limited by the remaining mass
    E = rng.random((len(T), len(T)))
    E = np.triu(E, 1)
    E = E + E.T
    if len(T) > 1:
        scale = 0.9 * np.min(rest / np.maximum(E.sum(axis=1), 1e-300))
        E *= min(scale, 1.0)
    F[np.ix_(T, T)] = E + np.diag(rest - E.sum(axis=1))
    return validate_kernel(F / p[:, None], pi)

