"""Mean-field Curie-Weiss model: magnetisation orbits, the star sampler, Glauber dynamics and exact mixing times.

States are integers ``0..2^d-1``; bit j set means spin j is +1. Orbit ``i``
holds the configurations with ``|#plus - d/2| = i``, i.e. ``|m| = 2i/d``,
so orbit ``d/2`` contains the two ground states.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from .core import Distribution, Kernel, OrbitPartition, validate_kernel
from .errors import MassNotDominant, NoConvergence, TooLarge

MAX_DENSE_D = 14
MAX_MIXING_N = 4096


@dataclass(frozen=True)
class CwModel:
    d: int
    beta: float

    def __post_init__(self):
        if self.d < 2 or self.d % 2:
            raise ValueError(f"d={self.d} must be a positive even integer")
        if self.beta < 0:
            raise ValueError("beta must be non-negative")

    @property
    def n(self) -> int:
        return 1 << self.d


def _check_dense(d: int) -> None:
    CwModel(d, 0.0)
    if d > MAX_DENSE_D:
        raise TooLarge(f"d={d} exceeds the dense limit {MAX_DENSE_D}")


def plus_counts(d: int) -> np.ndarray:
    x = np.arange(1 << d)
    return ((x[:, None] >> np.arange(d)) & 1).sum(axis=1)


def orbit_index(d: int) -> np.ndarray:
    """Orbit label ``|#plus - d/2|`` of every state."""
    return np.abs(plus_counts(d) - d // 2)


def cw_log_weights(d: int, beta: float) -> np.ndarray:
    m = (2 * plus_counts(d) - d) / d
    return beta * d * m * m / 2


def cw_distribution(d: int, beta: float) -> Distribution:
    _check_dense(d)
    return Distribution.from_log_weights(cw_log_weights(d, beta))


def cw_orbit_partition(d: int) -> OrbitPartition:
    _check_dense(d)
    return OrbitPartition.from_labels_ordered(orbit_index(d), d // 2 + 1)


def cw_orbit_log_weights(d: int, beta: float) -> np.ndarray:
    """Unnormalised log orbit masses: the |m| = 0 orbit has no sign pair."""
    CwModel(d, beta)
    h = d // 2
    i = np.arange(h + 1)
    log_binom = gammaln(d + 1) - gammaln(h - i + 1) - gammaln(h + i + 1)
    return log_binom + np.where(i > 0, math.log(2.0), 0.0) + 2 * i * i * beta / d


def cw_orbit_masses(d: int, beta: float) -> np.ndarray:
    lw = cw_orbit_log_weights(d, beta)
    w = np.exp(lw - lw.max())
    return w / w.sum()


def orbit_mass_ratio(d: int, beta: float, i: int) -> float:
    """Closed-form ratio of consecutive orbit masses, valid for ``1 <= i <= d/2 - 1``.

    For ``i = 0`` the exact ratio is twice this value because orbit 0 has no sign pair.
    """
    h = d / 2
    return (h - i) / (h + i + 1) * math.exp(2 * beta * (2 * i + 1) / d)


def beta_star(d: int) -> float:
    return max((d + 1) / 4, 1.0)


def merged_tail_partition(d: int, kcut: int) -> OrbitPartition:
    """Orbits ``0..kcut-1`` kept, orbits ``kcut..d/2`` merged into one tail block."""
    _check_dense(d)
    if not 1 <= kcut <= d // 2:
        raise ValueError(f"kcut={kcut} must lie in [1, {d // 2}]")
    return OrbitPartition.from_labels_ordered(np.minimum(orbit_index(d), kcut), kcut + 1)


def tail_mass(d: int, beta: float, kcut: int) -> float:
    return float(cw_orbit_masses(d, beta)[kcut:].sum())


def choose_kcut(d: int, beta: float, min_delta: float = 0.05) -> int:
    """Smallest kcut whose tail mass exceeds 1/2 + min_delta."""
    for kcut in range(1, d // 2 + 1):
        if tail_mass(d, beta, kcut) - 0.5 > min_delta:
            return kcut
    raise MassNotDominant(f"no kcut gives tail mass above {0.5 + min_delta} at d={d}, beta={beta}")


def cw_star_kernel(d: int, beta: float, kcut: int) -> Kernel:
    """Dense star sampler over the merged-tail blocks, built from its piecewise form."""
    pi = cw_distribution(d, beta)
    p = pi.probs
    in_tail = orbit_index(d) >= kcut
    mt = float(p[in_tail].sum())
    if mt <= 0.5:
        raise MassNotDominant(f"tail mass {mt:.6g} must exceed 1/2")
    across = in_tail[:, None] != in_tail[None, :]
    both = in_tail[:, None] & in_tail[None, :]
    mat = np.where(across, p[None, :] / mt, 0.0) + np.where(both, p[None, :] * (2 * mt - 1) / mt**2, 0.0)
    return validate_kernel(mat, pi)


def glauber_kernel(d: int, beta: float) -> Kernel:
    """Single-site Metropolis flips with a uniformly chosen coordinate."""
    pi = cw_distribution(d, beta)
    lw = cw_log_weights(d, beta)
    n = 1 << d
    x = np.arange(n)
    mat = np.zeros((n, n))
    for j in range(d):
        y = x ^ (1 << j)
        mat[x, y] = np.minimum(1.0, np.exp(lw[y] - lw[x])) / d
    mat[x, x] = 1.0 - mat.sum(axis=1)
    return validate_kernel(mat, pi)


def worst_tv(matrix: np.ndarray, pi: np.ndarray) -> float:
    return float(0.5 * np.max(np.abs(matrix - pi[None, :]).sum(axis=1)))


def mixing_time_exact(P: Kernel, eps: float, cap: int = 10**6) -> int:
    """Smallest t >= 1 with worst-start total variation below eps.

    The worst-start distance is non-increasing in t, so the answer is found
    by doubling followed by binary lifting over the stored dyadic powers.
    """
    if P.n > MAX_MIXING_N:
        raise TooLarge(f"n={P.n} exceeds {MAX_MIXING_N}")
    pi = P.pi
    powers = [P.matrix]
    if worst_tv(powers[0], pi) < eps:
        return 1
    while True:
        if (1 << len(powers)) > 2 * cap:
            raise NoConvergence(f"total variation still >= {eps} after {cap} steps")
        nxt = powers[-1] @ powers[-1]
        if worst_tv(nxt, pi) < eps:
            break
        powers.append(nxt)
    # invariant: P^t fails, P^(t + 2^len(powers)) succeeds
    t = 1 << (len(powers) - 1)
    current = powers[-1]
    for b in range(len(powers) - 2, -1, -1):
        trial = current @ powers[b]
        if worst_tv(trial, pi) >= eps:
            t += 1 << b
            current = trial
    if t + 1 > cap:
        raise NoConvergence(f"total variation still >= {eps} after {cap} steps")
    return t + 1


def star_mixing_upper_bound(d: int, beta: float, delta: float, eps: float) -> float:
    return (d * beta / 2 + d * math.log(2) - math.log(eps)) / (2 * delta)


def glauber_mixing_lower_bound(d: int, beta: float, eps: float) -> float:
    return (math.exp(beta * d) / 4**d - 1) * math.log(1 / (2 * eps))


def partition_function_bound(d: int, beta: float) -> float:
    return 2**d * math.exp(d * beta / 2)


@lru_cache(maxsize=64)
def _star_tables(d: int, beta: float, kcut: int) -> tuple[np.ndarray, np.ndarray, float]:
    masses = cw_orbit_masses(d, beta)
    mt = float(masses[kcut:].sum())
    if mt <= 0.5:
        raise MassNotDominant(f"tail mass {mt:.6g} must exceed 1/2")
    head = masses[:kcut] / masses[:kcut].sum()
    tail = masses[kcut:] / mt
    return np.cumsum(head), np.cumsum(tail), mt


def _pick(cum: np.ndarray, u: float) -> int:
    return min(int(np.searchsorted(cum, u * cum[-1], side="right")), cum.size - 1)


def cw_star_step(state, model: CwModel, kcut: int, rng: np.random.Generator) -> np.ndarray:
    """One move of the star sampler on a +/-1 spin vector, without enumerating states.

    Consumes exactly one ``rng.random(d + 3)`` draw per call.
    """
    d = model.d
    spins = np.asarray(state)
    head, tail, mt = _star_tables(d, float(model.beta), kcut)
    u = rng.random(d + 3)
    i_now = abs(int(np.count_nonzero(spins > 0)) - d // 2)
    if i_now < kcut or u[0] < 2.0 - 1.0 / mt:
        i = kcut + _pick(tail, u[1])
    else:
        i = _pick(head, u[1])
    npos = d // 2 + i
    idx = list(range(d))
    for t in range(npos):
        j = t + min(int(u[3 + t] * (d - t)), d - t - 1)
        idx[t], idx[j] = idx[j], idx[t]
    out = -np.ones(d, dtype=np.int8)
    out[idx[:npos]] = 1
    if i > 0 and u[2] < 0.5:
        out = -out
    return out


def spins_to_state(spins) -> int:
    s = np.asarray(spins)
    return int(np.sum((s > 0).astype(np.int64) << np.arange(s.size)))


def state_to_spins(x: int, d: int) -> np.ndarray:
    return np.where((x >> np.arange(d)) & 1, 1, -1).astype(np.int8)
