"""Learning an orbit partition from sampler trajectories: adaptive tuning and exploratory runs."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Distribution, Kernel, OrbitPartition, gibbs_kernel, sandwich, validate_kernel
from .errors import ConfigParse


@dataclass(frozen=True)
class TuneConfig:
    k: int
    block_len: int = 50
    total_steps: int = 5000
    beta_explore: float | None = None
    beta_target: float | None = None
    seed: int = 0
    rank_by: str = "energy"  # or "frequency"
    start: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ConfigParse("k must be at least 1")
        if self.block_len < 1:
            raise ConfigParse("block_len must be at least 1")
        if self.total_steps < 0:
            raise ConfigParse("total_steps must be non-negative")
        if self.rank_by not in ("energy", "frequency"):
            raise ConfigParse("rank_by must be 'energy' or 'frequency'")


@dataclass(frozen=True, eq=False)
class LearnedAction:
    partition: OrbitPartition
    merged: tuple[int, ...]
    visit_counts: np.ndarray = field(repr=False)
    f_values: np.ndarray = field(repr=False)


def merge_partition(n: int, merged) -> OrbitPartition:
    """One orbit holding ``merged``; every other state alone."""
    merged = sorted(set(int(x) for x in merged))
    rest = [[x] for x in range(n) if x not in set(merged)]
    return OrbitPartition.from_orbits(([merged] if merged else []) + rest, n)


def select_merged(counts: np.ndarray, first_visit: np.ndarray, F: np.ndarray, k: int, rank_by: str) -> tuple[int, ...]:
    """The k visited states ranked first by F (or by visit count); ties by first visit, then index."""
    visited = np.flatnonzero(counts > 0)
    if rank_by == "energy":
        primary = F[visited]
    else:
        primary = -counts[visited].astype(float)
    order = np.lexsort((visited, first_visit[visited], primary))
    chosen = visited[order[:k]]
    return tuple(sorted(int(x) for x in chosen))


class _Sampler:
    """Inverse-CDF draws from kernel rows and within-orbit Gibbs moves."""

    def __init__(self, P: Kernel, rng: np.random.Generator):
        self.cum = np.cumsum(P.matrix, axis=1)
        self.pi = P.pi
        self.rng = rng

    def kernel_move(self, x: int) -> int:
        row = self.cum[x]
        return min(int(np.searchsorted(row, self.rng.random() * row[-1], side="right")), row.size - 1)

    def gibbs_move(self, x: int, part: OrbitPartition) -> int:
        orbit = part.orbit_of(x)
        u = self.rng.random()
        if len(orbit) == 1:
            return x
        w = np.cumsum(self.pi[list(orbit)])
        return orbit[min(int(np.searchsorted(w, u * w[-1], side="right")), len(orbit) - 1)]


def adaptive_tune(P: Kernel, F, cfg: TuneConfig, rng: np.random.Generator):
    """Run G_t P G_t in blocks, re-learning G_t after every block.

    ``F`` is an energy per state (lower = more probable); ``None`` uses -log pi.
    Returns the list of learned actions (one per block) and the trajectory.
    """
    n = P.n
    F = -np.log(P.pi) if F is None else np.asarray(F, dtype=float)
    sampler = _Sampler(P, rng)
    part = OrbitPartition.singletons(n)
    counts = np.zeros(n, dtype=np.int64)
    first = np.full(n, np.iinfo(np.int64).max)
    traj = np.empty(cfg.total_steps, dtype=np.int64)
    actions: list[LearnedAction] = []
    x = cfg.start
    for t in range(cfg.total_steps):
        x = sampler.gibbs_move(x, part)
        x = sampler.kernel_move(x)
        x = sampler.gibbs_move(x, part)
        traj[t] = x
        counts[x] += 1
        first[x] = min(first[x], t)
        if (t + 1) % cfg.block_len == 0 or t + 1 == cfg.total_steps:
            merged = select_merged(counts, first, F, cfg.k, cfg.rank_by)
            part = merge_partition(n, merged)
            actions.append(LearnedAction(part, merged, counts.copy(), F))
    return actions, traj


def metropolis_uniform_kernel(pi: Distribution) -> Kernel:
    """Metropolis kernel whose proposal is uniform over the other states."""
    n = pi.n
    p = pi.probs
    off = np.minimum(1.0, p[None, :] / p[:, None]) / max(n - 1, 1)
    np.fill_diagonal(off, 0.0)
    np.fill_diagonal(off, 1.0 - off.sum(axis=1))
    return validate_kernel(off, pi)


def gibbs_from_energy(F, beta: float) -> Distribution:
    return Distribution.from_log_weights(-beta * np.asarray(F, dtype=float))


def exploratory_learn(F, beta_explore: float, beta_target: float, k: int, steps: int,
                      rng: np.random.Generator, base_kernel=None, start: int = 0):
    """Learn a partition from a hot chain, then freeze it for the cold target.

    ``base_kernel(beta)`` builds the sampler P at a given inverse temperature;
    it defaults to the uniform-proposal Metropolis kernel. Returns
    ``(action, G, GPG)`` with G and GPG built for ``beta_target``.
    """
    if not beta_explore < beta_target:
        raise ConfigParse("beta_explore must be below beta_target")
    F = np.asarray(F, dtype=float)
    build = base_kernel or (lambda b: metropolis_uniform_kernel(gibbs_from_energy(F, b)))
    hot = build(beta_explore)
    sampler = _Sampler(hot, rng)
    n = F.size
    counts = np.zeros(n, dtype=np.int64)
    first = np.full(n, np.iinfo(np.int64).max)
    x = start
    for t in range(steps):
        x = sampler.kernel_move(x)
        counts[x] += 1
        first[x] = min(first[x], t)
    merged = select_merged(counts, first, F, k, "energy")
    part = merge_partition(n, merged)
    cold = build(beta_target)
    G = gibbs_kernel(part, cold.reference)
    return LearnedAction(part, merged, counts, F), G, sandwich(G, cold, G)
