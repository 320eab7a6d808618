"""Random instance generators shared by the property tests."""

from __future__ import annotations

import numpy as np

from orbitmc.core import Distribution, Kernel, OrbitPartition, validate_kernel


def random_pi(rng: np.random.Generator, n: int) -> Distribution:
    w = rng.uniform(0.05, 1.0, size=n)
    return Distribution(w / w.sum())


def random_partition(rng: np.random.Generator, n: int) -> OrbitPartition:
    """Balanced random assignment into k < n orbits, so at least one orbit has two states."""
    k = int(rng.integers(1, n))
    labels = rng.permutation(np.arange(n) % k)
    return OrbitPartition.from_labels(labels)


def metropolized(rng: np.random.Generator, pi: Distribution, sparsity: float = 0.3) -> Kernel:
    """Metropolis-Hastings kernel built from a random proposal matrix."""
    n = pi.n
    keep = rng.random((n, n)) > sparsity
    keep = keep | keep.T  # symmetric support keeps the filter well defined
    K = np.where(keep, rng.random((n, n)) + 0.05, 0.0)
    np.fill_diagonal(K, 0.0)
    K = K / np.maximum(K.sum(axis=1, keepdims=True), 1e-300)
    p = pi.probs
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(K > 0, (p[None, :] * K.T) / (p[:, None] * K), 0.0)
    off = K * np.minimum(1.0, ratio)
    np.fill_diagonal(off, 0.0)
    np.fill_diagonal(off, 1.0 - off.sum(axis=1))
    return validate_kernel(off, pi)


def random_instance(seed: int, n_lo: int = 3, n_hi: int = 12):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(n_lo, n_hi + 1))
    pi = random_pi(rng, n)
    return rng, pi, random_partition(rng, n), metropolized(rng, pi)


def set_partitions(n: int):
    """Every set partition of range(n), via restricted growth strings."""
    def grow(prefix, top):
        if len(prefix) == n:
            yield prefix
            return
        for b in range(top + 2):
            yield from grow(prefix + [b], max(top, b))

    for labels in grow([0], 0):
        yield OrbitPartition.from_labels(labels)


def brute_force_join(parts, n: int) -> set[frozenset[int]]:
    """Transitive closure of 'share an orbit somewhere' by repeated matrix squaring."""
    A = np.eye(n, dtype=bool)
    for part in parts:
        A |= part.same_orbit()
    while True:
        B = (A.astype(int) @ A.astype(int)) > 0
        if (B == A).all():
            break
        A = B
    return {frozenset(np.flatnonzero(A[x]).tolist()) for x in range(n)}

