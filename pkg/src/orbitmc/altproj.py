"""Several orbit partitions at once: overlaps, cosines, the limiting projection and exact schedules."""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .core import Distribution, Kernel, OrbitPartition, _check_n, gibbs_kernel
from .errors import BadShape, NotFactorable


class DisjointSet:
    """Union-find with union by size and path compression."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n
        self.trace: list[tuple[int, int]] = []

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        self.trace.append((ra, rb))
        return True

    def classes(self) -> list[list[int]]:
        """Classes sorted internally and ordered by smallest member."""
        groups: dict[int, list[int]] = {}
        for x in range(len(self.parent)):
            groups.setdefault(self.find(x), []).append(x)
        return sorted(groups.values(), key=lambda c: c[0])


@dataclass(frozen=True, eq=False)
class EquivalenceClasses:
    classes: OrbitPartition
    generator: tuple[tuple[int, int], ...]


@dataclass(frozen=True, eq=False)
class OverlapMatrix:
    t: np.ndarray
    singular_values: np.ndarray


def join(parts) -> EquivalenceClasses:
    """Finest partition that every input partition refines."""
    parts = list(parts)
    if not parts:
        raise ValueError("need at least one partition")
    n = parts[0].n
    ds = DisjointSet(n)
    for part in parts:
        _check_n(part.n, n)
        for orbit in part.orbits:
            for x in orbit[1:]:
                ds.union(orbit[0], x)
    return EquivalenceClasses(OrbitPartition.from_orbits(ds.classes(), n), tuple(ds.trace))


def limiting_projection(parts, pi: Distribution) -> tuple[EquivalenceClasses, Kernel]:
    """Classes of the join and the Gibbs kernel on them (the limit of repeated orbit projections)."""
    eq = join(parts)
    return eq, gibbs_kernel(eq.classes, pi)


def overlap_matrix(part1: OrbitPartition, part2: OrbitPartition, pi: Distribution) -> OverlapMatrix:
    """``T[j, i] = pi(O_i & C_j) / sqrt(pi(O_i) pi(C_j))`` with O from part1 and C from part2."""
    _check_n(part1.n, part2.n)
    _check_n(part1.n, pi.n)
    inter = np.zeros((part2.k, part1.k))
    np.add.at(inter, (part2.state_to_orbit, part1.state_to_orbit), pi.probs)
    t = inter / np.sqrt(np.outer(part2.masses(pi), part1.masses(pi)))
    return OverlapMatrix(t, np.linalg.svd(t, compute_uv=False))


def cosine(part1: OrbitPartition, part2: OrbitPartition, pi: Distribution, one_tol: float = 1e-10) -> float:
    """Cosine of the angle between the spaces of orbit-constant functions.

    The largest singular value of the overlap matrix that is strictly
    below one; singular values equal to one belong to the join and are
    skipped. Zero when nothing is left.
    """
    sv = overlap_matrix(part1, part2, pi).singular_values
    below = sv[sv < 1.0 - one_tol]
    return float(below[0]) if below.size else 0.0


def operator_norm(matrix, pi) -> float:
    """Norm of ``matrix`` as an operator on l2(pi)."""
    s = np.sqrt(np.asarray(pi, dtype=float))
    return float(np.linalg.norm(s[:, None] * np.asarray(matrix) / s[None, :], 2))


def cosine_by_operator_norm(part1: OrbitPartition, part2: OrbitPartition, pi: Distribution) -> float:
    """``||G1 G2 - G_inf||`` on l2(pi), computed from dense kernels."""
    G1 = gibbs_kernel(part1, pi).matrix
    G2 = gibbs_kernel(part2, pi).matrix
    _, Ginf = limiting_projection([part1, part2], pi)
    return operator_norm(G1 @ G2 - Ginf.matrix, pi.probs)


def generalized_cosine(parts, pi: Distribution) -> float:
    """``sqrt(1 - prod(1 - c_i^2))`` with c_i the cosine of part i against the join of the later parts."""
    parts = list(parts)
    if len(parts) < 2:
        raise ValueError("need at least two partitions")
    prod = 1.0
    for i in range(len(parts) - 1):
        c = cosine(parts[i], join(parts[i + 1 :]).classes, pi)
        prod *= 1.0 - c * c
    return float(np.sqrt(max(0.0, 1.0 - prod)))


def product_of_gibbs(parts, pi: Distribution) -> np.ndarray:
    return reduce(np.matmul, (gibbs_kernel(p, pi).matrix for p in parts))


def uniform_grid_partitions(n: int, m: int, k: int) -> tuple[OrbitPartition, OrbitPartition]:
    """Contiguous blocks of size k and residue classes mod m, for n = m k.

    Under uniform pi the two Gibbs kernels multiply to Pi exactly when m divides k.
    """
    if m < 1 or k < 1 or m * k != n:
        raise NotFactorable(f"n={n} is not m*k with m={m}, k={k}")
    blocks = [list(range(i * k, (i + 1) * k)) for i in range(m)]
    residues = [list(range(j, n, m)) for j in range(m)]
    return OrbitPartition.from_orbits(blocks, n), OrbitPartition.from_orbits(residues, n)


def grid_is_exact(m: int, k: int) -> bool:
    return k % m == 0


def _schedule_block(block: list[int], e: int) -> list[list[list[int]]]:
    if e == 1:
        return [[block]]
    t = 1 << (e // 2)
    chunks = [block[i * t : (i + 1) * t] for i in range(t)]
    residues = [block[j::t] for j in range(t)]
    out = []
    for group in (chunks, residues):
        subs = [_schedule_block(g, e // 2) for g in group]
        out.extend([orb for sub in subs for orb in sub[r]] for r in range(len(subs[0])))
    return out


def recursive_exact_schedule(d: int) -> list[OrbitPartition]:
    """d partitions of 2^d states whose Gibbs kernels multiply, in order, to Pi under uniform pi."""
    if d < 2 or d & (d - 1):
        raise BadShape(f"d={d} must be a power of two, at least 2")
    n = 1 << d
    return [OrbitPartition.from_orbits(p, n) for p in _schedule_block(list(range(n)), d)]


def transposition_partitions(n: int) -> list[OrbitPartition]:
    """n-1 partitions; the i-th pairs state 0 with state i and leaves the rest alone."""
    return [
        OrbitPartition.from_orbits([[0, i]] + [[x] for x in range(1, n) if x != i], n)
        for i in range(1, n)
    ]


def v_shaped_model(m: int, k: int, beta: float):
    """Distribution with m^2 identical V-shaped wells and the partitions that split them evenly.

    Returns ``(pi, wells, rows, cols)``: ``wells`` are the m^2 contiguous blocks of
    2k states, ``rows`` groups m consecutive wells, ``cols`` takes every m-th well.
    """
    if m < 1 or k < 1:
        raise ValueError("m and k must be positive")
    n = 2 * m * m * k
    x = np.arange(1, n + 1)
    pi = Distribution.from_log_weights(beta * np.abs(x % (2 * k) - (k + 1)))
    wells = [list(range(i * 2 * k, (i + 1) * 2 * k)) for i in range(m * m)]
    rows = [[s for l in range(m) for s in wells[i * m + l]] for i in range(m)]
    cols = [[s for l in range(m) for s in wells[j + l * m]] for j in range(m)]
    return (
        pi,
        OrbitPartition.from_orbits(wells, n),
        OrbitPartition.from_orbits(rows, n),
        OrbitPartition.from_orbits(cols, n),
    )
