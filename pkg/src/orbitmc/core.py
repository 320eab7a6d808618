"""Distributions, orbit partitions, kernels and the three orbit kernels.

States are 0-based throughout the Python API. File formats use 1-based
indices (see :mod:`orbitmc.io`).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import tolerances
from .errors import (
    AlphaOutOfRange,
    DimensionMismatch,
    InternalConsistencyError,
    InvalidDistribution,
    InvalidPartition,
    NonStochastic,
)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Distribution:
    """Full-support probability vector on ``n`` states."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise InvalidDistribution("probabilities must be a non-empty vector")
        if not np.all(np.isfinite(p)) or np.any(p <= 0):
            raise InvalidDistribution("every probability must be strictly positive")
        if abs(p.sum() - 1.0) > tolerances.get().normalisation:
            raise InvalidDistribution(f"probabilities sum to {p.sum()!r}, not 1")
        object.__setattr__(self, "probs", _frozen(p))

    @classmethod
    def from_weights(cls, weights: Iterable[float]) -> "Distribution":
        w = np.asarray(list(weights) if not isinstance(weights, np.ndarray) else weights, dtype=float)
        return cls(w / w.sum())

    @classmethod
    def from_log_weights(cls, log_weights) -> "Distribution":
        lw = np.asarray(log_weights, dtype=float)
        w = np.exp(lw - lw.max())
        return cls(w / w.sum())

    @classmethod
    def uniform(cls, n: int) -> "Distribution":
        return cls(np.full(n, 1.0 / n))

    @property
    def n(self) -> int:
        return self.probs.size

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, idx):
        return self.probs[idx]

    def allclose(self, other: "Distribution", atol: float | None = None) -> bool:
        atol = tolerances.get().stochastic if atol is None else atol
        return self.n == other.n and bool(np.allclose(self.probs, other.probs, rtol=0, atol=atol))


@dataclass(frozen=True, eq=False)
class OrbitPartition:
    """Partition of ``range(n)`` into nonempty orbits.

    Orbit order is significant: projection chains and orbit-space samplers
    are indexed by it. States inside an orbit are stored sorted.
    """

    orbits: tuple[tuple[int, ...], ...]
    state_to_orbit: np.ndarray = field(repr=False)

    @classmethod
    def from_orbits(cls, orbits: Iterable[Iterable[int]], n: int | None = None) -> "OrbitPartition":
        orbits = tuple(tuple(sorted(int(x) for x in o)) for o in orbits)
        if not orbits or any(len(o) == 0 for o in orbits):
            raise InvalidPartition("a partition needs at least one orbit and no empty orbits")
        flat = [x for o in orbits for x in o]
        if n is None:
            n = max(flat) + 1
        if len(flat) != n or sorted(flat) != list(range(n)):
            raise InvalidPartition("orbits must be disjoint and cover 0..n-1 exactly")
        labels = np.empty(n, dtype=np.intp)
        for i, o in enumerate(orbits):
            labels[list(o)] = i
        labels.setflags(write=False)
        return cls(orbits, labels)

    @classmethod
    def from_labels(cls, labels: Sequence[int]) -> "OrbitPartition":
        """Orbits are ordered by their smallest member."""
        labels = np.asarray(labels)
        groups: dict[int, list[int]] = {}
        for x, lab in enumerate(labels.tolist()):
            groups.setdefault(lab, []).append(x)
        ordered = sorted(groups.values(), key=lambda o: o[0])
        return cls.from_orbits(ordered, n=labels.size)

    @classmethod
    def from_labels_ordered(cls, labels: Sequence[int], k: int) -> "OrbitPartition":
        """Orbit i is the set of states labelled i; labels must cover 0..k-1."""
        labels = np.asarray(labels)
        return cls.from_orbits([np.flatnonzero(labels == i).tolist() for i in range(k)], n=labels.size)

    @classmethod
    def singletons(cls, n: int) -> "OrbitPartition":
        return cls.from_orbits([[x] for x in range(n)], n)

    @classmethod
    def single(cls, n: int) -> "OrbitPartition":
        return cls.from_orbits([range(n)], n)

    @property
    def n(self) -> int:
        return self.state_to_orbit.size

    @property
    def k(self) -> int:
        return len(self.orbits)

    @property
    def sizes(self) -> np.ndarray:
        return np.array([len(o) for o in self.orbits])

    def orbit_of(self, x: int) -> tuple[int, ...]:
        return self.orbits[self.state_to_orbit[x]]

    def masses(self, pi: Distribution) -> np.ndarray:
        """Orbit masses ``pi(O_1), ..., pi(O_k)``."""
        _check_n(self.n, pi.n)
        return np.bincount(self.state_to_orbit, weights=pi.probs, minlength=self.k)

    def indicator(self) -> np.ndarray:
        """n x k 0/1 matrix with a one where state x lies in orbit i."""
        u = np.zeros((self.n, self.k))
        u[np.arange(self.n), self.state_to_orbit] = 1.0
        return u

    def same_orbit(self) -> np.ndarray:
        s = self.state_to_orbit
        return s[:, None] == s[None, :]

    def canonical(self) -> tuple[tuple[int, ...], ...]:
        """Order-independent form used for equality tests."""
        return tuple(sorted(self.orbits))

    def __eq__(self, other):
        if not isinstance(other, OrbitPartition):
            return NotImplemented
        return self.canonical() == other.canonical()

    def __hash__(self):
        return hash(self.canonical())


class OrbitKernelKind(enum.Enum):
    GIBBS = "gibbs"
    METROPOLIS_HASTINGS = "mh"
    BARKER = "barker"


@dataclass(frozen=True, eq=False)
class Kernel:
    """Row-stochastic matrix together with its reference distribution.

    ``stationary`` and ``reversible`` are ``True``/``False`` when checked
    and ``None`` when not. ``origin`` records ``(kind, partition)`` for
    kernels built by :func:`build_orbit_kernel`.
    """

    matrix: np.ndarray
    reference: Distribution
    row_stochastic: bool | None = None
    stationary: bool | None = None
    reversible: bool | None = None
    origin: tuple[OrbitKernelKind, OrbitPartition] | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def pi(self) -> np.ndarray:
        return self.reference.probs

    def flags(self) -> dict[str, bool | None]:
        return {
            "row_stochastic": self.row_stochastic,
            "stationary": self.stationary,
            "reversible": self.reversible,
        }

    def __matmul__(self, other: "Kernel") -> "Kernel":
        _check_same_reference(self, other)
        return validate_kernel(self.matrix @ other.matrix, self.reference)


def _check_n(a: int, b: int) -> None:
    if a != b:
        raise DimensionMismatch(f"dimension {a} does not match {b}")


def _check_same_reference(*kernels: Kernel) -> None:
    first = kernels[0]
    for K in kernels[1:]:
        _check_n(first.n, K.n)
        if K.reference is not first.reference and not first.reference.allclose(K.reference):
            raise DimensionMismatch("kernels have different reference distributions")


def is_stationary(matrix: np.ndarray, pi: np.ndarray, atol: float | None = None) -> bool:
    atol = tolerances.get().stochastic if atol is None else atol
    return bool(np.max(np.abs(pi @ matrix - pi)) <= atol)


def is_reversible(matrix: np.ndarray, pi: np.ndarray, atol: float | None = None) -> bool:
    atol = tolerances.get().stochastic if atol is None else atol
    flow = pi[:, None] * matrix
    return bool(np.max(np.abs(flow - flow.T)) <= atol)


def validate_kernel(matrix, pi: Distribution) -> Kernel:
    """Check a matrix against ``pi`` and return it as a :class:`Kernel`.

    Raises ``NonStochastic`` for out-of-range entries or bad row sums and
    ``DimensionMismatch`` for shape problems. Stationarity and
    reversibility are recorded as flags, not enforced.
    """
    tol = tolerances.get()
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"kernel must be square, got shape {a.shape}")
    _check_n(a.shape[0], pi.n)
    if not np.all(np.isfinite(a)):
        raise NonStochastic("kernel has non-finite entries")
    if a.min() < -tol.entry or a.max() > 1 + tol.entry:
        raise NonStochastic("kernel entries must lie in [0, 1]")
    row_err = np.max(np.abs(a.sum(axis=1) - 1.0))
    if row_err > tol.stochastic:
        raise NonStochastic(f"row sums deviate from 1 by {row_err:.3g}")
    return Kernel(
        _frozen(a),
        pi,
        row_stochastic=True,
        stationary=is_stationary(a, pi.probs),
        reversible=is_reversible(a, pi.probs),
    )


def identity_kernel(pi: Distribution) -> Kernel:
    return validate_kernel(np.eye(pi.n), pi)


def stationary_projector(pi: Distribution) -> Kernel:
    """The kernel ``Pi`` whose every row is ``pi``."""
    return validate_kernel(np.tile(pi.probs, (pi.n, 1)), pi)


def _fill_diagonal(off: np.ndarray) -> np.ndarray:
    diag = 1.0 - off.sum(axis=1)
    eps = tolerances.get().entry
    if diag.min() < -eps:
        raise NonStochastic(f"off-diagonal mass exceeds 1 by {-diag.min():.3g}")
    np.fill_diagonal(off, np.clip(diag, 0.0, None))
    return off


def build_orbit_kernel(kind: OrbitKernelKind | str, part: OrbitPartition, pi: Distribution) -> Kernel:
    """Gibbs, Metropolis-Hastings or Barker kernel moving only within orbits."""
    kind = OrbitKernelKind(kind)
    _check_n(part.n, pi.n)
    p = pi.probs
    same = part.same_orbit()
    if kind is OrbitKernelKind.GIBBS:
        mass = part.masses(pi)[part.state_to_orbit]
        mat = np.where(same, p[None, :] / mass[:, None], 0.0)
    else:
        sizes = part.sizes[part.state_to_orbit].astype(float)
        off_mask = same & ~np.eye(part.n, dtype=bool)
        if kind is OrbitKernelKind.METROPOLIS_HASTINGS:
            accept = np.minimum(1.0, p[None, :] / p[:, None])
        else:
            accept = p[None, :] / (p[:, None] + p[None, :])
        # singleton orbits have no off-diagonal entries, so the divisor is never used there
        denom = np.maximum(sizes - 1.0, 1.0)[:, None]
        mat = _fill_diagonal(np.where(off_mask, accept / denom, 0.0))
    K = validate_kernel(mat, pi)
    return Kernel(K.matrix, pi, True, K.stationary, K.reversible, origin=(kind, part))


def gibbs_kernel(part: OrbitPartition, pi: Distribution) -> Kernel:
    return build_orbit_kernel(OrbitKernelKind.GIBBS, part, pi)


def orbit_flow(P: Kernel, part: OrbitPartition) -> np.ndarray:
    """k x k matrix of ``sum_{z in O_i, w in O_j} pi(z) P(z, w)``."""
    _check_n(P.n, part.n)
    U = part.indicator()
    return U.T @ (P.pi[:, None] * P.matrix) @ U


def gibbs_sandwich_closed_form(P: Kernel, part: OrbitPartition) -> np.ndarray:
    """GPG evaluated entrywise from the orbit-block formula."""
    mass = part.masses(P.reference)
    s = part.state_to_orbit
    F = orbit_flow(P, part) / np.outer(mass, mass)
    return F[s][:, s] * P.pi[None, :]


def sandwich(Q1: Kernel, P: Kernel, Q2: Kernel) -> Kernel:
    """The product ``Q1 P Q2``.

    When both outer kernels are Gibbs kernels on the same partition the
    product is cross-checked against the closed-form block formula.
    """
    _check_same_reference(Q1, P, Q2)
    product = Q1.matrix @ P.matrix @ Q2.matrix
    if (
        Q1.origin is not None
        and Q2.origin is not None
        and Q1.origin[0] is OrbitKernelKind.GIBBS
        and Q2.origin[0] is OrbitKernelKind.GIBBS
        and Q1.origin[1].orbits == Q2.origin[1].orbits
    ):
        closed = gibbs_sandwich_closed_form(P, Q1.origin[1])
        err = np.max(np.abs(closed - product))
        if err > tolerances.get().algebraic:
            raise InternalConsistencyError(f"GPG product and closed form differ by {err:.3g}")
    return validate_kernel(product, P.reference)


def additive_mixture(alpha: float, P: Kernel, Q: Kernel) -> Kernel:
    """``alpha P + (1 - alpha) Q``."""
    if not 0.0 <= alpha <= 1.0:
        raise AlphaOutOfRange(f"alpha={alpha} is not in [0, 1]")
    _check_same_reference(P, Q)
    return validate_kernel(alpha * P.matrix + (1.0 - alpha) * Q.matrix, P.reference)


def lazify(P: Kernel) -> Kernel:
    return additive_mixture(0.5, P, identity_kernel(P.reference))


def has_deterministic_two_cycle(part: OrbitPartition, pi: Distribution) -> bool:
    """True when some orbit of size 2 carries two equal masses (M flips deterministically)."""
    eps = tolerances.get().algebraic
    return any(len(o) == 2 and abs(pi[o[0]] - pi[o[1]]) <= eps for o in part.orbits)


def power_distance_to_gibbs(
    kind: OrbitKernelKind | str, part: OrbitPartition, pi: Distribution, t: int
) -> float:
    """Max-norm distance between ``K^t`` and ``G`` for K = M or B."""
    if t < 1:
        raise ValueError("t must be a positive integer")
    K = build_orbit_kernel(kind, part, pi)
    G = gibbs_kernel(part, pi)
    return float(np.max(np.abs(np.linalg.matrix_power(K.matrix, t) - G.matrix)))
