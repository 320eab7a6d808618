"""Spectra of reversible kernels, the MH orbit constant theta, and asymptotic variance."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import tolerances
from .core import Distribution, Kernel, OrbitKernelKind, OrbitPartition, build_orbit_kernel
from .errors import (
    AllSingletons,
    DegenerateGap,
    NotCentered,
    NotReversible,
    NotSorted,
    SingularFundamentalMatrix,
    ThetaDegenerate,
)


@dataclass(frozen=True, eq=False)
class SpectralSummary:
    eigenvalues: np.ndarray
    slem: float
    right_gap: float
    abs_gap: float

    @property
    def lambda2(self) -> float:
        return float(self.eigenvalues[1]) if self.eigenvalues.size > 1 else 0.0


@dataclass(frozen=True)
class ThetaConstant:
    theta: float
    achieving_orbit: int
    achieving_branch: str  # "top" or "bottom"


def symmetrize(matrix: np.ndarray, pi: np.ndarray) -> np.ndarray:
    """``D^{1/2} P D^{-1/2}``, symmetrised to remove round-off asymmetry."""
    s = np.sqrt(pi)
    A = s[:, None] * matrix / s[None, :]
    return 0.5 * (A + A.T)


def reversible_eigenvalues(matrix, pi) -> np.ndarray:
    """Eigenvalues (non-increasing) of a matrix reversible w.r.t. ``pi``."""
    matrix = np.asarray(matrix, dtype=float)
    pi = np.asarray(pi, dtype=float)
    flow = pi[:, None] * matrix
    if np.max(np.abs(flow - flow.T)) > tolerances.get().stochastic:
        raise NotReversible("matrix is not reversible with respect to pi")
    return np.sort(np.linalg.eigvalsh(symmetrize(matrix, pi)))[::-1]


def _summary(ev: np.ndarray) -> SpectralSummary:
    if ev.size == 1:
        return SpectralSummary(ev, 0.0, 1.0, 1.0)
    slem = float(max(abs(ev[1]), abs(ev[-1])))
    return SpectralSummary(ev, slem, float(1.0 - ev[1]), 1.0 - slem)


def spectrum_reversible(P: Kernel) -> SpectralSummary:
    if P.reversible is False:
        raise NotReversible("kernel is flagged non-reversible")
    return _summary(reversible_eigenvalues(P.matrix, P.pi))


def summary_from_matrix(matrix, pi) -> SpectralSummary:
    return _summary(reversible_eigenvalues(matrix, pi))


def slem(P: Kernel) -> float:
    return spectrum_reversible(P).slem


def lambda2(matrix, pi) -> float:
    """Second largest eigenvalue; 0 for a one-state chain."""
    ev = reversible_eigenvalues(matrix, pi)
    return float(ev[1]) if ev.size > 1 else 0.0


def mh_independence_spectrum(orbit_masses) -> np.ndarray:
    """Eigenvalues of the uniform-proposal independence MH sampler on one orbit.

    ``orbit_masses`` must be sorted non-increasingly; they are normalised
    internally. Returns ``[1, lam_2, ..., lam_m]`` from Liu's closed form.
    """
    w = np.asarray(orbit_masses, dtype=float)
    if np.any(np.diff(w) > 0):
        raise NotSorted("orbit masses must be sorted non-increasingly")
    w = w / w.sum()
    m = w.size
    tails = np.cumsum(w[::-1])[::-1]  # tails[l] = sum_{l' >= l} w[l']
    out = np.empty(m)
    out[0] = 1.0
    for j in range(2, m + 1):
        out[j - 1] = 1.0 - (j - 2) / m - tails[j - 2] / (m * w[j - 2])
    return out


def independence_mh_matrix(orbit_masses) -> np.ndarray:
    """Dense uniform-proposal (self included) independence MH kernel on one orbit."""
    w = np.asarray(orbit_masses, dtype=float)
    w = w / w.sum()
    m = w.size
    A = np.minimum(1.0, w[None, :] / w[:, None]) / m
    np.fill_diagonal(A, 0.0)
    np.fill_diagonal(A, 1.0 - A.sum(axis=1))
    return A


def theta_mh(part: OrbitPartition, pi: Distribution) -> ThetaConstant:
    """SLEM of the MH orbit kernel restricted to functions orthogonal to orbit-constants."""
    best = None
    for i, orbit in enumerate(part.orbits):
        m = len(orbit)
        if m < 2:
            continue
        w = np.sort(pi.probs[list(orbit)])[::-1]
        # ratios first so equal masses give exact values
        top = abs(float(np.sum(w / w[0])) - (m - 1)) / (m - 1)
        bottom = (w[-1] / w[-2]) / (m - 1)
        for value, branch in ((top, "top"), (bottom, "bottom")):
            if best is None or value > best.theta:
                best = ThetaConstant(float(value), i, branch)
    if best is None:
        raise AllSingletons("every orbit is a singleton, so M = I and theta is undefined")
    return best


def theta_from_independence_spectrum(part: OrbitPartition, pi: Distribution) -> float:
    """Theta via the independence-sampler eigenvalues, using M_i = (m Mbar_i - I)/(m-1)."""
    values = []
    for orbit in part.orbits:
        m = len(orbit)
        if m < 2:
            continue
        lam = mh_independence_spectrum(np.sort(pi.probs[list(orbit)])[::-1])
        values.extend(np.abs((m * lam[1:] - 1.0) / (m - 1)))
    if not values:
        raise AllSingletons("every orbit is a singleton, so M = I and theta is undefined")
    return float(max(values))


def orthocomplement_slem(K: Kernel, part: OrbitPartition) -> float:
    """SLEM of ``K`` restricted to the pi-orthocomplement of orbit-constant functions.

    Eigensolver route used to cross-check :func:`theta_mh`.
    """
    s = np.sqrt(K.pi)
    basis = part.indicator() * s[:, None]
    W = scipy.linalg.null_space(basis.T)
    if W.shape[1] == 0:
        return 0.0
    A = W.T @ symmetrize(K.matrix, K.pi) @ W
    return float(np.max(np.abs(np.linalg.eigvalsh(0.5 * (A + A.T)))))


def theta_by_eigensolver(part: OrbitPartition, pi: Distribution) -> float:
    return orthocomplement_slem(build_orbit_kernel(OrbitKernelKind.METROPOLIS_HASTINGS, part, pi), part)


def slem_power_bound(rhoP: float, theta: float, k: int) -> float:
    """Upper bound ``rho(P)(2 theta^k + theta^2k)`` on rho(M^k P M^k) - rho(GPG)."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    return rhoP * (2 * theta**k + theta ** (2 * k))


def approximation_time(eps: float, theta: float, rhoP: float) -> int:
    """Suggested power t so that M^t P M^t approximates GPG within eps."""
    if not 0.0 < theta < 1.0:
        raise ThetaDegenerate(f"theta={theta} must lie strictly inside (0, 1)")
    if eps <= 0:
        raise ValueError("eps must be positive")
    if rhoP <= 0:
        return 0
    inv = math.log(1.0 / theta)
    t = max(math.log(4 * rhoP / eps) / inv, math.log(2 * rhoP / eps) / (2 * inv))
    return max(0, math.ceil(t))


def _inner(f, g, pi) -> float:
    return float(np.sum(pi * f * g))


def _check_centered(f: np.ndarray, pi: np.ndarray) -> None:
    if abs(np.dot(pi, f)) > tolerances.get().stochastic:
        raise NotCentered(f"f has pi-mean {np.dot(pi, f):.3g}")


def fundamental_matrix(P: Kernel) -> np.ndarray:
    """``Z(P) = (I - (P - Pi))^{-1}``; raises when P is not ergodic."""
    n = P.n
    A = np.eye(n) - P.matrix + np.tile(P.pi, (n, 1))
    if np.linalg.cond(A) > 1e12:
        raise SingularFundamentalMatrix("I - P + Pi is singular; P has a repeated unit eigenvalue")
    return np.linalg.inv(A)


def asymptotic_variance(f, P: Kernel) -> float:
    """``2<f, Z(P) f>_pi - <f, f>_pi`` for centered f."""
    f = np.asarray(f, dtype=float)
    _check_centered(f, P.pi)
    Zf = fundamental_matrix(P) @ f
    return 2 * _inner(f, Zf, P.pi) - _inner(f, f, P.pi)


def asymptotic_variance_variational(f, P: Kernel) -> float:
    """Variational form for reversible P, maximised exactly on the centered subspace.

    Works in symmetrised coordinates with an explicit orthonormal basis of
    the pi-centered functions, so it shares no code path with the
    fundamental-matrix route.
    """
    f = np.asarray(f, dtype=float)
    _check_centered(f, P.pi)
    if P.reversible is False:
        raise NotReversible("variational form needs a reversible kernel")
    s = np.sqrt(P.pi)
    W = scipy.linalg.null_space(s[None, :])  # u = s * h is centered iff s.u = 0
    A = W.T @ (np.eye(P.n) - symmetrize(P.matrix, P.pi)) @ W
    b = W.T @ (s * f)
    y = np.linalg.solve(0.5 * (A + A.T), b)
    h = (W @ y) / s
    quad = _inner((np.eye(P.n) - P.matrix) @ h, h, P.pi)
    return 4 * _inner(f, h, P.pi) - 2 * quad - _inner(f, f, P.pi)


def worst_case_variance(P: Kernel) -> float:
    lam2 = spectrum_reversible(P).lambda2
    if lam2 >= 1 - 1e-12:
        raise DegenerateGap(f"lambda_2 = {lam2} leaves no spectral gap")
    return (1 + lam2) / (1 - lam2)
