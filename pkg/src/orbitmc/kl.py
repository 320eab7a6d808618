"""KL divergence between kernels under pi, membership in the Gibbs-invariant set, and projections onto it."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tolerances
from .core import (
    Kernel,
    OrbitKernelKind,
    OrbitPartition,
    _check_same_reference,
    build_orbit_kernel,
    gibbs_sandwich_closed_form,
    orbit_flow,
    validate_kernel,
)
from .errors import QNotInvariant, SupportViolation


@dataclass(frozen=True, eq=False)
class InvariantSetCertificate:
    """Q belongs to the invariant set; ``c`` holds its orbit-level coefficients."""

    c: np.ndarray
    residual: float

    def __bool__(self) -> bool:
        return True


@dataclass(frozen=True, eq=False)
class NotMember:
    """Q is not fixed by the Gibbs sandwich; ``residual`` is the max entrywise deviation."""

    c: np.ndarray
    residual: float

    def __bool__(self) -> bool:
        return False


def kl_divergence(P: Kernel, Q: Kernel) -> float:
    """``sum_x pi(x) sum_y P(x,y) log(P(x,y)/Q(x,y))`` in nats, with 0 log 0 = 0."""
    _check_same_reference(P, Q)
    thr = tolerances.get().support
    p, q = P.matrix, Q.matrix
    live = p > thr
    if np.any(live & (q <= thr)):
        x, y = np.argwhere(live & (q <= thr))[0]
        raise SupportViolation(f"P({x},{y}) > 0 but Q({x},{y}) = 0")
    terms = np.zeros_like(p)
    terms[live] = p[live] * np.log(p[live] / q[live])
    return float(np.sum(P.pi[:, None] * terms))


def lift_coefficients(c: np.ndarray, part: OrbitPartition, pi: np.ndarray) -> np.ndarray:
    """Kernel ``Q(x,y) = c[i,j] pi(y) / pi(O_j)`` for x in O_i, y in O_j."""
    mass = np.bincount(part.state_to_orbit, weights=pi, minlength=part.k)
    s = part.state_to_orbit
    return (c / mass[None, :])[s][:, s] * pi[None, :]


def invariant_set_membership(Q: Kernel, part: OrbitPartition):
    """Return an :class:`InvariantSetCertificate` if GQG = Q, else :class:`NotMember`."""
    mass = part.masses(Q.reference)
    c = orbit_flow(Q, part) / mass[:, None]
    residual = float(np.max(np.abs(lift_coefficients(c, part, Q.pi) - Q.matrix)))
    if residual <= tolerances.get().membership:
        return InvariantSetCertificate(c, residual)
    return NotMember(c, residual)


def is_member(Q: Kernel, part: OrbitPartition) -> bool:
    return bool(invariant_set_membership(Q, part))


def information_projection(P: Kernel, part: OrbitPartition) -> Kernel:
    """KL projection of P onto the invariant set, i.e. GPG."""
    return validate_kernel(gibbs_sandwich_closed_form(P, part), P.reference)


def _require_member(Q: Kernel, part: OrbitPartition) -> None:
    cert = invariant_set_membership(Q, part)
    if not cert:
        raise QNotInvariant(f"Q is not in the invariant set (residual {cert.residual:.3g})")


def pythagorean_residual(P: Kernel, Q: Kernel, part: OrbitPartition) -> float:
    """``D(P||Q) - D(P||GPG) - D(GPG||Q)``; zero up to round-off for Q in the invariant set."""
    _require_member(Q, part)
    proj = information_projection(P, part)
    return kl_divergence(P, Q) - kl_divergence(P, proj) - kl_divergence(proj, Q)


def dpi_gap(P: Kernel, Q: Kernel, side: str, kind, part: OrbitPartition) -> float:
    """``D(P||Q) - D(PK||Q)`` (side="right") or ``D(P||Q) - D(KP||Q)`` (side="left"), K = M or B."""
    _require_member(Q, part)
    kind = OrbitKernelKind(kind)
    if kind is OrbitKernelKind.GIBBS:
        raise ValueError("kind must be 'mh' or 'barker'")
    K = build_orbit_kernel(kind, part, P.reference)
    if side == "right":
        moved = P.matrix @ K.matrix
    elif side == "left":
        moved = K.matrix @ P.matrix
    else:
        raise ValueError("side must be 'left' or 'right'")
    return kl_divergence(P, Q) - kl_divergence(validate_kernel(moved, P.reference), Q)
