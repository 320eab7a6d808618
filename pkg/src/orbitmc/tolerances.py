"""Global numeric tolerances.

Every check in the package reads the active record at call time, so a
single ``override`` (or the CLI ``--tol`` flag) tightens or loosens all of
them together.
"""

from __future__ import annotations

import contextlib
import dataclasses
from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    # row sums, stationarity, reversibility
    stochastic: float = 1e-10
    # algebraic identities (G^2 = G, closed form vs product, ...)
    algebraic: float = 1e-12
    # entry range [0, 1] and the M/B diagonal clamp
    entry: float = 1e-12
    # Distribution normalisation
    normalisation: float = 1e-12
    # structural zero for KL supports
    support: float = 1e-15
    # membership verdict for the G-invariant set
    membership: float = 1e-8
    # singular values counted as 1 when computing cosines
    singular_one: float = 1e-10


_active = Tolerances()


def get() -> Tolerances:
    return _active


def set_tolerances(tol: Tolerances) -> None:
    global _active
    _active = tol


@contextlib.contextmanager
def override(**changes: float):
    """Temporarily replace some fields of the active tolerance record."""
    global _active
    saved = _active
    _active = dataclasses.replace(saved, **changes)
    try:
        yield _active
    finally:
        _active = saved
