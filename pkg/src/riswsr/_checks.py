"""Opt-in invariant assertions executed inside the solver loops.

Disabled by default; the test suite switches them on so that unit modulus and
the power budget are verified after every block update.
"""

from contextlib import contextmanager
import os

import numpy as np

_enabled = os.environ.get("RISWSR_CHECK_INVARIANTS", "") not in ("", "0")

UNIT_MODULUS_TOL = 1e-12
POWER_TOL = 1e-9


class InvariantViolation(AssertionError):
    pass


def enabled() -> bool:
    return _enabled


def set_enabled(flag: bool) -> None:
    global _enabled
    _enabled = bool(flag)


@contextmanager
def invariant_checks(flag: bool = True):
    old = _enabled
    set_enabled(flag)
    try:
        yield
    finally:
        set_enabled(old)


def unit_modulus(theta, where: str = "") -> None:
    if _enabled and np.size(theta):
        err = np.max(np.abs(np.abs(theta) - 1.0))
        if err > UNIT_MODULUS_TOL:
            raise InvariantViolation(f"unit modulus violated by {err:.3e} {where}")


def power(W, p_max: float, where: str = "") -> None:
    if _enabled:
        p = float(np.sum(np.abs(W) ** 2))
        if p > p_max + POWER_TOL * max(1.0, p_max):
            raise InvariantViolation(f"power {p!r} exceeds budget {p_max!r} {where}")
