"""WMMSE beamforming for a fixed RIS configuration.

Each step updates the MMSE receivers, the MSE weights and then the
beamformers, with the power multiplier found by bisection. The beamformer
update is computed through an eigendecomposition of the weighted channel
covariance, so every bisection probe is a cheap scalar evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from riswsr import _checks
from riswsr.errors import NumericalError
from riswsr.model import cross_gains, mrt_beamformer, total_power, wsr_from_channel

__all__ = ["WmmseOptions", "WmmseState", "WmmseResult", "wmmse_step", "wmmse_solve"]


@dataclass(frozen=True)
class WmmseOptions:
    max_iters: int = 200
    obj_tol: float = 1e-6
    bisect_tol: float = 1e-8
    lambda_max0: float = 1.0
    max_bisect: int = 200


@dataclass
class WmmseState:
    chi: np.ndarray
    kappa: np.ndarray
    W: np.ndarray
    lam: float


@dataclass
class WmmseResult:
    W: np.ndarray
    wsr: float
    iterations: int
    converged: bool
    trace: list = field(default_factory=list)


def _power_curve(d, C, lam, mask):
    return float(np.sum(np.abs(C[mask]) ** 2 / (d[mask, None] + lam) ** 2))


def _solve_multiplier(d, C, p_max, opts):
    """Smallest lambda >= 0 whose beamformer meets the power budget."""
    scale = max(float(np.max(np.abs(d))), 1e-300)
    mask = d > 1e-13 * scale
    if _power_curve(d, C, 0.0, mask) <= p_max:
        return 0.0, mask
    # the power is decreasing in lambda; all directions count once lambda > 0
    mask = np.ones_like(d, dtype=bool)
    lo, hi = 0.0, opts.lambda_max0
    for _ in range(2000):
        if _power_curve(d, C, hi, mask) <= p_max:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise NumericalError("could not bracket the power multiplier")
    for _ in range(opts.max_bisect):
        if p_max - _power_curve(d, C, hi, mask) <= opts.bisect_tol * p_max:
            break
        mid = 0.5 * (lo + hi)
        if _power_curve(d, C, mid, mask) > p_max:
            lo = mid
        else:
            hi = mid
    return hi, mask


def wmmse_step(h, W, weights, noise, p_max, opts: WmmseOptions = WmmseOptions()) -> WmmseState:
    g = cross_gains(h, W)
    total = np.sum(np.abs(g) ** 2, axis=1) + noise
    chi = np.diag(g) / total
    mse = 1.0 - np.real(np.conj(chi) * np.diag(g))
    kappa = 1.0 / mse
    A = (h.T * (weights * np.abs(chi) ** 2 * kappa)) @ h.conj()
    rhs = h.T * (weights * chi * kappa)
    d, V = np.linalg.eigh(0.5 * (A + A.conj().T))
    C = V.conj().T @ rhs
    lam, mask = _solve_multiplier(d, C, p_max, opts)
    denom = d + lam
    if np.any(denom[mask] <= 0):
        raise NumericalError("singular regularized WMMSE system")
    inv = np.zeros_like(d)
    inv[mask] = 1.0 / denom[mask]
    W_new = V @ (inv[:, None] * C)
    _checks.power(W_new, p_max, "after WMMSE update")
    return WmmseState(chi=chi, kappa=kappa, W=W_new, lam=lam)


def wmmse_solve(h, weights, noise, p_max, opts: WmmseOptions = WmmseOptions(), W0=None) -> WmmseResult:
    """Run WMMSE iterations from ``W0`` (MRT with equal power by default).

    Stops when the relative WSR change drops below ``opts.obj_tol``; if the
    iteration cap is hit first the best iterate is returned with
    ``converged=False``.
    """
    weights = np.asarray(weights, dtype=float)
    W = mrt_beamformer(h, p_max) if W0 is None else np.array(W0, dtype=complex)
    if total_power(W) > p_max:
        W = W * np.sqrt(p_max / total_power(W))
    obj = wsr_from_channel(h, W, weights, noise)
    trace = [obj]
    best_W, best = W, obj
    converged = False
    it = 0
    for it in range(1, opts.max_iters + 1):
        W = wmmse_step(h, W, weights, noise, p_max, opts).W
        new = wsr_from_channel(h, W, weights, noise)
        trace.append(new)
        if new >= best:
            best_W, best = W, new
        if abs(new - obj) <= opts.obj_tol * max(abs(new), 1e-12):
            converged = True
            break
        obj = new
    return WmmseResult(W=best_W, wsr=best, iterations=it, converged=converged, trace=trace)
