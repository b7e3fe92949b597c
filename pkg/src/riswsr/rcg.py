"""Phase optimization on the complex circle manifold and the alternating baseline.

For a fixed beamformer the WSR is a smooth function of the reflection vector
theta restricted to |theta_n| = 1. It is maximized by Riemannian conjugate
gradient: project the Euclidean gradient onto the tangent space, combine it
with the transported previous direction (Polak-Ribiere+), and retract by
elementwise normalization. Internally the solver descends on -f.

``alternating_optimize`` alternates WMMSE (W for fixed theta) with this solver
(theta for fixed W).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from riswsr import _checks, _kernels
from riswsr.errors import InvalidInputError, NumericalError
from riswsr.model import ChannelSet, LinkBudget, PhaseVector, combined_channel, mrt_beamformer, wsr_from_channel
from riswsr.trace import Trace
from riswsr.wmmse import WmmseOptions, wmmse_solve

__all__ = [
    "EffectiveGains",
    "RcgOptions",
    "RcgResult",
    "AlternatingOptions",
    "AlternatingResult",
    "effective_gains",
    "objective_fC",
    "euclidean_grad_fC",
    "riemannian_grad",
    "transport",
    "transport_and_direction",
    "retract",
    "rcg_solve",
    "alternating_optimize",
]


@dataclass(frozen=True)
class EffectiveGains:
    """``a[i, k] = H_r,k w_i`` with shape (K, K, N); ``b[i, k] = h_d,k^H w_i`` with shape (K, K)."""

    a: np.ndarray
    b: np.ndarray


@dataclass(frozen=True)
class RcgOptions:
    max_iters: int = 500
    grad_norm_tol: float = 1e-6
    armijo_shrink: float = 0.5
    armijo_slope: float = 1e-4
    max_line_search: int = 30
    initial_step: float = 1.0
    # start each line search at twice the last accepted step instead of initial_step
    adaptive_step: bool = True

    def __post_init__(self):
        if not 0 < self.armijo_shrink < 1:
            raise InvalidInputError("armijo_shrink must lie in (0, 1)")
        if not 0 < self.armijo_slope < 0.5:
            raise InvalidInputError("armijo_slope must lie in (0, 0.5)")
        if self.max_iters < 0 or self.max_line_search < 1 or self.grad_norm_tol <= 0:
            raise InvalidInputError("invalid RCG iteration limits")


@dataclass
class RcgResult:
    theta: np.ndarray
    value: float
    iterations: int
    converged: bool
    stalled: bool
    values: list = field(default_factory=list)

    @property
    def phases(self) -> PhaseVector:
        return PhaseVector.from_coefficients(self.theta)


def effective_gains(channels: ChannelSet, W) -> EffectiveGains:
    W = np.asarray(W, dtype=complex)
    K, M = channels.direct.shape
    if W.shape != (M, K):
        raise InvalidInputError(f"beamformer shape {W.shape} != {(M, K)}")
    a = np.einsum("knm,mi->ikn", channels.effective, W)
    b = (np.conj(channels.direct) @ W).T
    return EffectiveGains(np.ascontiguousarray(a), np.ascontiguousarray(b))


def objective_fC(theta, gains: EffectiveGains, weights, noise) -> float:
    return _kernels.fc_value_grad(theta, gains.a, gains.b, weights, noise)[0]


def euclidean_grad_fC(theta, gains: EffectiveGains, weights, noise) -> np.ndarray:
    """Euclidean gradient ``2 df/d conj(theta)``."""
    return _kernels.fc_value_grad(theta, gains.a, gains.b, weights, noise)[1]


def _inner(x, y) -> float:
    return float(np.real(np.vdot(x, y)))


def riemannian_grad(theta, egrad) -> np.ndarray:
    return egrad - np.real(egrad * np.conj(theta)) * theta


def transport(theta_new, v) -> np.ndarray:
    """Move a tangent vector to the tangent space at ``theta_new`` by projection."""
    return v - np.real(v * np.conj(theta_new)) * theta_new


def transport_and_direction(prev_dir, theta, rgrad, prev_rgrad) -> np.ndarray:
    """Conjugate descent direction at ``theta`` for a cost with Riemannian gradient ``rgrad``."""
    if prev_dir is None or prev_rgrad is None:
        return -rgrad
    denom = _inner(prev_rgrad, prev_rgrad)
    if denom <= 0:
        return -rgrad
    tau = max(0.0, _inner(rgrad, rgrad - transport(theta, prev_rgrad)) / denom)
    return -rgrad + tau * transport(theta, prev_dir)


def retract(theta, direction, step: float) -> np.ndarray:
    z = theta + step * direction
    mag = np.abs(z)
    if np.any(mag < 1e-300):
        raise NumericalError("retraction hit a zero-magnitude element")
    return z / mag


def rcg_solve(theta0, gains: EffectiveGains, weights, noise, opts: RcgOptions = RcgOptions()) -> RcgResult:
    """Maximize the fixed-W WSR over unit-modulus ``theta``."""
    theta = np.asarray(theta0, dtype=complex).copy()
    weights = np.asarray(weights, dtype=float)
    if theta.size == 0:
        f = objective_fC(theta, gains, weights, noise)
        return RcgResult(theta, f, 0, True, False, [f])
    _checks.unit_modulus(theta, "at RCG start")

    # coerce once and call the backend directly: this loop is the hot path
    kern = _kernels.get_backend()
    a, b = np.ascontiguousarray(gains.a, dtype=complex), np.ascontiguousarray(gains.b, dtype=complex)
    wts = np.ascontiguousarray(weights)

    def cost(th):
        v, g = kern.fc_value_grad(th, a, b, wts, float(noise))
        return -v, riemannian_grad(th, -g)

    F, rg = cost(theta)
    values = [-F]
    d = prev_rg = None
    t_start = opts.initial_step
    converged = stalled = False
    it = 0
    for it in range(1, opts.max_iters + 1):
        gnorm2 = _inner(rg, rg)
        if np.sqrt(gnorm2) < opts.grad_norm_tol:
            converged = True
            it -= 1
            break
        d = transport_and_direction(d, theta, rg, prev_rg)
        steepest = -rg
        if _inner(d, rg) >= 0.0:
            d = steepest
        accepted = None
        # try the conjugate direction first, fall back to steepest descent
        for direction in (d, steepest) if d is not steepest else (d,):
            t = t_start
            for _ in range(opts.max_line_search):
                try:
                    cand = retract(theta, direction, t)
                except NumericalError:
                    t *= opts.armijo_shrink
                    continue
                F_new, rg_new = cost(cand)
                # strict decrease too: below rounding level the Armijo test alone accepts no-ops
                if F_new < F and F_new <= F - opts.armijo_slope * t * gnorm2:
                    accepted = (cand, F_new, rg_new, direction)
                    if opts.adaptive_step:
                        t_start = 2.0 * t
                    break
                t *= opts.armijo_shrink
            if accepted is not None:
                break
        if accepted is None:
            stalled = True
            break
        theta_new, F, rg_new, d = accepted
        _checks.unit_modulus(theta_new, "after RCG step")
        # the previous gradient stays at its own point and is transported when used
        prev_rg = rg
        theta, rg = theta_new, rg_new
        values.append(-F)
    else:
        it = opts.max_iters
    return RcgResult(theta, -F, it, converged, stalled, values)


@dataclass(frozen=True)
class AlternatingOptions:
    max_outer: int = 100
    outer_tol: float = 1e-5
    wmmse: WmmseOptions = WmmseOptions()
    rcg: RcgOptions = RcgOptions()


@dataclass
class AlternatingResult:
    W: np.ndarray
    phases: PhaseVector
    wsr: float
    iterations: int
    converged: bool
    trace: Trace
    flags: dict = field(default_factory=dict)


def alternating_optimize(
    channels: ChannelSet,
    budget: LinkBudget,
    opts: AlternatingOptions = AlternatingOptions(),
    theta0=None,
    W0=None,
) -> AlternatingResult:
    """Alternate WMMSE beamforming and RCG phase design until the WSR settles."""
    N = channels.ap_to_ris.shape[0]
    weights, noise, p_max = budget.weights, budget.noise, budget.p_max
    theta = np.ones(N, dtype=complex) if theta0 is None else np.asarray(theta0, dtype=complex).copy()
    h = combined_channel(channels, theta)
    W = mrt_beamformer(h, p_max) if W0 is None else np.asarray(W0, dtype=complex)
    trace = Trace()
    value = wsr_from_channel(h, W, weights, noise)
    trace.record(value, value)
    flags = {"wmmse_unconverged": 0, "rcg_stalled": 0}

    if N == 0:
        res = wmmse_solve(h, weights, noise, p_max, opts.wmmse, W0=W)
        trace.record(res.wsr, res.wsr)
        flags["wmmse_unconverged"] += int(not res.converged)
        return AlternatingResult(res.W, PhaseVector.zeros(0), res.wsr, 1, res.converged, trace, flags)

    converged = False
    it = 0
    for it in range(1, opts.max_outer + 1):
        res = wmmse_solve(h, weights, noise, p_max, opts.wmmse, W0=W)
        W = res.W
        flags["wmmse_unconverged"] += int(not res.converged)
        rc = rcg_solve(theta, effective_gains(channels, W), weights, noise, opts.rcg)
        flags["rcg_stalled"] += int(rc.stalled)
        theta = rc.theta
        h = combined_channel(channels, theta)
        new = wsr_from_channel(h, W, weights, noise)
        trace.record(new, new)
        if abs(new - value) <= opts.outer_tol * max(abs(new), 1e-12):
            converged = True
            value = new
            break
        value = new
    return AlternatingResult(W, PhaseVector.from_coefficients(theta), value, it, converged, trace, flags)
