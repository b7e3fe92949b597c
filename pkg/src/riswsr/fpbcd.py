"""Block coordinate ascent on the fractional-programming reformulation.

Four blocks are cycled: the auxiliary variables alpha and beta (closed form),
the beamformer W (one extrapolated prox-linear step onto the power ball), and
the RIS phases phi (a gradient step whose length is chosen by backtracking).
The phase step is scored after the other blocks have responded to it: each
trial phase runs one beta -> W -> alpha -> beta pass and the resulting lifted
objective must rise by a sufficient amount.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from riswsr import _checks, _kernels, fpmath
from riswsr._kernels import _numpy
from riswsr.errors import InvalidInputError
from riswsr.model import ChannelSet, LinkBudget, PhaseVector, combined_channel, mrt_beamformer, wsr_from_channel
from riswsr.trace import Trace

__all__ = [
    "AuxiliaryVars",
    "QuadParams",
    "ProxState",
    "ArmijoParams",
    "BlockState",
    "BcdOptions",
    "BcdResult",
    "update_alpha",
    "update_beta",
    "refresh_auxiliary",
    "objective_fA1",
    "lipschitz_L",
    "prox_linear_w",
    "extrapolation_update",
    "build_quad_params",
    "grad_fA4",
    "phase_gradient",
    "parfun_a",
    "armijo_kappa",
    "next_start",
    "initial_state",
    "bcd_solve",
    "phase_ascent_fixed_w",
]


@dataclass(frozen=True)
class AuxiliaryVars:
    alpha: np.ndarray
    beta: np.ndarray
    zeta: np.ndarray


@dataclass(frozen=True)
class QuadParams:
    """Quadratic model ``theta^H U theta - 2 Re{nu^H theta}`` with ``U = A A^H``.

    ``A`` holds the columns ``|beta_k| a_ik`` so ``U`` is never formed unless asked for.
    """

    A: np.ndarray  # (N, K*K)
    nu: np.ndarray  # (N,)

    @property
    def U(self) -> np.ndarray:
        return self.A @ self.A.conj().T

    def residual(self, theta) -> np.ndarray:
        """``U theta - nu``."""
        return self.A @ (self.A.conj().T @ theta) - self.nu

    def value(self, phi) -> float:
        theta = np.exp(1j * np.asarray(phi, dtype=float))
        t = self.A.conj().T @ theta
        return float(np.real(np.vdot(t, t)) - 2.0 * np.real(np.vdot(self.nu, theta)))

    def gradient(self, phi) -> np.ndarray:
        return grad_fA4(phi, self)


@dataclass(frozen=True)
class ProxState:
    W_prev: np.ndarray
    W_curr: np.ndarray
    L: float
    d: float = 1.0
    L_prev: float | None = None
    eps: float = 0.0

    def __post_init__(self):
        if not self.L > 0 or self.d < 1 or self.eps < 0:
            raise InvalidInputError("invalid prox state")


@dataclass(frozen=True)
class ArmijoParams:
    """Backtracking over kappa = start * base**j, j = 0, 1, ...

    With ``adaptive`` the start is the previous accepted kappa divided by
    ``base`` (so the step may grow by one factor per iteration); otherwise every
    search starts at kappa = 1.
    """

    slope: float = 0.1
    base: float = 2.0
    max_tries: int = 40
    adaptive: bool = True

    def __post_init__(self):
        if not 0 < self.slope < 0.5 or not self.base > 1 or self.max_tries < 1:
            raise InvalidInputError("invalid Armijo parameters")


update_alpha = fpmath.update_alpha


def update_beta(alpha, W, theta, channels: ChannelSet, weights, noise) -> np.ndarray:
    h = combined_channel(channels, theta)
    return fpmath.update_beta(alpha, fpmath.cross_gains(h, W), weights, noise)


def refresh_auxiliary(W, theta, channels: ChannelSet, weights, noise) -> AuxiliaryVars:
    """Jointly optimal (alpha, beta) for fixed (W, theta); makes the lifted objective tight."""
    g = fpmath.cross_gains(combined_channel(channels, theta), W)
    alpha, beta = fpmath.optimal_auxiliary(g, weights, noise)
    return AuxiliaryVars(alpha, beta, fpmath.zeta_of(beta, g, weights))


def objective_fA1(alpha, beta, W, theta, channels: ChannelSet, weights, noise) -> float:
    g = fpmath.cross_gains(combined_channel(channels, theta), W)
    return fpmath.fp_objective(alpha, beta, g, weights, noise)


lipschitz_L = fpmath.lipschitz_L


def extrapolation_update(state: ProxState) -> ProxState:
    L_prev = state.L if state.L_prev is None else state.L_prev
    d_new, eps = fpmath.next_extrapolation(state.d, L_prev, state.L)
    return replace(state, d=d_new, eps=eps)


def prox_linear_w(state: ProxState, alpha, beta, h, weights, p_max: float) -> np.ndarray:
    W = fpmath.prox_linear_step(state.W_curr, state.W_prev, state.eps, state.L,
                                alpha, beta, h, weights, p_max)
    _checks.power(W, p_max, "after prox-linear update")
    return W


def build_quad_params(alpha, beta, W, channels: ChannelSet, weights) -> QuadParams:
    K = channels.direct.shape[0]
    N = channels.ap_to_ris.shape[0]
    a = np.einsum("knm,mi->nik", channels.effective, W)  # a[:, i, k] = H_r,k w_i
    b = (np.conj(channels.direct) @ W).T  # b[i, k] = h_d,k^H w_i
    c = np.sqrt(weights * (1.0 + alpha))
    b2 = np.abs(beta) ** 2
    A = (a * np.sqrt(b2)[None, None, :]).reshape(N, K * K)
    nu = np.einsum("nk,k->n", a[:, np.arange(K), np.arange(K)], c * np.conj(beta))
    nu -= np.einsum("nik,ik,k->n", a, np.conj(b), b2)
    return QuadParams(A, nu)


def grad_fA4(phi, q: QuadParams) -> np.ndarray:
    """Gradient in phi of ``theta^H U theta - 2 Re{nu^H theta}``, theta = exp(j phi)."""
    theta = np.exp(1j * np.asarray(phi, dtype=float))
    return 2.0 * np.real(-1j * np.conj(theta) * q.residual(theta))


def phase_gradient(phi, theta, h, W, alpha, beta, channels: ChannelSet, weights) -> np.ndarray:
    """Same gradient as ``grad_fA4`` computed without forming the quadratic model."""
    r = _kernels.phase_residual(channels.effective, h, W, alpha, beta, weights)
    return 2.0 * np.real(-1j * np.conj(theta) * r)


@dataclass(frozen=True)
class BlockState:
    """Everything the BCD cycle carries between iterations."""

    phi: np.ndarray
    theta: np.ndarray
    h: np.ndarray
    W: np.ndarray
    W_prev: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    d: float
    L: float
    objective: float
    restarts: int = 0


def initial_state(channels: ChannelSet, budget: LinkBudget, phi0=None, W0=None) -> BlockState:
    """Feasible start: MRT with equal power split and tight auxiliary variables."""
    N = channels.ap_to_ris.shape[0]
    phi = np.zeros(N) if phi0 is None else np.asarray(phi0, dtype=float).copy()
    theta = np.exp(1j * phi)
    h = combined_channel(channels, theta)
    W = None if W0 is None else np.asarray(W0, dtype=complex)
    if W is None or not np.any(W):
        W = mrt_beamformer(h, budget.p_max)
    g = fpmath.cross_gains(h, W)
    alpha, beta = fpmath.optimal_auxiliary(g, budget.weights, budget.noise)
    obj = fpmath.fp_objective(alpha, beta, g, budget.weights, budget.noise)
    L = fpmath.lipschitz_L(beta, h)
    return BlockState(phi, theta, h, W, W.copy(), alpha, beta, 1.0, L, obj)


def parfun_a(state: BlockState, phi, channels: ChannelSet, budget: LinkBudget, passes: int = 1,
             extrapolate: bool = True, literal_lambda: bool = False) -> BlockState:
    """Move to ``phi`` and run the beta -> W -> alpha -> beta pass(es) there.

    ``literal_lambda`` swaps the power projection for the squared-norm multiplier
    (numpy path only, for comparison runs).
    """
    phi = np.asarray(phi, dtype=float)
    theta = np.exp(1j * phi)
    _checks.unit_modulus(theta, "after phase update")
    h = _kernels.combined_channel(channels.direct, channels.effective, theta)
    W, W_prev, alpha, beta, d, L = state.W, state.W_prev, state.alpha, state.beta, state.d, state.L
    restarts = state.restarts
    obj = state.objective
    for _ in range(passes):
        if literal_lambda:
            out = _numpy.block_cycle(h, W, W_prev, alpha, beta, budget.weights, budget.noise, budget.p_max,
                                     d, L, extrapolate, step=fpmath.prox_linear_step_literal)
        else:
            out = _kernels.block_cycle(h, W, W_prev, alpha, beta, budget.weights, budget.noise, budget.p_max,
                                       d, L, extrapolate)
        W, W_prev, alpha, beta, d, L, obj, restarted = out
        restarts += int(restarted)
        _checks.power(W, budget.p_max, "after prox-linear update")
    return BlockState(phi, theta, h, W, W_prev, alpha, beta, d, L, obj, restarts)


def next_start(kappa, params: ArmijoParams) -> float:
    return kappa / params.base if params.adaptive else 1.0


def armijo_kappa(state: BlockState, grad, channels: ChannelSet, budget: LinkBudget,
                 params: ArmijoParams = ArmijoParams(), passes: int = 1, kappa0: float = 1.0,
                 extrapolate: bool = True, literal_lambda: bool = False):
    """Backtrack on the phase step ``phi - grad / kappa``, kappa = base**j.

    The trial is scored by the lifted objective after ``parfun_a`` at the new
    phases; accept when it rises by at least ``slope * ||grad||^2 / kappa``.
    Returns ``(kappa, new_state)`` or ``(None, state)`` on a stall.
    """
    g2 = float(grad @ grad)
    if g2 == 0.0:
        return kappa0, state
    kappa = kappa0
    for _ in range(params.max_tries):
        trial = parfun_a(state, state.phi - grad / kappa, channels, budget, passes, extrapolate, literal_lambda)
        if trial.objective - state.objective >= params.slope * g2 / kappa:
            return kappa, trial
        kappa *= params.base
    return None, state


@dataclass(frozen=True)
class BcdOptions:
    max_iters: int = 1000
    tol: float = 1e-6
    armijo: ArmijoParams = ArmijoParams()
    parfun_passes: int = 1
    extrapolate: bool = True
    # reproduce the closed-form multiplier instead of the exact projection (comparison only)
    literal_lambda: bool = False


@dataclass
class BcdResult:
    W: np.ndarray
    phases: PhaseVector
    wsr: float
    objective: float
    iterations: int
    converged: bool
    stalled: bool
    trace: Trace
    state: BlockState = field(repr=False, default=None)


def bcd_solve(channels: ChannelSet, budget: LinkBudget, opts: BcdOptions = BcdOptions(),
              phi0=None, W0=None) -> BcdResult:
    """Maximize the WSR over (W, phi) by block ascent on the lifted objective."""
    w, noise = budget.weights, budget.noise
    N = channels.ap_to_ris.shape[0]
    state = initial_state(channels, budget, phi0, W0)
    trace = Trace()
    trace.record(state.objective, wsr_from_channel(state.h, state.W, w, noise))
    # first pass at the starting phases so every later score is a post-pass value
    state = parfun_a(state, state.phi, channels, budget, opts.parfun_passes, opts.extrapolate,
                     opts.literal_lambda)
    trace.record(state.objective, wsr_from_channel(state.h, state.W, w, noise))

    converged = stalled = False
    kappa0 = 1.0
    it = 0
    for it in range(1, opts.max_iters + 1):
        prev = state.objective
        if N > 0:
            grad = phase_gradient(state.phi, state.theta, state.h, state.W, state.alpha, state.beta,
                                  channels, w)
            kappa, new = armijo_kappa(state, grad, channels, budget, opts.armijo, opts.parfun_passes, kappa0,
                                       opts.extrapolate, opts.literal_lambda)
            if kappa is None:
                stalled = True
                break
            kappa0 = next_start(kappa, opts.armijo)
            state = new
        else:
            state = parfun_a(state, state.phi, channels, budget, opts.parfun_passes, opts.extrapolate,
                     opts.literal_lambda)
        trace.record(state.objective, wsr_from_channel(state.h, state.W, w, noise))
        if abs(state.objective - prev) <= opts.tol * max(abs(state.objective), 1e-12):
            converged = True
            break
    value = wsr_from_channel(state.h, state.W, w, noise)
    return BcdResult(state.W, PhaseVector(state.phi), value, state.objective, it, converged, stalled,
                     trace, state)


def phase_ascent_fixed_w(channels: ChannelSet, W, budget: LinkBudget, phi0=None,
                         params: ArmijoParams = ArmijoParams(), max_iters: int = 1000, tol: float = 1e-10):
    """The phase block alone: alternate tight (alpha, beta) refreshes and phase steps at fixed W.

    With (alpha, beta) tight the lifted objective equals the fixed-W WSR, so
    this is a backtracking gradient ascent on that WSR over phi. Returns
    ``(phi, values)``.
    """
    w, noise = budget.weights, budget.noise
    W = np.asarray(W, dtype=complex)
    phi = np.zeros(channels.ap_to_ris.shape[0]) if phi0 is None else np.asarray(phi0, dtype=float).copy()

    def score(p):
        th = np.exp(1j * p)
        h = combined_channel(channels, th)
        g = fpmath.cross_gains(h, W)
        alpha, beta = fpmath.optimal_auxiliary(g, w, noise)
        return fpmath.fp_objective(alpha, beta, g, w, noise), th, h, alpha, beta

    F, theta, h, alpha, beta = score(phi)
    values = [F]
    kappa0 = 1.0
    for _ in range(max_iters):
        grad = phase_gradient(phi, theta, h, W, alpha, beta, channels, w)
        g2 = float(grad @ grad)
        if g2 == 0.0:
            break
        kappa, accepted = kappa0, None
        for _ in range(params.max_tries):
            cand = phi - grad / kappa
            out = score(cand)
            if out[0] - F >= params.slope * g2 / kappa:
                accepted = (cand, out)
                break
            kappa *= params.base
        if accepted is None:
            break
        phi, (F_new, theta, h, alpha, beta) = accepted
        kappa0 = next_start(kappa, params)
        _checks.unit_modulus(theta, "after phase update")
        values.append(F_new)
        done = abs(F_new - F) <= tol * max(abs(F_new), 1e-12)
        F = F_new
        if done:
            break
    return phi, values
