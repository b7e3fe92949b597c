"""Stochastic SCA phase design from imperfect CSI.

Each outer iteration draws one channel realization around the estimate, runs
the alpha/beta/W block ascent at the current phases until it settles, and uses
the resulting quadratic model g(phi) = theta^H U theta - 2 Re{nu^H theta} as a
sample. The sample value and gradient are averaged recursively with weights
delta_r = r^-0.501 and the phases take a backtracked step along the averaged
gradient. The beamformer is not returned: it is redesigned once the true
channel is known (see ``deployed_wsr``).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from riswsr import _checks
from riswsr.channels import CsiErrorModel, LinkStructure, SmallScaleEstimate, assemble_channels, draw_csi_realization
from riswsr.fpbcd import ArmijoParams, BlockState, QuadParams, build_quad_params, grad_fA4, initial_state, next_start, parfun_a
from riswsr.model import ChannelSet, LinkBudget, PhaseVector, combined_channel, wsr_from_channel
from riswsr.trace import Trace
from riswsr.wmmse import WmmseOptions, wmmse_solve

__all__ = [
    "SscaState",
    "SscaOptions",
    "SscaResult",
    "CsiSampler",
    "step_weight",
    "parfun_b",
    "grad_g_hat",
    "ssca_update",
    "ssca_solve",
    "deployed_wsr",
]

DELTA_EXPONENT = 0.501


def step_weight(r: int) -> float:
    return float(r) ** -DELTA_EXPONENT


@dataclass(frozen=True)
class SscaState:
    phi: np.ndarray
    h_bar: float = 0.0
    g_bar: np.ndarray = None
    r: int = 0
    delta: float = 1.0
    kappa0: float = 1.0

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=float)
        object.__setattr__(self, "phi", phi)
        if self.g_bar is None:
            object.__setattr__(self, "g_bar", np.zeros_like(phi))


@dataclass
class CsiSampler:
    """Draws true-channel realizations around a fixed estimate from its own stream."""

    estimate: SmallScaleEstimate
    error: CsiErrorModel
    structure: LinkStructure
    rng: np.random.Generator

    def draw(self) -> ChannelSet:
        return assemble_channels(draw_csi_realization(self.estimate, self.error, self.rng), self.structure)


@dataclass(frozen=True)
class SscaOptions:
    max_iters: int = 500
    window: int = 20
    tol: float = 1e-3
    inner_max_cycles: int = 200
    inner_tol: float = 1e-5
    warm_start: bool = True
    armijo: ArmijoParams = ArmijoParams()


@dataclass
class SscaResult:
    phases: PhaseVector
    iterations: int
    converged: bool
    h_trace: list = field(default_factory=list)
    phi_trace: list = field(default_factory=list)
    inner_cycles: list = field(default_factory=list)
    stalls: int = 0
    inner_capped: int = 0
    trace: Trace = None


def parfun_b(phi, blocks: BlockState | None, realization: ChannelSet, budget: LinkBudget,
             max_cycles: int = 200, tol: float = 1e-5):
    """Settle (alpha, beta, W) at fixed phases on one realization, then build (U, nu).

    ``blocks`` supplies the warm start; ``None`` means a cold start (MRT plus
    tight auxiliaries). Returns ``(quad, blocks, objective_trace, capped)``.
    """
    phi = np.asarray(phi, dtype=float)
    if blocks is None:
        state = initial_state(realization, budget, phi)
    else:
        # a new realization invalidates the extrapolation memory
        state = replace(blocks, W_prev=blocks.W, d=1.0)
    trace = [state.objective]
    capped = True
    for _ in range(max_cycles):
        state = parfun_a(state, phi, realization, budget)
        trace.append(state.objective)
        if abs(trace[-1] - trace[-2]) <= tol * max(abs(trace[-1]), 1e-12):
            capped = False
            break
    quad = build_quad_params(state.alpha, state.beta, state.W, realization, budget.weights)
    return quad, state, trace, capped


def grad_g_hat(phi, q: QuadParams) -> np.ndarray:
    return grad_fA4(phi, q)


def ssca_update(state: SscaState, grad_sample, g_sample: float, q: QuadParams,
                armijo: ArmijoParams = ArmijoParams()):
    """Advance the recursive averages and take a backtracked phase step.

    The step ``phi - g_bar / kappa`` is accepted when the sampled model drops by
    at least ``slope * ||g_bar||^2 / kappa``. Returns ``(new_state, stalled)``;
    on a stall the phases stay put.
    """
    r = state.r + 1
    delta = step_weight(r)
    h_bar = (1.0 - delta) * state.h_bar + delta * float(g_sample)
    g_bar = (1.0 - delta) * state.g_bar + delta * np.asarray(grad_sample, dtype=float)
    g2 = float(g_bar @ g_bar)
    phi, kappa0 = state.phi, state.kappa0
    stalled = False
    if g2 > 0.0:
        base_val = q.value(state.phi)
        kappa = state.kappa0
        for _ in range(armijo.max_tries):
            cand = state.phi - g_bar / kappa
            if base_val - q.value(cand) >= armijo.slope * g2 / kappa:
                phi = cand
                kappa0 = next_start(kappa, armijo)
                break
            kappa *= armijo.base
        else:
            stalled = True
    _checks.unit_modulus(np.exp(1j * phi), "after stochastic phase update")
    return SscaState(phi, h_bar, g_bar, r, delta, kappa0), stalled


def _window_converged(h_trace, window: int, tol: float) -> bool:
    if len(h_trace) < window + 1:
        return False
    h = np.asarray(h_trace[-(window + 1):])
    rel = np.abs(np.diff(h)) / np.maximum(np.abs(h[1:]), 1e-12)
    return float(rel.mean()) < tol


def ssca_solve(sampler: CsiSampler, budget: LinkBudget, opts: SscaOptions = SscaOptions(), phi0=None) -> SscaResult:
    N = sampler.estimate.ap_to_ris.shape[0]
    phi = np.zeros(N) if phi0 is None else np.asarray(phi0, dtype=float).copy()
    state = SscaState(phi)
    blocks = None
    h_trace, phi_trace, cycles = [], [state.phi.copy()], []
    stalls = capped_count = 0
    converged = False
    # objective column: the averaged sample value h_r; wsr column: the inner
    # blocks' WSR on the realization drawn at that iteration
    trace = Trace()
    for _ in range(opts.max_iters):
        realization = sampler.draw()
        quad, new_blocks, inner, capped = parfun_b(state.phi, blocks if opts.warm_start else None,
                                                   realization, budget, opts.inner_max_cycles, opts.inner_tol)
        blocks = new_blocks
        cycles.append(len(inner) - 1)
        capped_count += int(capped)
        g_sample = quad.value(state.phi)
        grad = grad_g_hat(state.phi, quad)
        state, stalled = ssca_update(state, grad, g_sample, quad, opts.armijo)
        stalls += int(stalled)
        h_trace.append(state.h_bar)
        phi_trace.append(state.phi.copy())
        trace.record(state.h_bar, wsr_from_channel(blocks.h, blocks.W, budget.weights, budget.noise))
        if _window_converged(h_trace, opts.window, opts.tol):
            converged = True
            break
    return SscaResult(PhaseVector(state.phi), state.r, converged, h_trace, phi_trace, cycles, stalls,
                      capped_count, trace)


def deployed_wsr(phases: PhaseVector, true_channels: ChannelSet, budget: LinkBudget,
                 opts: WmmseOptions = WmmseOptions()) -> float:
    """WSR (nats) when the RIS is fixed at ``phases`` and W is designed on the true channel."""
    h = combined_channel(true_channels, phases)
    return wmmse_solve(h, budget.weights, budget.noise, budget.p_max, opts).wsr
