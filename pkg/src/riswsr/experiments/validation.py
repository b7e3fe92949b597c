"""Quick property checks runnable from the CLI (``riswsr validate``)."""

from __future__ import annotations

import numpy as np

from riswsr import _checks
from riswsr.channels import CsiErrorModel, SmallScaleEstimate, cscg, draw_csi_realization
from riswsr.fpbcd import bcd_solve, build_quad_params, grad_fA4, objective_fA1, refresh_auxiliary
from riswsr.model import ChannelSet, LinkBudget, combined_channel, mrt_beamformer, wsr
from riswsr.rcg import alternating_optimize, effective_gains, euclidean_grad_fC, objective_fC


def random_instance(rng, M=None, K=None, N=None, snr_db=10.0):
    M = M or int(rng.integers(1, 5))
    K = K or int(rng.integers(1, 5))
    N = int(rng.integers(1, 17)) if N is None else N
    ch = ChannelSet(cscg(rng, (K, M)), cscg(rng, (N, M)) * 0.5, cscg(rng, (K, N)) * 0.5)
    w = rng.random(K) + 0.1
    budget = LinkBudget(snr_db, 0.0, w / w.sum())
    return ch, budget


def check_fp_tightness(rng, n):
    worst = 0.0
    for _ in range(n):
        ch, b = random_instance(rng)
        theta = np.exp(1j * rng.uniform(0, 2 * np.pi, ch.ap_to_ris.shape[0]))
        W = cscg(rng, (ch.direct.shape[1], ch.direct.shape[0]))
        W *= np.sqrt(b.p_max / np.sum(np.abs(W) ** 2))
        aux = refresh_auxiliary(W, theta, ch, b.weights, b.noise)
        f = objective_fA1(aux.alpha, aux.beta, W, theta, ch, b.weights, b.noise)
        r = wsr(W, theta, ch, b)
        worst = max(worst, abs(f - r) / (1 + abs(r)))
    return worst < 1e-9, f"max |fA1 - WSR| / (1 + WSR) = {worst:.2e}"


def _fd_phase(f, phi, h=1e-6):
    g = np.empty_like(phi)
    for n in range(phi.size):
        e = np.zeros_like(phi)
        e[n] = h
        g[n] = (f(phi + e) - f(phi - e)) / (2 * h)
    return g


def check_gradients(rng, n):
    worst = 0.0
    for _ in range(n):
        ch, b = random_instance(rng)
        W = mrt_beamformer(ch.direct, b.p_max)
        gains = effective_gains(ch, W)
        phi = rng.uniform(0, 2 * np.pi, ch.ap_to_ris.shape[0])
        theta = np.exp(1j * phi)
        # directional derivative along j*theta*e_n equals Re{conj(grad_n) * j theta_n}
        g = euclidean_grad_fC(theta, gains, b.weights, b.noise)
        fd = _fd_phase(lambda p: objective_fC(np.exp(1j * p), gains, b.weights, b.noise), phi)
        pred = np.real(np.conj(g) * 1j * theta)
        worst = max(worst, np.linalg.norm(pred - fd) / max(np.linalg.norm(fd), 1e-12))
        aux = refresh_auxiliary(W, theta, ch, b.weights, b.noise)
        q = build_quad_params(aux.alpha, aux.beta, W, ch, b.weights)
        fd = _fd_phase(q.value, phi)
        worst = max(worst, np.linalg.norm(grad_fA4(phi, q) - fd) / max(np.linalg.norm(fd), 1e-12))
    return worst < 1e-6, f"max relative finite-difference error = {worst:.2e}"


def check_monotone(rng, n):
    worst = 0.0
    with _checks.invariant_checks(True):
        for _ in range(n):
            ch, b = random_instance(rng)
            for tr in (bcd_solve(ch, b).trace.objective, alternating_optimize(ch, b).trace.objective):
                worst = min(worst, float(np.min(np.diff(tr))) if len(tr) > 1 else 0.0)
    return worst >= -1e-9, f"largest objective decrease = {-worst:.2e} (invariants checked in-loop)"


def check_csi_moments(rng, n):
    est = SmallScaleEstimate(cscg(rng, (10, 100)), cscg(rng, (100, 100)), cscg(rng, (10, 100)))
    x = draw_csi_realization(est, CsiErrorModel(0.1), rng)
    num = sum(np.sum(np.abs(a - b) ** 2) for a, b in zip(
        (x.direct, x.ap_to_ris, x.ris_to_user), (est.direct, est.ap_to_ris, est.ris_to_user)))
    den = sum(np.sum(np.abs(b) ** 2) for b in (est.direct, est.ap_to_ris, est.ris_to_user))
    ratio = num / den
    same = draw_csi_realization(est, CsiErrorModel(0.0), rng)
    exact = all(np.array_equal(a, b) for a, b in zip(
        (same.direct, same.ap_to_ris, same.ris_to_user), (est.direct, est.ap_to_ris, est.ris_to_user)))
    return abs(ratio - 0.1) < 0.002 and exact, f"empirical normalized MSE = {ratio:.4f} (target 0.1), zero-error exact: {exact}"


def check_combined_channel(rng, n):
    worst = 0.0
    for _ in range(n):
        ch, _ = random_instance(rng)
        theta = np.exp(1j * rng.uniform(0, 2 * np.pi, ch.ap_to_ris.shape[0]))
        h = combined_channel(ch, theta)
        ref = ch.direct.copy()
        for k in range(ch.direct.shape[0]):
            ref[k] += ch.effective[k].conj().T @ theta
        worst = max(worst, float(np.max(np.abs(h - ref))))
    return worst < 1e-12, f"max deviation from explicit sum = {worst:.2e}"


CHECKS = [
    ("combined channel", check_combined_channel),
    ("FP tightness", check_fp_tightness),
    ("gradients vs finite differences", check_gradients),
    ("monotone ascent and invariants", check_monotone),
    ("CSI error moments", check_csi_moments),
]


def run_all(seed: int = 0, instances: int = 20) -> bool:
    ok_all = True
    for i, (name, fn) in enumerate(CHECKS):
        rng = np.random.default_rng([seed, i])
        try:
            ok, msg = fn(rng, instances)
        except Exception as exc:
            ok, msg = False, f"{type(exc).__name__}: {exc}"
        ok_all &= ok
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {msg}")
    return ok_all
