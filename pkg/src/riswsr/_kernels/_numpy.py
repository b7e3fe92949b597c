"""Pure-numpy implementations of the hot kernels (reference and fallback)."""

import numpy as np

from riswsr import fpmath

NAME = "numpy"
RESTART_SLACK = 1e-12


def combined_channel(direct, effective, theta):
    if theta.size == 0:
        return direct.copy()
    return direct + np.einsum("knm,n->km", effective.conj(), theta)


def block_cycle(h, W, W_prev, alpha, beta, weights, noise, p_max, d, L_prev, extrapolate=True,
                step=fpmath.prox_linear_step):
    """One beta -> W -> alpha -> beta pass at a fixed combined channel.

    Returns ``(W_new, W_old, alpha, beta, d_new, L, objective, restarted)``.
    ``restarted`` is True when the extrapolated prox step lowered the W
    objective and was redone from the current point.
    """
    g = fpmath.cross_gains(h, W)
    beta = fpmath.update_beta(alpha, g, weights, noise)

    L = fpmath.lipschitz_L(beta, h)
    if extrapolate:
        d_new, eps = fpmath.next_extrapolation(d, L_prev, L)
    else:
        d_new, eps = d, 0.0
    W_new = step(W, W_prev, eps, L, alpha, beta, h, weights, p_max)
    restarted = False
    if eps > 0.0:
        f_old = fpmath.beamforming_objective(W, alpha, beta, h, weights)
        f_new = fpmath.beamforming_objective(W_new, alpha, beta, h, weights)
        # ties (to rounding) keep the extrapolated step
        if f_new < f_old - RESTART_SLACK * max(1.0, abs(f_old)):
            W_new = step(W, W, 0.0, L, alpha, beta, h, weights, p_max)
            restarted = True

    g = fpmath.cross_gains(h, W_new)
    alpha = fpmath.update_alpha(fpmath.zeta_of(beta, g, weights))
    beta = fpmath.update_beta(alpha, g, weights, noise)
    obj = fpmath.fp_objective(alpha, beta, g, weights, noise)
    return W_new, W, alpha, beta, d_new, L, obj, restarted


def phase_residual(effective, h, W, alpha, beta, weights):
    """Return ``U theta - nu`` for the current blocks, without forming U."""
    K = h.shape[0]
    g = np.conj(h) @ W
    c = np.sqrt(weights * (1.0 + alpha))
    C = (np.abs(beta) ** 2)[None, :] * np.conj(g).T
    C[np.arange(K), np.arange(K)] -= c * np.conj(beta)
    V = W @ C
    return np.einsum("knm,mk->n", effective, V)


def fc_value_grad(theta, a, b, weights, noise):
    """Objective of the fixed-W phase problem and its Euclidean gradient.

    ``a[i, k] = H_r,k w_i`` (K, K, N) and ``b[i, k] = h_d,k^H w_i`` (K, K).
    The gradient is ``2 d f / d conj(theta)``.
    """
    K = b.shape[0]
    t = np.einsum("n,ikn->ik", np.conj(theta), a) + b  # t[i, k] = theta^H a_ik + b_ik
    p = np.abs(t) ** 2
    total = p.sum(axis=0) + noise
    signal = np.diag(p)
    interf = total - signal
    value = float(np.sum(weights * (np.log(total) - np.log(interf))))
    # d|t_ik|^2 / d conj(theta) = a_ik conj(t_ik)
    coef = np.conj(t) * (weights / total)[None, :]
    coef_i = np.conj(t) * (weights / interf)[None, :]
    coef_i[np.arange(K), np.arange(K)] = 0.0
    grad = 2.0 * np.einsum("ik,ikn->n", coef - coef_i, a)
    return value, grad
