"""Closed-form pieces of the fractional-programming reformulation.

Everything here works on the combined channel ``h`` (K, M) and the cross-gain
matrix ``g = conj(h) @ W`` with ``g[k, i] = h_k^H w_i``; the RIS only enters
through ``h``. The lifted objective is

    f(alpha, beta, W) = sum_k w_k (ln(1 + alpha_k) - alpha_k)
                      + sum_k 2 sqrt(w_k (1 + alpha_k)) Re{conj(beta_k) g[k, k]}
                      - sum_k |beta_k|^2 (sum_i |g[k, i]|^2 + noise)

which equals the weighted sum-rate when alpha is the SINR and beta is the
matching quadratic-transform variable.
"""

from __future__ import annotations

import numpy as np

from riswsr.model import cross_gains

L_FLOOR = 1e-12
EXTRAPOLATION_CAP = 0.9999


def update_alpha(zeta) -> np.ndarray:
    """Maximizer over alpha >= 0; negative zeta clamps to alpha = 0."""
    z = np.asarray(zeta, dtype=float)
    return np.maximum(0.5 * (z * z + z * np.sqrt(z * z + 4.0)), 0.0)


def zeta_of(beta, g, weights) -> np.ndarray:
    return np.real(np.conj(beta) * np.diag(g)) / np.sqrt(weights)


def update_beta(alpha, g, weights, noise) -> np.ndarray:
    denom = np.sum(np.abs(g) ** 2, axis=1) + noise
    return np.sqrt(weights * (1.0 + alpha)) * np.diag(g) / denom


def optimal_auxiliary(g, weights, noise):
    """Jointly optimal (alpha, beta) for fixed gains: alpha = SINR, beta from alpha."""
    p = np.abs(g) ** 2
    signal = np.diag(p)
    alpha = signal / (p.sum(axis=1) - signal + noise)
    return alpha, update_beta(alpha, g, weights, noise)


def fp_objective(alpha, beta, g, weights, noise) -> float:
    c = np.sqrt(weights * (1.0 + alpha))
    total = np.sum(np.abs(g) ** 2, axis=1) + noise
    return float(
        np.sum(weights * (np.log1p(alpha) - alpha))
        + np.sum(2.0 * c * np.real(np.conj(beta) * np.diag(g)))
        - np.sum(np.abs(beta) ** 2 * total)
    )


def beamforming_objective(W, alpha, beta, h, weights) -> float:
    """The W-dependent part of the lifted objective (concave quadratic in W)."""
    g = cross_gains(h, W)
    c = np.sqrt(weights * (1.0 + alpha))
    return float(
        np.sum(2.0 * c * np.real(np.conj(beta) * np.diag(g)))
        - np.sum(np.abs(beta) ** 2 * np.sum(np.abs(g) ** 2, axis=1))
    )


def interference_matrix(beta, h) -> np.ndarray:
    """Q = sum_i |beta_i|^2 h_i h_i^H, the Hessian block of the W subproblem."""
    return (h.T * np.abs(beta) ** 2) @ h.conj()


def lipschitz_L(beta, h) -> float:
    L = 2.0 * np.linalg.norm(interference_matrix(beta, h), "fro")
    return float(max(L, L_FLOOR))


def next_extrapolation(d: float, L_prev: float, L: float):
    """Advance the d-sequence and return ``(d_new, eps)``."""
    d_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * d * d))
    eps = min((d - 1.0) / d_new, EXTRAPOLATION_CAP * np.sqrt(L_prev / L))
    return float(d_new), float(max(eps, 0.0))


def project_power(V, p_max: float) -> np.ndarray:
    """Euclidean projection onto the ball sum_k ||v_k||^2 <= p_max."""
    p = float(np.sum(V.real**2 + V.imag**2))
    if p <= p_max:
        return V
    return V * np.sqrt(p_max / p)


def prox_gradient(W_hat, alpha, beta, h, weights) -> np.ndarray:
    """Columns g_k = -2 sqrt(w_k (1+alpha_k)) beta_k h_k + 2 Q w_hat_k."""
    c = np.sqrt(weights * (1.0 + alpha))
    return 2.0 * interference_matrix(beta, h) @ W_hat - 2.0 * h.T * (c * beta)


def prox_linear_step(W_curr, W_prev, eps, L, alpha, beta, h, weights, p_max) -> np.ndarray:
    W_hat = W_curr + eps * (W_curr - W_prev)
    grad = prox_gradient(W_hat, alpha, beta, h, weights)
    return project_power(W_hat - grad / L, p_max)


def prox_linear_step_literal(W_curr, W_prev, eps, L, alpha, beta, h, weights, p_max) -> np.ndarray:
    """Comparison only: the closed-form multiplier with a squared norm in place of the projection.

    With V = L W_hat - G and S = ||V||_F^2, an infeasible step returns V * p_max / S,
    whose power is p_max^2 / S rather than p_max.
    """
    W_hat = W_curr + eps * (W_curr - W_prev)
    V = L * W_hat - prox_gradient(W_hat, alpha, beta, h, weights)
    S = float(np.sum(V.real**2 + V.imag**2))
    if S <= L * L * p_max:
        return V / L
    return V * (p_max / S)
