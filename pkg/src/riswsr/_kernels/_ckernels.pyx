# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels; semantics mirror ``riswsr._kernels._numpy``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, log, fabs, fmax, fmin

cnp.import_array()

NAME = "cython"

cdef double L_FLOOR = 1e-12
cdef double EXTRAPOLATION_CAP = 0.9999
cdef double RESTART_SLACK = 1e-12

ctypedef double complex cplx


cdef inline double abs2(cplx z) noexcept nogil:
    return z.real * z.real + z.imag * z.imag


cdef inline cplx cconj(cplx z) noexcept nogil:
    return z.conjugate()


def combined_channel(const cplx[:, ::1] direct, const cplx[:, :, ::1] effective, const cplx[::1] theta):
    cdef Py_ssize_t K = direct.shape[0], M = direct.shape[1], N = theta.shape[0]
    out_arr = np.array(direct, dtype=np.complex128, copy=True)
    cdef cplx[:, ::1] out = out_arr
    cdef Py_ssize_t k, n, m
    cdef cplx t
    for k in range(K):
        for n in range(N):
            t = theta[n]
            for m in range(M):
                out[k, m] = out[k, m] + cconj(effective[k, n, m]) * t
    return out_arr


cdef void _gains(const cplx[:, ::1] h, const cplx[:, ::1] W, cplx[:, ::1] g) noexcept nogil:
    # g[k, i] = h_k^H w_i
    cdef Py_ssize_t K = h.shape[0], M = h.shape[1], k, i, m
    cdef cplx s
    for k in range(K):
        for i in range(K):
            s = 0
            for m in range(M):
                s = s + cconj(h[k, m]) * W[m, i]
            g[k, i] = s


cdef void _update_beta(double[::1] alpha, cplx[:, ::1] g, const double[::1] weights,
                       double noise, cplx[::1] beta) noexcept nogil:
    cdef Py_ssize_t K = g.shape[0], k, i
    cdef double denom
    for k in range(K):
        denom = noise
        for i in range(K):
            denom += abs2(g[k, i])
        beta[k] = sqrt(weights[k] * (1.0 + alpha[k])) * g[k, k] / denom


cdef double _w_objective(cplx[:, ::1] g, double[::1] alpha, cplx[::1] beta,
                         const double[::1] weights) noexcept nogil:
    cdef Py_ssize_t K = g.shape[0], k, i
    cdef double total = 0.0, s
    for k in range(K):
        s = 0.0
        for i in range(K):
            s += abs2(g[k, i])
        total += 2.0 * sqrt(weights[k] * (1.0 + alpha[k])) * (cconj(beta[k]) * g[k, k]).real
        total -= abs2(beta[k]) * s
    return total


cdef void _prox_step(const cplx[:, ::1] W, const cplx[:, ::1] W_prev, double eps, double L,
                     double[::1] alpha, cplx[::1] beta, const cplx[:, ::1] h,
                     const double[::1] weights, double p_max, cplx[:, ::1] Q,
                     cplx[:, ::1] W_hat, cplx[:, ::1] out) noexcept nogil:
    cdef Py_ssize_t K = h.shape[0], M = h.shape[1], k, m, j
    cdef cplx s
    cdef double p = 0.0, scale, c
    for m in range(M):
        for k in range(K):
            W_hat[m, k] = W[m, k] + eps * (W[m, k] - W_prev[m, k])
    for k in range(K):
        c = sqrt(weights[k] * (1.0 + alpha[k]))
        for m in range(M):
            s = 0
            for j in range(M):
                s = s + Q[m, j] * W_hat[j, k]
            # v = w_hat - (2 Q w_hat - 2 c beta h) / L
            out[m, k] = W_hat[m, k] - (2.0 * s - 2.0 * c * beta[k] * h[k, m]) / L
            p += abs2(out[m, k])
    if p > p_max:
        scale = sqrt(p_max / p)
        for m in range(M):
            for k in range(K):
                out[m, k] = out[m, k] * scale


def block_cycle(const cplx[:, ::1] h, W_in, W_prev_in, alpha_in, beta_in,
                const double[::1] weights, double noise, double p_max, double d,
                double L_prev, bint extrapolate=True):
    cdef Py_ssize_t K = h.shape[0], M = h.shape[1], k, i, m, j
    W_arr = np.ascontiguousarray(W_in, dtype=np.complex128)
    Wp_arr = np.ascontiguousarray(W_prev_in, dtype=np.complex128)
    alpha_arr = np.array(alpha_in, dtype=np.float64, copy=True)
    beta_arr = np.array(beta_in, dtype=np.complex128, copy=True)
    new_arr = np.empty((M, K), dtype=np.complex128)
    cdef const cplx[:, ::1] W = W_arr
    cdef const cplx[:, ::1] Wp = Wp_arr
    cdef double[::1] alpha = alpha_arr
    cdef cplx[::1] beta = beta_arr
    cdef cplx[:, ::1] Wn = new_arr
    cdef cplx[:, ::1] g = np.empty((K, K), dtype=np.complex128)
    cdef cplx[:, ::1] Q = np.empty((M, M), dtype=np.complex128)
    cdef cplx[:, ::1] W_hat = np.empty((M, K), dtype=np.complex128)
    cdef double L, fro, d_new, eps, f_old, f_new, zeta, b2, obj, denom
    cdef bint restarted = False
    cdef cplx s

    with nogil:
        _gains(h, W, g)
        _update_beta(alpha, g, weights, noise, beta)

        fro = 0.0
        for m in range(M):
            for j in range(M):
                s = 0
                for i in range(K):
                    s = s + abs2(beta[i]) * h[i, m] * cconj(h[i, j])
                Q[m, j] = s
                fro += abs2(s)
        L = fmax(2.0 * sqrt(fro), L_FLOOR)

        if extrapolate:
            d_new = 0.5 * (1.0 + sqrt(1.0 + 4.0 * d * d))
            eps = fmax(fmin((d - 1.0) / d_new, EXTRAPOLATION_CAP * sqrt(L_prev / L)), 0.0)
        else:
            d_new = d
            eps = 0.0
        _prox_step(W, Wp, eps, L, alpha, beta, h, weights, p_max, Q, W_hat, Wn)
        if eps > 0.0:
            f_old = _w_objective(g, alpha, beta, weights)
            _gains(h, Wn, g)
            f_new = _w_objective(g, alpha, beta, weights)
            # ties (to rounding) keep the extrapolated step
            if f_new < f_old - RESTART_SLACK * fmax(1.0, fabs(f_old)):
                _prox_step(W, W, 0.0, L, alpha, beta, h, weights, p_max, Q, W_hat, Wn)
                restarted = True

        _gains(h, Wn, g)
        for k in range(K):
            zeta = (cconj(beta[k]) * g[k, k]).real / sqrt(weights[k])
            alpha[k] = fmax(0.5 * (zeta * zeta + zeta * sqrt(zeta * zeta + 4.0)), 0.0)
        _update_beta(alpha, g, weights, noise, beta)

        obj = 0.0
        for k in range(K):
            denom = noise
            for i in range(K):
                denom += abs2(g[k, i])
            obj += weights[k] * (log(1.0 + alpha[k]) - alpha[k])
            obj += 2.0 * sqrt(weights[k] * (1.0 + alpha[k])) * (cconj(beta[k]) * g[k, k]).real
            obj -= abs2(beta[k]) * denom

    return new_arr, W_arr, alpha_arr, beta_arr, d_new, L, obj, restarted


def phase_residual(const cplx[:, :, ::1] effective, const cplx[:, ::1] h, W_in,
                   alpha_in, beta_in, const double[::1] weights):
    cdef Py_ssize_t K = h.shape[0], M = h.shape[1], N = effective.shape[1], k, i, m, n
    W_arr = np.ascontiguousarray(W_in, dtype=np.complex128)
    cdef const cplx[:, ::1] W = W_arr
    cdef const double[::1] alpha = np.ascontiguousarray(alpha_in, dtype=np.float64)
    cdef const cplx[::1] beta = np.ascontiguousarray(beta_in, dtype=np.complex128)
    cdef cplx[:, ::1] g = np.empty((K, K), dtype=np.complex128)
    cdef cplx[:, ::1] V = np.zeros((M, K), dtype=np.complex128)
    out_arr = np.zeros(N, dtype=np.complex128)
    cdef cplx[::1] out = out_arr
    cdef cplx cik, s
    cdef double b2
    with nogil:
        _gains(h, W, g)
        for k in range(K):
            b2 = abs2(beta[k])
            for i in range(K):
                cik = b2 * cconj(g[k, i])
                if i == k:
                    cik = cik - sqrt(weights[k] * (1.0 + alpha[k])) * cconj(beta[k])
                for m in range(M):
                    V[m, k] = V[m, k] + W[m, i] * cik
        for k in range(K):
            for n in range(N):
                s = 0
                for m in range(M):
                    s = s + effective[k, n, m] * V[m, k]
                out[n] = out[n] + s
    return out_arr


def fc_value_grad(const cplx[::1] theta, const cplx[:, :, ::1] a, const cplx[:, ::1] b,
                  const double[::1] weights, double noise):
    cdef Py_ssize_t K = b.shape[0], N = theta.shape[0], i, k, n
    cdef cplx[:, ::1] t = np.empty((K, K), dtype=np.complex128)
    grad_arr = np.zeros(N, dtype=np.complex128)
    cdef cplx[::1] grad = grad_arr
    cdef double value = 0.0, total, interf, ci
    cdef cplx s, coef
    with nogil:
        for i in range(K):
            for k in range(K):
                s = b[i, k]
                for n in range(N):
                    s = s + cconj(theta[n]) * a[i, k, n]
                t[i, k] = s
        for k in range(K):
            total = noise
            for i in range(K):
                total += abs2(t[i, k])
            interf = total - abs2(t[k, k])
            value += weights[k] * (log(total) - log(interf))
            for i in range(K):
                if i == k:
                    coef = 2.0 * weights[k] / total * cconj(t[i, k])
                else:
                    coef = 2.0 * weights[k] * (1.0 / total - 1.0 / interf) * cconj(t[i, k])
                for n in range(N):
                    grad[n] = grad[n] + coef * a[i, k, n]
    return value, grad_arr
