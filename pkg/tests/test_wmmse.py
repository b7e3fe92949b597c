import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from riswsr.model import total_power, wsr_from_channel
from riswsr.wmmse import WmmseOptions, wmmse_solve, wmmse_step

from _instances import fd_grad


def channel(rng, K, M):
    return (rng.standard_normal((K, M)) + 1j * rng.standard_normal((K, M))) / np.sqrt(2)


def wsr_grad_conj(h, W, weights, noise):
    """d WSR / d conj(W), from differentiating log(total_k) - log(interf_k) directly."""
    K = h.shape[0]
    g = np.conj(h) @ W
    p = np.abs(g) ** 2
    total = p.sum(axis=1) + noise
    interf = total - np.diag(p)
    G = np.zeros_like(W)
    for i in range(K):
        for k in range(K):
            hk = h[k][:, None] * g[k, i]  # h_k h_k^H w_i
            coef = weights[k] / total[k] - (0.0 if i == k else weights[k] / interf[k])
            G[:, i] += coef * hk[:, 0]
    return G


def test_gradient_oracle_against_finite_differences(rng):
    h, W = channel(rng, 3, 4), channel(rng, 4, 3)
    w = np.array([0.2, 0.5, 0.3])
    G = wsr_grad_conj(h, W, w, 0.5)
    # directional derivative along dW is 2 Re <G, dW>
    for _ in range(5):
        D = channel(rng, 4, 3)
        fd = fd_grad(lambda t: wsr_from_channel(h, W + t[0] * D, w, 0.5), np.zeros(1))[0]
        assert fd == pytest.approx(2 * np.real(np.vdot(G, D)), rel=1e-6)


@pytest.mark.parametrize("M", [1, 2, 4])
@pytest.mark.parametrize("snr_db", [-10.0, 0.0, 20.0])
def test_single_user_reaches_mrt_rate(M, snr_db):
    # [DERIVED] K = 1: optimal rate is log(1 + P ||h||^2 / noise)
    rng = np.random.default_rng([M, int(snr_db) + 50])
    h = channel(rng, 1, M)
    p = 10 ** (snr_db / 10)
    res = wmmse_solve(h, np.ones(1), 1.0, p, WmmseOptions(obj_tol=1e-12))
    assert res.wsr == pytest.approx(np.log1p(p * np.linalg.norm(h) ** 2), rel=1e-9)
    assert total_power(res.W) == pytest.approx(p, rel=1e-7)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_trace_monotone_and_power_feasible(M, K, seed):
    # exact multiplier: with the default bisectTol a step may lose O(1e-8) relative
    rng = np.random.default_rng(seed)
    h = channel(rng, K, M)
    w = rng.random(K) + 0.1
    res = wmmse_solve(h, w / w.sum(), 0.1, 10.0, WmmseOptions(bisect_tol=1e-14))
    assert np.all(np.diff(res.trace) >= -1e-9 * (1 + np.abs(res.trace[1:])))
    assert total_power(res.W) <= 10.0 * (1 + 1e-9)
    assert res.wsr == pytest.approx(wsr_from_channel(h, res.W, w / w.sum(), 0.1))


@pytest.mark.parametrize("seed", range(5))
def test_converged_point_satisfies_kkt(seed):
    # stationary on the power ball: grad = mu W with mu >= 0
    rng = np.random.default_rng(seed)
    K, M = 3, 4
    h = channel(rng, K, M)
    w = np.array([0.5, 0.3, 0.2])
    res = wmmse_solve(h, w, 0.1, 5.0, WmmseOptions(max_iters=3000, obj_tol=1e-15, bisect_tol=1e-13))
    assert res.converged
    G = wsr_grad_conj(h, res.W, w, 0.1)
    mu = np.real(np.vdot(res.W, G)) / np.real(np.vdot(res.W, res.W))
    assert mu >= 0
    assert np.linalg.norm(G - mu * res.W) / np.linalg.norm(G) < 1e-5
    assert total_power(res.W) == pytest.approx(5.0, rel=1e-6)


@pytest.mark.parametrize("seed", range(10))
def test_bisection_meets_power_within_tolerance(seed):
    rng = np.random.default_rng(seed)
    h = channel(rng, 3, 3)
    W = channel(rng, 3, 3)
    opts = WmmseOptions()
    st_ = wmmse_step(h, W, np.full(3, 1 / 3), 0.01, 2.0, opts)
    assert st_.lam > 0
    assert abs(total_power(st_.W) - 2.0) <= opts.bisect_tol * 2.0
    assert total_power(st_.W) <= 2.0


def test_multiplier_zero_when_budget_slack():
    # huge budget on a full-rank 2x2 channel: the unconstrained MMSE solution
    # already fits, so lambda = 0 and the power stays below the budget
    rng = np.random.default_rng(9)
    h = channel(rng, 2, 2)
    W = 1e-3 * channel(rng, 2, 2)
    st_ = wmmse_step(h, W, np.array([0.5, 0.5]), 1.0, 1e12)
    assert st_.lam == 0.0
    assert total_power(st_.W) < 1e12


def test_infeasible_start_is_scaled():
    rng = np.random.default_rng(10)
    h = channel(rng, 2, 3)
    W0 = 100 * channel(rng, 3, 2)
    res = wmmse_solve(h, np.array([0.5, 0.5]), 1.0, 1.0, WmmseOptions(max_iters=1), W0=W0)
    assert res.trace[0] == pytest.approx(wsr_from_channel(h, W0 * np.sqrt(1.0 / total_power(W0)), [0.5, 0.5], 1.0))


def test_iteration_cap_returns_best_iterate():
    rng = np.random.default_rng(11)
    h = channel(rng, 4, 4)
    w = np.full(4, 0.25)
    res = wmmse_solve(h, w, 0.01, 1.0, WmmseOptions(max_iters=3, obj_tol=1e-16))
    assert not res.converged
    assert res.iterations == 3
    assert res.wsr == pytest.approx(max(res.trace))
