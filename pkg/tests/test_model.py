import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from riswsr.errors import InvalidInputError
from riswsr.model import (
    ChannelSet,
    LinkBudget,
    PhaseVector,
    SystemDims,
    combined_channel,
    dbm_to_mw,
    mrt_beamformer,
    mw_to_dbm,
    nats_to_bits,
    sinr,
    total_power,
    user_rates,
    wsr,
)

from _instances import power_feasible_w, random_phases, unit_instance

dims = st.tuples(st.integers(1, 4), st.integers(1, 4), st.integers(0, 8))


def explicit_combined(ch, theta):
    # h_k = h_d,k + (diag(h_r,k^H) G)^H theta, built element by element
    K, M = ch.direct.shape
    out = ch.direct.copy()
    for k in range(K):
        for n in range(theta.size):
            out[k] += np.conj(np.conj(ch.ris_to_user[k, n]) * ch.ap_to_ris[n]) * theta[n]
    return out


def explicit_sinr(h, W, noise):
    K = h.shape[0]
    out = np.empty(K)
    for k in range(K):
        gains = [abs(np.vdot(h[k], W[:, i])) ** 2 for i in range(K)]
        out[k] = gains[k] / (sum(gains) - gains[k] + noise)
    return out


@settings(max_examples=40, deadline=None)
@given(dims, st.integers(0, 2**32 - 1))
def test_combined_channel_matches_elementwise_sum(d, seed):
    M, K, N = d
    rng = np.random.default_rng(seed)
    ch, _ = unit_instance(rng, M, K, N)
    theta = np.exp(1j * random_phases(rng, N))
    assert np.allclose(combined_channel(ch, theta), explicit_combined(ch, theta), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(dims, st.integers(0, 2**32 - 1))
def test_sinr_and_wsr_match_explicit_formula(d, seed):
    M, K, N = d
    rng = np.random.default_rng(seed)
    ch, b = unit_instance(rng, M, K, N)
    theta = np.exp(1j * random_phases(rng, N))
    W = power_feasible_w(rng, M, K, b.p_max)
    ref = explicit_sinr(explicit_combined(ch, theta), W, b.noise)
    assert np.allclose(sinr(W, theta, ch, b.noise), ref, rtol=1e-10)
    assert wsr(W, theta, ch, b) == pytest.approx(float(b.weights @ np.log(1 + ref)), rel=1e-10)


@settings(max_examples=30, deadline=None)
@given(dims, st.integers(0, 2**32 - 1))
def test_rates_ignore_per_stream_phase(d, seed):
    # rotating each beamformer column leaves every |h_k^H w_i| unchanged
    M, K, N = d
    rng = np.random.default_rng(seed)
    ch, b = unit_instance(rng, M, K, N)
    theta = PhaseVector(random_phases(rng, N))
    W = power_feasible_w(rng, M, K, b.p_max)
    rot = W * np.exp(1j * rng.uniform(0, 2 * np.pi, K))
    assert np.allclose(user_rates(W, theta, ch, b.noise), user_rates(rot, theta, ch, b.noise), rtol=1e-12)


def test_phase_vector_accepts_both_forms(rng):
    phi = random_phases(rng, 6)
    a = PhaseVector(phi)
    b = PhaseVector.from_coefficients(np.exp(1j * phi))
    assert np.allclose(a.coefficients, b.coefficients, atol=1e-14)
    assert np.allclose(np.abs(a.coefficients), 1.0, atol=1e-15)
    ch, _ = unit_instance(rng, 2, 2, 6)
    assert np.allclose(combined_channel(ch, a), combined_channel(ch, a.coefficients))
    with pytest.raises(InvalidInputError):
        PhaseVector([0.0, np.nan])


def test_mrt_uses_full_power_and_aligns_with_channels(rng):
    h = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
    W = mrt_beamformer(h, 2.0)
    assert total_power(W) == pytest.approx(2.0, rel=1e-12)
    for k in range(3):
        # Cauchy-Schwarz equality: |h_k^H w_k| = ||h_k|| ||w_k||
        assert abs(np.vdot(h[k], W[:, k])) == pytest.approx(np.linalg.norm(h[k]) * np.linalg.norm(W[:, k]))


def test_scaled_channels_scale_every_path(rng):
    ch, _ = unit_instance(rng, 3, 2, 5)
    theta = np.exp(1j * random_phases(rng, 5))
    assert np.allclose(combined_channel(ch.scaled(4.0), theta), 4.0 * combined_channel(ch, theta))


def test_unit_conversions():
    assert dbm_to_mw(0.0) == 1.0
    assert dbm_to_mw(30.0) == pytest.approx(1000.0)
    assert mw_to_dbm(1e-3) == pytest.approx(-30.0)
    assert nats_to_bits(np.log(2.0)) == pytest.approx(1.0)


def test_link_budget_linear_values():
    b = LinkBudget(10.0, -100.0, [1.0, 3.0])
    assert b.p_max == pytest.approx(10.0)
    assert b.noise == pytest.approx(1e-10)
    assert b.with_power(20.0).p_max == pytest.approx(100.0)


@pytest.mark.parametrize("weights", [[], [1.0, 0.0], [1.0, -1.0], [np.inf]])
def test_link_budget_rejects_bad_weights(weights):
    with pytest.raises(InvalidInputError):
        LinkBudget(0.0, 0.0, weights)


def test_dimension_checks(rng):
    with pytest.raises(InvalidInputError):
        SystemDims(M=0, N=1, K=1)
    ch, b = unit_instance(rng, 2, 2, 3)
    with pytest.raises(InvalidInputError):
        combined_channel(ch, np.ones(4))
    with pytest.raises(InvalidInputError):
        sinr(np.ones((3, 2)), np.ones(3), ch, 1.0)
    with pytest.raises(InvalidInputError):
        sinr(np.ones((2, 2)), np.ones(3), ch, 0.0)


def test_no_ris_channel_set():
    ch = ChannelSet.without_ris(np.ones((2, 3)))
    assert ch.dims == SystemDims(M=3, N=0, K=2)
    assert np.array_equal(combined_channel(ch, np.zeros(0)), ch.direct)
