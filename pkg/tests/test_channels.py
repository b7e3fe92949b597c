import numpy as np
import pytest

from riswsr.channels import (
    DIRECT_PATH_LOSS,
    RIS_PATH_LOSS,
    CsiErrorModel,
    Placement,
    RicianParams,
    SmallScaleEstimate,
    amplitude_gain,
    assemble_channels,
    cscg,
    draw_channels,
    draw_csi_realization,
    draw_small_scale,
    link_structure,
    noise_power_dbm,
    path_loss_db,
    steering_vector,
)
from riswsr.errors import InvalidInputError
from riswsr.model import SystemDims

PLACE = Placement((0.0, 0.0), (200.0, 0.0), [(200.0, 30.0), (190.0, 25.0)])


# [PAPER] link budget figures for the reference geometry
def test_path_loss_reference_values():
    assert path_loss_db(RIS_PATH_LOSS, 200.0) == pytest.approx(86.22, abs=0.01)
    assert path_loss_db(RIS_PATH_LOSS, 30.0) == pytest.approx(68.10, abs=0.01)
    assert path_loss_db(DIRECT_PATH_LOSS, np.hypot(200.0, 30.0)) == pytest.approx(117.23, abs=0.01)


def test_noise_power():
    # [DERIVED] -170 dBm/Hz over 180 kHz
    assert noise_power_dbm() == pytest.approx(-170.0 + 10 * np.log10(180e3))
    assert noise_power_dbm() == pytest.approx(-117.447, abs=1e-3)


def test_path_loss_rejects_nonpositive_distance():
    with pytest.raises(InvalidInputError):
        path_loss_db(RIS_PATH_LOSS, [1.0, 0.0])


def test_amplitude_gain_is_power_root():
    assert amplitude_gain(20.0) ** 2 == pytest.approx(0.01)


def test_steering_vector():
    a = steering_vector(8, 0.3)
    assert np.allclose(np.abs(a), 1.0)
    assert np.allclose(a[1:] / a[:-1], np.exp(1j * np.pi * np.sin(0.3)))
    assert np.allclose(steering_vector(4, 0.0), 1.0)


def test_cscg_moments():
    z = cscg(np.random.default_rng(0), 200_000)
    assert np.mean(np.abs(z) ** 2) == pytest.approx(1.0, abs=0.01)
    assert abs(np.mean(z * z)) < 0.01  # circular symmetry
    assert abs(np.mean(z)) < 0.01


def test_rician_channel_power_matches_path_loss():
    # [DERIVED] LOS part has unit-modulus entries and NLOS unit variance, so
    # E|G_nm|^2 = 10^(-PL/10) whatever the Rician factor
    dims = SystemDims(M=4, N=16, K=2)
    rng = np.random.default_rng(1)
    acc_G, acc_hr, acc_d = 0.0, np.zeros(2), np.zeros(2)
    T = 400
    for _ in range(T):
        ch = draw_channels(dims, PLACE, rng)
        acc_G += np.mean(np.abs(ch.ap_to_ris) ** 2)
        acc_hr += np.mean(np.abs(ch.ris_to_user) ** 2, axis=1)
        acc_d += np.mean(np.abs(ch.direct) ** 2, axis=1)
    assert acc_G / T == pytest.approx(10 ** (-path_loss_db(RIS_PATH_LOSS, 200.0) / 10), rel=0.02)
    assert np.allclose(acc_hr / T, 10 ** (-path_loss_db(RIS_PATH_LOSS, PLACE.ris_user_distances) / 10), rtol=0.03)
    assert np.allclose(acc_d / T, 10 ** (-path_loss_db(DIRECT_PATH_LOSS, PLACE.direct_distances) / 10), rtol=0.1)


def test_pure_los_limit_is_rank_one():
    dims = SystemDims(M=4, N=8, K=2)
    rician = RicianParams.from_placement(PLACE, factor=1e12)
    ch = draw_channels(dims, PLACE, np.random.default_rng(2), rician)
    s = np.linalg.svd(ch.ap_to_ris, compute_uv=False)
    assert s[1] / s[0] < 1e-5


def test_rayleigh_limit_has_no_los():
    dims = SystemDims(M=2, N=4, K=2)
    st = link_structure(dims, PLACE, RicianParams.from_placement(PLACE, factor=0.0))
    small = draw_small_scale(dims, np.random.default_rng(3))
    ch = assemble_channels(small, st)
    assert np.allclose(ch.ap_to_ris, st.ap_ris_gain * small.ap_to_ris)


def test_no_ris_structure():
    dims = SystemDims(M=2, N=0, K=2)
    ch = draw_channels(dims, PLACE, np.random.default_rng(4))
    assert ch.ap_to_ris.shape == (0, 2)
    assert ch.ris_to_user.shape == (2, 0)


def test_dims_mismatch_rejected():
    dims = SystemDims(M=2, N=4, K=3)
    with pytest.raises(InvalidInputError):
        link_structure(dims, PLACE)
    st = link_structure(SystemDims(M=2, N=4, K=2), PLACE)
    with pytest.raises(InvalidInputError):
        assemble_channels(draw_small_scale(SystemDims(M=2, N=5, K=2), np.random.default_rng(0)), st)


def _blocks(x):
    return (x.direct, x.ap_to_ris, x.ris_to_user)


@pytest.mark.parametrize("rho", [0.05, 0.1, 0.5])
def test_csi_error_normalized_mse(rho):
    # >= 1e5 scalar draws per case
    rng = np.random.default_rng(5)
    est = SmallScaleEstimate(cscg(rng, (40, 50)), cscg(rng, (300, 50)), cscg(rng, (40, 300)))
    x = draw_csi_realization(est, CsiErrorModel(rho), rng)
    err = sum(np.sum(np.abs(a - b) ** 2) for a, b in zip(_blocks(x), _blocks(est)))
    ref = sum(np.sum(np.abs(b) ** 2) for b in _blocks(est))
    assert err / ref == pytest.approx(rho, rel=0.02)
    # each RIS->user row has its own error scale
    row_err = np.mean(np.abs(x.ris_to_user - est.ris_to_user) ** 2, axis=1)
    row_pow = np.mean(np.abs(est.ris_to_user) ** 2, axis=1)
    assert np.allclose(row_err / row_pow, rho, rtol=0.25)


def test_zero_error_is_identity_and_stream_stable():
    rng = np.random.default_rng(6)
    est = SmallScaleEstimate(cscg(rng, (3, 4)), cscg(rng, (5, 4)), cscg(rng, (3, 5)))
    r0, r1 = np.random.default_rng(7), np.random.default_rng(7)
    x = draw_csi_realization(est, CsiErrorModel(0.0), r0)
    assert all(np.array_equal(a, b) for a, b in zip(_blocks(x), _blocks(est)))
    draw_csi_realization(est, CsiErrorModel(0.3), r1)
    # the same number of samples is consumed whatever the error level
    assert r0.random() == r1.random()


def test_negative_error_rejected():
    with pytest.raises(InvalidInputError):
        CsiErrorModel(-0.1)
