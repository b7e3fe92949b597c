"""Channel realizations: Rayleigh direct links, Rician RIS links, 3GPP path loss.

Small-scale fading is kept separate from the deterministic part (path loss and
line-of-sight steering vectors) so imperfect-CSI realizations can be drawn
around an estimate of the small-scale blocks and then reassembled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from riswsr.errors import InvalidInputError
from riswsr.model import ChannelSet, SystemDims

__all__ = [
    "PathLossModel",
    "RIS_PATH_LOSS",
    "DIRECT_PATH_LOSS",
    "NOISE_PSD_DBM_HZ",
    "BANDWIDTH_HZ",
    "noise_power_dbm",
    "path_loss_db",
    "amplitude_gain",
    "steering_vector",
    "cscg",
    "Placement",
    "RicianParams",
    "CsiErrorModel",
    "SmallScaleEstimate",
    "LinkStructure",
    "link_structure",
    "draw_small_scale",
    "draw_channels",
    "draw_csi_realization",
    "assemble_channels",
]


@dataclass(frozen=True)
class PathLossModel:
    intercept_db: float
    slope_db_per_decade: float


RIS_PATH_LOSS = PathLossModel(35.6, 22.0)
DIRECT_PATH_LOSS = PathLossModel(32.6, 36.7)
NOISE_PSD_DBM_HZ = -170.0
BANDWIDTH_HZ = 180e3


def noise_power_dbm(psd_dbm_hz: float = NOISE_PSD_DBM_HZ, bandwidth_hz: float = BANDWIDTH_HZ) -> float:
    return psd_dbm_hz + 10.0 * np.log10(bandwidth_hz)


def path_loss_db(model: PathLossModel, d):
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise InvalidInputError("distance must be positive")
    out = model.intercept_db + model.slope_db_per_decade * np.log10(d)
    return float(out) if out.ndim == 0 else out


def amplitude_gain(pl_db):
    """Linear amplitude factor sqrt(10^(-PL/10))."""
    return 10.0 ** (-np.asarray(pl_db, dtype=float) / 20.0)


def steering_vector(n: int, angle: float) -> np.ndarray:
    """Half-wavelength ULA response, element m is exp(j*pi*m*sin(angle))."""
    if n < 1:
        raise InvalidInputError("steering vector length must be >= 1")
    return np.exp(1j * np.pi * np.arange(n) * np.sin(angle))


def cscg(rng: np.random.Generator, shape) -> np.ndarray:
    """Unit-variance circularly symmetric complex Gaussian samples."""
    x = rng.standard_normal(shape)
    y = rng.standard_normal(shape)
    return (x + 1j * y) / np.sqrt(2.0)


@dataclass(frozen=True)
class Placement:
    """Node coordinates in meters; arrays are taken to lie along the x-axis."""

    ap: tuple
    ris: tuple
    users: np.ndarray

    def __post_init__(self):
        users = np.array(self.users, dtype=float).reshape(-1, 2)
        users.flags.writeable = False
        object.__setattr__(self, "users", users)
        object.__setattr__(self, "ap", tuple(float(v) for v in self.ap))
        object.__setattr__(self, "ris", tuple(float(v) for v in self.ris))

    @property
    def direct_distances(self) -> np.ndarray:
        return np.hypot(*(self.users - np.asarray(self.ap)).T)

    @property
    def ap_ris_distance(self) -> float:
        return float(np.hypot(self.ris[0] - self.ap[0], self.ris[1] - self.ap[1]))

    @property
    def ris_user_distances(self) -> np.ndarray:
        return np.hypot(*(self.users - np.asarray(self.ris)).T)


def _broadside_angle(src, dst) -> float:
    """Angle of the src->dst line measured from the broadside of an x-aligned array."""
    dx, dy = dst[0] - src[0], dst[1] - src[1]
    return float(np.arcsin(np.clip(dx / np.hypot(dx, dy), -1.0, 1.0)))


@dataclass(frozen=True)
class RicianParams:
    factor: float
    ap_angle: float
    ris_departure: float
    ris_to_users: np.ndarray

    def __post_init__(self):
        if self.factor < 0:
            raise InvalidInputError("Rician factor must be non-negative")
        object.__setattr__(self, "ris_to_users", np.asarray(self.ris_to_users, dtype=float).reshape(-1))

    @classmethod
    def from_placement(cls, placement: Placement, factor: float = 10.0) -> "RicianParams":
        ris_angles = [_broadside_angle(placement.ris, u) for u in placement.users]
        return cls(
            factor=factor,
            ap_angle=_broadside_angle(placement.ap, placement.ris),
            ris_departure=_broadside_angle(placement.ris, placement.ap),
            ris_to_users=np.array(ris_angles),
        )


@dataclass(frozen=True)
class CsiErrorModel:
    normalized_mse: float

    def __post_init__(self):
        if not self.normalized_mse >= 0:
            raise InvalidInputError("normalized MSE must be non-negative")


@dataclass(frozen=True)
class SmallScaleEstimate:
    """Small-scale blocks: direct (K, M), G's NLOS part (N, M), h_r's NLOS part (K, N)."""

    direct: np.ndarray
    ap_to_ris: np.ndarray
    ris_to_user: np.ndarray

    @property
    def dims(self) -> SystemDims:
        K, M = self.direct.shape
        return SystemDims(M=M, N=self.ap_to_ris.shape[0], K=K)


@dataclass(frozen=True)
class LinkStructure:
    """Deterministic part of a channel: amplitudes and LOS components."""

    direct_gain: np.ndarray  # (K,)
    ap_ris_gain: float
    ris_user_gain: np.ndarray  # (K,)
    los_ap_to_ris: np.ndarray  # (N, M)
    los_ris_to_user: np.ndarray  # (K, N)
    rician_factor: float

    @property
    def dims(self) -> SystemDims:
        N, M = self.los_ap_to_ris.shape
        return SystemDims(M=M, N=N, K=self.direct_gain.size)


def link_structure(
    dims: SystemDims,
    placement: Placement,
    rician: RicianParams | None = None,
    ris_model: PathLossModel = RIS_PATH_LOSS,
    direct_model: PathLossModel = DIRECT_PATH_LOSS,
) -> LinkStructure:
    if placement.users.shape[0] != dims.K:
        raise InvalidInputError(f"{placement.users.shape[0]} user positions for K={dims.K}")
    if rician is None:
        rician = RicianParams.from_placement(placement)
    if rician.ris_to_users.size != dims.K:
        raise InvalidInputError("need one RIS->user angle per user")
    direct_gain = amplitude_gain(path_loss_db(direct_model, placement.direct_distances))
    if dims.N == 0:
        return LinkStructure(
            np.atleast_1d(direct_gain), 0.0, np.zeros(dims.K),
            np.zeros((0, dims.M), complex), np.zeros((dims.K, 0), complex), rician.factor,
        )
    ap_ris_gain = float(amplitude_gain(path_loss_db(ris_model, placement.ap_ris_distance)))
    ris_user_gain = amplitude_gain(path_loss_db(ris_model, placement.ris_user_distances))
    los_G = np.outer(steering_vector(dims.N, rician.ris_departure),
                     steering_vector(dims.M, rician.ap_angle).conj())
    los_hr = np.stack([steering_vector(dims.N, a) for a in rician.ris_to_users])
    return LinkStructure(np.atleast_1d(direct_gain), ap_ris_gain, np.atleast_1d(ris_user_gain),
                         los_G, los_hr, rician.factor)


def draw_small_scale(dims: SystemDims, rng: np.random.Generator) -> SmallScaleEstimate:
    return SmallScaleEstimate(
        direct=cscg(rng, (dims.K, dims.M)),
        ap_to_ris=cscg(rng, (dims.N, dims.M)),
        ris_to_user=cscg(rng, (dims.K, dims.N)),
    )


def assemble_channels(small: SmallScaleEstimate, structure: LinkStructure) -> ChannelSet:
    """Recombine small-scale blocks with path loss and LOS structure."""
    if small.dims != structure.dims:
        raise InvalidInputError(f"small-scale dims {small.dims} != structure dims {structure.dims}")
    eps = structure.rician_factor
    los_w = np.sqrt(eps / (eps + 1.0))
    nlos_w = np.sqrt(1.0 / (eps + 1.0))
    direct = structure.direct_gain[:, None] * small.direct
    G = structure.ap_ris_gain * (los_w * structure.los_ap_to_ris + nlos_w * small.ap_to_ris)
    hr = structure.ris_user_gain[:, None] * (los_w * structure.los_ris_to_user + nlos_w * small.ris_to_user)
    return ChannelSet(direct, G, hr)


def draw_channels(
    dims: SystemDims,
    placement: Placement,
    rng: np.random.Generator,
    rician: RicianParams | None = None,
    ris_model: PathLossModel = RIS_PATH_LOSS,
    direct_model: PathLossModel = DIRECT_PATH_LOSS,
) -> ChannelSet:
    structure = link_structure(dims, placement, rician, ris_model, direct_model)
    return assemble_channels(draw_small_scale(dims, rng), structure)


def _perturb(block: np.ndarray, rho: float, rng: np.random.Generator, per_row: bool = False) -> np.ndarray:
    if block.size == 0:
        return block.copy()
    z = cscg(rng, block.shape)
    if rho == 0:
        return block.copy()
    if per_row:
        power = np.mean(np.abs(block) ** 2, axis=1, keepdims=True)
    else:
        power = np.mean(np.abs(block) ** 2)
    return block + np.sqrt(rho * power) * z


def draw_csi_realization(
    estimate: SmallScaleEstimate, err: CsiErrorModel, rng: np.random.Generator
) -> SmallScaleEstimate:
    """Draw a true-channel sample x = x_hat + z around an estimate.

    The error variance of each block is ``rho`` times that block's empirical
    mean squared magnitude; blocks are the direct channels, G, and each user's
    RIS->user vector separately. Fresh samples are consumed even when ``rho == 0`` so
    the random stream does not depend on the error level.
    """
    rho = err.normalized_mse
    return SmallScaleEstimate(
        direct=_perturb(estimate.direct, rho, rng),
        ap_to_ris=_perturb(estimate.ap_to_ris, rho, rng),
        ris_to_user=_perturb(estimate.ris_to_user, rho, rng, per_row=True),
    )
