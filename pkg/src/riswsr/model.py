"""System model for the RIS-aided multiuser MISO downlink.

Array conventions used everywhere in the package:

* ``direct``      -- (K, M) complex, row ``k`` is the direct channel h_d,k
* ``ap_to_ris``   -- (N, M) complex, the AP->RIS channel G
* ``ris_to_user`` -- (K, N) complex, row ``k`` is h_r,k
* ``effective``   -- (K, N, M) complex, ``effective[k] = diag(conj(h_r,k)) @ G``
* ``W``           -- (M, K) complex beamformer, column ``k`` is w_k
* ``theta``       -- (N,) complex unit-modulus reflection coefficients

The combined channel of user k is ``h_k = h_d,k + effective[k]^H theta`` and the
received amplitude of stream i at user k is ``h_k^H w_i``. Rates are in nats.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from riswsr.errors import InvalidInputError

__all__ = [
    "SystemDims",
    "ChannelSet",
    "PhaseVector",
    "LinkBudget",
    "dbm_to_mw",
    "mw_to_dbm",
    "combined_channel",
    "cross_gains",
    "sinr",
    "wsr",
    "user_rates",
    "total_power",
    "nats_to_bits",
    "mrt_beamformer",
]

LN2 = np.log(2.0)


def dbm_to_mw(dbm):
    return 10.0 ** (np.asarray(dbm, dtype=float) / 10.0)


def mw_to_dbm(mw):
    return 10.0 * np.log10(np.asarray(mw, dtype=float))


def nats_to_bits(x):
    """Convert a rate in nats/s/Hz to bits/s/Hz."""
    return x / LN2


@dataclass(frozen=True)
class SystemDims:
    M: int
    N: int
    K: int

    def __post_init__(self):
        if self.M < 1 or self.K < 1 or self.N < 0:
            raise InvalidInputError(f"invalid dimensions M={self.M}, N={self.N}, K={self.K}")


@dataclass(frozen=True)
class ChannelSet:
    """One realization of every physical channel plus the derived RIS matrices."""

    direct: np.ndarray
    ap_to_ris: np.ndarray
    ris_to_user: np.ndarray
    effective: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        hd = np.atleast_2d(np.asarray(self.direct, dtype=complex))
        K, M = hd.shape
        G = np.asarray(self.ap_to_ris, dtype=complex).reshape(-1, M)
        N = G.shape[0]
        hr = np.asarray(self.ris_to_user, dtype=complex).reshape(K, N)
        object.__setattr__(self, "direct", hd)
        object.__setattr__(self, "ap_to_ris", G)
        object.__setattr__(self, "ris_to_user", hr)
        object.__setattr__(self, "effective", np.conj(hr)[:, :, None] * G[None, :, :])
        for arr in (hd, G, hr):
            arr.flags.writeable = False
        self.effective.flags.writeable = False

    @classmethod
    def without_ris(cls, direct) -> "ChannelSet":
        direct = np.atleast_2d(np.asarray(direct, dtype=complex))
        K, M = direct.shape
        return cls(direct, np.zeros((0, M), complex), np.zeros((K, 0), complex))

    @property
    def dims(self) -> SystemDims:
        K, M = self.direct.shape
        return SystemDims(M=M, N=self.ap_to_ris.shape[0], K=K)

    def scaled(self, c: float) -> "ChannelSet":
        """All channels multiplied by ``c`` (the RIS cascade scales by ``c``)."""
        return ChannelSet(self.direct * c, self.ap_to_ris * np.sqrt(c), self.ris_to_user * np.sqrt(c))


@dataclass(frozen=True)
class PhaseVector:
    """RIS phases; the complex coefficients are always derived from ``phases``."""

    phases: np.ndarray

    def __post_init__(self):
        phi = np.array(self.phases, dtype=float).reshape(-1)
        if not np.all(np.isfinite(phi)):
            raise InvalidInputError("phases must be finite")
        phi.flags.writeable = False
        object.__setattr__(self, "phases", phi)

    @classmethod
    def zeros(cls, n: int) -> "PhaseVector":
        return cls(np.zeros(n))

    @classmethod
    def from_coefficients(cls, theta) -> "PhaseVector":
        return cls(np.angle(np.asarray(theta, dtype=complex)))

    @property
    def coefficients(self) -> np.ndarray:
        return np.exp(1j * self.phases)

    def __len__(self):
        return self.phases.size


@dataclass(frozen=True)
class LinkBudget:
    """Transmit power, noise power and user weights; linear values in mW."""

    tx_power_dbm: float
    noise_power_dbm: float
    weights: np.ndarray
    p_max: float = field(init=False)
    noise: float = field(init=False)

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        if w.size == 0 or np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise InvalidInputError("weights must be positive and finite")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "p_max", float(dbm_to_mw(self.tx_power_dbm)))
        object.__setattr__(self, "noise", float(dbm_to_mw(self.noise_power_dbm)))

    def with_power(self, tx_power_dbm: float) -> "LinkBudget":
        return LinkBudget(tx_power_dbm, self.noise_power_dbm, self.weights)


def _theta_array(theta) -> np.ndarray:
    if isinstance(theta, PhaseVector):
        return theta.coefficients
    return np.asarray(theta, dtype=complex).reshape(-1)


def combined_channel(channels: ChannelSet, theta) -> np.ndarray:
    """Return the (K, M) array of combined channels ``h_k = h_d,k + H_r,k^H theta``."""
    th = _theta_array(theta)
    if th.size != channels.ap_to_ris.shape[0]:
        raise InvalidInputError(
            f"theta has {th.size} elements but the RIS has {channels.ap_to_ris.shape[0]}"
        )
    if th.size == 0:
        return channels.direct.copy()
    return channels.direct + np.einsum("knm,n->km", channels.effective.conj(), th)


def cross_gains(h: np.ndarray, W: np.ndarray) -> np.ndarray:
    """``g[k, i] = h_k^H w_i`` for combined channels ``h`` (K, M) and ``W`` (M, K)."""
    return np.conj(h) @ W


def _sinr_from_gains(g: np.ndarray, noise: float) -> np.ndarray:
    p = np.abs(g) ** 2
    signal = np.diag(p)
    interference = p.sum(axis=1) - signal
    return signal / (interference + noise)


def sinr(W, theta, channels: ChannelSet, noise: float) -> np.ndarray:
    if not noise > 0:
        raise InvalidInputError("noise power must be positive")
    W = np.asarray(W, dtype=complex)
    h = combined_channel(channels, theta)
    if W.shape != (h.shape[1], h.shape[0]):
        raise InvalidInputError(f"beamformer shape {W.shape} != {(h.shape[1], h.shape[0])}")
    return _sinr_from_gains(cross_gains(h, W), noise)


def user_rates(W, theta, channels: ChannelSet, noise: float) -> np.ndarray:
    """Per-user rates ln(1 + SINR_k) in nats/s/Hz (unweighted)."""
    return np.log1p(sinr(W, theta, channels, noise))


def wsr(W, theta, channels: ChannelSet, budget: LinkBudget) -> float:
    """Weighted sum-rate in nats/s/Hz."""
    return float(budget.weights @ user_rates(W, theta, channels, budget.noise))


def wsr_from_channel(h: np.ndarray, W: np.ndarray, weights, noise: float) -> float:
    return float(np.asarray(weights) @ np.log1p(_sinr_from_gains(cross_gains(h, W), noise)))


def total_power(W) -> float:
    W = np.asarray(W)
    return float(np.sum(W.real**2 + W.imag**2))


def mrt_beamformer(h: np.ndarray, p_max: float) -> np.ndarray:
    """Maximum-ratio directions with the power split equally over users."""
    K, M = h.shape
    norms = np.linalg.norm(h, axis=1)
    W = np.zeros((M, K), dtype=complex)
    nz = norms > 0
    W[:, nz] = (h[nz] / norms[nz, None]).T * np.sqrt(p_max / K)
    return W
