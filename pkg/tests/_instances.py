"""Shared problem generators for the tests."""

import numpy as np

from riswsr.channels import Placement, cscg, draw_channels, noise_power_dbm
from riswsr.experiments.config import PAPER_FIXED_USERS
from riswsr.model import ChannelSet, LinkBudget, SystemDims


def unit_instance(rng, M, K, N, snr_db=10.0, ris_scale=0.5, equal=False):
    """Unit-scale channels (noise 0 dBm) so tolerances are easy to reason about."""
    ch = ChannelSet(cscg(rng, (K, M)), cscg(rng, (N, M)) * ris_scale, cscg(rng, (K, N)) * ris_scale)
    w = np.full(K, 1.0 / K) if equal else rng.random(K) + 0.1
    return ch, LinkBudget(snr_db, 0.0, w / w.sum())


def paper_instance(seed, N=100, p_dbm=0.0, M=4, K=4):
    dims = SystemDims(M=M, N=N, K=K)
    place = Placement((0.0, 0.0), (200.0, 0.0), PAPER_FIXED_USERS[:K])
    ch = draw_channels(dims, place, np.random.default_rng(seed))
    return ch, LinkBudget(p_dbm, noise_power_dbm(), np.full(K, 1.0 / K))


def random_phases(rng, N):
    return rng.uniform(0.0, 2.0 * np.pi, N)


def power_feasible_w(rng, M, K, p_max):
    W = cscg(rng, (M, K))
    return W * np.sqrt(p_max / np.sum(np.abs(W) ** 2))


def fd_grad(f, x, h=1e-6):
    g = np.empty_like(x)
    for n in range(x.size):
        e = np.zeros_like(x)
        e[n] = h
        g[n] = (f(x + e) - f(x - e)) / (2 * h)
    return g
