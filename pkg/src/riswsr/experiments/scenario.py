"""Scenario construction: user placement, weights and link budgets."""

from __future__ import annotations

import numpy as np

from riswsr.channels import DIRECT_PATH_LOSS, PathLossModel, Placement, noise_power_dbm, path_loss_db
from riswsr.errors import InvalidInputError
from riswsr.experiments.config import ScenarioGeometry
from riswsr.model import LinkBudget


def drop_users(geometry: ScenarioGeometry, K: int, rng: np.random.Generator) -> np.ndarray:
    """Fixed positions when configured, otherwise area-uniform draws over the cluster disk."""
    if geometry.user_positions is not None:
        users = np.asarray(geometry.user_positions, dtype=float)
        if users.shape != (K, 2):
            raise InvalidInputError(f"{users.shape[0]} user positions for K={K}")
        return users
    r = geometry.user_cluster_radius * np.sqrt(rng.random(K))
    a = 2.0 * np.pi * rng.random(K)
    cx, cy = geometry.user_cluster_center
    return np.column_stack([cx + r * np.cos(a), cy + r * np.sin(a)])


def placement(geometry: ScenarioGeometry, users) -> Placement:
    return Placement(geometry.ap_position, geometry.ris_position, users)


def assign_weights(policy: str, place: Placement, model: PathLossModel = DIRECT_PATH_LOSS) -> np.ndarray:
    """``inversePathLoss``: w_k proportional to 1 / (linear direct-link path loss); ``equal``: 1/K."""
    K = place.users.shape[0]
    if policy == "equal":
        return np.full(K, 1.0 / K)
    if policy == "inversePathLoss":
        pl_db = np.atleast_1d(path_loss_db(model, place.direct_distances))
        # normalize in the dB domain first so the linear values stay representable
        w = 10.0 ** (-(pl_db - pl_db.min()) / 10.0)
        return w / w.sum()
    raise InvalidInputError(f"unknown weight policy {policy!r}")


def link_budget(tx_power_dbm: float, weights) -> LinkBudget:
    return LinkBudget(tx_power_dbm, noise_power_dbm(), weights)
