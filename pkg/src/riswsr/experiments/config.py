"""Experiment configuration: dataclasses, JSON ingestion and per-figure presets.

JSON documents use the camelCase names below and mirror ``ExperimentConfig``
field for field; unknown keys are rejected at every nesting level.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, fields, replace

from riswsr.errors import InvalidInputError
from riswsr.model import SystemDims

ALGORITHMS = ("noRis", "randomPhase", "alternating", "fpBcd", "ssca", "upperBound")
WEIGHT_POLICIES = ("inversePathLoss", "equal")
SWEEP_KINDS = ("wsr-vs-power", "convergence", "wsr-vs-n", "location-sweep", "cdf")

PAPER_FIXED_USERS = ((205.65, 34.48), (193.47, 30.24), (198.30, 22.40), (207.00, 24.28))
NAMED_USER_SETS = {"paper-fixed-users": PAPER_FIXED_USERS}


def _camel(name: str) -> str:
    head, *rest = name.split("_")
    return head + "".join(p.capitalize() for p in rest)


def _pair(v, what):
    try:
        x, y = (float(t) for t in v)
    except (TypeError, ValueError):
        raise InvalidInputError(f"{what} must be an (x, y) pair") from None
    return (x, y)


@dataclass(frozen=True)
class ScenarioGeometry:
    """Node placement in meters. ``user_positions=None`` means random drops in the cluster disk."""

    ap_position: tuple = (0.0, 0.0)
    ris_position: tuple = (200.0, 0.0)
    user_cluster_center: tuple = (200.0, 30.0)
    user_cluster_radius: float = 10.0
    user_positions: tuple | None = PAPER_FIXED_USERS

    def __post_init__(self):
        object.__setattr__(self, "ap_position", _pair(self.ap_position, "apPosition"))
        object.__setattr__(self, "ris_position", _pair(self.ris_position, "risPosition"))
        object.__setattr__(self, "user_cluster_center", _pair(self.user_cluster_center, "userClusterCenter"))
        if not self.user_cluster_radius >= 0:
            raise InvalidInputError("userClusterRadius must be non-negative")
        users = self.user_positions
        if isinstance(users, str):
            if users not in NAMED_USER_SETS:
                raise InvalidInputError(f"unknown named user set {users!r}")
            users = NAMED_USER_SETS[users]
        if users is not None:
            users = tuple(_pair(u, "userPositions entry") for u in users)
        object.__setattr__(self, "user_positions", users)

    def with_ris_x(self, x: float) -> "ScenarioGeometry":
        return replace(self, ris_position=(float(x), self.ris_position[1]))


@dataclass(frozen=True)
class ExperimentConfig:
    dims: SystemDims = SystemDims(M=4, N=100, K=4)
    geometry: ScenarioGeometry = ScenarioGeometry()
    tx_power_dbm_list: tuple = (0.0,)
    n_list: tuple = (100,)
    rho_list: tuple = (0.0,)
    ris_x_list: tuple = (200.0,)
    trials: int = 100
    fading_realizations_per_trial: int = 1
    master_seed: int = 0
    algorithms: tuple = ("noRis", "fpBcd")
    weight_policy: str = "inversePathLoss"
    output_dir: str = "runs"
    upper_bound_restarts: int = 20
    rician_factor: float = 10.0
    sweep: str = "wsr-vs-power"

    def __post_init__(self):
        for name in ("tx_power_dbm_list", "n_list", "rho_list", "ris_x_list", "algorithms"):
            v = getattr(self, name)
            if isinstance(v, (str, bytes)) or not hasattr(v, "__iter__"):
                raise InvalidInputError(f"{_camel(name)} must be a list")
            object.__setattr__(self, name, tuple(v))
            if not getattr(self, name):
                raise InvalidInputError(f"{_camel(name)} must be non-empty")
        object.__setattr__(self, "tx_power_dbm_list", tuple(float(p) for p in self.tx_power_dbm_list))
        object.__setattr__(self, "n_list", tuple(int(n) for n in self.n_list))
        object.__setattr__(self, "rho_list", tuple(float(r) for r in self.rho_list))
        object.__setattr__(self, "ris_x_list", tuple(float(x) for x in self.ris_x_list))
        if any(n < 0 for n in self.n_list):
            raise InvalidInputError("nList entries must be non-negative")
        if any(not r >= 0 for r in self.rho_list):
            raise InvalidInputError("rhoList entries must be non-negative")
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad:
            raise InvalidInputError(f"unknown algorithms {bad}; choose from {list(ALGORITHMS)}")
        if self.weight_policy not in WEIGHT_POLICIES:
            raise InvalidInputError(f"weightPolicy must be one of {list(WEIGHT_POLICIES)}")
        if self.sweep not in SWEEP_KINDS:
            raise InvalidInputError(f"sweep must be one of {list(SWEEP_KINDS)}")
        if self.trials < 1 or self.fading_realizations_per_trial < 1 or self.upper_bound_restarts < 1:
            raise InvalidInputError("trials, fadingRealizationsPerTrial and upperBoundRestarts must be >= 1")
        if not self.rician_factor >= 0:
            raise InvalidInputError("ricianFactor must be non-negative")
        if self.master_seed < 0:
            raise InvalidInputError("masterSeed must be non-negative")
        users = self.geometry.user_positions
        if users is not None and len(users) != self.dims.K:
            raise InvalidInputError(f"{len(users)} user positions for K={self.dims.K}")

    def to_json_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "dims":
                v = {"M": v.M, "N": v.N, "K": v.K}
            elif f.name == "geometry":
                v = {_camel(k): (list(map(list, x)) if k == "user_positions" and x is not None
                                 else list(x) if isinstance(x, tuple) else x)
                     for k, x in asdict(v).items()}
            elif isinstance(v, tuple):
                v = list(v)
            out[_camel(f.name)] = v
        return out

    def digest(self) -> str:
        blob = json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _reject_unknown(d: dict, allowed, where: str):
    if not isinstance(d, dict):
        raise InvalidInputError(f"{where} must be a JSON object")
    unknown = sorted(set(d) - set(allowed))
    if unknown:
        raise InvalidInputError(f"unknown keys in {where}: {unknown}")


def config_from_dict(d: dict, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Overlay a camelCase JSON object on ``base`` (defaults when omitted)."""
    base = base or ExperimentConfig()
    names = {_camel(f.name): f.name for f in fields(ExperimentConfig)}
    _reject_unknown(d, names, "config")
    kw = {}
    for key, value in d.items():
        name = names[key]
        if name == "dims":
            _reject_unknown(value, ("M", "N", "K"), "dims")
            cur = base.dims
            value = SystemDims(M=int(value.get("M", cur.M)), N=int(value.get("N", cur.N)), K=int(value.get("K", cur.K)))
        elif name == "geometry":
            gnames = {_camel(f.name): f.name for f in fields(ScenarioGeometry)}
            _reject_unknown(value, gnames, "geometry")
            value = replace(base.geometry, **{gnames[k]: v for k, v in value.items()})
        kw[name] = value
    return replace(base, **kw)


def load_config(path, base: ExperimentConfig | None = None) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"{path}: invalid JSON ({exc})") from None
    return config_from_dict(d, base)


# Desk-scale presets, one per figure type. Full scale multiplies the Monte-Carlo effort.
_ALL_PERFECT = ("noRis", "randomPhase", "alternating", "fpBcd", "upperBound")


def preset(sweep: str, full_scale: bool = False) -> ExperimentConfig:
    if sweep == "wsr-vs-power":
        cfg = ExperimentConfig(tx_power_dbm_list=(-10.0, -5.0, 0.0, 5.0, 10.0), n_list=(100,),
                               rho_list=(0.1, 0.5), algorithms=_ALL_PERFECT + ("ssca",))
    elif sweep == "convergence":
        cfg = ExperimentConfig(tx_power_dbm_list=(0.0,), n_list=(100,), rho_list=(0.1, 0.5), trials=1,
                               algorithms=("alternating", "fpBcd", "ssca"))
    elif sweep == "wsr-vs-n":
        cfg = ExperimentConfig(tx_power_dbm_list=(5.0,), n_list=(0, 25, 50, 100, 150, 200), rho_list=(0.1,),
                               algorithms=("noRis", "randomPhase", "alternating", "fpBcd", "ssca"))
    elif sweep == "location-sweep":
        cfg = ExperimentConfig(tx_power_dbm_list=(5.0,), n_list=(100,),
                               ris_x_list=tuple(float(x) for x in range(170, 210, 5)),
                               geometry=ScenarioGeometry(user_positions=None), weight_policy="equal",
                               trials=30, fading_realizations_per_trial=30,
                               algorithms=("noRis", "randomPhase", "fpBcd"))
    elif sweep == "cdf":
        cfg = ExperimentConfig(tx_power_dbm_list=(5.0,), n_list=(100,), ris_x_list=(195.0,),
                               geometry=ScenarioGeometry(user_positions=None), weight_policy="equal",
                               trials=30, fading_realizations_per_trial=30,
                               algorithms=("noRis", "randomPhase", "fpBcd"))
    else:
        raise InvalidInputError(f"unknown sweep {sweep!r}")
    cfg = replace(cfg, sweep=sweep, output_dir=f"runs/{sweep}")
    if full_scale:
        if cfg.geometry.user_positions is None:
            cfg = replace(cfg, trials=100, fading_realizations_per_trial=100)
        elif sweep != "convergence":
            cfg = replace(cfg, trials=1000)
        cfg = replace(cfg, upper_bound_restarts=100)
    return cfg
