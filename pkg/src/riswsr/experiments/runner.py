"""Monte-Carlo sweep execution, aggregation and CSV/JSON emission.

A unit of work is one (trial, realization) pair. A trial fixes the user
positions (random drops or the configured fixed set); a realization fixes the
small-scale fading. Inside a unit every sweep point and algorithm sees the same
fading draw, so comparisons between algorithms, powers and RIS positions use
common random numbers. All random streams are derived from
``SeedSequence([masterSeed, stream, trial, realization, ...])`` so results do
not depend on execution order or on the number of workers.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from riswsr import _kernels
from riswsr.channels import (
    BANDWIDTH_HZ,
    CsiErrorModel,
    RicianParams,
    SmallScaleEstimate,
    assemble_channels,
    draw_csi_realization,
    draw_small_scale,
    link_structure,
)
from riswsr.experiments.config import ExperimentConfig
from riswsr.experiments.scenario import assign_weights, drop_users, link_budget, placement
from riswsr.fpbcd import bcd_solve
from riswsr.model import ChannelSet, SystemDims, combined_channel, nats_to_bits, user_rates
from riswsr.rcg import alternating_optimize
from riswsr.ssca import CsiSampler, ssca_solve
from riswsr.trace import Trace
from riswsr.wmmse import wmmse_solve

# stream tags for SeedSequence-derived generators
USERS, FADING, RANDOM_PHASE, SSCA_SAMPLER, CSI_TRUTH, RESTARTS = range(1, 7)

PERFECT_CSI = ("noRis", "randomPhase", "alternating", "fpBcd", "upperBound")


def _rng(cfg: ExperimentConfig, *keys) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([cfg.master_seed, *keys]))


def realization_seed(cfg: ExperimentConfig, trial: int, realization: int) -> int:
    """A 32-bit fingerprint of the fading stream, reported in the outputs."""
    return int(np.random.SeedSequence([cfg.master_seed, FADING, trial, realization]).generate_state(1)[0])


@dataclass
class RunRecord:
    algorithm: str
    tx_power_dbm: float
    n: int
    rho: float
    ris_x: float
    trial: int
    realization: int
    seed: int
    status: str = "ok"
    wsr_bits: float = float("nan")
    user_rates_bits: tuple = ()
    iterations: int = 0
    converged: bool = False
    wall_ms: float = 0.0
    error: str = ""
    trace: Trace | None = field(default=None, repr=False)

    @property
    def key(self):
        return (self.algorithm, self.tx_power_dbm, self.n, self.rho, self.ris_x, self.trial, self.realization)

    @property
    def point(self):
        return (self.algorithm, self.tx_power_dbm, self.n, self.rho, self.ris_x)


@dataclass
class RunResult:
    config: ExperimentConfig
    records: list
    files: list = field(default_factory=list)

    @property
    def failed(self) -> int:
        return sum(r.status != "ok" for r in self.records)


@dataclass
class _Outcome:
    W: np.ndarray
    theta: np.ndarray
    iterations: int
    converged: bool
    trace: Trace | None = None
    channels: ChannelSet | None = None  # when scored on a channel other than the cell's


def _upper_bound(ch, budget, restarts, rng):
    best = None
    for r in range(restarts):
        phi0 = None if r == 0 else rng.uniform(0.0, 2.0 * np.pi, ch.ap_to_ris.shape[0])
        res = bcd_solve(ch, budget, phi0=phi0)
        if best is None or res.wsr > best.wsr:
            best = res
    return best


def _solve(algorithm, ch, budget, cfg, trial, real, rho, estimate, structure):
    N = ch.ap_to_ris.shape[0]
    w, noise, p = budget.weights, budget.noise, budget.p_max
    if algorithm == "noRis":
        res = wmmse_solve(ch.direct, w, noise, p)
        return _Outcome(res.W, np.zeros(0, complex), res.iterations, res.converged,
                        channels=ChannelSet.without_ris(ch.direct))
    if algorithm == "randomPhase":
        theta = np.exp(1j * _rng(cfg, RANDOM_PHASE, trial, real, N).uniform(0.0, 2.0 * np.pi, N))
        res = wmmse_solve(combined_channel(ch, theta), w, noise, p)
        return _Outcome(res.W, theta, res.iterations, res.converged)
    if algorithm == "alternating":
        res = alternating_optimize(ch, budget)
        return _Outcome(res.W, res.phases.coefficients, res.iterations, res.converged, res.trace)
    if algorithm == "fpBcd":
        res = bcd_solve(ch, budget)
        return _Outcome(res.W, res.phases.coefficients, res.iterations, res.converged, res.trace)
    if algorithm == "upperBound":
        res = _upper_bound(ch, budget, cfg.upper_bound_restarts, _rng(cfg, RESTARTS, trial, real))
        return _Outcome(res.W, res.phases.coefficients, res.iterations, res.converged)
    if algorithm == "ssca":
        # scale the estimate so the true channel keeps the statistics of the
        # perfect-CSI draws: x = x_hat + z with x_hat ~ CN(0, 1/(1+rho))
        est = SmallScaleEstimate(*(b / np.sqrt(1.0 + rho) for b in
                                   (estimate.direct, estimate.ap_to_ris, estimate.ris_to_user)))
        err = CsiErrorModel(rho)
        truth = assemble_channels(draw_csi_realization(est, err, _rng(cfg, CSI_TRUTH, trial, real, N)), structure)
        sampler = CsiSampler(est, err, structure, _rng(cfg, SSCA_SAMPLER, trial, real, N))
        res = ssca_solve(sampler, budget)
        theta = res.phases.coefficients
        dep = wmmse_solve(combined_channel(truth, theta), w, noise, p)
        return _Outcome(dep.W, theta, res.iterations, res.converged, res.trace, channels=truth)
    raise ValueError(f"unknown algorithm {algorithm!r}")


def _sweep_points(cfg: ExperimentConfig):
    for x in cfg.ris_x_list:
        for n in cfg.n_list:
            for p in cfg.tx_power_dbm_list:
                for alg in cfg.algorithms:
                    if alg == "ssca":
                        for rho in cfg.rho_list:
                            yield alg, p, n, rho, x
                    else:
                        yield alg, p, n, 0.0, x


def run_unit(cfg: ExperimentConfig, trial: int, real: int, keep_traces: bool = False) -> list:
    """Every sweep point and algorithm for one (trial, realization)."""
    users = drop_users(cfg.geometry, cfg.dims.K, _rng(cfg, USERS, trial))
    seed = realization_seed(cfg, trial, real)
    out = []
    cache = {}
    for alg, p, n, rho, x in _sweep_points(cfg):
        rec = RunRecord(alg, p, n, rho, x, trial, real, seed)
        t0 = time.perf_counter()
        try:
            if (n, x) not in cache:
                dims = SystemDims(M=cfg.dims.M, N=n, K=cfg.dims.K)
                place = placement(cfg.geometry.with_ris_x(x), users)
                rician = RicianParams.from_placement(place, cfg.rician_factor)
                structure = link_structure(dims, place, rician)
                small = draw_small_scale(dims, _rng(cfg, FADING, trial, real))
                cache[(n, x)] = (assemble_channels(small, structure), small, structure,
                                 assign_weights(cfg.weight_policy, place))
            ch, small, structure, weights = cache[(n, x)]
            budget = link_budget(p, weights)
            o = _solve(alg, ch, budget, cfg, trial, real, rho, small, structure)
            scored_on = o.channels if o.channels is not None else ch
            rates = nats_to_bits(user_rates(o.W, o.theta, scored_on, budget.noise))
            rec.user_rates_bits = tuple(float(r) for r in rates)
            rec.wsr_bits = float(weights @ rates)
            rec.iterations, rec.converged = int(o.iterations), bool(o.converged)
            rec.trace = o.trace if keep_traces else None
        except Exception as exc:  # a failed cell is recorded and the run continues
            rec.status, rec.error = "failed", f"{type(exc).__name__}: {exc}"
        rec.wall_ms = (time.perf_counter() - t0) * 1e3
        out.append(rec)
    return out


def _unit_args(cfg, keep_traces):
    return [(cfg, t, r, keep_traces) for t in range(cfg.trials) for r in range(cfg.fading_realizations_per_trial)]


def _run_unit_star(args):
    return run_unit(*args)


def run_sweep(cfg: ExperimentConfig, workers: int = 1, write: bool = True, keep_traces: bool | None = None) -> RunResult:
    if keep_traces is None:
        keep_traces = cfg.sweep == "convergence"
    units = _unit_args(cfg, keep_traces)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_unit_star, units))
    else:
        chunks = [_run_unit_star(u) for u in units]
    records = sorted((r for c in chunks for r in c), key=lambda r: r.key)
    result = RunResult(cfg, records)
    if write:
        result.files = write_outputs(result)
    return result


# ---------------------------------------------------------------- aggregation

def summarize(records) -> list:
    """Mean and sample std of wsr_bits per sweep point, independent of record order."""
    groups = {}
    for r in records:
        groups.setdefault(r.point, []).append(r)
    rows = []
    for point in sorted(groups):
        recs = groups[point]
        ok = sorted(r.wsr_bits for r in recs if r.status == "ok")
        n = len(ok)
        mean = math.fsum(ok) / n if n else float("nan")
        std = math.sqrt(math.fsum((v - mean) ** 2 for v in ok) / (n - 1)) if n > 1 else 0.0
        rows.append(dict(zip(("algorithm", "tx_power_dbm", "n", "rho", "ris_x"), point),
                         count=n, failed=len(recs) - n, mean_wsr_bits=mean, std_wsr_bits=std,
                         mean_wsr_bits_per_s=mean * BANDWIDTH_HZ))
    return rows


def snapshot_means(records) -> dict:
    """Per (sweep point, trial) mean WSR over realizations."""
    groups = {}
    for r in records:
        if r.status == "ok":
            groups.setdefault((r.point, r.trial), []).append(r.wsr_bits)
    return {k: math.fsum(sorted(v)) / len(v) for k, v in groups.items()}


def empirical_cdf(values) -> list:
    """(value, cumulative probability) at each distinct value, ending at 1.0."""
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        raise ValueError("empty sample")
    uniq, counts = np.unique(v, return_counts=True)
    cum = np.cumsum(counts) / v.size
    cum[-1] = 1.0
    return list(zip(uniq.tolist(), cum.tolist()))


def compute_cdf(records) -> list:
    means = snapshot_means(records)
    by_point = {}
    for (point, trial), m in means.items():
        by_point.setdefault(point, []).append(m)
    rows = []
    for point in sorted(by_point):
        vals = by_point[point]
        if len(vals) < 2:
            raise ValueError(f"a CDF needs at least 2 snapshots, got {len(vals)} for {point}")
        for value, prob in empirical_cdf(vals):
            rows.append(dict(zip(("algorithm", "tx_power_dbm", "n", "rho", "ris_x"), point),
                             rate_bits=value, cumulative_probability=prob))
    return rows


# ------------------------------------------------------------------- writing

def _fmt(v):
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(row[h]) for h in header])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())
    return path


POINT_COLUMNS = ["algorithm", "tx_power_dbm", "n", "rho", "ris_x"]


def record_rows(records, K):
    rows = []
    for r in records:
        row = {c: getattr(r, c) for c in POINT_COLUMNS}
        row.update(trial=r.trial, realization=r.realization, seed=r.seed, status=r.status,
                   wsr_bits=r.wsr_bits, wsr_bits_per_s=r.wsr_bits * BANDWIDTH_HZ,
                   iterations=r.iterations, converged=r.converged, error=r.error)
        for k in range(K):
            row[f"rate_user_{k + 1}_bits"] = r.user_rates_bits[k] if len(r.user_rates_bits) == K else float("nan")
        rows.append(row)
    return rows


def trace_filename(r: RunRecord) -> str:
    name = f"{r.algorithm}_P{r.tx_power_dbm:g}_N{r.n}_x{r.ris_x:g}_t{r.trial}_r{r.realization}"
    if r.algorithm == "ssca":
        name += f"_rho{r.rho:g}"
    return name + ".csv"


def write_outputs(result: RunResult) -> list:
    cfg = result.config
    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)
    K = cfg.dims.K
    files = []
    header = (POINT_COLUMNS + ["trial", "realization", "seed", "status", "wsr_bits", "wsr_bits_per_s",
                               "iterations", "converged"]
              + [f"rate_user_{k + 1}_bits" for k in range(K)] + ["error"])
    files.append(_write_csv(os.path.join(out, f"{cfg.sweep}.csv"), header, record_rows(result.records, K)))
    files.append(_write_csv(os.path.join(out, "summary.csv"),
                            POINT_COLUMNS + ["count", "failed", "mean_wsr_bits", "std_wsr_bits", "mean_wsr_bits_per_s"],
                            summarize(result.records)))
    timing_rows = [{**{c: getattr(r, c) for c in POINT_COLUMNS}, "trial": r.trial,
                    "realization": r.realization, "wall_ms": r.wall_ms} for r in result.records]
    files.append(_write_csv(os.path.join(out, "timings.csv"),
                            POINT_COLUMNS + ["trial", "realization", "wall_ms"], timing_rows))
    if cfg.sweep == "cdf":
        files.append(_write_csv(os.path.join(out, "cdf.csv"), POINT_COLUMNS + ["rate_bits", "cumulative_probability"],
                                compute_cdf(result.records)))
    traced = [r for r in result.records if r.trace is not None]
    if traced:
        tdir = os.path.join(out, "traces")
        os.makedirs(tdir, exist_ok=True)
        for r in traced:
            rows = [dict(iteration=i, objective_nats=o, wsr_bits=float(nats_to_bits(w)), cumulative_ms=ms)
                    for i, o, w, ms in r.trace.rows()]
            files.append(_write_csv(os.path.join(tdir, trace_filename(r)),
                                    ["iteration", "objective_nats", "wsr_bits", "cumulative_ms"], rows))
    manifest = os.path.join(out, "manifest.json")
    with open(manifest, "w", encoding="utf-8") as fh:
        json.dump(manifest_dict(result, [os.path.relpath(f, out) for f in files]), fh, indent=2, sort_keys=True)
        fh.write("\n")
    files.append(manifest)
    return files


def software_version() -> str:
    try:
        from importlib.metadata import version
        return version("artifact")
    except Exception:
        return "unknown"


def manifest_dict(result: RunResult, files) -> dict:
    cfg = result.config
    return {
        "config": cfg.to_json_dict(),
        "config_sha256": cfg.digest(),
        "master_seed": cfg.master_seed,
        "software_version": software_version(),
        "kernel_backend": _kernels.backend_name(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "records": len(result.records),
        "failed_cells": result.failed,
        "files": sorted(files),
    }
