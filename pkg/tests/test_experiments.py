import csv
import json
import os

import numpy as np
import pytest

from riswsr.channels import DIRECT_PATH_LOSS, Placement, path_loss_db
from riswsr.errors import InvalidInputError
from riswsr.experiments.cli import main
from riswsr.experiments.config import (
    PAPER_FIXED_USERS,
    ExperimentConfig,
    ScenarioGeometry,
    config_from_dict,
    load_config,
    preset,
)
from riswsr.experiments.runner import compute_cdf, empirical_cdf, run_sweep, summarize
from riswsr.experiments.scenario import assign_weights, drop_users
from riswsr.model import SystemDims


def small_config(tmp_path, **kw):
    base = dict(dims=SystemDims(M=2, N=4, K=2), geometry=ScenarioGeometry(user_positions=PAPER_FIXED_USERS[:2]),
                tx_power_dbm_list=(0.0, 5.0), n_list=(4,), rho_list=(0.1,), trials=2,
                algorithms=("noRis", "randomPhase", "fpBcd", "alternating", "ssca", "upperBound"),
                upper_bound_restarts=2, output_dir=str(tmp_path))
    base.update(kw)
    return ExperimentConfig(**base)


def read_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def test_json_round_trip():
    cfg = preset("location-sweep")
    again = config_from_dict(json.loads(json.dumps(cfg.to_json_dict())))
    assert again == cfg
    assert again.digest() == cfg.digest()


@pytest.mark.parametrize("doc", [{"bogus": 1}, {"dims": {"M": 2, "L": 3}}, {"geometry": {"apPos": [0, 0]}}])
def test_unknown_keys_rejected(doc):
    with pytest.raises(InvalidInputError, match="unknown keys"):
        config_from_dict(doc)


@pytest.mark.parametrize("doc", [{"algorithms": ["magic"]}, {"weightPolicy": "max"}, {"trials": 0},
                                 {"nList": [-1]}, {"rhoList": "0.1"}, {"geometry": {"userPositions": "nowhere"}},
                                 {"dims": {"K": 3}}])
def test_invalid_values_rejected(doc):
    with pytest.raises(InvalidInputError):
        config_from_dict(doc)


def test_named_user_set_and_partial_override(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"geometry": {"userPositions": "paper-fixed-users"}, "trials": 3}))
    cfg = load_config(p, base=preset("cdf"))
    assert cfg.geometry.user_positions == PAPER_FIXED_USERS
    assert cfg.trials == 3 and cfg.sweep == "cdf"
    p.write_text("{not json")
    with pytest.raises(InvalidInputError):
        load_config(p)


def test_full_scale_presets():
    assert preset("wsr-vs-power", full_scale=True).trials == 1000
    cdf = preset("cdf", full_scale=True)
    assert (cdf.trials, cdf.fading_realizations_per_trial) == (100, 100)
    assert preset("location-sweep").ris_x_list == tuple(float(x) for x in range(170, 210, 5))


def test_user_drops_stay_in_disk():
    geo = ScenarioGeometry(user_positions=None)
    rng = np.random.default_rng(0)
    u = np.vstack([drop_users(geo, 4, rng) for _ in range(2000)])
    r = np.hypot(u[:, 0] - 200.0, u[:, 1] - 30.0)
    assert r.max() <= 10.0
    # area-uniform: P(r < R/2) = 1/4
    assert np.mean(r < 5.0) == pytest.approx(0.25, abs=0.02)


def test_weights():
    place = Placement((0, 0), (200, 0), PAPER_FIXED_USERS)
    w = assign_weights("inversePathLoss", place)
    pl = path_loss_db(DIRECT_PATH_LOSS, place.direct_distances)
    ref = 10 ** (-pl / 10)
    assert np.allclose(w, ref / ref.sum(), rtol=1e-12)
    assert np.allclose(assign_weights("equal", place), 0.25)


def test_sweep_outputs_and_formats(tmp_path):
    cfg = small_config(tmp_path, sweep="convergence")
    res = run_sweep(cfg)
    assert res.failed == 0
    rows = read_csv(tmp_path / "convergence.csv")
    # 5 perfect-CSI algorithms + ssca at one rho, 2 powers, 2 trials
    assert len(rows) == 6 * 2 * 2
    assert set(rows[0]) >= {"algorithm", "tx_power_dbm", "n", "rho", "ris_x", "trial", "realization", "seed",
                            "status", "wsr_bits", "wsr_bits_per_s", "rate_user_1_bits", "rate_user_2_bits"}
    for r in rows:
        w = np.array([float(r["rate_user_1_bits"]), float(r["rate_user_2_bits"])])
        assert float(r["wsr_bits_per_s"]) == pytest.approx(180e3 * float(r["wsr_bits"]))
        assert np.all(w >= 0)
    summary = read_csv(tmp_path / "summary.csv")
    assert {s["algorithm"] for s in summary} == set(cfg.algorithms)
    traces = os.listdir(tmp_path / "traces")
    assert len(traces) == 3 * 2 * 2  # alternating, fpBcd, ssca
    t = read_csv(tmp_path / "traces" / sorted(traces)[0])
    assert list(t[0]) == ["iteration", "objective_nats", "wsr_bits", "cumulative_ms"]
    assert [int(r["iteration"]) for r in t] == list(range(len(t)))
    ms = [float(r["cumulative_ms"]) for r in t]
    assert ms == sorted(ms)
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["config_sha256"] == cfg.digest()
    assert man["master_seed"] == cfg.master_seed
    assert man["software_version"] and man["failed_cells"] == 0
    assert "convergence.csv" in man["files"]


def test_upper_bound_dominates_fpbcd(tmp_path):
    res = run_sweep(small_config(tmp_path, trials=3), write=False)
    by = {}
    for r in res.records:
        by.setdefault((r.trial, r.tx_power_dbm), {})[r.algorithm] = r.wsr_bits
    for cell in by.values():
        assert cell["upperBound"] >= cell["fpBcd"] - 1e-9


def test_deterministic_across_reruns_and_workers(tmp_path):
    a = small_config(tmp_path / "a", algorithms=("noRis", "randomPhase", "fpBcd", "ssca"))
    b = small_config(tmp_path / "b", algorithms=("noRis", "randomPhase", "fpBcd", "ssca"))
    run_sweep(a)
    run_sweep(b, workers=2)
    for name in ("wsr-vs-power.csv", "summary.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_common_random_numbers_across_powers(tmp_path):
    res = run_sweep(small_config(tmp_path, algorithms=("noRis",)), write=False)
    seeds = {}
    for r in res.records:
        seeds.setdefault(r.trial, set()).add(r.seed)
    assert all(len(s) == 1 for s in seeds.values())
    assert len({next(iter(s)) for s in seeds.values()}) == 2


def test_empirical_cdf():
    pts = empirical_cdf([3.0, 1.0, 2.0, 2.0])
    assert pts == [(1.0, 0.25), (2.0, 0.75), (3.0, 1.0)]
    with pytest.raises(ValueError):
        empirical_cdf([])


def test_cdf_sweep_writes_cdf(tmp_path):
    cfg = small_config(tmp_path, sweep="cdf", geometry=ScenarioGeometry(user_positions=None), weight_policy="equal",
                       tx_power_dbm_list=(5.0,), algorithms=("noRis", "fpBcd"), trials=3,
                       fading_realizations_per_trial=2)
    res = run_sweep(cfg)
    rows = read_csv(tmp_path / "cdf.csv")
    for alg in ("noRis", "fpBcd"):
        probs = [float(r["cumulative_probability"]) for r in rows if r["algorithm"] == alg]
        assert probs[-1] == 1.0 and probs == sorted(probs)
    assert len(compute_cdf(res.records)) == len(rows)
    s = summarize(res.records)
    assert all(row["count"] == 6 for row in s)


def test_failed_cell_is_recorded_not_fatal(tmp_path, monkeypatch):
    import riswsr.experiments.runner as runner

    def boom(*a, **k):
        raise FloatingPointError("synthetic")

    monkeypatch.setattr(runner, "bcd_solve", boom)
    res = run_sweep(small_config(tmp_path, algorithms=("noRis", "fpBcd"), trials=1), write=True)
    failed = [r for r in res.records if r.status != "ok"]
    assert len(failed) == 2 and all("synthetic" in r.error for r in failed)
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["failed_cells"] == 2


def test_cli_end_to_end(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"dims": {"M": 2, "K": 2}, "geometry": {"userPositions": [[205, 30], [195, 25]]},
                               "nList": [4], "txPowerDbmList": [0], "algorithms": ["noRis", "fpBcd"]}))
    out = tmp_path / "out"
    code = main(["wsr-vs-power", "--config", str(cfg), "--seed", "7", "--trials", "2", "--out", str(out)])
    assert code == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["master_seed"] == 7 and man["config"]["trials"] == 2 and man["config"]["sweep"] == "wsr-vs-power"
    assert "mean WSR" in capsys.readouterr().out


def test_cli_rejects_bad_config(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"trails": 3}))
    assert main(["cdf", "--config", str(cfg)]) == 2
    assert "unknown keys" in capsys.readouterr().err


def test_cli_validate_runs(capsys):
    assert main(["validate", "--trials", "2"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 5
