import csv
import json
import math

import numpy as np
import pytest

from deloc.cli import main
from deloc.graph import InteractionGraph
from deloc.harness import (
    CSV_COLUMNS,
    ExperimentConfig,
    ExperimentReport,
    ReportRow,
    config_from_dict,
    delocalization_failure_demo,
    fit_scaling,
    fit_scaling_rows,
    resolve_panel,
    run_experiment,
)


def path_graph(n):
    return InteractionGraph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def write_potential(path, n=6, alpha=1.0):
    spec = {
        "n": n,
        "smoothness": {"alpha": alpha, "gamma": 1.0},
        "terms": [
            {
                "kind": "builtin:gaussian",
                "support": list(range(n)),
                "params": {"tridiagonal": {"diag": 2.0, "off": -0.5}},
            }
        ],
    }
    path.write_text(json.dumps(spec))
    return str(path)


# ------------------------------------------------------------- configuration

def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(experiment="no-such-experiment")
    with pytest.raises(ValueError):
        ExperimentConfig(experiment="subadditivity", dims=(0,))
    with pytest.raises(ValueError):
        ExperimentConfig(experiment="subadditivity", h_values=(-0.1,))
    cfg = ExperimentConfig(experiment="subadditivity", dims=(np.int64(4),), h_values=(0.1,))
    assert cfg.dims == (4,) and isinstance(cfg.dims[0], int)


def test_config_from_dict_rejects_unknown_keys():
    with pytest.raises(ValueError, match="unknown config keys"):
        config_from_dict({"experiment": "subadditivity", "step": 0.1})
    cfg = config_from_dict({"experiment": "subadditivity", "dims": [4], "seed": 7})
    assert cfg.dims == (4,)
    assert cfg.seed == 7
    assert cfg.subsets == "singletons"
    assert cfg.options == {}


# ------------------------------------------------------------------- fitting

def test_fit_scaling_recovers_power_law():
    x = np.arange(1, 7, dtype=float)
    fit = fit_scaling(x, 3.0 * x**1.7)
    assert fit.slope == pytest.approx(1.7, abs=1e-12)
    assert fit.intercept == pytest.approx(math.log(3.0), abs=1e-12)
    assert fit.r2 == pytest.approx(1.0, abs=1e-12)


def test_fit_scaling_input_errors():
    with pytest.raises(ValueError):
        fit_scaling([1.0], [2.0])
    with pytest.raises(ValueError):
        fit_scaling([1.0, 2.0], [2.0])
    with pytest.raises(ValueError):
        fit_scaling([1.0, 2.0], [-1.0, 2.0])


# -------------------------------------------------------------------- panels

def test_resolve_panel_variants():
    g = path_graph(4)
    assert resolve_panel(g, "singletons") == [(0,), (1,), (2,), (3,)]
    assert resolve_panel(g, "pairs") == [(0, 1), (1, 2), (2, 3)]
    assert len(resolve_panel(g, "all-pairs")) == 6
    assert len(resolve_panel(g, "singletons+pairs")) == 7
    assert resolve_panel(g, [[2, 0], [1]]) == [(0, 2), (1,)]
    with pytest.raises(ValueError):
        resolve_panel(g, "everything")


def test_resolve_panel_random_is_deterministic():
    g = path_graph(6)
    spec = {"random": {"size": 2, "count": 3, "seed": 7}}
    a = resolve_panel(g, spec)
    b = resolve_panel(g, spec)
    assert a == b
    assert all(len(u) == 2 and u[0] < u[1] < 6 for u in a)


# ------------------------------------------------------------------- reports

def small_report():
    return run_experiment(
        ExperimentConfig(experiment="gaussian-scaling", dims=(3,), h_values=(0.01,))
    )


def test_csv_schema_and_round_trip(tmp_path):
    rep = small_report()
    out = tmp_path / "rep.csv"
    rep.to_csv(out)
    lines = out.read_text().splitlines()
    assert lines[0] == "experiment,n,h,subset,metric,value,se,bound,theorem,valid"
    with open(out) as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == len(rep.rows) == 5  # 3 marginals + max + full
    for got, src in zip(rows, rep.rows):
        assert got["experiment"] == "gaussian-scaling"
        assert got["theorem"] == "oracle"
        assert float(got["value"]) == src.value  # repr round-trips exactly
        assert got["se"] == "" and got["bound"] == "" and got["valid"] == ""


def test_csv_formats_booleans(tmp_path):
    rep = run_experiment(ExperimentConfig(experiment="subadditivity", dims=(3,)))
    out = tmp_path / "sub.csv"
    rep.to_csv(out)
    with open(out) as f:
        rows = list(csv.DictReader(f))
    assert all(r["valid"] == "true" for r in rows)


def test_json_sidecar(tmp_path):
    rep = small_report()
    side = tmp_path / "rep.json"
    rep.to_json_sidecar(side)
    payload = json.loads(side.read_text())
    assert payload["config"]["experiment"] == "gaussian-scaling"
    assert payload["num_rows"] == 5
    assert payload["num_failures"] == 0
    assert "elapsed_seconds" in payload["metadata"]


def test_gnuplot_files(tmp_path):
    rep = small_report()
    written = rep.to_gnuplot(str(tmp_path / "plot"))
    names = {p.rsplit("/", 1)[-1] for p in written}
    assert names == {
        "plot.w2sq-marginal.dat",
        "plot.w2sq-marginal-max.dat",
        "plot.w2sq-full.dat",
    }
    body = open(written[0]).read().splitlines()
    assert body[0] == "# n h value se bound"
    fields = body[1].split()
    assert len(fields) == 5
    assert fields[3] == "nan" and fields[4] == "nan"  # no se/bound on oracle rows


def test_run_experiment_writes_output_files(tmp_path):
    out = tmp_path / "auto.csv"
    run_experiment(
        ExperimentConfig(
            experiment="subadditivity", dims=(3,), output=str(out)
        )
    )
    assert out.exists()
    assert (tmp_path / "auto.csv.json").exists()


def test_failures_and_select_filters():
    cfg = ExperimentConfig(experiment="subadditivity", dims=(3,))
    rows = [
        ReportRow("subadditivity", 3, 0.1, "a", "m1", 1.0, valid=True),
        ReportRow("subadditivity", 3, 0.1, "b", "m1", 2.0, valid=False),
        ReportRow("subadditivity", 4, 0.1, "c", "m2", 3.0),
    ]
    rep = ExperimentReport(cfg, rows, {})
    assert rep.failures() == [rows[1]]
    assert rep.select(metric="m1") == rows[:2]
    assert rep.select(n=4) == [rows[2]]
    assert rep.select(metric="m1", n=3) == rows[:2]


# --------------------------------------------------------------- experiments

def test_gaussian_scaling_structure_and_slope():
    rep = run_experiment(
        ExperimentConfig(experiment="gaussian-scaling", dims=(4, 8, 16), h_values=(0.01,))
    )
    assert len(rep.rows) == (4 + 2) + (8 + 2) + (16 + 2)
    for n in (4, 8, 16):
        per = [r.value for r in rep.select(metric="w2sq-marginal", n=n)]
        top = rep.select(metric="w2sq-marginal-max", n=n)[0].value
        assert top == max(per)
    fit = fit_scaling_rows(rep, "w2sq-full")
    assert 0.9 < fit.slope < 1.1  # full-law bias is extensive in n
    assert fit.r2 > 0.999


def test_bound_vs_truth_no_violations_at_smoke_scale():
    rep = run_experiment(
        ExperimentConfig(
            experiment="bound-vs-truth", dims=(4,), h_values=(0.005, 0.01)
        )
    )
    # growth row + (kl + talagrand) x 4 singleton subsets x 2 step sizes
    assert len(rep.rows) == 1 + 2 * 4 * 2
    assert rep.rows[0].metric == "growth-certificate"
    assert rep.rows[0].valid is True
    assert rep.failures() == []
    wide = run_experiment(
        ExperimentConfig(
            experiment="bound-vs-truth",
            dims=(4,),
            h_values=(0.01,),
            subsets="singletons+all-pairs",
        )
    )
    assert len(wide.rows) == 1 + 2 * (4 + 6)
    assert wide.failures() == []


def test_subadditivity_experiment_equality_at_full_size():
    rep = run_experiment(ExperimentConfig(experiment="subadditivity", dims=(4,)))
    assert len(rep.rows) == 4
    assert rep.failures() == []
    last = rep.select(metric="subadditivity-lhs")[-1]
    assert last.subset == "k=4"
    assert last.value == pytest.approx(last.bound, abs=1e-10)  # k = n is tight


def test_continuous_time_experiment_smoke():
    rep = run_experiment(
        ExperimentConfig(
            experiment="continuous-time",
            dims=(3,),
            subsets="singletons",
            options={"eps": [0.5], "times": [0.5]},
        )
    )
    assert len(rep.rows) == 3
    assert rep.failures() == []
    assert all(r.theorem == "continuous-time" for r in rep.rows)


def test_onestep_experiment_is_deterministic():
    cfg = ExperimentConfig(
        experiment="onestep-linf",
        dims=(3,),
        seed=5,
        options={"samples": 256, "n_boot": 4},
    )
    a = run_experiment(cfg)
    b = run_experiment(cfg)
    assert a.rows == b.rows
    metrics = [r.metric for r in a.rows]
    assert metrics == ["w2sq-linf-full", "w2sq-linf-full-extrap"]


def test_sampler_vs_oracle_smoke():
    rep = run_experiment(
        ExperimentConfig(
            experiment="sampler-vs-oracle",
            seed=0,
            options={
                "iterations": 20_000,
                "chains": 2,
                "thin": 5,
                "marginal_samples": 2000,
                "batches": 50,
            },
        )
    )
    assert [r.metric for r in rep.rows] == ["cov-entry"] * 3 + ["w2sq-marginal"] * 2
    assert all(r.se is not None and r.se > 0 for r in rep.rows)
    assert rep.failures() == []


def test_delocalization_demo_small():
    rep = delocalization_failure_demo(dims=(4, 8))
    growth = rep.select(metric="rotated-bias-growth")[0]
    spread = rep.select(metric="product-bias-variation")[0]
    assert growth.value >= 2.0
    assert spread.value < 0.05
    assert rep.failures() == []


# ----------------------------------------------------------------------- cli

def cli_json(capsys):
    return json.loads(capsys.readouterr().out)


def test_cli_run_ok(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"experiment": "subadditivity", "dims": [4]}))
    out = tmp_path / "rep.csv"
    rc = main(["run", str(cfg), "--output", str(out), "--gnuplot"])
    payload = cli_json(capsys)
    assert rc == 0
    assert payload["failures"] == 0
    assert payload["rows"] == 4
    assert str(out) in payload["files"]
    assert out.exists() and (tmp_path / "rep.csv.json").exists()
    assert any(p.endswith(".dat") for p in payload["files"])


def test_cli_run_reports_failures_with_exit_2(tmp_path, capsys):
    # n = 6 -> 8 is too small a jump for the rotated bias to double
    cfg = tmp_path / "cfg.json"
    cfg.write_text(
        json.dumps({"experiment": "delocalization-failure", "dims": [6, 8]})
    )
    rc = main(["run", str(cfg)])
    payload = cli_json(capsys)
    assert rc == 2
    assert payload["failures"] == 1
    assert payload["failed_metrics"] == ["rotated-bias-growth"]


def test_cli_bounds_constants(capsys):
    rc = main(["bounds", "sparse-poly", "--alpha", "1", "--beta", "1",
               "--gamma", "1", "--c", "1", "--p", "1"])
    payload = cli_json(capsys)
    assert rc == 0
    assert payload["outputs"]["C"] == 360.0
    assert payload["outputs"]["h_star"] == 0.25


def test_cli_bounds_invalid_exits_2(capsys):
    rc = main(["bounds", "sparse-exp", "--r", "3.0"])
    payload = cli_json(capsys)
    assert rc == 2
    assert payload["valid"] is False
    assert "subcritical" in payload["reason"]


def test_cli_bounds_scalar_theorems(capsys):
    rc = main(["bounds", "poisson-moment", "--rate", "2", "--t", "3", "--p", "2"])
    assert rc == 0
    assert cli_json(capsys)["outputs"]["moment_bound"] == 64.0
    rc = main(["bounds", "subgaussian-linf", "--beta", "2", "--n", "8"])
    assert rc == 0
    assert cli_json(capsys)["outputs"]["bound"] == pytest.approx(8.0 * math.log(16.0))


def test_cli_bounds_continuous_time_with_potential(tmp_path, capsys):
    pot = write_potential(tmp_path / "pot.json")
    rc = main(["bounds", "continuous-time", "--potential", pot,
               "--subset", "1", "--t", "0.5", "--eps", "0.5", "--C0", "1.0"])
    payload = cli_json(capsys)
    assert rc == 0
    assert payload["outputs"]["bound_value"] > 0


def test_cli_hierarchy_semigroup_and_certify(tmp_path, capsys):
    pot = write_potential(tmp_path / "pot.json")
    rc = main(["hierarchy", pot, "--case", "sparse-poly", "--subset", "1", "--t", "0.5"])
    payload = cli_json(capsys)
    assert rc == 0
    assert 1.0 <= payload["value"] <= 6.0  # mean neighbourhood size on 6 vertices

    rc = main(["hierarchy", pot, "--case", "sparse-poly", "--certify",
               "--c", "3", "--p", "1", "--h", "0.005", "--k", "10", "--subset", "1"])
    payload = cli_json(capsys)
    assert rc == 0
    assert len(payload["curve"]) == 11
    assert payload["curve"][0] == 1.0  # default C0 |u|
    assert payload["h_star"] == pytest.approx(1.0 / 108.0)


def test_cli_validate(tmp_path, capsys):
    good = write_potential(tmp_path / "good.json")
    rc = main(["validate", good])
    payload = cli_json(capsys)
    assert rc == 0
    assert payload["valid"] is True
    assert all(c["ok"] for c in payload["checks"])

    bad = write_potential(tmp_path / "bad.json", alpha=100.0)  # alpha above beta
    rc = main(["validate", bad])
    assert rc == 2
