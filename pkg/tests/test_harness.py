import csv
import json

import numpy as np
import pytest

from conftest import random_instance
from lacg.cli import EXIT_CONFIG, EXIT_OK, EXIT_PARTIAL, main
from lacg.harness import (
    CATEGORIES,
    ExperimentConfig,
    aggregate_speedups,
    median_speedups,
    relative_increase,
    run_experiment,
    run_grid,
)
from lacg.instance import InvalidConfigError, to_cvrplib


def test_relative_increase_cases():
    assert relative_increase(10.0, 12.0, 12.0) == pytest.approx(1.0)
    assert relative_increase(10.0, 10.0, 12.0) == pytest.approx(0.0)
    assert relative_increase(10.0, 11.0, 12.0) == pytest.approx(0.5)
    assert relative_increase(10.0, 10.0, 10.0) is None


def test_report_has_every_category():
    rep = run_experiment(ExperimentConfig(synthetic=(8, 3, "unit"), la_neighbors=2, sri="a", seed=1))
    assert set(rep.timings) == set(CATEGORIES)
    assert all(v >= 0 for v in rep.timings.values())
    assert rep.timings["preprocessing"] > 0
    assert rep.timings["total"] >= sum(v for k, v in rep.timings.items() if k != "total") - 1e-3
    assert rep.ilp_objective >= rep.lp_objective - 1e-6
    assert rep.lp_objective >= rep.lp_no_cuts - 1e-6
    assert not rep.partial and rep.error is None
    if rep.n_cuts and rep.relative_increase is not None:
        assert 0.0 <= rep.relative_increase <= 1.0 + 1e-9
    json.loads(rep.to_json())


def test_both_solvers_agree_without_cuts():
    reps = [run_experiment(ExperimentConfig(synthetic=(9, 20, "uniform"), la_neighbors=3, solver=s, seed=2))
            for s in ("baseline", "stabilized")]
    assert reps[0].lp_objective == pytest.approx(reps[1].lp_objective, abs=1e-6)
    assert reps[0].instance == reps[1].instance


def test_invalid_configs():
    for cfg in (ExperimentConfig(), ExperimentConfig(synthetic=(5, 2, "unit"), solver="other"),
                ExperimentConfig(synthetic=(5, 2, "unit"), sri="z"),
                ExperimentConfig(synthetic=(5, 2, "unit"), rci=11),
                ExperimentConfig(synthetic=(5, 2, "odd"))):
        with pytest.raises(InvalidConfigError):
            cfg.validate()


@pytest.mark.parametrize("seeds", [1, 10])
def test_grid_pairs_and_aggregate(tmp_path, seeds):
    configs = [ExperimentConfig(synthetic=(6, 3, "unit"), la_neighbors=2, solver=s, seed=k, integer=False)
               for k in range(seeds) for s in ("baseline", "stabilized")]
    reports = run_grid(configs, out_dir=str(tmp_path))
    assert len(reports) == 2 * seeds and not any(r.get("error") for r in reports)
    assert len(list(tmp_path.glob("run-*.json"))) == 2 * seeds
    with open(tmp_path / "aggregate.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == seeds
    agg = aggregate_speedups(configs, reports)
    assert set(median_speedups(agg)) == {"speedup_iterations", "speedup_pricing", "speedup_total"}


def test_workers_do_not_change_numbers():
    configs = [ExperimentConfig(synthetic=(7, 3, "unit"), la_neighbors=2, solver=s, seed=k)
               for k in range(3) for s in ("baseline", "stabilized")]
    keys = ("lp_objective", "ilp_objective", "iterations", "columns_digest", "n_cuts")
    one = run_grid(configs, workers=1)
    four = run_grid(configs, workers=4)
    assert [[r[k] for k in keys] for r in one] == [[r[k] for k in keys] for r in four]


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["--synthetic", "6,3,unit", "--la-neighbors", "2"]) == EXIT_OK
    assert "stabilized seed=0" in capsys.readouterr().out
    assert main(["--instance", str(tmp_path / "missing.vrp")]) == EXIT_CONFIG
    assert main(["--synthetic", "6,3,bogus"]) == EXIT_CONFIG
    with pytest.raises(SystemExit) as exc:
        main(["--synthetic", "6,3"])
    assert exc.value.code == 2
    assert main(["--synthetic", "12,4,unit", "--solver", "baseline", "--time-cap", "1e-9",
                 "--no-integer"]) == EXIT_PARTIAL


def test_cli_instance_file_and_outputs(tmp_path):
    inst = random_instance(np.random.default_rng(4), 6, 3)
    path = tmp_path / "tiny.vrp"
    path.write_text(to_cvrplib(inst))
    single = tmp_path / "report.json"
    assert main(["--instance", str(path), "--la-neighbors", "2", "--out", str(single)]) == EXIT_OK
    rep = json.loads(single.read_text())
    assert rep["config"]["instance_path"] == str(path) and set(rep["timings"]) == set(CATEGORIES)
    grid = tmp_path / "grid"
    assert main(["--instance", str(path), "--la-neighbors", "1", "2", "--solver", "baseline", "stabilized",
                 "--out", str(grid), "--workers", "2"]) == EXIT_OK
    assert len(list(grid.glob("run-*.json"))) == 4
    assert (grid / "aggregate.csv").exists()


def test_cli_dumps_pricing_graphs(tmp_path):
    out = tmp_path / "dot"
    assert main(["--synthetic", "4,2,unit", "--la-neighbors", "1", "--dump-graphs", str(out),
                 "--no-integer"]) == EXIT_OK
    files = list(out.iterdir())
    assert files and files[0].read_text().startswith("digraph")
