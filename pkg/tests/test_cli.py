import json
import os

import numpy as np
import pytest

import cfpart as cp
from cfpart.cli import (CSV_HEADER, ExperimentConfig, main, run_decompose,
                        run_sweep, rows_to_csv, sweep_to_file)


def small_config(tmp_path, **over):
    base = dict(k_list=[4], l_list=[4], k_max_list=[2], realizations=2,
                alpha=4.0, p_over_n0_db=10.0, area_side=1.0,
                algorithms=["bnb", "bc2f"], mc_samples=0, base_seed=123,
                output_path=str(tmp_path / "out.csv"), measure_runtime=False)
    base.update(over)
    return ExperimentConfig(**base)


class TestGenLayout:
    def test_schema_and_determinism(self, tmp_path, capsys):
        rc = main(["gen-layout", "--seed", "3", "--k", "4", "--l", "5"])
        assert rc == 0
        first = capsys.readouterr().out
        obj = json.loads(first)
        assert set(obj) == {"seed", "k", "l", "area_side", "ue", "bs"}
        assert obj["k"] == 4 and obj["l"] == 5
        main(["gen-layout", "--seed", "3", "--k", "4", "--l", "5"])
        assert capsys.readouterr().out == first


class TestDecompose:
    def test_bc2f_forced_size_multiset(self, capsys):
        rc = main(["decompose", "--seed", "5", "--k", "24", "--l", "30",
                   "--k-max", "5", "--algo", "bc2f"])
        assert rc == 0
        row = json.loads(capsys.readouterr().out)
        # both statuses certify the epsilon-gap proof finished
        assert row["status"] in ("optimal", "gap-reached")
        assert row["M"] == 5

    def test_brute_small_setup_optimal(self, capsys):
        rc = main(["decompose", "--seed", "1", "--k", "5", "--l", "6",
                   "--k-max", "3", "--algo", "brute"])
        assert rc == 0
        row = json.loads(capsys.readouterr().out)
        assert row["status"] == "optimal"
        assert row["M"] == 2

    def test_bnb_node_limit_one(self, capsys):
        rc = main(["decompose", "--seed", "2", "--k", "6", "--l", "5",
                   "--k-max", "2", "--algo", "bnb", "--node-limit", "1"])
        row = json.loads(capsys.readouterr().out)
        assert row["status"] in ("limit-hit", "optimal", "gap-reached") \
            or row["status"].startswith("error")
        if row["status"] == "limit-hit":
            assert rc == 0   # a feasible incumbent still came back

    def test_infeasible_becomes_error_row(self, capsys):
        rc = main(["decompose", "--seed", "2", "--k", "6", "--l", "1",
                   "--k-max", "2", "--algo", "bnb"])
        row = json.loads(capsys.readouterr().out)
        assert row["status"].startswith("error")
        assert rc == 1


class TestEvaluateSnapshot:
    def test_round_trip(self, tmp_path, capsys):
        lay_path = tmp_path / "lay.json"
        main(["gen-layout", "--seed", "9", "--k", "4", "--l", "3",
              "--out", str(lay_path)])
        d = cp.Decomposition(np.array([0, 0, 1, 1, 0, 1, 1]), 4, 2)
        dec_path = tmp_path / "dec.json"
        dec_path.write_text(d.to_json())
        rc = main(["evaluate", "--layout", str(lay_path),
                   "--decomposition", str(dec_path),
                   "--mc-samples", "200"])
        assert rc == 0
        rep = json.loads(capsys.readouterr().out)
        assert rep["sum_lb"] <= rep["sum_approx"] + 1e-9
        assert rep["mc_samples"] == 200

        rc = main(["snapshot", "--layout", str(lay_path),
                   "--decomposition", str(dec_path)])
        assert rc == 0
        snap = json.loads(capsys.readouterr().out)
        assert snap["m"] == 2
        assert snap["subnetworks"][0]["ues"] == [0, 1]
        assert snap["subnetworks"][1]["bss"] == [1, 2]


class TestSweep:
    def test_header_and_shape(self, tmp_path):
        config = small_config(tmp_path)
        path, ok = sweep_to_file(config)
        assert ok
        lines = open(path).read().splitlines()
        assert lines[0] == CSV_HEADER
        # 2 algos x 2 realizations data rows + 2 algos x (mean, se)
        assert len(lines) == 1 + 4 + 4

    def test_rerun_byte_identical(self, tmp_path):
        config = small_config(tmp_path)
        sweep_to_file(config)
        first = open(config.output_path, "rb").read()
        sweep_to_file(config)
        assert open(config.output_path, "rb").read() == first

    def test_single_realization_drops_aggregates(self, tmp_path):
        config = small_config(tmp_path, realizations=1)
        path, _ = sweep_to_file(config)
        lines = open(path).read().splitlines()
        assert len(lines) == 1 + 2
        assert not any("mean" in ln or ",se," in ln for ln in lines)

    def test_parallel_matches_serial(self, tmp_path):
        config = small_config(tmp_path)
        rows_serial = run_sweep(config)
        os.environ["CFPART_WORKERS"] = "2"
        try:
            rows_par = run_sweep(config)
        finally:
            del os.environ["CFPART_WORKERS"]
        assert rows_to_csv(rows_serial) == rows_to_csv(rows_par)

    def test_cli_entry_and_overrides(self, tmp_path, capsys):
        cfg_path = tmp_path / "cfg.json"
        out_path = tmp_path / "cli_out.csv"
        cfg_path.write_text(json.dumps(dict(
            k_list=[4], l_list=[4], k_max_list=[2], realizations=5,
            algorithms=["bc2f"], base_seed=7, measure_runtime=False,
            output_path="unused.csv")))
        rc = main(["sweep", "--config", str(cfg_path), "--output",
                   str(out_path), "--realizations", "1"])
        assert rc == 0
        capsys.readouterr()
        lines = open(out_path).read().splitlines()
        assert len(lines) == 2   # header + one row

    def test_error_rows_fail_exit_code(self, tmp_path, capsys):
        cfg_path = tmp_path / "cfg.json"
        out_path = tmp_path / "err_out.csv"
        # K=6 with cap 2 needs 3 subnetworks; L=2 makes that infeasible
        cfg_path.write_text(json.dumps(dict(
            k_list=[6], l_list=[2], k_max_list=[2], realizations=1,
            algorithms=["bnb"], base_seed=1, measure_runtime=False,
            output_path=str(out_path))))
        rc = main(["sweep", "--config", str(cfg_path)])
        capsys.readouterr()
        assert rc == 1
        rc = main(["sweep", "--config", str(cfg_path), "--allow-errors"])
        capsys.readouterr()
        assert rc == 0
        rows = open(out_path).read().splitlines()
        assert any("error:" in ln for ln in rows)

    def test_kmeans_algorithms_in_sweep(self, tmp_path):
        config = small_config(tmp_path, k_list=[6], l_list=[8],
                              k_max_list=[3],
                              algorithms=["kmeans-ue", "kmeans-bs"])
        rows = run_sweep(config)
        assert all(r["status"] == "heuristic" for r in rows)
        assert all(r["cap_approx"] != "" for r in rows)

    def test_mc_columns_filled_when_requested(self, tmp_path):
        config = small_config(tmp_path, algorithms=["bc2f"], mc_samples=100)
        rows = run_sweep(config)
        assert all(r["cap_mc"] != "" and r["cap_mc_se"] != "" for r in rows)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            ExperimentConfig(realizations=0)
        with pytest.raises(ValueError):
            ExperimentConfig(algorithms=["nope"])
        with pytest.raises(ValueError):
            ExperimentConfig(k_list=[])
