"""Command-line interface: reproducibility, campaign driving, validation."""

import json
import subprocess
import sys

import numpy as np
import pytest

from sprayopt import campaign as camp
from sprayopt import cli, oracle
from sprayopt.process import ControllableInputs


def run_cli(args, cwd):
    return subprocess.run([sys.executable, "-m", "sprayopt.cli"] + args,
                          capture_output=True, text=True, cwd=cwd)


@pytest.fixture(scope="module")
def small_config(tmp_path_factory):
    """A scaled-down config so CLI runs stay fast."""
    d = tmp_path_factory.mktemp("cfg")
    cfg = cli.default_config()
    cfg["candidate_count"] = 300
    cfg["optimizer"]["max_batches"] = 3
    cfg["optimizer"]["batch_size"] = 3
    path = d / "config.json"
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return path


@pytest.fixture(scope="module")
def init_csv_path(tmp_path_factory):
    sim = oracle.SimulatedProcess(
        state=oracle.EquipmentState(voltage_offset=2.0))
    history = sim.generate_initialization(oracle.load_default_design()[:25],
                                          seed=0)
    d = tmp_path_factory.mktemp("data")
    path = d / "init.csv"
    path.write_text(camp.history_to_csv(history), encoding="utf-8")
    return path


class TestSimulate:
    def test_byte_identical_across_runs(self, small_config, tmp_path):
        args = ["--config", str(small_config), "simulate", "--seed", "7",
                "--n-init", "20"]
        r1 = run_cli(args + ["--out", "t1.json", "--csv", "t1.csv"], tmp_path)
        assert r1.returncode == 0, r1.stderr
        r2 = run_cli(args + ["--out", "t2.json", "--csv", "t2.csv"], tmp_path)
        assert r2.returncode == 0, r2.stderr
        assert (tmp_path / "t1.json").read_bytes() == \
            (tmp_path / "t2.json").read_bytes()
        assert (tmp_path / "t1.csv").read_bytes() == \
            (tmp_path / "t2.csv").read_bytes()

    def test_trace_is_versioned_json(self, small_config, tmp_path):
        r = run_cli(["--config", str(small_config), "simulate", "--seed", "1",
                     "--n-init", "15", "--out", "t.json"], tmp_path)
        assert r.returncode == 0, r.stderr
        doc = json.loads((tmp_path / "t.json").read_text())
        assert doc["format"] == "campaign-trace"
        assert doc["seed"] == 1
        assert len(doc["batches"]) <= 3

    def test_flag_overrides_reach_the_optimizer(self, small_config, tmp_path):
        r = run_cli(["--config", str(small_config), "simulate", "--seed", "2",
                     "--n-init", "15", "--max-batches", "1", "--pi", "0.7",
                     "--epsilon", "0.11", "--out", "t.json"], tmp_path)
        assert r.returncode == 0, r.stderr
        doc = json.loads((tmp_path / "t.json").read_text())
        assert len(doc["batches"]) == 1
        assert doc["config"]["max_batches"] == 1
        assert doc["config"]["pi"] == 0.7
        assert doc["config"]["epsilon"] == 0.11


class TestSweep:
    def test_default_grid_cardinality_and_reproducibility(self, small_config,
                                                          tmp_path):
        args = ["--config", str(small_config), "sweep",
                "--n-init-grid", "10,20", "--batch-sizes", "2,3",
                "--seeds", "2", "--jobs", "2"]
        r = run_cli(args + ["--out", "sweep.csv"], tmp_path)
        assert r.returncode == 0, r.stderr
        lines = (tmp_path / "sweep.csv").read_text().strip().split("\n")
        assert len(lines) == 1 + 2 * 2 * 2  # header + cells x seeds
        header = lines[0].split(",")
        assert header == ["n_init", "batch_size", "seed", "min_cost",
                          "feasible_found", "stopping_batch", "terminated",
                          "evaluations"]
        r = run_cli(args + ["--out", "sweep2.csv"], tmp_path)
        assert r.returncode == 0, r.stderr
        assert (tmp_path / "sweep.csv").read_bytes() == \
            (tmp_path / "sweep2.csv").read_bytes()


class TestFit:
    def test_reports_hybrid_and_zero_mean_metrics(self, small_config,
                                                  tmp_path):
        sim = oracle.SimulatedProcess()
        train = sim.generate_initialization(
            oracle.load_default_design()[:40], seed=0)
        val = sim.generate_initialization(
            oracle.load_default_design()[40:60], seed=1)
        (tmp_path / "train.csv").write_text(camp.history_to_csv(train))
        (tmp_path / "val.csv").write_text(camp.history_to_csv(val))
        r = run_cli(["--config", str(small_config), "fit",
                     "--train", "train.csv", "--validation", "val.csv",
                     "--out", "metrics.csv"], tmp_path)
        assert r.returncode == 0, r.stderr
        text = (tmp_path / "metrics.csv").read_text()
        assert "microhardness_HV,hybrid" in text
        assert "microhardness_HV,zero" in text
        assert "porosity_pct,zero" in text


class TestCampaignCommands:
    def test_full_campaign_cycle(self, small_config, init_csv_path, tmp_path):
        base = ["--config", str(small_config)]
        r = run_cli(base + ["campaign", "new", "--id", "camp1",
                            "--init", str(init_csv_path),
                            "--store", "store"], tmp_path)
        assert r.returncode == 0, r.stderr

        r = run_cli(base + ["campaign", "ignite", "--id", "camp1",
                            "--settings-index", "0", "--voltage", "64.0",
                            "--store", "store"], tmp_path)
        assert r.returncode == 0, r.stderr
        assert "delta_b" in r.stdout

        r = run_cli(base + ["campaign", "propose", "--id", "camp1",
                            "--out", "batch.csv", "--store", "store"],
                    tmp_path)
        assert r.returncode == 0, r.stderr
        batch_lines = (tmp_path / "batch.csv").read_text().strip().split("\n")
        assert len(batch_lines) == 4  # header + batch of 3

        r = run_cli(base + ["campaign", "status", "--id", "camp1",
                            "--store", "store"], tmp_path)
        assert r.returncode == 0
        status = json.loads(r.stdout)
        assert status["phase"] == "AwaitingResults"

        # build a results CSV answering the proposal export
        header = batch_lines[0].split(",")
        rows = ["batch_id,candidate_index,microhardness_HV,porosity_pct,"
                "application_rate,deposition_efficiency_pct,"
                "measured_voltage_V,dropped_flag"]
        sim = oracle.SimulatedProcess(
            state=oracle.EquipmentState(voltage_offset=2.0))
        rng = np.random.default_rng(0)
        for line in batch_lines[1:]:
            vals = dict(zip(header, line.split(",")))
            x_c = ControllableInputs(
                *(float(vals[f]) for f in camp.CONTROLLABLE_FIELDS))
            e = sim.measure(x_c, "A", rng)
            rows.append(",".join([
                vals["batch_id"], vals["candidate_index"],
                repr(e.measurements["microhardness_HV"]),
                repr(e.measurements["porosity_pct"]), "", "",
                repr(e.x.voltage), ""]))
        (tmp_path / "results.csv").write_text("\n".join(rows) + "\n")

        r = run_cli(base + ["campaign", "ingest", "--id", "camp1",
                            "--csv", "results.csv", "--store", "store"],
                    tmp_path)
        assert r.returncode == 0, r.stderr + r.stdout

        r = run_cli(base + ["campaign", "finish", "--id", "camp1",
                            "--store", "store"], tmp_path)
        assert r.returncode == 0
        assert "incumbent_cost" in r.stdout

    def test_bad_ingest_row_gives_nonzero_exit(self, small_config,
                                               init_csv_path, tmp_path):
        base = ["--config", str(small_config)]
        run_cli(base + ["campaign", "new", "--id", "camp2",
                        "--init", str(init_csv_path), "--store", "s2"],
                tmp_path)
        run_cli(base + ["campaign", "ignite", "--id", "camp2",
                        "--settings-index", "0", "--voltage", "64.0",
                        "--store", "s2"], tmp_path)
        run_cli(base + ["campaign", "propose", "--id", "camp2",
                        "--store", "s2"], tmp_path)
        (tmp_path / "bad.csv").write_text(
            "batch_id,candidate_index,microhardness_HV,porosity_pct,"
            "application_rate,deposition_efficiency_pct,measured_voltage_V,"
            "dropped_flag\nb001,0,oops,7.0,,,64.0,\n")
        r = run_cli(base + ["campaign", "ingest", "--id", "camp2",
                            "--csv", "bad.csv", "--store", "s2"], tmp_path)
        assert r.returncode != 0
        assert "rejected" in r.stdout

    def test_error_lines_are_machine_parsable(self, small_config, tmp_path):
        r = run_cli(["--config", str(small_config), "campaign", "status",
                     "--id", "missing", "--store", "empty"], tmp_path)
        assert r.returncode == 2
        assert r.stderr.strip().startswith("error:")

    def test_config_schema_violation_rejected(self, tmp_path):
        bad = {"format": "sprayopt-config", "version": 1,
               "optimizer": {"pi": 3.0}}
        (tmp_path / "bad.json").write_text(json.dumps(bad))
        r = run_cli(["--config", "bad.json", "simulate", "--out", "t.json"],
                    tmp_path)
        assert r.returncode == 2
        assert r.stderr.startswith("error:validation")
