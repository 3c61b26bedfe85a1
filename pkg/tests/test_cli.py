"""Command-line harness: configs, subcommands, reports, exit codes."""

import csv
import json

import pytest

from ilpeda.cli import (
    ConfigError, compare_table, default_config, load_config, main,
    save_config, validate_config,
)
from ilpeda.eda import RunRecord


def small_chess_config(**overrides):
    cfg = default_config("chess")
    cfg["sampler"]["n"] = 200
    cfg["learner"]["max_search_nodes"] = 3000
    cfg.update(overrides)
    return cfg


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def test_default_configs_validate():
    assert validate_config(default_config("chess")) == []
    assert validate_config(default_config("jobshop")) == []
    with pytest.raises(ConfigError):
        default_config("sudoku")


def test_default_thresholds_per_domain():
    assert default_config("chess")["schedule"] == {"thetas": [8, 4, 0],
                                                   "theta_star": 0}
    assert default_config("jobshop")["schedule"] == {"thetas": [1000, 750, 600],
                                                     "theta_star": 600}


def test_validation_reports_offending_fields():
    cfg = default_config("chess")
    cfg["schema_version"] = 99
    cfg["background"] = "medium"
    cfg["schedule"]["thetas"] = [4, 8]
    cfg["learner"]["minacc"] = 1.5
    cfg["sampler"]["mode"] = "mcmc"
    cfg["sampler"]["delta"] = 0
    cfg["seeds"] = []
    problems = "\n".join(validate_config(cfg))
    for field in ("schema_version", "background", "schedule",
                  "learner.minacc", "sampler.mode", "sampler.delta", "seeds"):
        assert field in problems


def test_background_rejected_for_jobshop():
    cfg = default_config("jobshop")
    cfg["background"] = "high"
    assert any(p.startswith("background") for p in validate_config(cfg))


def test_config_round_trip(tmp_path):
    cfg = default_config("jobshop")
    path = tmp_path / "cfg.json"
    save_config(cfg, path)
    assert load_config(path) == cfg


# ---------------------------------------------------------------------------
# tablebase subcommand
# ---------------------------------------------------------------------------

def test_tablebase_distribution_outputs(tmp_path, capsys):
    out = tmp_path / "tb"
    assert main(["tablebase", "--out", str(out)]) == 0
    with open(out / "krk_distribution.csv") as f:
        rows = list(csv.DictReader(f))
    assert rows[0]["cost"] == "0"
    assert rows[0]["count"] == "27"
    assert rows[0]["cumulative"] == "0.001"
    assert rows[-1]["cost"] == "draw"
    assert rows[-1]["cumulative"] == "1.000"
    assert sum(int(r["count"]) for r in rows) == 28056
    assert len((out / "krk_costs.csv").read_text().splitlines()) == 28057
    assert "total instances: 28056" in capsys.readouterr().out


# ---------------------------------------------------------------------------
# run subcommand
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def chess_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    cfg_path = out / "cfg.json"
    save_config(small_chess_config(), cfg_path)
    code = main(["run", "--config", str(cfg_path), "--out", str(out / "a")])
    return code, out, cfg_path


def test_run_writes_records_and_reports(chess_run):
    code, out, _ = chess_run
    assert code == 0
    for name in ("config.json", "record-seed0.jsonl", "report-seed0.txt",
                 "report-seed0.csv", "theories-seed0.txt", "timings.txt"):
        assert (out / "a" / name).exists()
    with open(out / "a" / "report-seed0.csv") as f:
        rows = list(csv.DictReader(f))
    assert [r["k"] for r in rows] == ["0", "1", "2", "3"]
    assert [r["theta"] for r in rows] == ["8", "8", "4", "0"]
    rec = RunRecord.from_jsonl((out / "a" / "record-seed0.jsonl").read_text())
    assert rec.seed == 0
    assert len(rec.final_population) > 0


def test_rerun_with_same_seed_is_byte_identical(chess_run):
    code, out, cfg_path = chess_run
    assert main(["run", "--config", str(cfg_path),
                 "--out", str(out / "b")]) == 0
    for name in ("record-seed0.jsonl", "report-seed0.txt", "report-seed0.csv",
                 "theories-seed0.txt", "config.json"):
        assert (out / "a" / name).read_bytes() == (out / "b" / name).read_bytes()


def test_seed_flag_overrides_config(tmp_path):
    out = tmp_path / "r"
    cfg_path = tmp_path / "cfg.json"
    save_config(small_chess_config(), cfg_path)
    assert main(["run", "--config", str(cfg_path), "--seed", "3",
                 "--out", str(out)]) == 0
    assert (out / "record-seed3.jsonl").exists()
    assert json.loads((out / "config.json").read_text())["seeds"] == [3]


def test_invalid_config_exits_one(tmp_path, capsys):
    cfg = small_chess_config()
    cfg["schedule"]["thetas"] = [0, 4, 8]
    cfg_path = tmp_path / "bad.json"
    save_config(cfg, cfg_path)
    assert main(["run", "--config", str(cfg_path),
                 "--out", str(tmp_path / "o")]) == 1
    assert "schedule" in capsys.readouterr().err


def test_thread_cap_must_be_positive(tmp_path):
    assert main(["run", "--domain", "chess", "--threads", "0",
                 "--out", str(tmp_path / "o")]) == 1


# ---------------------------------------------------------------------------
# compare subcommand
# ---------------------------------------------------------------------------

def test_compare_run_with_itself_gives_unit_ratios(chess_run, tmp_path, capsys):
    _, out, _ = chess_run
    rec = str(out / "a" / "record-seed0.jsonl")
    assert main(["compare", rec, rec, "--out", str(tmp_path / "c")]) == 0
    with open(tmp_path / "c" / "compare.csv") as f:
        rows = list(csv.DictReader(f))
    for r in rows:
        assert r["precision_ratio"] in ("1.000", "inf")
        assert r["recall_ratio"] in ("1.000", "inf")
        assert r["model_p_a"] == r["model_p_b"]


def test_compare_rejects_mismatched_runs(chess_run):
    _, out, _ = chess_run
    rec = RunRecord.from_jsonl((out / "a" / "record-seed0.jsonl").read_text())
    other = RunRecord.from_jsonl(rec.to_jsonl())
    other.domain = "jobshop"
    with pytest.raises(ConfigError):
        compare_table(rec, other)
    other = RunRecord.from_jsonl(rec.to_jsonl())
    other.iterations = other.iterations[:-1]
    with pytest.raises(ConfigError):
        compare_table(rec, other)


def test_compare_missing_file_exits_two(tmp_path):
    assert main(["compare", str(tmp_path / "nope.jsonl"),
                 str(tmp_path / "nope.jsonl")]) == 2


# ---------------------------------------------------------------------------
# export-pool subcommand
# ---------------------------------------------------------------------------

def test_export_pool_writes_matrix_and_pool(tmp_path):
    out = tmp_path / "pool"
    assert main(["export-pool", "--out", str(out)]) == 0
    with open(out / "jobshop_matrix.csv") as f:
        matrix_rows = list(csv.reader(f))
    assert len(matrix_rows) == 5
    assert all(len(r) == 5 for r in matrix_rows)
    with open(out / "jobshop_pool.csv") as f:
        header = f.readline().strip().split(",")
        first = f.readline().strip().split(",")
        n = 1 + sum(1 for _ in f)
    assert header[:2] == ["m1p1", "m1p2"]
    assert header[-1] == "makespan"
    assert len(first) == 26
    assert n == 100_000
