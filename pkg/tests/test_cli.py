import csv
import json
import subprocess
import sys
import time

import pytest

from fidsched.backend import load_fleet
from fidsched.cli import COMPARE_POLICIES, main
from fidsched.ppo import LOG_COLUMNS, load_policy


def _rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def _files(root):
    return sorted(p.relative_to(root) for p in root.rglob("*") if p.is_file()) if root.exists() else []


# --- fixtures ---------------------------------------------------------------

def test_fixtures_sizes_and_reload(tmp_path):
    assert main(["fixtures", "--out", str(tmp_path / "f")]) == 0
    fleet = load_fleet(tmp_path / "f" / "fleet.json")
    assert sorted(n.num_qubits for n in fleet.nodes) == [27, 27, 27, 127, 127]
    assert len(list((tmp_path / "f").glob("node_*.json"))) == 5


def test_fixtures_byte_identical(tmp_path):
    main(["fixtures", "--seed", "3", "--out", str(tmp_path / "a")])
    main(["fixtures", "--seed", "3", "--out", str(tmp_path / "b")])
    for p in (tmp_path / "a").iterdir():
        assert p.read_bytes() == (tmp_path / "b" / p.name).read_bytes()
    main(["fixtures", "--seed", "4", "--out", str(tmp_path / "c")])
    assert (tmp_path / "a" / "node_a_27q.json").read_bytes() != (tmp_path / "c" / "node_a_27q.json").read_bytes()


# --- config errors ----------------------------------------------------------

def _write_config(tmp_path, **doc):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    return path


@pytest.mark.parametrize("command", ["workload", "train", "evaluate", "compare"])
def test_missing_fleet_exit_2_no_outputs(tmp_path, capsys, command):
    cfg = _write_config(tmp_path, fleet="nowhere/fleet.json")
    out = tmp_path / "out"
    assert main([command, "--config", str(cfg), "--out", str(out)]) == 2
    assert "fleet" in capsys.readouterr().err
    assert not out.exists()


@pytest.mark.parametrize("doc", [
    {"policy": "random"},
    {"episodes": 0},
    {"weights": {"alpha1": 0.5}},
    {"ppo": {"gamma": 2.0}},
    {"unknown_key": 1},
    {"workload": {"corpus_dir": "missing"}},
])
def test_invalid_config_no_outputs(tmp_path, doc):
    cfg = _write_config(tmp_path, **doc)
    out = tmp_path / "out"
    assert main(["evaluate", "--config", str(cfg), "--out", str(out)]) == 2
    assert not out.exists()


def test_malformed_config_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text("{not json")
    assert main(["workload", "--config", str(path), "--out", str(tmp_path / "o")]) == 2
    assert main(["workload", "--config", str(tmp_path / "absent.json")]) == 2


def test_bad_policy_flag(tmp_path):
    assert main(["evaluate", "--policy", "nope", "--out", str(tmp_path / "o")]) == 2
    assert not (tmp_path / "o").exists()


# --- workload ---------------------------------------------------------------

def test_workload_outputs(tmp_path):
    assert main(["workload", "--seed", "5", "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "tasks.csv")
    assert rows[0] == ["id", "arrival", "circuit", "qubits", "depth", "g1", "g2", "shots"]
    assert len(rows) == 61
    arrivals = [float(r[1]) for r in rows[1:]]
    assert arrivals == sorted(arrivals)
    assert json.loads((tmp_path / "workload_manifest.json").read_text())["n_tasks"] == 60


# --- train / evaluate / compare --------------------------------------------

@pytest.fixture(scope="module")
def trained_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("trained")
    for beta in ("0.5", "1.0"):
        t0 = time.perf_counter()
        assert main(["train", "--beta", beta, "--iterations", "1", "--out", str(out)]) == 0
        assert time.perf_counter() - t0 < 60
    return out


def test_train_schema_and_checkpoint(trained_dir):
    rows = _rows(trained_dir / "train_log_beta0.5.csv")
    assert tuple(rows[0]) == LOG_COLUMNS == ("iteration", "episode", "mean_reward", "entropy",
                                             "kl", "clip_fraction")
    ck = load_policy(trained_dir / "qfor_beta0.5.json", n_actions=5)
    assert ck.meta["beta"] == 0.5 and ck.meta["nodes"][0] == "node_a_27q"


def test_train_log_rows(tmp_path):
    # 4 workers x 45 steps per iteration; episodes are 60 tasks long
    assert main(["train", "--iterations", "2", "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "train_log_beta0.5.csv")[1:]
    assert [int(r[1]) for r in rows] == [1, 2, 3, 4]
    assert all(int(r[0]) == 2 for r in rows)
    assert all(-1.0 <= float(r[2]) <= 2.5 for r in rows)


def test_evaluate_rr_rows_and_determinism(tmp_path):
    for d in ("a", "b"):
        assert main(["evaluate", "--policy", "rr", "--episodes", "100", "--out", str(tmp_path / d)]) == 0
    rows = _rows(tmp_path / "a" / "eval_rr.csv")
    assert rows[0] == ["episode", "fidelity_score", "t_exec", "t_total", "failures", "reward"]
    assert len(rows) == 1 + 100 + 1
    assert rows[-1][0] == "mean±std"
    assert (tmp_path / "a" / "eval_rr.csv").read_bytes() == (tmp_path / "b" / "eval_rr.csv").read_bytes()


def test_evaluate_summary_is_population_std(tmp_path):
    main(["evaluate", "--policy", "fan", "--episodes", "5", "--out", str(tmp_path)])
    rows = _rows(tmp_path / "eval_fan.csv")
    vals = [float(r[1]) for r in rows[1:-1]]
    mean = sum(vals) / len(vals)
    std = (sum((v - mean) ** 2 for v in vals) / len(vals)) ** 0.5
    m, s = (float(x) for x in rows[-1][1].split("±"))
    assert m == pytest.approx(mean, rel=1e-12) and s == pytest.approx(std, rel=1e-9)


def test_evaluate_trace(tmp_path):
    main(["evaluate", "--policy", "sef", "--episodes", "2", "--trace", "--out", str(tmp_path)])
    rows = _rows(tmp_path / "trace_sef.csv")
    assert len(rows) == 1 + 2 * 60
    assert rows[0][:3] == ["episode", "step", "task_id"]


def test_evaluate_checkpoint(trained_dir, tmp_path):
    assert main(["evaluate", "--policy", "qfor", "--episodes", "2",
                 "--checkpoint", str(trained_dir / "qfor_beta0.5.json"), "--out", str(tmp_path)]) == 0
    assert (tmp_path / "eval_qfor_beta0.5.csv").exists()
    assert main(["evaluate", "--policy", "qfor", "--episodes", "2",
                 "--out", str(tmp_path / "none")]) == 2
    assert not (tmp_path / "none").exists()


def test_compare_sections(trained_dir):
    assert main(["compare", "--episodes", "3", "--out", str(trained_dir)]) == 0
    rows = _rows(trained_dir / "compare.csv")
    assert rows[0][:5] == ["policy", "episode", "fidelity_score", "t_exec", "t_total"]
    sections = list(dict.fromkeys(r[0] for r in rows[1:]))
    assert sections == list(COMPARE_POLICIES) and len(sections) == 6
    assert len(rows) == 1 + 6 * (3 + 1)
    summary = _rows(trained_dir / "compare_summary.csv")
    assert [r[0] for r in summary[1:]] == list(COMPARE_POLICIES)


def test_compare_missing_checkpoint(tmp_path):
    out = tmp_path / "out"
    assert main(["compare", "--episodes", "2", "--out", str(out)]) == 2
    assert not (out / "compare.csv").exists()


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "fidsched", "fixtures", "--out", str(tmp_path)],
                          capture_output=True, text=True, timeout=60)
    assert proc.returncode == 0 and "fleet" not in proc.stderr
    assert (tmp_path / "fleet.json").exists()
