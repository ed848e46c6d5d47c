"""Front-door behavior: exit codes, determinism, locks, overrides."""

import json
import os

import pytest
from click.testing import CliRunner

from apspectra.cli import main


def run_cli(args, env=None):
    runner = CliRunner()
    return runner.invoke(main, args, env=env, catch_exceptions=False)


def write_config(path, cfg):
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return str(path)


CLASSIFY_AB = {
    "point": "periodic:AB",
    "schedule": {"kind": "intervals", "base": 50, "n_max": 5},
    "eps_grid": [0.05, 0.2],
    "range": [-40, 40],
    "bohr_horizon": 64,
}


def test_classify_periodic_exit_zero(tmp_path):
    cfg = write_config(tmp_path / "c.json", CLASSIFY_AB)
    out = tmp_path / "out"
    res = run_cli(["classify", "--config", cfg, "--out", str(out)])
    assert res.exit_code == 0
    doc = json.loads((out / "classify.json").read_text())
    assert doc["report"]["verdicts"] == {
        "mean": "evidence-for", "weyl": "evidence-for", "bohr": "evidence-for"}
    assert "config_hash" in doc
    assert doc["config"]["point"] == {"kind": "periodic", "pattern": "AB"}


def test_malformed_sturmian_alpha_exit_two(tmp_path):
    cfg = write_config(tmp_path / "bad.json",
                       {"point": {"kind": "sturmian", "alpha": 1.5},
                        "schedule": {"kind": "intervals"}})
    res = run_cli(["classify", "--config", cfg, "--out", str(tmp_path / "o")])
    assert res.exit_code == 2
    assert "alpha" in res.output


def test_missing_config_file_exit_two(tmp_path):
    res = run_cli(["scan", "--config", str(tmp_path / "nope.json"),
                   "--out", str(tmp_path / "o")])
    assert res.exit_code == 2


def test_unknown_preset_exit_two(tmp_path):
    cfg = write_config(tmp_path / "c.json", {"point": "penrose"})
    res = run_cli(["generate", "--config", cfg, "--out", str(tmp_path / "o")])
    assert res.exit_code == 2


def test_generate_sequence(tmp_path):
    cfg = write_config(tmp_path / "g.json",
                       {"point": "block", "range": [0, 20],
                        "observable": "indicator:1"})
    out = tmp_path / "out"
    res = run_cli(["generate", "--config", cfg, "--out", str(out)])
    assert res.exit_code == 0
    lines = (out / "sequence.csv").read_text().splitlines()
    assert lines[0].startswith("# config_hash=")
    assert lines[1] == "t,letter"
    assert lines[2] == "0,0"
    assert lines[4] == "2,1"  # first block site
    assert (out / "track.csv").exists()


def test_runs_are_byte_identical(tmp_path):
    cfg = write_config(tmp_path / "c.json", {
        "point": "bernoulli:0.5:7",
        "schedule": {"kind": "intervals", "base": 200, "n_max": 5},
        "epsilon": 0.2,
        "range": [-30, 30],
        "bohr_horizon": 32,
    })
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert run_cli(["scan", "--config", cfg, "--out", str(out1)]).exit_code == 0
    assert run_cli(["scan", "--config", cfg, "--out", str(out2)]).exit_code == 0
    for name in ("scan.json", "scan.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_threads_do_not_change_output(tmp_path):
    cfg = write_config(tmp_path / "c.json", {
        "point": "bernoulli:0.5:7",
        "schedule": {"kind": "intervals", "base": 200, "n_max": 4},
        "epsilon": 0.2,
        "range": [-20, 20],
        "bohr_horizon": 16,
    })
    out1, out2 = tmp_path / "a", tmp_path / "b"
    run_cli(["scan", "--config", cfg, "--out", str(out1), "--threads", "1"])
    run_cli(["scan", "--config", cfg, "--out", str(out2), "--threads", "4"])
    assert (out1 / "scan.csv").read_bytes() == (out2 / "scan.csv").read_bytes()


def test_env_threads_fallback(tmp_path):
    cfg = write_config(tmp_path / "c.json", {
        "point": "periodic:AB",
        "schedule": {"kind": "intervals", "base": 40, "n_max": 3},
        "epsilon": 0.2, "range": [-10, 10], "bohr_horizon": 8,
    })
    res = run_cli(["scan", "--config", cfg, "--out", str(tmp_path / "o")],
                  env={"APSPECTRA_THREADS": "3"})
    assert res.exit_code == 0
    res = run_cli(["scan", "--config", cfg, "--out", str(tmp_path / "o2")],
                  env={"APSPECTRA_THREADS": "junk"})
    assert res.exit_code == 2


def test_seed_override_changes_hash_and_data(tmp_path):
    cfg = write_config(tmp_path / "c.json",
                       {"point": "bernoulli:0.5:7", "range": [0, 30]})
    out1, out2 = tmp_path / "a", tmp_path / "b"
    run_cli(["generate", "--config", cfg, "--out", str(out1)])
    run_cli(["generate", "--config", cfg, "--out", str(out2),
             "--seed-override", "8"])
    doc1 = json.loads((out1 / "generate.json").read_text())
    doc2 = json.loads((out2 / "generate.json").read_text())
    assert doc1["config_hash"] != doc2["config_hash"]
    assert doc2["config"]["point"]["seed"] == 8
    assert (out1 / "sequence.csv").read_text() != (out2 / "sequence.csv").read_text()


def test_lock_file_blocks_concurrent_runs(tmp_path):
    cfg = write_config(tmp_path / "c.json",
                       {"point": "step", "range": [0, 5]})
    out = tmp_path / "out"
    out.mkdir()
    (out / ".lock").write_text("held")
    res = run_cli(["generate", "--config", cfg, "--out", str(out)])
    assert res.exit_code == 2
    assert "lock" in res.output
    (out / ".lock").unlink()
    assert run_cli(["generate", "--config", cfg, "--out", str(out)]).exit_code == 0
    assert not (out / ".lock").exists()  # released after the run


def test_spectrum_fibonacci_contains_golden_thetas(tmp_path):
    cfg = write_config(tmp_path / "s.json", {
        "point": "fibonacci",
        "observable": {"kind": "indicator", "letter": "1"},
        "schedule": {"kind": "intervals", "base": 1000, "n_max": 8},
        "grid_sizes": [2048, 8192],
    })
    out = tmp_path / "out"
    res = run_cli(["spectrum", "--config", cfg, "--out", str(out)])
    assert res.exit_code == 0
    doc = json.loads((out / "spectrum.json").read_text())
    thetas = [fr["theta"] for fr in doc["report"]["frequencies"]]
    golden = (5 ** 0.5 - 1) / 2
    for k in (0, 1, -1):
        target = (k * golden) % 1.0
        assert min(min(abs(t - target), 1 - abs(t - target)) for t in thetas) < 1e-3
    csv_head = (out / "spectrum.csv").read_text().splitlines()[2]
    assert csv_head == "theta,amp_re,amp_im,amp_abs"


def test_parseval_with_explicit_thetas(tmp_path):
    cfg = write_config(tmp_path / "p.json", {
        "point": "periodic:AB",
        "observable": {"kind": "indicator", "letter": "A"},
        "schedule": {"kind": "intervals", "base": 100, "n_max": 4},
        "thetas": [0.0, 0.5],
    })
    out = tmp_path / "out"
    assert run_cli(["parseval", "--config", cfg, "--out", str(out)]).exit_code == 0
    doc = json.loads((out / "parseval.json").read_text())
    assert all(abs(d) < 1e-9 for d in doc["parseval"]["defects"])


def test_eigen_command(tmp_path):
    cfg = write_config(tmp_path / "e.json", {
        "point": "periodic:AB",
        "observable": {"kind": "indicator", "letter": "A"},
        "schedule": {"kind": "intervals", "base": 100, "n_max": 4},
        "theta": 0.5,
        "point_shifts": [0, 1],
        "shift_probes": [1, 2],
    })
    out = tmp_path / "out"
    assert run_cli(["eigen", "--config", cfg, "--out", str(out)]).exit_code == 0
    doc = json.loads((out / "eigen.json").read_text())
    assert doc["eigen"]["eigen_residual"] < 1e-9
    values = doc["eigen"]["values"]
    assert abs(values[0][0] - 0.5) < 1e-9
    assert abs(values[1][0] + 0.5) < 1e-9


def test_diffract_command(tmp_path):
    cfg = write_config(tmp_path / "d.json", {
        "point": "periodic:AB",
        "weights": {"A": 1.0, "B": 0.0},
        "schedule": {"kind": "intervals", "base": 100, "n_max": 4},
        "k_max": 8,
        "grid_size": 32,
        "atom_thetas": [0.0, 0.5],
    })
    out = tmp_path / "out"
    assert run_cli(["diffract", "--config", cfg, "--out", str(out)]).exit_code == 0
    atoms = json.loads((out / "atoms.json").read_text())
    assert abs(atoms["pure_point_fraction"] - 1.0) < 1e-6
    auto = (out / "autocorrelation.csv").read_text().splitlines()
    assert auto[2] == "lag,eta_re,eta_im"
    assert auto[3].startswith("-8,")
    dens = (out / "density.csv").read_text().splitlines()
    assert dens[1].startswith("# budget=")
    assert dens[2] == "theta,density"


@pytest.mark.parametrize("command,cfg,field", [
    ("spectrum", {"point": "periodic:AB", "observable": "indicator:A",
                  "schedule": {"kind": "intervals", "base": 10, "n_max": 3},
                  "grid_sizes": [64]}, "grid_sizes"),
    ("diffract", {"point": "periodic:AB", "weights": {"A": 1, "B": 0},
                  "schedule": {"kind": "intervals", "base": 10, "n_max": 3},
                  "taper": "hann", "atom_thetas": [0.0]}, "taper"),
    ("diffract", {"point": "periodic:AB", "weights": {"A": 1, "B": 0},
                  "schedule": {"kind": "intervals", "base": 10, "n_max": 3},
                  "k_max": 8, "grid_size": 4, "atom_thetas": [0.0]},
     "grid_size"),
    ("scan", {"point": "periodic:AB",
              "schedule": {"kind": "intervals", "base": 10, "n_max": 3},
              "epsilon": "big"}, "epsilon"),
    ("classify", {"point": "periodic:AB",
                  "schedule": {"kind": "intervals", "base": 10, "n_max": 3},
                  "eps_grid": []}, "eps_grid"),
    ("classify", {"point": "periodic:AB",
                  "schedule": {"kind": "intervals", "base": 10, "n_max": 3},
                  "weyl_index": 9}, "weyl_index"),
])
def test_validation_names_offending_field(tmp_path, command, cfg, field):
    path = write_config(tmp_path / "c.json", cfg)
    res = run_cli([command, "--config", path, "--out", str(tmp_path / "o")])
    assert res.exit_code == 2
    assert field in res.output


def test_missing_eigen_theta_exit_two(tmp_path):
    cfg = write_config(tmp_path / "e.json", {
        "point": "periodic:AB",
        "observable": "indicator:A",
        "schedule": {"kind": "intervals", "base": 10, "n_max": 3},
    })
    res = run_cli(["eigen", "--config", cfg, "--out", str(tmp_path / "o")])
    assert res.exit_code == 2
    assert "theta" in res.output
