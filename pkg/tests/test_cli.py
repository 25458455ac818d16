import csv
import io
import json
from pathlib import Path

import numpy as np
import pytest

from faces import cli
from faces.config import ExperimentConfig
from faces.design import IdentifiabilityError

GOLDEN = Path(__file__).parent / "goldens"

# must match scripts/regen_goldens.py
TINY = ExperimentConfig(n=2, n_bins=4, count_z=40, count_x=40, shots=200, cutoff=0.05, seed=3)


def write_config(tmp_path, cfg):
    path = tmp_path / "cfg.json"
    path.write_text(cfg.to_json())
    return str(path)


def test_single_z_circuit_design(tmp_path):
    cfg = ExperimentConfig(n=1, n_bins=1, count_z=1, count_x=0, depth_range=(1, 1), out_dir=str(tmp_path))
    with pytest.raises(IdentifiabilityError) as info:
        cli.cmd_generate(cfg)
    assert info.value.degrees == (1,)  # odd degrees need x circuits
    lines = (tmp_path / cli.DESIGN_FILE).read_text().splitlines()
    assert lines[0] == "circuit_id,kind,Z1:1"
    assert len(lines) == 2
    circuit = json.loads((tmp_path / cli.CIRCUITS_FILE).read_text())
    assert lines[1] == f"0,z,{len(circuit['gates'])}"


def test_no_z_circuits_is_unidentifiable(tmp_path):
    cfg = ExperimentConfig(n=2, n_bins=2, count_z=0, count_x=50, max_retries=1)
    code = cli.main(["generate", "--config", write_config(tmp_path, cfg), "--out", str(tmp_path / "o")])
    assert code == cli.EXIT_IDENTIFIABILITY


def test_generate_is_deterministic(tmp_path):
    for d in ("a", "b"):
        cli.cmd_generate(TINY.replace(out_dir=str(tmp_path / d)))
    for name in (cli.NOISE_FILE, cli.CIRCUITS_FILE, cli.DESIGN_FILE, cli.CONFIG_FILE):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_single_shot_per_circuit(tmp_path):
    cfg = TINY.replace(shots=1, out_dir=str(tmp_path))
    cli.cmd_generate(cfg)
    cli.cmd_run(cfg)
    rows = list(csv.DictReader((tmp_path / cli.SHOTS_FILE).open()))
    per_circuit = {}
    for r in rows:
        per_circuit[r["circuit_id"]] = per_circuit.get(r["circuit_id"], 0) + int(r["count"])
    assert len(per_circuit) == 80 and set(per_circuit.values()) == {1}


def test_tiny_pipeline_goldens(tmp_path):
    cli.run_pipeline(TINY.replace(out_dir=str(tmp_path)))
    rows = list(csv.DictReader((tmp_path / cli.SHOTS_FILE).open()))
    assert sum(int(r["count"]) for r in rows) == 80 * TINY.shots
    for name in (cli.SHOTS_FILE, cli.REPORT_CSV, cli.DESIGN_FILE):
        assert (tmp_path / name).read_text() == (GOLDEN / f"tiny_{name}").read_text(), name


def test_exact_mode_recovers_eigenvalues(tmp_path):
    cfg = TINY.replace(count_z=80, count_x=80, cutoff=1e-6, out_dir=str(tmp_path))
    report = cli.run_pipeline(cfg, exact=True)
    assert report.rel_errors().max() < 1e-8
    assert (tmp_path / cli.BORN_FILE).exists() and not (tmp_path / cli.SHOTS_FILE).exists()
    assert "exact" in (tmp_path / cli.SUMMARY_FILE).read_text()


def test_noiseless_pipeline_has_zero_error(tmp_path):
    cfg = TINY.replace(noise_center=0.0, noise_halfwidth=0.0, out_dir=str(tmp_path))
    report = cli.run_pipeline(cfg)
    assert report.rel_errors().max() == 0.0


def test_report_histogram(tmp_path):
    cfg = TINY.replace(out_dir=str(tmp_path), hist_bins=5, hist_max=0.5)
    report = cli.run_pipeline(cfg)
    rows = list(csv.DictReader((tmp_path / cli.HIST_CSV).open()))
    groups = {(r["type"], int(r["degree"])) for r in rows}
    assert groups == {("x", 1), ("z", 2), ("x", 3), ("z", 4)}
    assert {r["shots"] for r in rows} == {"200"}
    K = len(report.gates)
    for key in groups:
        counts = [int(r["count"]) for r in rows if (r["type"], int(r["degree"])) == key]
        assert len(counts) == 5 and sum(counts) == K
    meta = json.loads((tmp_path / cli.HIST_META).read_text())
    assert meta["edges"] == list(np.linspace(0, 0.5, 6))
    summary = json.loads((tmp_path / cli.REPORT_JSON).read_text())
    assert summary["fraction_below_5pct"] == pytest.approx(float((report.rel_errors() < 0.05).mean()))
    assert "fraction of estimates under 5% relative error" in (tmp_path / cli.SUMMARY_FILE).read_text()


def test_empty_report_gives_header_only(tmp_path):
    (tmp_path / cli.REPORT_CSV).write_text("gate_id,degree,xi_true,xi_hat,rel_error\n")
    (tmp_path / cli.REPORT_JSON).write_text(json.dumps({"shots": 10}))
    summary = cli.cmd_report(TINY.replace(out_dir=str(tmp_path)))
    assert (tmp_path / cli.HIST_CSV).read_text() == "type,degree,shots,bin_lo,bin_hi,count,overflow\n"
    assert summary["estimates"] == 0


def test_cutoff_rank_exit_code(tmp_path, capsys):
    cfg = TINY.replace(cutoff=0.99)
    code = cli.main(["all", "--config", write_config(tmp_path, cfg), "--out", str(tmp_path / "o")])
    assert code == cli.EXIT_CUTOFF_RANK
    assert "is not full rank with cutoff 0.99" in capsys.readouterr().err


def test_bound_violation_exit_code(tmp_path, monkeypatch):
    class Flagged:
        bound_violated = True
        degrees = []

    monkeypatch.setattr(cli, "cmd_estimate", lambda cfg: Flagged())
    code = cli.main(["estimate", "--out", str(tmp_path)])
    assert code == cli.EXIT_BOUND


def test_missing_artifacts(tmp_path, capsys):
    assert cli.main(["run", "--out", str(tmp_path)]) == 1
    assert "missing artifact" in capsys.readouterr().err


def test_stale_run_is_rejected(tmp_path):
    cfg = TINY.replace(out_dir=str(tmp_path))
    cli.cmd_generate(cfg)
    cli.cmd_run(cfg)
    cli.cmd_generate(cfg.replace(seed=4))
    with pytest.raises(ValueError, match="different model"):
        cli.cmd_estimate(cfg)


def test_main_all_and_seed_override(tmp_path, capsys):
    path = write_config(tmp_path, TINY)
    assert cli.main(["all", "--config", path, "--seed", "3", "--out", str(tmp_path / "a")]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["estimates"] == 4 * 9  # 2n degrees, K = 2 * 4 + 1
    assert cli.main(["all", "--config", path, "--seed", "5", "--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / cli.NOISE_FILE).read_text()
    assert a != (tmp_path / "b" / cli.NOISE_FILE).read_text()
    assert json.loads((tmp_path / "b" / cli.CONFIG_FILE).read_text())["seed"] == 5


def test_written_config_omits_execution_fields(tmp_path):
    cfg = TINY.replace(out_dir=str(tmp_path), workers=3)
    cli.cmd_generate(cfg)
    written = json.loads((tmp_path / cli.CONFIG_FILE).read_text())
    assert "workers" not in written and "out_dir" not in written
    assert ExperimentConfig.from_dict(written).replace(out_dir=str(tmp_path), workers=3) == cfg


def test_born_csv_round_trip(tmp_path):
    cfg = TINY.replace(out_dir=str(tmp_path))
    cli.cmd_generate(cfg)
    cli.cmd_run(cfg, exact=True)
    text = (tmp_path / cli.BORN_FILE).read_text()
    born = cli.born_from_csv(text, cfg.n)
    assert cli.born_to_csv(born) == text
    assert io.StringIO(text).readline().strip() == "circuit_id,kind,bin_label,probability"
