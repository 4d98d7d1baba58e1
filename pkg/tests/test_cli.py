import json

from etcsim.cli import main


def test_simulate_writes_outputs(tmp_path):
    out = tmp_path / "run"
    code = main(["simulate", "example1", "--t-final", "2.0",
                 "--out", str(out)])
    assert code == 0
    for name in ("trajectory.csv", "events.csv", "summary.json",
                 "manifest.yaml"):
        assert (out / name).exists()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["status"] == "completed"
    assert summary["model"] == "example1"
    header = (out / "trajectory.csv").read_text().splitlines()[0]
    assert header == "t,y1,z1,v1,w1,u1,V,event_flag"


def test_manifest_round_trip(tmp_path):
    first = tmp_path / "a"
    second = tmp_path / "b"
    assert main(["simulate", "example1", "--t-final", "2.0",
                 "--out", str(first)]) == 0
    assert main(["simulate", "--config", str(first / "manifest.yaml"),
                 "--out", str(second)]) == 0
    for name in ("trajectory.csv", "events.csv"):
        assert (first / name).read_bytes() == (second / name).read_bytes()
    a = json.loads((first / "summary.json").read_text())
    b = json.loads((second / "summary.json").read_text())
    assert a == b


def test_manifold_subcommand(tmp_path, capsys):
    out = tmp_path / "m"
    assert main(["manifold", "example2", "--order", "4",
                 "--out", str(out)]) == 0
    data = json.loads((out / "manifold.json").read_text())
    assert data["order"] == 4
    assert data["max_residual_coefficient"] < 1e-9
    text = capsys.readouterr().out
    assert "h_2(y)" in text


def test_certify_subcommand(tmp_path, capsys):
    out = tmp_path / "c"
    assert main(["certify", "example2", "--out", str(out)]) == 0
    data = json.loads((out / "certificate.json").read_text())
    assert 0.03 <= data["certificate"]["sigma_max"] <= 0.04
    assert data["conservative_estimates"]["tau1"] > 0


def test_batch_subcommand(tmp_path):
    out = tmp_path / "b"
    assert main(["batch", "example1", "--t-final", "3.0",
                 "--out", str(out)]) == 0
    data = json.loads((out / "batch.json").read_text())
    assert data["count"] == 10
    assert len(data["runs"]) == 10
    assert all(s == "completed" for s in data["statuses"])


def test_compare_subcommand(tmp_path):
    out = tmp_path / "cmp"
    assert main(["compare", "example1", "--t-final", "3.0",
                 "--out", str(out)]) == 0
    data = json.loads((out / "compare.json").read_text())
    assert data["update_count_ratio"] > 0
    assert data["sup_norm_deviation"] >= 0


def test_unknown_preset_exit_code(tmp_path):
    assert main(["simulate", "example9", "--out", str(tmp_path)]) == 2


def test_conflicting_sources_exit_code(tmp_path):
    assert main(["simulate", "example1", "--config", "x.yaml",
                 "--out", str(tmp_path)]) == 2


def test_bad_override_exit_code(tmp_path):
    assert main(["simulate", "example1", "--dt", "-1.0",
                 "--out", str(tmp_path)]) == 2


def test_zeno_exit_code(tmp_path):
    # degenerate exponent knob reproduces event accumulation; the CLI must
    # map the guard trip to its dedicated exit code
    cfg = tmp_path / "zeno.yaml"
    cfg.write_text("""
model: {preset: example1}
trigger: {variant: manifold_weighted, sigma: 0.0625, p_e: 30.0}
sim: {t_final: 5.0, x0: [0.1, 0.01], dt: 1.0e-4, validity_radius: 0.6}
""")
    assert main(["simulate", "--config", str(cfg),
                 "--out", str(tmp_path / "z")]) == 3
