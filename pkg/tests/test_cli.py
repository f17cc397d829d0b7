import json

import pytest

from spikefisher.cli import cli_main


def run(capsys, *argv):
    code = cli_main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_lsd(capsys):
    code, out, _ = run(capsys, "lsd", "--c", "0.3333333", "--y", "0.2")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "a,b"
    assert lines[1] == "0.1569,4.4264"


def test_lsd_grid(capsys):
    code, out, _ = run(capsys, "lsd", "--c", "0.3333333", "--y", "0.2", "--z", "5,8,1e6")
    lines = out.splitlines()
    assert code == 0 and lines[2] == "z,S(z)" and len(lines) == 6
    z, s = map(float, lines[-1].split(","))
    assert abs(z * s + 1) < 1e-4
    code, out, _ = run(capsys, "lsd", "--c", "0.3", "--y", "0.2", "--z", "5:10:6")
    assert code == 0 and len(out.splitlines()) == 9


def test_lsd_inside_support_is_bad_input(capsys):
    code, _, err = run(capsys, "lsd", "--c", "0.3333333", "--y", "0.2", "--z", "1")
    assert code == 3 and "invalid input" in err


def test_theta(capsys):
    code, out, _ = run(capsys, "theta", "--lambda", "50", "--c", "0.3333333", "--y", "0.2")
    assert code == 0
    header, row = out.splitlines()
    assert header == "lambda,theta,residual,classical_limit"
    assert row.split(",")[-1] == "63.248"


def test_theta_subcritical(capsys):
    code, _, _ = run(capsys, "theta", "--lambda", "1.1", "--c", "0.3", "--y", "0.2")
    assert code == 3


@pytest.mark.parametrize(
    "argv", [[], ["nope"], ["lsd", "--c", "1"], ["lsd", "--c", "x", "--y", "0.2"], ["verify", "--suite", "zzz"]]
)
def test_usage_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and "usage" in err


def _write_config(tmp_path, **patch):
    data = {"p": 30, "n": 150, "T": 90, "spikes": [40.0, 12.0], "seed": 1, "replications": 4}
    data.update(patch)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(data))
    return path


def test_simulate(tmp_path, capsys):
    out_dir = tmp_path / "out"
    code, out, _ = run(capsys, "simulate", "--config", str(_write_config(tmp_path)), "--reps", "1", "--out", str(out_dir))
    assert code == 0
    summary = json.loads((out_dir / "summary.json").read_text())
    assert summary["replications"]["requested"] == 1
    assert summary["spikes"][0]["normalized"]["variance"] is None
    manifest = json.loads((out_dir / "manifest.json").read_text())
    assert manifest["status"] == "complete" and manifest["duration_seconds"] >= 0
    assert "manifest.json" in out


def test_simulate_bad_config(tmp_path, capsys):
    code, _, err = run(capsys, "simulate", "--config", str(_write_config(tmp_path, n=10)), "--out", str(tmp_path))
    assert code == 3 and "n" in err


def test_simulate_degenerate(tmp_path, capsys):
    cfg = _write_config(tmp_path, spikes=[40.0, 1.5])
    code, _, err = run(capsys, "simulate", "--config", str(cfg), "--out", str(tmp_path / "o"))
    assert code == 4 and "degenerate" in err


def test_simulate_missing_file(tmp_path, capsys):
    code, _, _ = run(capsys, "simulate", "--config", str(tmp_path / "absent.json"))
    assert code == 5


def test_simulate_unwritable(tmp_path, capsys):
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    code, _, _ = run(capsys, "simulate", "--config", str(_write_config(tmp_path)), "--out", str(blocker / "x"))
    assert code == 5


def test_paper_figure_small(tmp_path, capsys):
    code, _, _ = run(capsys, "paper-figure", "--out", str(tmp_path), "--reps", "3", "--threads", "2")
    assert code == 0
    assert sorted(p.name for p in tmp_path.glob("qq_*.csv")) == ["qq_1.csv", "qq_11.csv"]
    assert len((tmp_path / "qq_1.csv").read_text().splitlines()) == 4


def test_paper_figure_bad_reps(tmp_path, capsys):
    code, _, err = run(capsys, "paper-figure", "--out", str(tmp_path), "--reps", "0")
    assert code == 3


def test_help(capsys):
    code, out, _ = run(capsys, "--help")
    assert code == 0 and "paper-figure" in out
