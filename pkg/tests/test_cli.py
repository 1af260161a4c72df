import csv
import json
import subprocess
import sys

import pytest

from wlmp import cli


def run(*argv):
    return cli.main([str(a) for a in argv])


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.fixture
def synth(tmp_path):
    """Noiseless shuffled-node measurements for a layout, plus ground truth."""

    def make(kind, *extra):
        pos, meas, truth = tmp_path / "pos.csv", tmp_path / "meas.csv", tmp_path / "truth.csv"
        assert run("generate", "--kind", kind, "--out", pos, "--measurements", meas, "--truth", truth, *extra) == 0
        return pos, meas, truth

    return make


def test_generate_strip(tmp_path):
    out = tmp_path / "strip.csv"
    assert run("generate", "--kind", "strip", "--out", out) == 0
    r = rows(out)
    assert r[0] == ["label", "x", "y"] and len(r) == 41


def test_generate_grid3d_json(tmp_path):
    out = tmp_path / "g.json"
    assert run("generate", "--kind", "grid3d", "--format", "json", "--out", out) == 0
    data = json.loads(out.read_text())
    pts = data["positions"] if isinstance(data, dict) else data
    assert len(pts) == 120


def test_generate_grid3d_csv(tmp_path):
    out = tmp_path / "g.csv"
    assert run("generate", "--kind", "grid3d", "--out", out) == 0
    r = rows(out)
    assert r[0] == ["label", "x", "y", "z"] and len(r) == 121


def test_invalid_kind_single_line_error(capsys):
    assert run("generate", "--kind", "hexagon") != 0
    err = capsys.readouterr().err
    assert err.count("\n") == 1 and err.startswith("wlmp: error[usage]")


def test_console_entry_point(tmp_path):
    p = subprocess.run(
        [sys.executable, "-m", "wlmp.cli", "generate", "--kind", "nope"], capture_output=True, text=True
    )
    assert p.returncode == 2 and "Traceback" not in p.stderr


def test_match_noiseless(synth, tmp_path, capsys):
    pos, meas, truth = synth("factory")
    prefix = tmp_path / "a"
    assert run("match", pos, meas, "--truth", truth, "--out", prefix) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["accuracy"] == 1.0
    assert summary == json.loads((tmp_path / "a.json").read_text())
    r = rows(tmp_path / "a.csv")
    assert r[0] == ["node_label", "position_label", "pair_cost"] and len(r) == 59


def test_match_auto_strip_uses_short_axis(synth, tmp_path, capsys):
    pos, meas, truth = synth("strip")
    r = rows(truth)
    anchor = f"{r[1][0]}={r[1][1]}"
    assert run("match", pos, meas, "--truth", truth, "--anchor", anchor, "--out", tmp_path / "a") == 0
    summary = json.loads(capsys.readouterr().out)
    assert 4 in summary["eigenvectors"] and summary["accuracy"] == 1.0


def test_match_explicit_eigenvectors(synth, tmp_path, capsys):
    pos, meas, truth = synth("factory")
    assert run("match", pos, meas, "--eigenvectors", "1,2", "--truth", truth, "--out", tmp_path / "a") == 0
    assert json.loads(capsys.readouterr().out)["eigenvectors"] == [1, 2]


def test_ambiguous_anchor(synth, tmp_path, capsys):
    # the centre of a 3x3 lattice sits on both symmetry axes
    pos, meas, truth = synth("grid2d", "--count", "9")
    node = next(n for n, p in rows(truth)[1:] if p == rows(pos)[5][0])
    code = run("match", pos, meas, "--eigenvectors", "1,2", "--anchor", f"{node}={rows(pos)[5][0]}", "--out", tmp_path / "a")
    assert code == cli.EXIT_AMBIGUOUS_ANCHOR
    assert "noise floor" in capsys.readouterr().err


def test_missing_pairs(synth, tmp_path):
    pos, meas, _ = synth("factory")
    lines = meas.read_text().splitlines()
    meas.write_text("\n".join(lines[:1] + lines[2:]) + "\n")
    assert run("match", pos, meas, "--out", tmp_path / "a") == cli.EXIT_MISSING_PAIRS


def test_unknown_anchor_label(synth, tmp_path):
    pos, meas, _ = synth("factory")
    assert run("match", pos, meas, "--anchor", "zz=m00", "--out", tmp_path / "a") == cli.EXIT_UNKNOWN_LABEL


def test_size_mismatch(synth, tmp_path):
    _, meas, _ = synth("factory")
    other = tmp_path / "grid.csv"
    run("generate", "--kind", "grid2d", "--out", other)
    assert run("match", other, meas, "--out", tmp_path / "a") == cli.EXIT_SIZE_MISMATCH


def _sweep(out, *extra):
    return run("sweep", "--kind", "factory", "--snr", "3,10", "--realizations", "3", "--seed", "7", "--out", out, *extra)


def test_sweep_reproducible(tmp_path):
    assert _sweep(tmp_path / "a") == 0 and _sweep(tmp_path / "b") == 0
    assert (tmp_path / "a" / "factory.csv").read_bytes() == (tmp_path / "b" / "factory.csv").read_bytes()
    r = rows(tmp_path / "a" / "factory.csv")
    assert r[0] == ["snr", "mean_accuracy", "ci_half_width", "realizations"] and len(r) == 3


def test_sweep_plot_and_detail(tmp_path):
    assert _sweep(tmp_path, "--plot", "--detail") == 0
    assert (tmp_path / "factory.svg").read_text().startswith("<svg")
    assert len(rows(tmp_path / "factory_trials.csv")) == 7


def test_sweep_preset_fig3(tmp_path):
    assert run("sweep", "--preset", "fig3", "--snr", "1000", "--realizations", "2", "--out", tmp_path) == 0
    assert sorted(p.name for p in tmp_path.glob("*.csv")) == ["fig3_ev123.csv", "fig3_ev1234.csv", "fig3_ev14.csv"]


def test_sweep_rejects_bad_input(tmp_path):
    assert run("sweep", "--preset", "fig9", "--out", tmp_path) == cli.EXIT_BAD_INPUT
    assert _sweep(tmp_path, "--realizations", "1") == cli.EXIT_USAGE


def test_embed(tmp_path):
    pos = tmp_path / "p.csv"
    run("generate", "--kind", "grid2d", "--out", pos)
    out = tmp_path / "e.csv"
    assert run("embed", pos, "--count", "3", "--out", out) == 0
    r = rows(out)
    assert len(r[0]) == 4 and len(r) == 2 + 80
    assert float(r[1][0]) == pytest.approx(0.0, abs=1e-9)


def test_embed_measurements(synth, tmp_path):
    _, meas, _ = synth("factory")
    out = tmp_path / "e.json"
    assert run("embed", meas, "--measurements", "--count", "2", "--format", "json", "--out", out) == 0
    data = json.loads(out.read_text())
    assert len(data["eigenvalues"]) == 3 and len(data["eigenvectors"][0]) == 58


def test_inspect(tmp_path, capsys):
    pos = tmp_path / "p.csv"
    run("generate", "--kind", "strip", "--out", pos)
    capsys.readouterr()
    assert run("inspect", pos, "--format", "json") == 0
    report = json.loads(capsys.readouterr().out)
    assert report["resolved"] and report["selected"] == [1, 2, 3, 4]
