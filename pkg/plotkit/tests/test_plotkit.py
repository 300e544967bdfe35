from pathlib import Path

import numpy as np
import pytest

from plotkit.readers import read_manifest, read_matrix, read_table, run_columns
from plotkit.recipes import render
from plotkit.cli import main as cli_main


def test_readers_roundtrip_run_outputs(tiny_runs):
    rd = tiny_runs["exchange_small"]
    manifest = read_manifest(rd / "manifest.txt")
    assert manifest["scenario"] == "exchange_density"
    names, data = read_table(rd / "n_pairs.csv")
    assert names[0] == "t_au" and data.shape[1] == len(names)
    rho2 = read_matrix(rd / "rho2.bin")
    assert rho2.ndim == 2 and rho2.dtype == np.float64
    cols = run_columns(rd, "region_x.csv")
    assert len(cols["x_au"]) == rho2.shape[0]


def test_reader_errors(tmp_path):
    (tmp_path / "empty.csv").write_text("")
    with pytest.raises(ValueError, match="empty"):
        read_table(tmp_path / "empty.csv")
    (tmp_path / "bad.bin").write_bytes(b"WRONG" + b"\0" * 32)
    with pytest.raises(ValueError, match="KQFT1"):
        read_matrix(tmp_path / "bad.bin")
    (tmp_path / "man.txt").write_text("a = 1\n")
    with pytest.raises(ValueError, match="scenario"):
        read_manifest(tmp_path / "man.txt")


def test_render_all_recipes(tiny_runs, tmp_path):
    outputs = {
        "fig1": render("fig1", [tiny_runs["exchange_small"]], tmp_path / "fig1.png"),
        "fig2a": render(
            "fig2a",
            [tiny_runs["pairs_small_02"], tiny_runs["step_small"]],
            tmp_path / "fig2a.png",
        ),
        "fig2b": render(
            "fig2b",
            [tiny_runs["boson_small"], tiny_runs["boson_small_b"]],
            tmp_path / "fig2b.png",
        ),
        "fig3": render("fig3", [tiny_runs["klein_small"]], tmp_path / "fig3.png"),
    }
    for name, path in outputs.items():
        blob = Path(path).read_bytes()
        assert blob[:8] == b"\x89PNG\r\n\x1a\n", name
        assert len(blob) > 10_000, name


def test_render_is_deterministic_and_nonmutating(tiny_runs, tmp_path):
    rd = tiny_runs["exchange_small"]
    before = {p.name: p.read_bytes() for p in Path(rd).iterdir()}
    a = render("fig1", [rd], tmp_path / "a.png").read_bytes()
    b = render("fig1", [rd], tmp_path / "b.png").read_bytes()
    assert a == b
    after = {p.name: p.read_bytes() for p in Path(rd).iterdir()}
    assert before == after


def test_manifest_mismatch_refused(tiny_runs, tmp_path):
    with pytest.raises(ValueError, match="does not match"):
        render("fig1", [tiny_runs["pairs_small_02"]], tmp_path / "x.png")
    with pytest.raises(ValueError, match="at least"):
        render("fig2b", [tiny_runs["boson_small"]], tmp_path / "x.png")
    with pytest.raises(ValueError, match="unknown recipe"):
        render("fig9", [tiny_runs["exchange_small"]], tmp_path / "x.png")


def test_cli(tiny_runs, tmp_path, capsys):
    rc = cli_main([
        "--recipe", "fig1",
        "--inputs", str(tiny_runs["exchange_small"]),
        "--out", str(tmp_path / "out.png"),
    ])
    assert rc == 0 and (tmp_path / "out.png").exists()
    rc = cli_main([
        "--recipe", "fig1",
        "--inputs", str(tiny_runs["pairs_small_02"]),
        "--out", str(tmp_path / "nope.png"),
    ])
    assert rc == 1
    with pytest.raises(SystemExit) as exc:
        cli_main(["--recipe", "fig9", "--inputs", "x", "--out", "y.png"])
    assert exc.value.code == 2
