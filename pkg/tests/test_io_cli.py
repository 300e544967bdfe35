import subprocess
import sys

import numpy as np
import pytest

from kleinqft.grid import Units
from kleinqft.iofmt import (
    MAGIC,
    parse_bool,
    parse_keyvalue_text,
    parse_scaled_float,
    read_keyvalue_file,
    read_matrix,
    read_table,
    write_keyvalue_file,
    write_matrix,
    write_table,
)
from kleinqft.scenarios import (
    KEY_DOCS,
    ScenarioConfig,
    ValidationError,
    config_from_file,
    config_from_mapping,
    run,
    validate,
)
from kleinqft.cli import main as cli_main

UNITS = Units()


# ------------------------------------------------------------- file formats

def test_matrix_roundtrip(tmp_path, rng):
    for arr in (
        rng.standard_normal((7, 5)),
        rng.standard_normal((3, 9)) + 1j * rng.standard_normal((3, 9)),
    ):
        path = tmp_path / "m.bin"
        write_matrix(path, arr)
        back = read_matrix(path)
        assert back.dtype == arr.dtype and np.array_equal(back, arr)
    raw = (tmp_path / "m.bin").read_bytes()
    assert raw[:5] == MAGIC


def test_matrix_format_errors(tmp_path, rng):
    with pytest.raises(ValueError, match="2-D"):
        write_matrix(tmp_path / "x.bin", np.zeros(4))
    with pytest.raises(ValueError, match="dtype"):
        write_matrix(tmp_path / "x.bin", np.zeros((2, 2), dtype=np.float32))
    write_matrix(tmp_path / "ok.bin", np.zeros((2, 2)))
    blob = (tmp_path / "ok.bin").read_bytes()
    (tmp_path / "badmagic.bin").write_bytes(b"NOPE!" + blob[5:])
    with pytest.raises(ValueError, match="magic"):
        read_matrix(tmp_path / "badmagic.bin")
    (tmp_path / "trunc.bin").write_bytes(blob[:-8])
    with pytest.raises(ValueError, match="payload"):
        read_matrix(tmp_path / "trunc.bin")


def test_table_roundtrip_exact(tmp_path, rng):
    t = rng.standard_normal(20)
    n = np.abs(rng.standard_normal(20)) * 1e-7
    path = tmp_path / "t.csv"
    write_table(path, ["t_au", "n_pairs"], [t, n])
    names, data = read_table(path)
    assert names == ["t_au", "n_pairs"]
    assert np.array_equal(data[:, 0], t) and np.array_equal(data[:, 1], n)
    with pytest.raises(ValueError):
        write_table(tmp_path / "bad.csv", ["a"], [t, n])
    (tmp_path / "empty.csv").write_text("")
    with pytest.raises(ValueError, match="empty"):
        read_table(tmp_path / "empty.csv")


def test_keyvalue_parsing():
    parsed = parse_keyvalue_text("a = 1\n# comment\n\nb = two words # trail\n")
    assert parsed == {"a": "1", "b": "two words"}
    with pytest.raises(ValueError, match="duplicate"):
        parse_keyvalue_text("a = 1\na = 2")
    with pytest.raises(ValueError, match="key = value"):
        parse_keyvalue_text("just text")
    with pytest.raises(ValueError, match="empty key"):
        parse_keyvalue_text("= 3")


def test_scaled_float_forms():
    assert parse_scaled_float("1.5", UNITS) == 1.5
    assert parse_scaled_float("3mc2", UNITS) == pytest.approx(3 * UNITS.mc2)
    assert parse_scaled_float("0.3/c", UNITS) == pytest.approx(0.3 / UNITS.c)
    assert parse_scaled_float("mc2", UNITS) == pytest.approx(UNITS.mc2)
    with pytest.raises(ValueError):
        parse_scaled_float("3 bananas", UNITS)
    assert parse_bool("true") and not parse_bool("off")
    with pytest.raises(ValueError):
        parse_bool("perhaps")


def test_keyvalue_file_roundtrip(tmp_path):
    entries = {"a": 1.5, "b": "text", "c": True, "d": [1e-3, 2e-3], "e": 7}
    path = tmp_path / "m.txt"
    write_keyvalue_file(path, entries, header_comment="hello")
    back = read_keyvalue_file(path)
    assert back["a"] == "1.5" and back["b"] == "text" and back["c"] == "true"
    assert back["d"] == "0.001,0.002" and back["e"] == "7"


# ------------------------------------------------------------- config layer

def test_every_config_key_documented():
    assert set(KEY_DOCS) == set(ScenarioConfig.__dataclass_fields__)


def test_unknown_and_missing_keys():
    with pytest.raises(ValueError, match="unknown config keys: frobnicate"):
        config_from_mapping({"scenario": "vacuum_pairs", "frobnicate": "1"})
    with pytest.raises(ValueError, match="missing required key"):
        config_from_mapping({"v0": "3mc2"})
    with pytest.raises(ValueError, match="fermion or boson"):
        config_from_mapping({"scenario": "vacuum_pairs", "kind": "anyon"})


def test_defaults_resolve():
    cfg = config_from_mapping({"scenario": "vacuum_pairs"})
    assert cfg.v0 == pytest.approx(3 * UNITS.mc2)
    assert cfg.epsilon == pytest.approx(0.3 / UNITS.c)
    assert cfg.snapshot_times == [cfg.t_max]


def test_validation_names_constraints():
    base = {"scenario": "vacuum_pairs", "n_points": "2048", "box_length": "8"}
    strict = config_from_mapping(base | {"edge_resolution": "strict"})
    msgs = validate(strict)
    assert any("edge resolution" in m for m in msgs)
    wrap = config_from_mapping(base | {"edge_resolution": "relaxed", "t_max": "0.1"})
    assert any("wraparound" in m for m in validate(wrap))
    nyq = config_from_mapping(
        base | {"edge_resolution": "relaxed", "n_points": "1024", "p_cut": "400"}
    )
    assert any("nyquist" in m for m in validate(nyq))
    lattice = config_from_mapping(
        base | {"edge_resolution": "relaxed", "snapshot_times": "1.0000001e-3", "t_max": "2e-3"}
    )
    assert any("time lattice" in m for m in validate(lattice))
    boson = config_from_mapping({"scenario": "superradiance", "kind": "fermion"})
    assert any("boson scenario" in m for m in validate(boson))
    ok = config_from_mapping(
        base | {"edge_resolution": "relaxed", "t_max": "2e-3", "p_cut": "260", "dt": "2e-6"}
    )
    assert validate(ok) == []


# ------------------------------------------------------------- tiny end-to-end run

TINY = {
    "scenario": "vacuum_pairs",
    "n_points": "512",
    "box_length": "4",
    "epsilon": "0.016",
    "barrier_width": "0.2",
    "dt": "2e-6",
    "t_max": "1e-4",
    "snapshot_times": "5e-5,1e-4",
    "sample_interval": "1e-5",
    "p_cut": "200",
    "p_cut_companion": "160",
    "edge_resolution": "relaxed",
    "dump_amplitudes": "true",
}


@pytest.fixture(scope="module")
def tiny_run(tmp_path_factory):
    outdir = tmp_path_factory.mktemp("tiny")
    cfg = config_from_mapping(TINY | {"output_dir": str(outdir)})
    manifest = run(cfg)
    return outdir, manifest


def test_run_emits_parseable_files(tiny_run):
    outdir, manifest_path = tiny_run
    manifest = read_keyvalue_file(manifest_path)
    assert manifest["scenario"] == "vacuum_pairs"
    assert manifest["invariant_failures"] == "none"
    assert float(manifest["wall_time_s"]) > 0
    files = manifest["output_files"].split()
    assert "n_pairs.csv" in files and "spectrum.csv" in files
    for name in files:
        assert (outdir / name).exists()
        if name.endswith(".csv"):
            names, data = read_table(outdir / name)
            assert len(names) == data.shape[1]
        elif name.endswith(".bin"):
            read_matrix(outdir / name)
    names, data = read_table(outdir / "n_pairs.csv")
    assert names[0] == "t_au" and data[0, 1] == pytest.approx(0.0, abs=1e-10)
    # amplitude dumps roundtrip and are square-ish complex blocks
    upm = read_matrix(outdir / "amplitudes_upm_t0.000100.bin")
    assert upm.dtype == np.complex128 and upm.shape[0] == 512


def test_rerun_bit_identical_data(tiny_run, tmp_path):
    outdir, _ = tiny_run
    cfg = config_from_mapping(TINY | {"output_dir": str(tmp_path / "again")})
    run(cfg)
    for name in ("n_pairs.csv", "spectrum.csv", "density_t0.000100.csv", "amplitudes_upm_t0.000100.bin"):
        assert (outdir / name).read_bytes() == (tmp_path / "again" / name).read_bytes()


def test_run_rejects_invalid_config(tmp_path):
    cfg = config_from_mapping(TINY | {"output_dir": str(tmp_path), "t_max": "0.5"})
    with pytest.raises(ValidationError) as err:
        run(cfg)
    assert any("wraparound" in v for v in err.value.violations)


# ------------------------------------------------------------- CLI

def test_cli_resonance_and_exit_codes(capsys, tmp_path):
    assert cli_main(["resonance", "--p0", "100", "--v0", "3mc2", "--k", "12"]) == 0
    out = capsys.readouterr().out
    assert "0.0948" in out and "198.8" in out
    assert cli_main(["resonance", "--p0", "1", "--v0", "1.5mc2", "--k", "2"]) == 3
    cfg_path = tmp_path / "bad.cfg"
    cfg_path.write_text("scenario = vacuum_pairs\nt_max = 0.5\nedge_resolution = relaxed\n")
    assert cli_main(["validate", str(cfg_path)]) == 3
    good = tmp_path / "good.cfg"
    good.write_text("\n".join(f"{k} = {v}" for k, v in TINY.items()) + "\n")
    assert cli_main(["validate", str(good)]) == 0
    with pytest.raises(SystemExit) as exc:
        cli_main(["no-such-command"])
    assert exc.value.code == 2


def test_cli_run_subprocess(tmp_path):
    cfg_path = tmp_path / "run.cfg"
    lines = [f"{k} = {v}" for k, v in (TINY | {"dump_amplitudes": "false"}).items()]
    lines.append(f"output_dir = {tmp_path / 'out'}")
    cfg_path.write_text("\n".join(lines) + "\n")
    proc = subprocess.run(
        [sys.executable, "-m", "kleinqft.cli", "run", str(cfg_path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "out" / "manifest.txt").exists()
