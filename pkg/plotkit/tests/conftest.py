"""Fixtures: tiny simulator runs generated through the primary package's CLI,
so these tests exercise exactly the external file contract."""

import subprocess
import sys
from pathlib import Path

import pytest

CONFIGS = {
    "exchange_small": """
scenario = exchange_density
n_points = 512
box_length = 4
dt = 2e-6
t_max = 2e-4
snapshot_times = 2e-4
sample_interval = 2e-5
p_cut = 200
epsilon = 0.012
edge_resolution = relaxed
potential_sampling = bandlimited
""",
    "pairs_small_02": """
scenario = vacuum_pairs
n_points = 512
box_length = 4
barrier_width = 0.2
dt = 2e-6
t_max = 4e-4
sample_interval = 2e-5
p_cut = 200
epsilon = 0.012
edge_resolution = relaxed
evolve_branches = negative
""",
    "step_small": """
scenario = step_limit
n_points = 512
box_length = 4
dt = 2e-6
t_max = 4e-4
sample_interval = 2e-5
p_cut = 200
epsilon = 0.012
edge_resolution = relaxed
evolve_branches = negative
""",
    "boson_small": """
scenario = superradiance
kind = boson
n_points = 512
box_length = 2
barrier_width = 2/c
dt = 1e-6
t_max = 1e-3
sample_interval = 1e-5
p_cut = 250
edge_resolution = relaxed
evolve_branches = negative
""",
    "boson_small_b": """
scenario = superradiance
kind = boson
n_points = 512
box_length = 2
barrier_width = 3/c
dt = 1e-6
t_max = 1e-3
sample_interval = 1e-5
p_cut = 250
edge_resolution = relaxed
evolve_branches = negative
""",
    "klein_small": """
scenario = klein_tunneling
n_points = 1024
box_length = 8
dt = 5e-6
t_max = 2e-2
snapshot_times = 5e-3,1e-2,1.5e-2,2e-2
sample_interval = 1e-3
p_cut = 260
resonance_k = 12
wp_p0 = 100
wp_x0 = -1.5
wp_delta = 0.3
edge_resolution = relaxed
potential_sampling = bandlimited
""",
}


@pytest.fixture(scope="session")
def tiny_runs(tmp_path_factory):
    base = tmp_path_factory.mktemp("plotkit_inputs")
    dirs = {}
    for name, body in CONFIGS.items():
        cfg = base / f"{name}.cfg"
        outdir = base / name
        cfg.write_text(body.strip() + f"\noutput_dir = {outdir}\n", encoding="utf-8")
        proc = subprocess.run(
            [sys.executable, "-m", "kleinqft.cli", "run", str(cfg)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, f"{name}: {proc.stderr}"
        dirs[name] = outdir
    return dirs
