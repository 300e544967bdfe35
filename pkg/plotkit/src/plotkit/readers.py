"""Independent readers for the simulator's output formats.

Deliberately re-implemented from the format documentation rather than
imported, so this package consumes the file contract and nothing else:

  * tables: text, comma separated, exactly one header line of column names;
  * matrices: magic "KQFT1", u64 rows, u64 cols, u8 tag (0 float64,
    1 complex128), little-endian row-major payload;
  * manifests/configs: 'key = value' lines, '#' comments.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"KQFT1"
_DTYPES = {0: np.float64, 1: np.complex128}


def read_table(path):
    """(column names, data rows) from a one-header-line CSV table."""
    text = Path(path).read_text(encoding="utf-8").splitlines()
    if not text or not text[0].strip():
        raise ValueError(f"empty table file: {path}")
    names = text[0].split(",")
    rows = [[float(v) for v in line.split(",")] for line in text[1:] if line.strip()]
    data = np.array(rows, dtype=float).reshape(len(rows), len(names))
    return names, data


def read_matrix(path) -> np.ndarray:
    blob = Path(path).read_bytes()
    if blob[:5] != MAGIC:
        raise ValueError(f"{path}: not a KQFT1 matrix file")
    rows, cols, tag = struct.unpack("<QQB", blob[5:22])
    if tag not in _DTYPES:
        raise ValueError(f"{path}: unknown payload tag {tag}")
    dtype = np.dtype(_DTYPES[tag]).newbyteorder("<")
    payload = blob[22:]
    if len(payload) != rows * cols * dtype.itemsize:
        raise ValueError(f"{path}: truncated payload")
    return np.frombuffer(payload, dtype=dtype).reshape(rows, cols).astype(_DTYPES[tag])


def read_manifest(path) -> dict:
    out = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line or "=" not in line:
            continue
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    if "scenario" not in out:
        raise ValueError(f"{path}: no scenario in manifest")
    return out


def run_columns(run_dir, table_name):
    """Column-name -> array mapping for one table of a run directory."""
    names, data = read_table(Path(run_dir) / table_name)
    return {name: data[:, i] for i, name in enumerate(names)}
