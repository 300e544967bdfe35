"""Output file formats, the flat key = value config format, and run manifests.

Formats are pinned:

  * tables: plain text, comma separated, exactly one header line naming the
    columns (units are atomic units throughout), %.17g floats so files
    roundtrip losslessly;
  * matrices: flat little-endian binary, magic "KQFT1", then u64 rows,
    u64 cols, then a u8 payload tag (0 = float64, 1 = complex128) followed by
    the row-major payload;
  * configs and manifests: one `key = value` per line, '#' comments, blank
    lines ignored.

Every data file of a run lives next to the run's manifest.txt, which names
all of them; the manifest is created before any data file is written and is
finalized in place at the end of the run.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"KQFT1"
_TAGS = {0: np.float64, 1: np.complex128}


def write_table(path, names: list[str], columns: list[np.ndarray]) -> None:
    if len(names) != len(columns) or not names:
        raise ValueError("need one name per column")
    cols = [np.asarray(c) for c in columns]
    n = len(cols[0])
    if any(len(c) != n for c in cols):
        raise ValueError("columns must have equal length")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(names) + "\n")
        for i in range(n):
            fh.write(",".join(f"{float(c[i]):.17g}" for c in cols) + "\n")


def read_table(path) -> tuple[list[str], np.ndarray]:
    """Returns (column names, data array of shape (rows, cols))."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header:
            raise ValueError(f"empty table file: {path}")
        names = header.split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.size and data.shape[1] != len(names):
        raise ValueError(f"column count mismatch in {path}")
    return names, data


def write_matrix(path, array: np.ndarray) -> None:
    array = np.asarray(array)
    if array.ndim != 2:
        raise ValueError("binary matrix format holds 2-D arrays")
    if array.dtype == np.float64:
        tag = 0
    elif array.dtype == np.complex128:
        tag = 1
    else:
        raise ValueError(f"unsupported dtype {array.dtype}; use float64 or complex128")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<QQB", array.shape[0], array.shape[1], tag))
        fh.write(np.ascontiguousarray(array).astype("<" + array.dtype.str[1:]).tobytes())


def read_matrix(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(5)
        if magic != MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
        rows, cols, tag = struct.unpack("<QQB", fh.read(17))
        if tag not in _TAGS:
            raise ValueError(f"{path}: unknown payload tag {tag}")
        dtype = np.dtype(_TAGS[tag]).newbyteorder("<")
        payload = fh.read()
    expected = rows * cols * dtype.itemsize
    if len(payload) != expected:
        raise ValueError(f"{path}: payload is {len(payload)} bytes, expected {expected}")
    return np.frombuffer(payload, dtype=dtype).reshape(rows, cols).astype(_TAGS[tag])


def parse_keyvalue_text(text: str, source: str = "<config>") -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ValueError(f"{source}:{lineno}: empty key")
        if key in out:
            raise ValueError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def read_keyvalue_file(path) -> dict[str, str]:
    return parse_keyvalue_text(Path(path).read_text(encoding="utf-8"), source=str(path))


def write_keyvalue_file(path, entries: dict, header_comment: str = "") -> None:
    lines = []
    if header_comment:
        lines.extend(f"# {ln}" for ln in header_comment.splitlines())
    for key, value in entries.items():
        if isinstance(value, float):
            value = f"{value:.17g}"
        elif isinstance(value, bool):
            value = "true" if value else "false"
        elif isinstance(value, (list, tuple)):
            value = ",".join(f"{float(v):.17g}" for v in value)
        lines.append(f"{key} = {value}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def parse_scaled_float(value: str, units) -> float:
    """Float literals with the unit shorthands '<a>mc2' and '<a>/c'.

    '3mc2' is three rest energies; '0.3/c' is the paper-style smoothness
    length. Plain numbers pass through.
    """
    s = value.strip().lower().replace(" ", "")
    try:
        if s.endswith("mc2"):
            return float(s[:-3] or "1") * units.mc2
        if s.endswith("/c"):
            return float(s[:-2] or "1") / units.c
        return float(s)
    except ValueError:
        raise ValueError(f"cannot parse number {value!r} (allowed forms: 1.5, 3mc2, 0.3/c)")


def parse_bool(value: str) -> bool:
    s = value.strip().lower()
    if s in ("true", "yes", "on", "1"):
        return True
    if s in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"cannot parse boolean {value!r}")


def parse_float_list(value: str, units) -> list[float]:
    s = value.strip()
    if not s:
        return []
    return [parse_scaled_float(part, units) for part in s.split(",")]
