"""CSV and binary artifacts with reproducibility headers."""
from __future__ import annotations

import csv
import hashlib
import math
import struct
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .errors import ConfigError

MAGIC = b"VARPFLW1"


def config_digest(text: str | bytes) -> str:
    data = text.encode("utf-8") if isinstance(text, str) else text
    return hashlib.sha256(data).hexdigest()


def header_lines(seed: int, config_hash: str, extra: Sequence[str] = ()) -> list[str]:
    return [f"varpflow {__version__}", f"seed = {seed}", f"config_sha256 = {config_hash}", *extra]


def fmt(value) -> str:
    """Shortest text that round-trips exactly; booleans and ints stay literal."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return "%.17g" % v
    return str(value)


def write_csv(path: str | Path, header: Sequence[str], columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    """RFC-4180 CSV preceded by ``# ...`` header lines; ``\\n`` line endings for byte stability."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def read_csv(path: str | Path) -> tuple[list[str], list[dict[str, str]]]:
    """Header comment lines (without ``# ``) and the data rows."""
    header, body = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#"):
                header.append(line[1:].strip())
            else:
                body.append(line)
    return header, list(csv.DictReader(body))


def solution_rows(values: np.ndarray):
    """``(ix[, iy], it, u)`` rows from a space-time array ``(nt, *shape)``."""
    nt = values.shape[0]
    for idx in np.ndindex(*values.shape[1:]):
        for it in range(nt):
            yield (*idx, it, values[(it, *idx)])


def solution_columns(dim: int) -> list[str]:
    return ["ix", "iy", "iz"][:dim] + ["it", "u"]


def write_binary(path: str | Path, values: np.ndarray) -> None:
    """Magic, three little-endian uint32 counts (nx, ny, nt), then float64 LE in (nx, ny, nt) row-major order."""
    values = np.asarray(values, dtype=float)
    if values.ndim == 2:
        values = values[:, :, None]
    if values.ndim != 3:
        raise ConfigError("binary dumps support N = 1 and N = 2 only")
    nt, nx, ny = values.shape
    arr = np.ascontiguousarray(np.transpose(values, (1, 2, 0)), dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<III", nx, ny, nt))
        fh.write(arr.tobytes(order="C"))


def read_binary(path: str | Path) -> np.ndarray:
    """Inverse of :func:`write_binary`; returns shape ``(nx, ny, nt)``."""
    raw = Path(path).read_bytes()
    if raw[:8] != MAGIC:
        raise ConfigError(f"{path} is not a varpflow binary dump")
    nx, ny, nt = struct.unpack("<III", raw[8:20])
    data = np.frombuffer(raw, dtype="<f8", offset=20)
    if data.size != nx * ny * nt:
        raise ConfigError(f"{path}: expected {nx * ny * nt} values, found {data.size}")
    return data.reshape(nx, ny, nt).astype(float)
