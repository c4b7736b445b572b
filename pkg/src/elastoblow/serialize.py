"""Binary checkpoints and the diagnostics CSV.

Checkpoint layout (little endian)::

    offset  size  field
         0     8  magic b"ELBLCKPT"
         8     4  format version (uint32)
        12    12  n1, n2, n3 (int32)
        24     8  half_width
        32     8  t
        40    48  A, gamma, mu, lambda, rho_bar, R
        88    40  zero padding
       128        payload: 13 float64 fields (rho, m1..m3, Q row-major),
                  each stored with x varying fastest

CSV rows hold every DiagnosticsRow field in CSV_COLUMNS order, written with
17 significant digits; an absent Riccati bound is an empty field.
"""

from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List

import numpy as np

from .core import ConservedState, ElastoblowError, Grid, PhysParams
from .diagnostics import CSV_COLUMNS, DiagnosticsRow

MAGIC = b"ELBLCKPT"
VERSION = 1
HEADER_SIZE = 128
_HEAD = struct.Struct("<8sI3i2d6d")


class CheckpointError(ElastoblowError):
    code = "checkpoint_error"


class TruncatedFile(CheckpointError):
    code = "truncated_file"


class BadMagic(CheckpointError):
    code = "bad_magic"


class VersionMismatch(CheckpointError):
    code = "version_mismatch"


class SizeMismatch(CheckpointError):
    code = "size_mismatch"


@dataclass(frozen=True)
class CheckpointHeader:
    version: int
    grid: Grid
    t: float
    physics: PhysParams


def write_checkpoint(state: ConservedState, g: Grid, p: PhysParams, path) -> None:
    U = state.pack()
    if U.shape[1:] != g.shape:
        raise ValueError(f"state shape {U.shape[1:]} does not match grid {g.shape}")
    head = _HEAD.pack(MAGIC, VERSION, *g.n, g.half_width, float(state.t), p.A, p.gamma, p.mu, p.lam, p.rho_bar, p.R)
    head = head.ljust(HEADER_SIZE, b"\0")
    payload = np.asarray(U, dtype="<f8").transpose(0, 3, 2, 1).tobytes(order="C")
    Path(path).write_bytes(head + payload)


def read_header(buf: bytes) -> CheckpointHeader:
    if len(buf) < HEADER_SIZE:
        raise TruncatedFile(f"header needs {HEADER_SIZE} bytes, file has {len(buf)}")
    magic, version, n1, n2, n3, L, t, *phys = _HEAD.unpack_from(buf)
    if magic != MAGIC:
        raise BadMagic(f"expected magic {MAGIC!r}, found {magic!r}")
    if version != VERSION:
        raise VersionMismatch(f"checkpoint version {version}, reader supports {VERSION}")
    A, gamma, mu, lam, rho_bar, R = phys
    return CheckpointHeader(version, Grid((n1, n2, n3), L), t, PhysParams(A, gamma, mu, lam, rho_bar, R))


def read_checkpoint(path):
    """Returns (ConservedState, CheckpointHeader)."""
    buf = Path(path).read_bytes()
    head = read_header(buf)
    nx, ny, nz = head.grid.n
    want = HEADER_SIZE + 13 * nx * ny * nz * 8
    if len(buf) < want:
        raise TruncatedFile(f"expected {want} bytes, file has {len(buf)}")
    if len(buf) > want:
        raise SizeMismatch(f"expected {want} bytes, file has {len(buf)}")
    data = np.frombuffer(buf, dtype="<f8", offset=HEADER_SIZE).reshape(13, nz, ny, nx)
    U = np.ascontiguousarray(data.transpose(0, 3, 2, 1), dtype=np.float64)
    return ConservedState.unpack(U, head.t), head


def _fmt(v) -> str:
    return "" if v is None else format(float(v), ".17g")


def rows_to_csv(rows: Iterable[DiagnosticsRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_fmt(v) for v in r.values()])
    return buf.getvalue()


def csv_to_rows(text: str) -> List[DiagnosticsRow]:
    rd = csv.reader(io.StringIO(text))
    header = next(rd, None)
    if header is None or tuple(header) != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV header {header!r}")
    rows = []
    for rec in rd:
        if not rec:
            continue
        vals = [None if s == "" else float(s) for s in rec]
        rows.append(DiagnosticsRow(*vals))
    return rows


def write_csv(rows: Iterable[DiagnosticsRow], path) -> None:
    Path(path).write_text(rows_to_csv(rows))


def read_csv(path) -> List[DiagnosticsRow]:
    return csv_to_rows(Path(path).read_text())
