"""On-disk formats: diagnostics CSV, binary checkpoints, digests, atomic writes."""

from __future__ import annotations

import hashlib
import io
import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from ..functionals import EquationFrame, InvariantRecord
from ..spectral import Grid2D, SpectralField

CSV_COLUMNS = (
    "t",
    "mass",
    "energy",
    "grad_norm_sq",
    "cross_term",
    "l4_norm_4",
    "hs_norm",
    "modified_energy",
)

MAGIC = b"MZK1"
_HEADER = struct.Struct("<4sIIdddBbdd")
_CHECKSUM = struct.Struct("<Q")
_FRAME_CODES = {"original": 0, "symmetrized": 1}
_FRAME_NAMES = {v: k for k, v in _FRAME_CODES.items()}


class CheckpointError(ValueError):
    pass


def format_float(x: float) -> str:
    """Shortest decimal string that round-trips to the same double."""
    return repr(float(x))


def atomic_write_bytes(path: str | os.PathLike, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def sha256_file(path: str | os.PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


# -- diagnostics CSV -------------------------------------------------------------


def records_to_csv(records: Iterable[InvariantRecord]) -> str:
    buf = io.StringIO()
    buf.write(",".join(CSV_COLUMNS) + "\n")
    for r in records:
        buf.write(",".join(format_float(getattr(r, c)) for c in CSV_COLUMNS) + "\n")
    return buf.getvalue()


def write_records_csv(path: str | os.PathLike, records: Iterable[InvariantRecord]) -> None:
    atomic_write_text(path, records_to_csv(records))


def read_records_csv(path: str | os.PathLike) -> list[InvariantRecord]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != ",".join(CSV_COLUMNS):
        raise ValueError(f"{path}: unexpected header {lines[0] if lines else '<empty>'!r}")
    out = []
    for i, line in enumerate(lines[1:], start=2):
        vals = line.split(",")
        if len(vals) != len(CSV_COLUMNS):
            raise ValueError(f"{path}:{i}: expected {len(CSV_COLUMNS)} fields, got {len(vals)}")
        out.append(InvariantRecord(**{c: float(v) for c, v in zip(CSV_COLUMNS, vals)}))
    return out


def write_table_csv(path: str | os.PathLike, columns: Iterable[str], rows: Iterable[Iterable]) -> None:
    columns = list(columns)
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for row in rows:
        cells = [format_float(v) if isinstance(v, (float, np.floating)) else str(v) for v in row]
        buf.write(",".join(cells) + "\n")
    atomic_write_text(path, buf.getvalue())


# -- checkpoints -----------------------------------------------------------------


@dataclass
class Checkpoint:
    field: SpectralField
    t: float
    frame: EquationFrame
    s: float = 0.8
    n_cut: float = 0.0

    @property
    def grid(self) -> Grid2D:
        return self.field.grid


def _payload_checksum(payload: bytes) -> int:
    # Sum of bytes mod 2^64; a Python int never overflows, so reduce at the end.
    return int(np.frombuffer(payload, dtype=np.uint8).sum(dtype=np.uint64))


def encode_checkpoint(ck: Checkpoint) -> bytes:
    g = ck.grid
    header = _HEADER.pack(
        MAGIC, g.nx, g.ny, g.lx, g.ly, ck.t,
        _FRAME_CODES[ck.frame.frame], ck.frame.nonlinear_sign, ck.s, ck.n_cut,
    )
    coeffs = np.ascontiguousarray(ck.field.coeffs, dtype="<c16").tobytes()
    payload = header + coeffs
    return payload + _CHECKSUM.pack(_payload_checksum(payload) % (1 << 64))


def decode_checkpoint(data: bytes) -> Checkpoint:
    if len(data) < _HEADER.size + _CHECKSUM.size:
        raise CheckpointError(f"checkpoint truncated ({len(data)} bytes)")
    magic, nx, ny, lx, ly, t, frame_code, sigma, s, n_cut = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointError(f"bad magic {magic!r}, expected {MAGIC!r}")
    expected = _HEADER.size + 16 * nx * ny + _CHECKSUM.size
    if len(data) != expected:
        raise CheckpointError(f"checkpoint size {len(data)} != {expected} for a {nx}x{ny} grid")
    payload = data[: -_CHECKSUM.size]
    (stored,) = _CHECKSUM.unpack_from(data, len(payload))
    actual = _payload_checksum(payload) % (1 << 64)
    if stored != actual:
        raise CheckpointError(f"checksum mismatch (stored {stored}, computed {actual})")
    if frame_code not in _FRAME_NAMES:
        raise CheckpointError(f"unknown frame code {frame_code}")
    grid = Grid2D(nx, ny, lx, ly)
    coeffs = np.frombuffer(payload, dtype="<c16", offset=_HEADER.size).reshape(nx, ny).copy()
    frame = EquationFrame(_FRAME_NAMES[frame_code], int(sigma), linear_only=(sigma == 0))
    return Checkpoint(SpectralField(grid, coeffs.astype(np.complex128)), t, frame, s, n_cut)


def write_checkpoint(path: str | os.PathLike, ck: Checkpoint) -> None:
    atomic_write_bytes(path, encode_checkpoint(ck))


def read_checkpoint(path: str | os.PathLike) -> Checkpoint:
    return decode_checkpoint(Path(path).read_bytes())

