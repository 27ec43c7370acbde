"""CSV time series and the binary state snapshot."""

from __future__ import annotations

import struct
from typing import IO, Sequence

import numpy as np

from .diagnostics import TimeSeriesRecord
from .errors import ConfigurationError, ShapeError

__all__ = [
    "SNAPSHOT_MAGIC",
    "SNAPSHOT_VERSION",
    "series_header",
    "format_record",
    "SeriesWriter",
    "write_series",
    "read_series",
    "write_snapshot",
    "read_snapshot",
]

SNAPSHOT_MAGIC = b"KSZK"
SNAPSHOT_VERSION = 1


def _fmt(value: float) -> str:
    # str.format never consults the locale: dot decimal point, no grouping
    return format(float(value), ".17g")


def series_header(n: int) -> list[str]:
    return (
        ["t", "h2_sq_total"]
        + [f"h2_sq_{j}" for j in range(1, n + 1)]
        + ["bilap_sq_total", "curl_residual", "bound_envelope"]
    )


def format_record(rec: TimeSeriesRecord) -> str:
    values = [rec.t, rec.h2_sq_total, *rec.h2_sq_per_j, rec.bilap_sq_total, rec.curl_residual, rec.bound_envelope]
    return ",".join(_fmt(v) for v in values)


class SeriesWriter:
    """Append records to an open text stream, flushing after every row."""

    def __init__(self, stream: IO[str], n: int):
        self.stream = stream
        self.n = n
        stream.write(",".join(series_header(n)) + "\n")
        stream.flush()

    def __call__(self, rec: TimeSeriesRecord) -> None:
        if len(rec.h2_sq_per_j) != self.n:
            raise ShapeError(f"record has {len(rec.h2_sq_per_j)} components, expected {self.n}")
        self.stream.write(format_record(rec) + "\n")
        self.stream.flush()


def write_series(path: str, series: Sequence[TimeSeriesRecord]) -> None:
    n = len(series[0].h2_sq_per_j)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = SeriesWriter(fh, n)
        for rec in series:
            writer(rec)


def read_series(path: str) -> list[TimeSeriesRecord]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        n = len(header) - 5
        if n < 1 or header != series_header(n):
            raise ConfigurationError(f"{path}: unexpected header {header}")
        out = []
        for line in fh:
            if not line.strip():
                continue
            vals = [float(v) for v in line.split(",")]
            out.append(
                TimeSeriesRecord(
                    t=vals[0],
                    h2_sq_total=vals[1],
                    h2_sq_per_j=tuple(vals[2 : 2 + n]),
                    bilap_sq_total=vals[2 + n],
                    curl_residual=vals[3 + n],
                    bound_envelope=vals[4 + n],
                )
            )
    return out


def write_snapshot(path: str, components: np.ndarray) -> None:
    """Write ``(n, N_1, ..., N_n)`` coefficients.

    Layout: ``b"KSZK"``, ``u32`` version, ``u32`` n, ``n`` x ``u32`` mode
    counts, then each component's coefficients as little-endian float64 in
    row-major multi-index order.  All integers are little-endian.
    """
    comps = np.asarray(components, dtype=float)
    n = comps.shape[0]
    if comps.ndim != n + 1:
        raise ShapeError(f"expected {n + 1}-d coefficient array, got shape {comps.shape}")
    with open(path, "wb") as fh:
        fh.write(SNAPSHOT_MAGIC)
        fh.write(struct.pack("<II", SNAPSHOT_VERSION, n))
        fh.write(struct.pack(f"<{n}I", *comps.shape[1:]))
        fh.write(np.ascontiguousarray(comps, dtype="<f8").tobytes(order="C"))


def read_snapshot(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != SNAPSHOT_MAGIC:
        raise ConfigurationError(f"{path}: not a KSZK snapshot")
    version, n = struct.unpack_from("<II", blob, 4)
    if version != SNAPSHOT_VERSION:
        raise ConfigurationError(f"{path}: unsupported snapshot version {version}")
    modes = struct.unpack_from(f"<{n}I", blob, 12)
    offset = 12 + 4 * n
    expected = n * int(np.prod(modes)) * 8
    if len(blob) - offset != expected:
        raise ConfigurationError(f"{path}: expected {expected} coefficient bytes, found {len(blob) - offset}")
    data = np.frombuffer(blob, dtype="<f8", offset=offset)
    return data.reshape((n,) + tuple(modes)).astype(float)
