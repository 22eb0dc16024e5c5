"""Trace files: ``timestamp,key,size`` CSV and the CCT1 binary format.

Binary layout, all little-endian::

    header  magic "CCT1" | u16 version (=1) | u64 record count      14 bytes
    record  u32 timestamp | u64 key | u32 size | u32 reserved (=0)  20 bytes

The streaming readers keep O(1) state; ``load_trace`` is a bulk loader
that returns a columnar :class:`~climbsim.workload.Trace`.
"""

from __future__ import annotations

import io
import os
import struct
import tempfile
from pathlib import Path
from typing import BinaryIO, Iterable, Iterator, TextIO

import numpy as np

from .core import U32_MAX, U64_MAX, RequestRecord
from .workload import Trace

MAGIC = b"CCT1"
VERSION = 1
HEADER = struct.Struct("<4sHQ")
RECORD = struct.Struct("<IQII")
CSV_HEADER = "timestamp,key,size"
RECORD_DTYPE = np.dtype([("timestamp", "<u4"), ("key", "<u8"), ("size", "<u4"), ("reserved", "<u4")])

assert HEADER.size == 14 and RECORD.size == 20 == RECORD_DTYPE.itemsize


class TraceFormatError(ValueError):
    """Malformed trace input.  ``line`` or ``offset`` locates the problem."""

    def __init__(self, message: str, *, line: int | None = None, offset: int | None = None):
        where = f"line {line}: " if line is not None else f"offset {offset}: " if offset is not None else ""
        super().__init__(where + message)
        self.line = line
        self.offset = offset


# -- CSV -----------------------------------------------------------------

def _parse_int(text: str, name: str, lineno: int, lo: int, hi: int) -> int:
    text = text.strip()
    try:
        value = int(text, 10)
    except ValueError:
        raise TraceFormatError(f"{name} is not an integer: {text!r}", line=lineno) from None
    if not lo <= value <= hi:
        raise TraceFormatError(f"{name} {value} outside [{lo}, {hi}]", line=lineno)
    return value


def read_csv_trace(stream: BinaryIO | TextIO) -> Iterator[RequestRecord]:
    """Yield records from ``timestamp,key,size`` lines (header optional)."""
    for lineno, raw in enumerate(stream, start=1):
        line = raw.decode("utf-8") if isinstance(raw, bytes) else raw
        line = line.rstrip("\r\n")
        if lineno == 1:
            line = line.lstrip("\ufeff")
            if line.replace(" ", "") == CSV_HEADER:
                continue
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != 3:
            raise TraceFormatError(f"expected 3 columns, got {len(fields)}", line=lineno)
        ts = _parse_int(fields[0], "timestamp", lineno, 0, U64_MAX)
        key = _parse_int(fields[1], "key", lineno, 0, U64_MAX)
        size = _parse_int(fields[2], "size", lineno, 0, U32_MAX)
        if size == 0:
            raise TraceFormatError("size must be >= 1", line=lineno)
        yield RequestRecord(ts, key, size)


def write_csv_trace(records: Iterable[RequestRecord], stream: TextIO, header: bool = True) -> int:
    if header:
        stream.write(CSV_HEADER + "\n")
    n = 0
    for r in records:
        stream.write(f"{r.timestamp},{r.key},{r.size}\n")
        n += 1
    return n


# -- binary --------------------------------------------------------------

def write_binary_trace(records: Iterable[RequestRecord], stream: BinaryIO) -> int:
    """Write header plus records.  Needs a seekable stream when ``records``
    has no ``len``."""
    count = len(records) if hasattr(records, "__len__") else None
    start = stream.tell() if count is None else None
    stream.write(HEADER.pack(MAGIC, VERSION, count or 0))
    n = 0
    pack = RECORD.pack
    for r in records:
        if r.timestamp > U32_MAX:
            raise ValueError(f"timestamp {r.timestamp} does not fit the binary format's u32")
        stream.write(pack(r.timestamp, r.key, r.size, 0))
        n += 1
    if count is None:
        end = stream.tell()
        stream.seek(start)
        stream.write(HEADER.pack(MAGIC, VERSION, n))
        stream.seek(end)
    elif n != count:
        raise ValueError(f"record iterable yielded {n} items but reported length {count}")
    return n


def read_binary_header(stream: BinaryIO) -> int:
    """Validate the header and return the record count."""
    raw = stream.read(HEADER.size)
    if len(raw) < HEADER.size:
        raise TraceFormatError(f"truncated header ({len(raw)} of {HEADER.size} bytes)", offset=len(raw))
    magic, version, count = HEADER.unpack(raw)
    if magic != MAGIC:
        raise TraceFormatError(f"bad magic {magic!r}, expected {MAGIC!r}", offset=0)
    if version != VERSION:
        raise TraceFormatError(f"unsupported version {version}", offset=4)
    return count


def read_binary_trace(stream: BinaryIO) -> Iterator[RequestRecord]:
    """Yield records from a CCT1 stream, rejecting any deviation."""
    count = read_binary_header(stream)
    unpack = RECORD.unpack
    offset = HEADER.size
    for i in range(count):
        raw = stream.read(RECORD.size)
        if len(raw) < RECORD.size:
            raise TraceFormatError(f"truncated record {i}: header promises {count} records",
                                   offset=offset)
        ts, key, size, reserved = unpack(raw)
        if reserved:
            raise TraceFormatError(f"record {i} has nonzero reserved field", offset=offset + 16)
        if size == 0:
            raise TraceFormatError(f"record {i} has zero size", offset=offset + 12)
        yield RequestRecord(ts, key, size)
        offset += RECORD.size
    if stream.read(1):
        raise TraceFormatError(f"trailing bytes after {count} records", offset=offset)


def _load_binary(data: bytes) -> Trace:
    count = read_binary_header(io.BytesIO(data))
    body = memoryview(data)[HEADER.size:]
    expected = count * RECORD.size
    if len(body) < expected:
        bad = HEADER.size + (len(body) // RECORD.size) * RECORD.size
        raise TraceFormatError(f"truncated record: header promises {count} records", offset=bad)
    if len(body) > expected:
        raise TraceFormatError(f"trailing bytes after {count} records", offset=HEADER.size + expected)
    rec = np.frombuffer(body, dtype=RECORD_DTYPE, count=count)
    if count and rec["reserved"].any():
        i = int(np.flatnonzero(rec["reserved"])[0])
        raise TraceFormatError(f"record {i} has nonzero reserved field",
                               offset=HEADER.size + i * RECORD.size + 16)
    if count and (rec["size"] == 0).any():
        i = int(np.flatnonzero(rec["size"] == 0)[0])
        raise TraceFormatError(f"record {i} has zero size", offset=HEADER.size + i * RECORD.size + 12)
    return Trace(rec["timestamp"].astype(np.uint64), rec["key"].astype(np.uint64),
                 rec["size"].astype(np.uint64))


# -- paths ---------------------------------------------------------------

def detect_format(path: str | os.PathLike, explicit: str | None = None) -> str:
    if explicit:
        if explicit not in ("csv", "bin"):
            raise ValueError(f"unknown trace format {explicit!r}")
        return explicit
    suffix = Path(path).suffix.lower()
    if suffix in (".csv", ".txt"):
        return "csv"
    if suffix in (".bin", ".cct", ".cct1"):
        return "bin"
    raise ValueError(f"cannot infer trace format from {str(path)!r}; use csv or bin")


def load_trace(path: str | os.PathLike, fmt: str | None = None) -> Trace:
    fmt = detect_format(path, fmt)
    if fmt == "bin":
        return _load_binary(Path(path).read_bytes())
    with open(path, "rb") as fh:
        return Trace.from_records(read_csv_trace(fh))


def iter_trace(path: str | os.PathLike, fmt: str | None = None) -> Iterator[RequestRecord]:
    fmt = detect_format(path, fmt)
    with open(path, "rb") as fh:
        yield from (read_binary_trace(fh) if fmt == "bin" else read_csv_trace(fh))


def atomic_write(path: str | os.PathLike, data: bytes) -> None:
    """Write ``data`` to a sibling temp file, then rename over ``path``."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def trace_to_bytes(trace: Trace | Iterable[RequestRecord], fmt: str) -> bytes:
    if fmt == "bin":
        if isinstance(trace, Trace):
            if len(trace) and int(trace.timestamps.max()) > U32_MAX:
                raise ValueError("timestamps do not fit the binary format's u32")
            rec = np.zeros(len(trace), dtype=RECORD_DTYPE)
            rec["timestamp"] = trace.timestamps
            rec["key"] = trace.keys
            rec["size"] = trace.sizes
            return HEADER.pack(MAGIC, VERSION, len(trace)) + rec.tobytes()
        buf = io.BytesIO()
        write_binary_trace(list(trace), buf)
        return buf.getvalue()
    out = io.StringIO()
    write_csv_trace(trace, out)
    return out.getvalue().encode("utf-8")


def save_trace(trace: Trace | Iterable[RequestRecord], path: str | os.PathLike,
               fmt: str | None = None) -> None:
    atomic_write(path, trace_to_bytes(trace, detect_format(path, fmt)))
