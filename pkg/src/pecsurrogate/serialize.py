"""Versioned flat model files.

Layout::

    PECSURROGATE-BLOB 1\\n
    <one line of JSON: kind, version, meta, array descriptors>\\n
    <raw little-endian float64 / int64 bytes, arrays in header order, row-major>

Round trips are bitwise exact and the bytes depend only on the content.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

MAGIC = b"PECSURROGATE-BLOB 1\n"


class FormatError(ValueError):
    pass


def _dtype_tag(a: np.ndarray) -> str:
    if np.issubdtype(a.dtype, np.floating):
        return "<f8"
    if np.issubdtype(a.dtype, np.integer) or a.dtype == bool:
        return "<i8"
    raise FormatError(f"unsupported dtype {a.dtype}")


def dumps_blob(kind: str, version: int, meta: dict, arrays) -> bytes:
    arrays = [np.asarray(a) for a in arrays]
    descr = []
    payload = []
    for a in arrays:
        tag = _dtype_tag(a)
        descr.append({"dtype": tag, "shape": list(a.shape)})
        payload.append(np.ascontiguousarray(a, dtype=tag).tobytes())
    header = json.dumps({"kind": kind, "version": version, "meta": meta, "arrays": descr},
                        sort_keys=True, separators=(",", ":"))
    return MAGIC + header.encode("utf-8") + b"\n" + b"".join(payload)


def loads_blob(data: bytes, expect_kind: str | None = None):
    if not data.startswith(MAGIC):
        raise FormatError("not a model file (bad magic line)")
    rest = data[len(MAGIC):]
    nl = rest.index(b"\n")
    header = json.loads(rest[:nl].decode("utf-8"))
    if expect_kind is not None and header["kind"] != expect_kind:
        raise FormatError(f"expected a {expect_kind!r} model, found {header['kind']!r}")
    buf = memoryview(rest)[nl + 1:]
    arrays = []
    off = 0
    for d in header["arrays"]:
        shape = tuple(d["shape"])
        count = int(np.prod(shape)) if shape else 1
        nbytes = 8 * count
        if off + nbytes > len(buf):
            raise FormatError("truncated model file")
        arrays.append(np.frombuffer(buf[off:off + nbytes], dtype=d["dtype"]).reshape(shape).copy())
        off += nbytes
    if off != len(buf):
        raise FormatError("trailing bytes after the last array")
    return header["kind"], header["version"], header["meta"], arrays


def write_blob(path, kind, version, meta, arrays) -> None:
    Path(path).write_bytes(dumps_blob(kind, version, meta, arrays))


def read_blob(path, expect_kind=None):
    return loads_blob(Path(path).read_bytes(), expect_kind)
