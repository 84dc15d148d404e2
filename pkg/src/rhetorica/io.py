"""Deterministic binary container for arrays plus JSON metadata.

Layout::

    8 bytes   magic  b"RHTRBIN\\0"
    4 bytes   format version (uint32, little-endian)
    8 bytes   header length H (uint64, little-endian)
    H bytes   UTF-8 JSON header (sorted keys, no whitespace)
    ...       array payloads, C-order little-endian, in header order

The header holds ``kind``, ``schema``, free-form ``meta`` and one entry per
array (``name``, ``dtype``, ``shape``, ``offset``, ``nbytes``). Scipy CSR
matrices are stored as ``<name>.data``, ``<name>.indices``, ``<name>.indptr``
with the shape recorded in ``sparse``. Nothing time- or host-dependent is
written, so equal content gives equal bytes.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from scipy import sparse

MAGIC = b"RHTRBIN\0"
FORMAT_VERSION = 1


class ArtifactError(ValueError):
    pass


@dataclass
class Artifact:
    kind: str
    schema: int
    meta: dict = field(default_factory=dict)
    arrays: dict[str, Any] = field(default_factory=dict)


def _to_le(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    if arr.dtype.byteorder == ">" or (arr.dtype.byteorder == "=" and not np.little_endian):
        arr = arr.astype(arr.dtype.newbyteorder("<"))
    return arr


def dumps(art: Artifact) -> bytes:
    entries, blobs, sparse_meta = [], [], {}
    offset = 0

    def add(name, arr):
        nonlocal offset
        arr = _to_le(np.asarray(arr))
        if arr.dtype == object:
            raise ArtifactError(f"array {name!r} has object dtype")
        raw = arr.tobytes(order="C")
        entries.append({"name": name, "dtype": arr.dtype.str, "shape": list(arr.shape),
                        "offset": offset, "nbytes": len(raw)})
        blobs.append(raw)
        offset += len(raw)

    for name in sorted(art.arrays):
        value = art.arrays[name]
        if sparse.issparse(value):
            m = sparse.csr_matrix(value)
            m.sort_indices()
            sparse_meta[name] = list(m.shape)
            add(f"{name}.data", m.data)
            add(f"{name}.indices", m.indices.astype(np.int64))
            add(f"{name}.indptr", m.indptr.astype(np.int64))
        else:
            add(name, value)
    header = {"kind": art.kind, "schema": art.schema, "meta": art.meta,
              "arrays": entries, "sparse": sparse_meta}
    hbytes = json.dumps(header, sort_keys=True, separators=(",", ":"),
                        ensure_ascii=False, allow_nan=False).encode("utf-8")
    return b"".join([MAGIC, struct.pack("<IQ", FORMAT_VERSION, len(hbytes)), hbytes, *blobs])


def loads(data: bytes, kind: str | None = None) -> Artifact:
    if len(data) < 20 or data[:8] != MAGIC:
        raise ArtifactError("not a rhetorica artifact (bad magic)")
    version, hlen = struct.unpack("<IQ", data[8:20])
    if version != FORMAT_VERSION:
        raise ArtifactError(f"unsupported container version {version}")
    try:
        header = json.loads(data[20:20 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, ValueError):
        raise ArtifactError("corrupt artifact header") from None
    if kind is not None and header["kind"] != kind:
        raise ArtifactError(f"expected a {kind!r} artifact, got {header['kind']!r}")
    base = 20 + hlen
    raw = {}
    for e in header["arrays"]:
        start = base + e["offset"]
        buf = data[start:start + e["nbytes"]]
        if len(buf) != e["nbytes"]:
            raise ArtifactError(f"truncated artifact: array {e['name']!r} is incomplete")
        raw[e["name"]] = np.frombuffer(buf, dtype=np.dtype(e["dtype"])).reshape(e["shape"]).copy()
    arrays = {}
    for name, shape in header["sparse"].items():
        arrays[name] = sparse.csr_matrix(
            (raw.pop(f"{name}.data"), raw.pop(f"{name}.indices"), raw.pop(f"{name}.indptr")),
            shape=tuple(shape))
    arrays.update(raw)
    return Artifact(header["kind"], header["schema"], header["meta"], arrays)


def atomic_write(path: str | Path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def save(path: str | Path, art: Artifact) -> None:
    atomic_write(path, dumps(art))


def load(path: str | Path, kind: str | None = None) -> Artifact:
    return loads(Path(path).read_bytes(), kind)


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def sha256_json(obj: Any) -> str:
    return hashlib.sha256(
        json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str).encode()).hexdigest()


def fmt_float(x: float) -> str:
    """Shortest round-trip repr; stable across platforms."""
    return repr(float(x))


def write_csv(path: str | Path, header: list[str], rows: list[list]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt_float(v) if isinstance(v, (float, np.floating)) else v for v in row])
    atomic_write(path, buf.getvalue().encode("utf-8"))


def read_csv(path: str | Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def write_jsonl(path: str | Path, rows: list[dict]) -> None:
    text = "".join(json.dumps(r, sort_keys=True, ensure_ascii=False) + "\n" for r in rows)
    atomic_write(path, text.encode("utf-8"))


def read_jsonl(path: str | Path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
