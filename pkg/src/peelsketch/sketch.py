"""The full linear sketch: tail block, Count-Sketch block and bucket block.

Container layout (all little-endian)::

    header   : magic "PSKS" | version u32 | section count u32 | reserved u32
    table    : per section  tag (4 ASCII bytes) | offset u64 | length u64
    sections : PARM  Params as UTF-8 JSON
               TAIL  tail accumulators, float64[tail_reps]
               CSKT  Count-Sketch cells, float64[cs_rows * cs_buckets], row-major
               BCKT  bucket cells q, float64[B * L], row-major

Offsets are absolute from the start of the file.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .bucket_sketch import BucketSketch, column_sparsity, row_count
from .core import ParameterError, Params, as_vector
from .count_sketch import CountSketch
from .tail import TailSketch

SKETCH_MAGIC = b"PSKS"
SKETCH_VERSION = 1
_HEADER = struct.Struct("<4sIII")
_ENTRY = struct.Struct("<4sQQ")


class Sketch:
    def __init__(self, params: Params):
        self.params = params
        self.tail = TailSketch.from_params(params)
        self.cs = CountSketch.from_params(params)
        self.buckets = BucketSketch.from_params(params)

    @classmethod
    def of(cls, x, params: Params) -> Sketch:
        s = cls(params)
        s.measure(x)
        return s

    def measure(self, x) -> None:
        x = as_vector(x, self.params.n)
        self.tail.measure(x)
        self.cs.measure(x)
        self.buckets.measure(x)

    def update(self, i: int, delta: float) -> None:
        self.tail.update(i, delta)
        self.cs.update(i, delta)
        self.buckets.update(i, delta)

    @property
    def num_rows(self) -> int:
        return self.tail.num_rows + self.cs.num_rows + self.buckets.num_rows

    def column_sparsity(self, idx) -> np.ndarray:
        return column_sparsity(self.params, idx)

    def save(self, path: str | Path) -> None:
        sections = [
            (b"PARM", self.params.to_json().encode("utf-8")),
            (b"TAIL", self.tail.acc.astype("<f8").tobytes()),
            (b"CSKT", self.cs.cells.astype("<f8").tobytes()),
            (b"BCKT", self.buckets.q.astype("<f8").tobytes()),
        ]
        offset = _HEADER.size + _ENTRY.size * len(sections)
        table = []
        for tag, blob in sections:
            table.append(_ENTRY.pack(tag, offset, len(blob)))
            offset += len(blob)
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(SKETCH_MAGIC, SKETCH_VERSION, len(sections), 0))
            fh.writelines(table)
            for _, blob in sections:
                fh.write(blob)

    @classmethod
    def load(cls, path: str | Path) -> Sketch:
        raw = Path(path).read_bytes()
        if len(raw) < _HEADER.size:
            raise ParameterError(f"{path}: truncated sketch header")
        magic, version, count, _ = _HEADER.unpack_from(raw, 0)
        if magic != SKETCH_MAGIC:
            raise ParameterError(f"{path}: bad magic {magic!r}")
        if version != SKETCH_VERSION:
            raise ParameterError(f"{path}: unsupported sketch version {version}")
        blobs: dict[bytes, bytes] = {}
        for s in range(count):
            tag, off, length = _ENTRY.unpack_from(raw, _HEADER.size + s * _ENTRY.size)
            if off + length > len(raw):
                raise ParameterError(f"{path}: section {tag!r} runs past end of file")
            blobs[tag] = raw[off : off + length]
        missing = {b"PARM", b"TAIL", b"CSKT", b"BCKT"} - set(blobs)
        if missing:
            raise ParameterError(f"{path}: missing sections {sorted(missing)}")
        sk = cls(Params.from_json(blobs[b"PARM"].decode("utf-8")))
        sk.tail.acc[:] = _floats(blobs[b"TAIL"], sk.tail.acc.size, path)
        sk.cs.cells[:] = _floats(blobs[b"CSKT"], sk.cs.cells.size, path).reshape(sk.cs.cells.shape)
        sk.buckets.q[:] = _floats(blobs[b"BCKT"], sk.buckets.q.size, path).reshape(sk.buckets.q.shape)
        return sk


def _floats(blob: bytes, count: int, path) -> np.ndarray:
    if len(blob) != 8 * count:
        raise ParameterError(f"{path}: section holds {len(blob) // 8} values, expected {count}")
    return np.frombuffer(blob, dtype="<f8")


__all__ = ["Sketch", "row_count", "column_sparsity"]
