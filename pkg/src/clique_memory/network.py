"""Weight matrices built from a message set.

``WeightMatrix`` holds the integer co-occurrence counts used by the
threshold dynamics; ``BinaryAdjacency`` is the 0/1 clique graph (with
self-loops on used neurons) driving the original max/min dynamics.
Both are dense ``N x N`` arrays with zero within-block entries.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._backend import kernels
from .model import ModelParams, check_messages, flat_units


class CountOverflowError(OverflowError):
    pass


def count_dtype(max_count: int) -> np.dtype:
    """Smallest unsigned dtype able to hold ``max_count``."""
    for dt in (np.uint8, np.uint16, np.uint32):
        if max_count <= np.iinfo(dt).max:
            return np.dtype(dt)
    raise CountOverflowError(f"{max_count} messages exceed the 32-bit count width")


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class WeightMatrix:
    counts: np.ndarray
    c: int
    l: int
    M: int

    @property
    def n(self) -> int:
        return self.counts.shape[0]

    def entry(self, a: int, i: int, b: int, j: int) -> int:
        return int(self.counts[a * self.l + i, b * self.l + j])

    def cross_block_mask(self) -> np.ndarray:
        blk = np.arange(self.n) // self.l
        return blk[:, None] != blk[None, :]


@dataclass(frozen=True, eq=False)
class BinaryAdjacency:
    bits: np.ndarray
    c: int
    l: int

    @property
    def n(self) -> int:
        return self.bits.shape[0]

    def entry(self, a: int, i: int, b: int, j: int) -> int:
        return int(self.bits[a * self.l + i, b * self.l + j])


def build_weights(msgs, p: ModelParams) -> WeightMatrix:
    """Count, for every pair of neurons in different blocks, the messages containing both."""
    msgs = check_messages(msgs, p)
    m = len(msgs)
    counts = np.zeros((p.N, p.N), dtype=count_dtype(max(m, p.M)))
    kernels.accumulate_counts(counts, np.ascontiguousarray(flat_units(msgs, p.l)))
    return WeightMatrix(_frozen(counts), p.c, p.l, m)


def build_binary(msgs, p: ModelParams) -> BinaryAdjacency:
    msgs = check_messages(msgs, p)
    bits = (build_weights(msgs, p).counts > 0).astype(np.uint8)
    used = np.unique(flat_units(msgs, p.l))
    bits[used, used] = 1
    return BinaryAdjacency(_frozen(bits), p.c, p.l)


@dataclass(frozen=True)
class EdgeStats:
    mean: float
    max: int
    fraction_nonzero: float
    histogram: np.ndarray  # histogram[k] = number of cross-block entries equal to k

    @property
    def n_entries(self) -> int:
        return int(self.histogram.sum())

    def pmf(self) -> np.ndarray:
        return self.histogram / max(self.n_entries, 1)


def cross_block_entries(w: WeightMatrix) -> np.ndarray:
    """Each unordered cross-block entry once (block ``a`` < block ``b``)."""
    blk = np.arange(w.n) // w.l
    return w.counts[blk[:, None] < blk[None, :]]


def edge_stats(w: WeightMatrix) -> EdgeStats:
    vals = cross_block_entries(w).astype(np.int64)
    if vals.size == 0:
        return EdgeStats(0.0, 0, 0.0, np.zeros(1, dtype=np.int64))
    return EdgeStats(
        mean=float(vals.mean()),
        max=int(vals.max()),
        fraction_nonzero=float(np.count_nonzero(vals)) / vals.size,
        histogram=np.bincount(vals),
    )


_MAGIC = b"CLQW"


def _cross_rows(w: WeightMatrix) -> np.ndarray:
    mask = w.cross_block_mask()
    return w.counts[mask].reshape(w.n, w.n - w.l)


def write_weights(path, w: WeightMatrix, binary: bool = False) -> None:
    """Dump cross-block counts row-major.

    Each row ``(a, i)`` lists its ``(c-1)*l`` entries towards other blocks in
    increasing column order. Text form: header ``N c l M`` then one line per
    row. Binary form: ``CLQW``, four little-endian uint64 (N, c, l, M), then
    the entries as little-endian uint32.
    """
    rows = _cross_rows(w)
    if binary:
        with open(path, "wb") as fh:
            fh.write(_MAGIC + struct.pack("<4Q", w.n, w.c, w.l, w.M))
            fh.write(rows.astype("<u4").tobytes())
        return
    lines = [f"{w.n} {w.c} {w.l} {w.M}"]
    lines += [" ".join(map(str, r.tolist())) for r in rows]
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


def read_weights(path) -> WeightMatrix:
    raw = Path(path).read_bytes()
    if raw.startswith(_MAGIC):
        n, c, l, m = struct.unpack_from("<4Q", raw, len(_MAGIC))
        body = np.frombuffer(raw, dtype="<u4", offset=len(_MAGIC) + 32)
    else:
        text = raw.decode().split("\n", 1)
        n, c, l, m = (int(x) for x in text[0].split())
        body = np.array(text[1].split(), dtype=np.int64) if len(text) > 1 else np.zeros(0)
    if n != c * l or body.size != n * (n - l):
        raise ValueError(f"{path}: malformed weight dump")
    counts = np.zeros((n, n), dtype=count_dtype(max(m, 1)))
    blk = np.arange(n) // l
    counts[blk[:, None] != blk[None, :]] = body
    return WeightMatrix(_frozen(counts), int(c), int(l), int(m))
