"""Instance parameters, messages, one-hot encoding and Hamming-ball corruption.

A network has ``c`` blocks of ``l`` neurons. A message picks one letter in
``[0, l)`` per block; its encoding is the binary state with exactly one
active neuron per block. Neuron ``(a, i)`` (block ``a``, letter ``i``) lives
at flat index ``a * l + i``. That convention is shared by every file format.

Message sets are handled as integer arrays of shape ``(M, c)``; a single
message is any length-``c`` sequence of ints. States are ``uint8`` arrays of
length ``N = c * l``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

STATE_DTYPE = np.uint8

EXACT_ERRORS = "exact-errors"
ERASURE_RESAMPLE = "erasure-resample"
CORRUPTION_MODES = (EXACT_ERRORS, ERASURE_RESAMPLE)


class InvalidMessageError(ValueError):
    """A message has the wrong length or a letter outside ``[0, l)``."""


class NotOneHotError(ValueError):
    """A state cannot be decoded because some block is not one-hot."""

    def __init__(self, block: int, active: int):
        self.block = block
        self.active = active
        super().__init__(f"block {block} has {active} active neurons, expected exactly 1")


def as_fraction(x) -> Fraction:
    """Exact rational from an int, Fraction, decimal string or float.

    Floats go through their shortest repr so ``0.9`` becomes ``9/10``.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


@dataclass(frozen=True)
class ModelParams:
    """Shape of one instance: ``l`` letters per block, ``c`` blocks, ``M`` messages.

    ``kappa`` is stored as an exact rational so the firing test
    ``field >= kappa * c`` has no floating-point boundary cases.
    """

    l: int
    c: int
    M: int
    kappa: Fraction = field(default=Fraction(1, 2))

    def __post_init__(self):
        object.__setattr__(self, "kappa", as_fraction(self.kappa))
        if self.l < 2:
            raise ValueError(f"l must be >= 2, got {self.l}")
        if self.c < 2:
            raise ValueError(f"c must be >= 2, got {self.c}")
        if self.M < 1:
            raise ValueError(f"M must be >= 1, got {self.M}")
        if not 0 < self.kappa <= 1:
            raise ValueError(f"kappa must lie in (0, 1], got {self.kappa}")

    @property
    def N(self) -> int:
        return self.c * self.l

    @property
    def alpha(self) -> float:
        return self.M / self.l**2

    @property
    def threshold(self) -> Fraction:
        """Firing threshold ``kappa * c`` (exact)."""
        return self.kappa * self.c

    @property
    def fire_level(self) -> int:
        """Smallest integer field that fires; ``field >= kappa*c`` iff ``field >= fire_level``."""
        return math.ceil(self.threshold)

    @classmethod
    def from_alpha(cls, l: int, c: int, alpha: float, kappa=Fraction(1, 2)) -> "ModelParams":
        """Instance with ``M = round(alpha * l**2)`` (at least 1)."""
        return cls(l=l, c=c, M=max(1, round(alpha * l * l)), kappa=kappa)


def ln_blocks(l: int) -> int:
    """Default block count ``ceil(ln l)``, floored at 2."""
    return max(2, math.ceil(math.log(l)))


def max_kappa(c: int) -> Fraction:
    """Largest threshold coefficient keeping stored active units on: ``1 - 1/c``."""
    return 1 - Fraction(1, c)


def unit_index(a: int, i: int, l: int) -> int:
    return a * l + i


def substream(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for ``(seed, *keys)``, e.g. one per trial index."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, keys)]))


def check_message(m: Sequence[int], p: ModelParams) -> np.ndarray:
    arr = np.asarray(m)
    if arr.shape != (p.c,):
        raise InvalidMessageError(f"message must have {p.c} letters, got shape {arr.shape}")
    if arr.size and (arr.min() < 0 or arr.max() >= p.l):
        raise InvalidMessageError(f"letters must lie in [0, {p.l}), got {arr.tolist()}")
    return arr.astype(np.int64)


def check_messages(msgs, p: ModelParams) -> np.ndarray:
    """Validate a message set and return it as an ``(M', c)`` int64 array."""
    arr = np.asarray(msgs, dtype=np.int64)
    if arr.size == 0:
        return np.zeros((0, p.c), dtype=np.int64)
    if arr.ndim != 2 or arr.shape[1] != p.c:
        raise InvalidMessageError(f"message set must have shape (M, {p.c}), got {arr.shape}")
    bad = (arr < 0) | (arr >= p.l)
    if bad.any():
        mu, a = map(int, np.argwhere(bad)[0])
        raise InvalidMessageError(f"message {mu} block {a}: letter {arr[mu, a]} not in [0, {p.l})")
    return arr


def flat_units(msgs: np.ndarray, l: int) -> np.ndarray:
    """Flat neuron indices ``a*l + m_a`` for every message row."""
    msgs = np.asarray(msgs, dtype=np.int64)
    return msgs + np.arange(msgs.shape[-1], dtype=np.int64) * l


def encode(m: Sequence[int], p: ModelParams) -> np.ndarray:
    m = check_message(m, p)
    v = np.zeros(p.N, dtype=STATE_DTYPE)
    v[flat_units(m, p.l)] = 1
    return v


def decode(v: np.ndarray, p: ModelParams) -> tuple[int, ...]:
    blocks = np.asarray(v).reshape(p.c, p.l)
    active = blocks.sum(axis=1)
    for a in range(p.c):
        if active[a] != 1:
            raise NotOneHotError(a, int(active[a]))
    return tuple(int(i) for i in blocks.argmax(axis=1))


def sample_messages(p: ModelParams, rng: np.random.Generator, distinct: bool = False) -> np.ndarray:
    """Draw ``M`` messages with i.i.d. uniform letters.

    Duplicates are allowed unless ``distinct`` is set, in which case repeated
    rows are redrawn until the set is pairwise different.
    """
    msgs = rng.integers(0, p.l, size=(p.M, p.c), dtype=np.int64)
    if not distinct:
        return msgs
    if p.l**p.c < p.M:
        raise ValueError(f"cannot draw {p.M} distinct messages from {p.l}**{p.c} words")
    while True:
        _, first = np.unique(msgs, axis=0, return_index=True)
        dup = np.setdiff1d(np.arange(p.M), first)
        if dup.size == 0:
            return msgs
        msgs[dup] = rng.integers(0, p.l, size=(dup.size, p.c), dtype=np.int64)


def hamming(m1: Sequence[int], m2: Sequence[int]) -> int:
    a, b = np.asarray(m1), np.asarray(m2)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    return int(np.count_nonzero(a != b))


@dataclass(frozen=True)
class BallSpec:
    """Hamming ball around ``center`` of radius ``radius`` and how to sample in it."""

    center: tuple[int, ...]
    radius: int
    mode: str = EXACT_ERRORS

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(int(x) for x in self.center))
        if self.mode not in CORRUPTION_MODES:
            raise ValueError(f"unknown corruption mode {self.mode!r}")
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")
        if self.radius > len(self.center):
            raise ValueError(f"radius {self.radius} exceeds message length {len(self.center)}")


def corrupt(ball: BallSpec, p: ModelParams, rng: np.random.Generator) -> tuple[int, ...]:
    """Random message inside ``ball``.

    ``exact-errors`` replaces ``radius`` distinct blocks by a uniformly chosen
    wrong letter (distance exactly ``radius``); ``erasure-resample`` redraws
    them from the whole alphabet (distance at most ``radius``).
    """
    center = check_message(ball.center, p)
    out = center.copy()
    if ball.radius == 0:
        return tuple(int(x) for x in out)
    blocks = rng.choice(p.c, size=ball.radius, replace=False)
    if ball.mode == EXACT_ERRORS:
        shift = rng.integers(1, p.l, size=ball.radius)
        out[blocks] = (center[blocks] + shift) % p.l
    else:
        out[blocks] = rng.integers(0, p.l, size=ball.radius)
    return tuple(int(x) for x in out)


def write_messages(path, msgs, p: ModelParams) -> None:
    """Write a message list: header ``l c M`` then one message per line."""
    msgs = check_messages(msgs, p)
    lines = [f"{p.l} {p.c} {len(msgs)}"]
    lines += [" ".join(str(int(x)) for x in row) for row in msgs]
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


def read_messages(path) -> tuple[int, int, np.ndarray]:
    """Read a message list written by :func:`write_messages`; returns ``(l, c, msgs)``."""
    rows = [ln.split() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not rows or len(rows[0]) != 3:
        raise ValueError(f"{path}: first line must be 'l c M'")
    l, c, m = (int(x) for x in rows[0])
    body = rows[1:]
    if len(body) != m:
        raise ValueError(f"{path}: header announces {m} messages, found {len(body)}")
    for n, row in enumerate(body, start=2):
        if len(row) != c:
            raise ValueError(f"{path}:{n}: expected {c} letters, got {len(row)}")
    msgs = np.array(body, dtype=np.int64).reshape(m, c)
    if msgs.size and (msgs.min() < 0 or msgs.max() >= l):
        raise InvalidMessageError(f"{path}: letters must lie in [0, {l})")
    return l, c, msgs
