"""Threshold retrieval dynamics and their energy functions.

A neuron fires when its integer input ``sum_J W[I, J] v[J]`` reaches the
threshold ``kappa * c``; equality fires. Three update schemes are provided:

* parallel (``step_parallel``): every neuron updated from the same frozen state;
* sequential (``sweep_sequential``): one raster-order sweep, updated in place;
* gb (``gb_step``): the max/min rule over the binary clique graph.

``energy_sequential`` never increases along sequential sweeps and
``energy_parallel`` never increases along parallel steps. :func:`run` iterates
a scheme to a fixed point or two-cycle and checks the energy on every step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

import numpy as np

from ._backend import kernels
from .model import STATE_DTYPE, ModelParams
from .network import BinaryAdjacency, WeightMatrix

SEQUENTIAL = "sequential"
PARALLEL = "parallel"
GB = "gb"
MODES = (SEQUENTIAL, PARALLEL, GB)

FIXED_POINT = "fixed-point"
TWO_CYCLE = "two-cycle"
STEP_CAP = "step-cap-reached"

DEFAULT_STEP_CAP = 100


class EnergyIncreaseError(RuntimeError):
    """An energy function went up along a trajectory."""


class DynamicsContradictionError(RuntimeError):
    """The sequential dynamics produced a two-cycle."""


def _state(v, n: int) -> np.ndarray:
    v = np.ascontiguousarray(v, dtype=STATE_DTYPE)
    if v.shape != (n,):
        raise ValueError(f"state has shape {v.shape}, network has {n} neurons")
    return v


def fields(w: WeightMatrix, v) -> np.ndarray:
    """Input ``sum_J W[I, J] v[J]`` for every neuron ``I``."""
    return kernels.fields(w.counts, _state(v, w.n))


def local_field(w: WeightMatrix, v, unit: tuple[int, int]) -> int:
    a, i = unit
    v = _state(v, w.n)
    row = w.counts[a * w.l + i]
    return int(row[np.flatnonzero(v)].sum(dtype=np.int64))


def step_parallel(w: WeightMatrix, v, p: ModelParams) -> np.ndarray:
    return (fields(w, v) >= p.fire_level).astype(STATE_DTYPE)


phi = step_parallel


def sweep_sequential(w: WeightMatrix, v, p: ModelParams) -> np.ndarray:
    return kernels.sweep_sequential(w.counts, _state(v, w.n), p.fire_level)


def sequential_flips(w: WeightMatrix, v, p: ModelParams) -> Iterator[tuple[int, np.ndarray]]:
    """Walk one sequential sweep, yielding ``(unit, state)`` after every flip.

    Slow; meant for checking the energy at single-flip granularity.
    """
    state = _state(v, w.n).copy()
    h = fields(w, state)
    for k in range(w.n):
        new = 1 if h[k] >= p.fire_level else 0
        if new != state[k]:
            state[k] = new
            row = w.counts[k].astype(np.int64)
            h += row if new else -row
            yield k, state.copy()


def gb_step(wb: BinaryAdjacency, v) -> np.ndarray:
    return kernels.gb_step(wb.bits, _state(v, wb.n), wb.c, wb.l)


def energy_sequential_exact(w: WeightMatrix, v, p: ModelParams, h=None) -> Fraction:
    v = _state(v, w.n)
    if h is None:
        h = fields(w, v)
    quad = int(h[v.astype(bool)].sum())
    return Fraction(-quad, 2) + p.threshold * int(v.sum())


def energy_parallel_exact(w: WeightMatrix, v, p: ModelParams, h=None, y=None) -> Fraction:
    v = _state(v, w.n)
    if h is None:
        h = fields(w, v)
    if y is None:
        y = (h >= p.fire_level).astype(STATE_DTYPE)
    bilinear = int(h[y.astype(bool)].sum())
    return -bilinear + p.threshold * (int(v.sum()) + int(y.sum()))


def energy_sequential(w: WeightMatrix, v, p: ModelParams) -> float:
    """``-1/2 v'Wv + kappa*c * sum(v)``."""
    return float(energy_sequential_exact(w, v, p))


def energy_parallel(w: WeightMatrix, v, p: ModelParams) -> float:
    """``-v'W y + kappa*c * sum(v + y)`` with ``y`` the parallel update of ``v``."""
    return float(energy_parallel_exact(w, v, p))


@dataclass
class ConvergenceReport:
    outcome: str
    steps: int
    final_state: np.ndarray
    cycle_partner: np.ndarray | None = None
    energy_trace: list[float] = field(default_factory=list)
    active_trace: list[int] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.outcome != STEP_CAP


class _Monitor:
    def __init__(self, mode: str, check: bool):
        self.mode = mode
        self.check = check
        self.last: Fraction | None = None
        self.trace: list[float] = []

    def record(self, e: Fraction, step: int):
        if self.check and self.last is not None and e > self.last:
            raise EnergyIncreaseError(
                f"{self.mode} energy rose from {self.last} to {e} at step {step}"
            )
        self.last = e
        self.trace.append(float(e))


def run(
    w,
    v0,
    p: ModelParams,
    mode: str = PARALLEL,
    step_cap: int = DEFAULT_STEP_CAP,
    check_energy: bool = True,
) -> ConvergenceReport:
    """Iterate one of the dynamics from ``v0``.

    ``w`` is a :class:`WeightMatrix`, or a :class:`BinaryAdjacency` for
    ``mode="gb"``. Stops at a fixed point, at a two-cycle (parallel and gb),
    or after ``step_cap`` updates. The energy and active-count traces hold
    one value per visited state (no energies for gb). With ``check_energy``
    any energy increase raises :class:`EnergyIncreaseError`.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    if step_cap < 1:
        raise ValueError("step_cap must be >= 1")
    if mode == GB and not isinstance(w, BinaryAdjacency):
        raise TypeError("gb mode needs a BinaryAdjacency")
    if mode != GB and not isinstance(w, WeightMatrix):
        raise TypeError(f"{mode} mode needs a WeightMatrix")

    monitor = _Monitor(mode, check_energy)
    prev = None
    cur = _state(v0, w.n).copy()
    active = [int(cur.sum())]
    h = fields(w, cur) if mode != GB else None

    for t in range(1, step_cap + 1):
        if mode == PARALLEL:
            nxt = (h >= p.fire_level).astype(STATE_DTYPE)
            monitor.record(energy_parallel_exact(w, cur, p, h=h, y=nxt), t - 1)
            h_next = fields(w, nxt)
        elif mode == SEQUENTIAL:
            monitor.record(energy_sequential_exact(w, cur, p, h=h), t - 1)
            nxt = sweep_sequential(w, cur, p)
            h_next = fields(w, nxt)
        else:
            nxt = gb_step(w, cur)
            h_next = None

        active.append(int(nxt.sum()))
        if np.array_equal(nxt, cur):
            _record_final(monitor, mode, w, nxt, p, h_next, t)
            return ConvergenceReport(FIXED_POINT, t, nxt, None, monitor.trace, active)
        if prev is not None and np.array_equal(nxt, prev):
            if mode == SEQUENTIAL:
                raise DynamicsContradictionError("sequential dynamics entered a two-cycle")
            _record_final(monitor, mode, w, nxt, p, h_next, t)
            return ConvergenceReport(TWO_CYCLE, t, nxt, cur, monitor.trace, active)
        prev, cur, h = cur, nxt, h_next

    _record_final(monitor, mode, w, cur, p, h, step_cap)
    return ConvergenceReport(STEP_CAP, step_cap, cur, None, monitor.trace, active)


def _record_final(monitor, mode, w, state, p, h, step):
    if mode == PARALLEL:
        monitor.record(energy_parallel_exact(w, state, p, h=h), step)
    elif mode == SEQUENTIAL:
        monitor.record(energy_sequential_exact(w, state, p, h=h), step)
