"""Monte Carlo estimates of stability, retrieval and connectivity probabilities.

Every trial draws a fresh message set from its own generator
``substream(seed, *key, trial)``, so results depend only on the master seed
and never on the number of workers or the order trials finish in.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import partial
from typing import Callable, Sequence

import numpy as np
from scipy.stats import binomtest

from . import theory
from ._backend import kernels
from .dynamics import (
    DEFAULT_STEP_CAP,
    FIXED_POINT,
    PARALLEL,
    STEP_CAP,
    TWO_CYCLE,
    EnergyIncreaseError,
    energy_parallel_exact,
    fields,
    run,
)
from .model import (
    EXACT_ERRORS,
    STATE_DTYPE,
    BallSpec,
    ModelParams,
    as_fraction,
    corrupt,
    encode,
    flat_units,
    ln_blocks,
    max_kappa,
    sample_messages,
    substream,
)
from .network import build_weights

SINGLE_UNIT = "single-unit"
SINGLE_MESSAGE = "single-message"
ALL_MESSAGES = "all-messages"
SCOPES = (SINGLE_UNIT, SINGLE_MESSAGE, ALL_MESSAGES)

STORED = "stored"
CORRUPTED = "corrupted"
UNIFORM_RANDOM = "uniform-random"
START_MODES = (STORED, CORRUPTED, UNIFORM_RANDOM)


@dataclass(frozen=True)
class TrialEstimate:
    """Success count with a 95% Wilson score interval."""

    successes: int
    trials: int
    p_hat: float
    ci_low: float
    ci_high: float

    @classmethod
    def from_counts(cls, successes: int, trials: int) -> "TrialEstimate":
        if not 0 <= successes <= trials or trials < 1:
            raise ValueError(f"need 0 <= successes <= trials and trials >= 1, got {successes}/{trials}")
        ci = binomtest(successes, trials).proportion_ci(confidence_level=0.95, method="wilson")
        p_hat = successes / trials
        return cls(successes, trials, p_hat, min(ci.low, p_hat), max(ci.high, p_hat))

    @property
    def failure_rate(self) -> float:
        return 1.0 - self.p_hat


@dataclass(frozen=True)
class SweepRow:
    experiment: str
    l: int
    c: int
    M: int
    kappa: Fraction
    alpha: float
    estimate: TrialEstimate
    seed: int
    theory_value: float | None = None
    extra: dict = field(default_factory=dict)


def _map_trials(fn: Callable[[int], object], trials: int, workers: int = 1) -> list:
    """Evaluate ``fn(0..trials-1)``; results come back in trial order."""
    if workers <= 1 or trials < 2:
        return [fn(t) for t in range(trials)]
    chunks = [range(s, trials, workers) for s in range(workers)]
    out = [None] * trials
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for idx, res in zip(chunks, pool.map(partial(_run_chunk, fn), chunks)):
            for t, r in zip(idx, res):
                out[t] = r
    return out


def _run_chunk(fn, indices):
    return [fn(t) for t in indices]


def _checked_step(w, v, p: ModelParams) -> np.ndarray:
    """One parallel step, verifying the parallel energy does not rise over it."""
    h0 = fields(w, v)
    y = (h0 >= p.fire_level).astype(STATE_DTYPE)
    h1 = fields(w, y)
    e0 = energy_parallel_exact(w, v, p, h=h0, y=y)
    e1 = energy_parallel_exact(w, y, p, h=h1)
    if e1 > e0:
        raise EnergyIncreaseError(f"parallel energy rose from {e0} to {e1} (l={p.l}, c={p.c}, M={p.M})")
    return y


# ---------------------------------------------------------------- stability


def _stability_trial(p: ModelParams, scope: str, seed: int, key: tuple, t: int) -> bool:
    rng = substream(seed, *key, t)
    msgs = sample_messages(p, rng)
    w = build_weights(msgs, p)
    v = encode(msgs[0], p)
    y = _checked_step(w, v, p)
    if scope == SINGLE_UNIT:
        unit = (int(msgs[0, 0]) + 1) % p.l
        return not y[unit]
    if scope == SINGLE_MESSAGE:
        return bool(np.array_equal(y, v))
    units = np.ascontiguousarray(flat_units(msgs, p.l))
    return kernels.count_unstable(w.counts, units, p.fire_level) == 0


def stability_experiment(
    p: ModelParams,
    trials: int,
    scope: str = SINGLE_MESSAGE,
    seed: int = 42,
    workers: int = 1,
    enforce_regime: bool = True,
    key: tuple = (),
) -> TrialEstimate:
    """Fraction of trials in which stored messages survive one parallel step.

    ``single-unit``: a fixed inactive neuron of the first message stays off.
    ``single-message``: the first message is a fixed point.
    ``all-messages``: every stored message is a fixed point.
    """
    if scope not in SCOPES:
        raise ValueError(f"unknown scope {scope!r}; expected one of {SCOPES}")
    if enforce_regime and p.kappa > max_kappa(p.c):
        raise ValueError(f"kappa={p.kappa} exceeds 1 - 1/c = {max_kappa(p.c)}")
    ok = _map_trials(partial(_stability_trial, p, scope, seed, tuple(key)), trials, workers)
    return TrialEstimate.from_counts(sum(ok), trials)


# ---------------------------------------------------------------- retrieval


def theorem_kappa(gamma, c: int) -> Fraction:
    """Threshold coefficient used for error correction: ``min(1 - gamma, 1 - 1/c)``."""
    return min(1 - as_fraction(gamma), max_kappa(c))


def max_errors(gamma, c: int) -> int:
    """Largest integer radius not exceeding ``gamma*c - 1``."""
    return math.floor(as_fraction(gamma) * c - 1)


def _retrieval_trial(p: ModelParams, r: int, multi_step: bool, seed: int, key: tuple, t: int) -> bool:
    rng = substream(seed, *key, t)
    msgs = sample_messages(p, rng)
    w = build_weights(msgs, p)
    target = encode(msgs[0], p)
    noisy = encode(corrupt(BallSpec(tuple(msgs[0]), r, EXACT_ERRORS), p, rng), p)
    if multi_step:
        final = run(w, noisy, p, mode=PARALLEL).final_state
    else:
        final = _checked_step(w, noisy, p)
    return bool(np.array_equal(final, target))


def retrieval_experiment(
    p: ModelParams,
    gamma: float,
    r: int,
    trials: int,
    seed: int = 42,
    workers: int = 1,
    override_kappa: bool = False,
    multi_step: bool = False,
    key: tuple = (),
) -> TrialEstimate:
    """Fraction of trials where one parallel step repairs ``r`` random letter errors.

    Unless ``override_kappa`` is set, ``p.kappa`` is replaced by
    :func:`theorem_kappa`. ``multi_step`` iterates to convergence instead.
    """
    if not 0 < float(gamma) < 1:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    if r < 0 or r > as_fraction(gamma) * p.c - 1:
        raise ValueError(f"r={r} exceeds gamma*c - 1 = {float(as_fraction(gamma) * p.c - 1):g}")
    if not override_kappa:
        p = replace(p, kappa=theorem_kappa(gamma, p.c))
    ok = _map_trials(partial(_retrieval_trial, p, r, multi_step, seed, tuple(key)), trials, workers)
    return TrialEstimate.from_counts(sum(ok), trials)


def mixed_input(m1: Sequence[int], m2: Sequence[int], split: int) -> tuple[int, ...]:
    """First ``split`` letters from ``m1``, the rest from ``m2``.

    Worst-case corruption: no single step can map this to both messages, and
    the error-correction guarantee covers random errors only.
    """
    return tuple(int(x) for x in m1[:split]) + tuple(int(x) for x in m2[split:])


# ---------------------------------------------------------------- connectivity


@dataclass(frozen=True)
class Lemma3Result:
    counts: np.ndarray  # counts[y] = trials with Y == y
    theory: np.ndarray
    trials: int

    @property
    def pmf(self) -> np.ndarray:
        return self.counts / self.trials

    @property
    def tv(self) -> float:
        return theory.tv_distance(self.pmf, self.theory)


def _lemma3_trial(p: ModelParams, unit: tuple[int, int], seed: int, key: tuple, t: int) -> int:
    rng = substream(seed, *key, t)
    msgs = np.zeros((p.M, p.c), dtype=np.int64)
    msgs[1:] = rng.integers(0, p.l, size=(p.M - 1, p.c))
    w = build_weights(msgs, p)
    a, i = unit
    row = w.counts[a * p.l + i]
    return sum(1 for b in range(p.c) if b != a and row[b * p.l] >= 1)


def lemma3_experiment(
    p: ModelParams,
    trials: int,
    seed: int = 42,
    workers: int = 1,
    unit: tuple[int, int] = (0, 1),
    key: tuple = (),
) -> Lemma3Result:
    """Empirical law of Y, the number of first-message neurons wired to ``unit``.

    The first message is pinned to all-zero letters and ``unit`` must be
    inactive in it; the other ``M - 1`` messages are random.
    """
    a, i = unit
    if not (0 <= a < p.c and 0 < i < p.l):
        raise ValueError(f"unit {unit} must be a non-message neuron (letter != 0) inside the network")
    ys = _map_trials(partial(_lemma3_trial, p, (a, i), seed, tuple(key)), trials, workers)
    counts = np.bincount(np.asarray(ys, dtype=np.int64), minlength=p.c)
    return Lemma3Result(counts, np.array(theory.lemma3_distribution(p.c, p.alpha)), trials)


# ---------------------------------------------------------------- sweeps


def resolve_c(l: int, c_rule) -> int:
    return ln_blocks(l) if c_rule == "ln" else int(c_rule)


def resolve_kappa(c: int, kappa_rule) -> Fraction:
    return max_kappa(c) if kappa_rule == "max" else as_fraction(kappa_rule)


def capacity_sweep(
    l_list: Sequence[int],
    alpha_grid: Sequence[float],
    c_rule="ln",
    kappa_rule="max",
    trials: int = 1000,
    seed: int = 42,
    workers: int = 1,
) -> list[SweepRow]:
    """Single-message stability on every ``(l, alpha)`` cell, with theory columns attached.

    A cell's random stream is keyed by ``(l, M, c)``, so its estimate does not
    depend on which other cells are in the grid.
    """
    if not l_list or not alpha_grid:
        raise ValueError("l_list and alpha_grid must be non-empty")
    rows = []
    for alpha in alpha_grid:
        for l in l_list:
            c = resolve_c(l, c_rule)
            p = ModelParams.from_alpha(l, c, alpha, kappa=resolve_kappa(c, kappa_rule))
            est = stability_experiment(
                p, trials, SINGLE_MESSAGE, seed=seed, workers=workers, key=(l, p.M, c)
            )
            th = theory.thresholds(c, p.kappa)
            rows.append(
                SweepRow(
                    experiment="stability",
                    l=l,
                    c=c,
                    M=p.M,
                    kappa=p.kappa,
                    alpha=p.alpha,
                    estimate=est,
                    seed=seed,
                    theory_value=theory.stability_exponent(p.kappa, p.alpha),
                    extra={"thm1_global": th.thm1_global, "thm2": th.thm2, "thm3": th.thm3},
                )
            )
    return rows


# ---------------------------------------------------------------- convergence


@dataclass(frozen=True)
class CensusResult:
    fixed_point: int
    two_cycle: int
    cap: int
    mean_steps: float
    max_steps: int

    @property
    def trials(self) -> int:
        return self.fixed_point + self.two_cycle + self.cap


def _census_trial(p: ModelParams, start: str, r: int, step_cap: int, seed: int, key: tuple, t: int):
    rng = substream(seed, *key, t)
    msgs = sample_messages(p, rng)
    w = build_weights(msgs, p)
    if start == STORED:
        v0 = encode(msgs[0], p)
    elif start == CORRUPTED:
        v0 = encode(corrupt(BallSpec(tuple(msgs[0]), r, EXACT_ERRORS), p, rng), p)
    else:
        v0 = rng.integers(0, 2, size=p.N, dtype=STATE_DTYPE)
    rep = run(w, v0, p, mode=PARALLEL, step_cap=step_cap)
    return rep.outcome, rep.steps


def convergence_census(
    p: ModelParams,
    start: str,
    trials: int,
    seed: int = 42,
    workers: int = 1,
    r: int = 1,
    step_cap: int = DEFAULT_STEP_CAP,
    key: tuple = (),
) -> CensusResult:
    """Tally how parallel trajectories end from stored, corrupted or uniform random starts.

    At the default step cap a capped trajectory raises ``RuntimeError``.
    """
    if start not in START_MODES:
        raise ValueError(f"unknown start mode {start!r}; expected one of {START_MODES}")
    res = _map_trials(partial(_census_trial, p, start, r, step_cap, seed, tuple(key)), trials, workers)
    outcomes = [o for o, _ in res]
    steps = [s for _, s in res]
    cap = outcomes.count(STEP_CAP)
    if cap and step_cap == DEFAULT_STEP_CAP:
        raise RuntimeError(f"{cap} of {trials} trajectories hit the default step cap")
    return CensusResult(
        fixed_point=outcomes.count(FIXED_POINT),
        two_cycle=outcomes.count(TWO_CYCLE),
        cap=cap,
        mean_steps=float(np.mean(steps)) if steps else 0.0,
        max_steps=max(steps, default=0),
    )
