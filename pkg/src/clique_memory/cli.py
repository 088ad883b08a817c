"""Batch command line: ``clique-memory <subcommand> [flags]``.

Settings come from, in increasing precedence: built-in defaults, a
``--config`` file of ``key=value`` lines, the ``CLIQUE_MEMORY_SEED``
environment variable (seed only) and explicit flags. Each run writes CSV
results plus a JSON summary echoing the fully resolved configuration.

Exit status: 0 success, 2 configuration error, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__, theory
from ._backend import BACKEND
from .dynamics import GB, MODES, PARALLEL, run
from .experiments import (
    CORRUPTED,
    SCOPES,
    SINGLE_MESSAGE,
    START_MODES,
    STORED,
    SweepRow,
    TrialEstimate,
    capacity_sweep,
    convergence_census,
    lemma3_experiment,
    max_errors,
    resolve_c,
    resolve_kappa,
    retrieval_experiment,
    stability_experiment,
    theorem_kappa,
)
from .model import (
    EXACT_ERRORS,
    STATE_DTYPE,
    BallSpec,
    ModelParams,
    as_fraction,
    corrupt,
    encode,
    read_messages,
    sample_messages,
    substream,
    write_messages,
)
from .network import build_binary, build_weights

SUBCOMMANDS = ("stability", "retrieval", "sweep", "lemma3", "census", "theory", "trace", "gen")
SEED_ENV = "CLIQUE_MEMORY_SEED"
EXCLUSIVE = (("alpha", "M"), ("c", "c_rule"), ("kappa", "kappa_rule"))


class ConfigError(Exception):
    pass


def _fraction(s) -> Fraction:
    try:
        return as_fraction(str(s).strip())
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"not a rational number: {s!r}")


def _bool(s) -> bool:
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _int_list(s) -> list[int]:
    return [int(x) for x in str(s).split(",") if x.strip()]


def parse_grid(s) -> list[float]:
    """``start:stop:step`` (inclusive) or a comma-separated list."""
    s = str(s).strip()
    if ":" in s:
        start, stop, step = (float(x) for x in s.split(":"))
        if step <= 0 or stop < start:
            raise ValueError(f"bad grid {s!r}")
        n = int(round((stop - start) / step)) + 1
        return [round(start + k * step, 12) for k in range(n)]
    return [float(x) for x in s.split(",") if x.strip()]


# key -> parser; these are the only keys accepted in a config file
KEY_TYPES = {
    "l": int,
    "c": int,
    "c_rule": str,
    "alpha": float,
    "M": int,
    "kappa": _fraction,
    "kappa_rule": str,
    "gamma": float,
    "r": int,
    "trials": int,
    "seed": int,
    "workers": int,
    "step_cap": int,
    "scope": str,
    "start": str,
    "mode": str,
    "l_list": _int_list,
    "alpha_grid": parse_grid,
    "block": int,
    "letter": int,
    "messages": str,
    "out": str,
    "summary": str,
    "trace_out": str,
    "multi_step": _bool,
    "timing": _bool,
    "distinct": _bool,
}


@dataclass
class RunConfig:
    subcommand: str | None = None
    l: int = 64
    c: int | None = None
    c_rule: str | None = None
    alpha: float | None = None
    M: int | None = None
    kappa: Fraction | None = None
    kappa_rule: str | None = None
    gamma: float = 0.5
    r: int | None = None
    trials: int = 1000
    seed: int = 42
    workers: int | None = None
    step_cap: int = 100
    scope: str = SINGLE_MESSAGE
    start: str = STORED
    mode: str = PARALLEL
    l_list: list | None = None
    alpha_grid: list | None = None
    block: int = 0
    letter: int = 1
    messages: str | None = None
    out: str | None = None
    summary: str | None = None
    trace_out: str | None = None
    multi_step: bool = False
    timing: bool = False
    distinct: bool = False


def read_config_file(path) -> dict:
    """Parse ``key=value`` lines; ``#`` starts a comment."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}")
    values: dict = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key=value, got {raw.strip()!r}")
        key, val = (x.strip() for x in line.split("=", 1))
        if key not in KEY_TYPES:
            raise ConfigError(f"{path}:{n}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{path}:{n}: duplicate key {key!r}")
        try:
            values[key] = KEY_TYPES[key](val)
        except ValueError as exc:
            raise ConfigError(f"{path}:{n}: bad value for {key}: {exc}")
    _check_exclusive(values, f"config file {path}")
    return values


def load_config(path) -> RunConfig:
    return RunConfig(**read_config_file(path))


def _check_exclusive(values: dict, source: str):
    for a, b in EXCLUSIVE:
        if values.get(a) is not None and values.get(b) is not None:
            raise ConfigError(f"{source} sets both {a} and {b}; they are mutually exclusive")


def merge_sources(*layers: dict) -> dict:
    """Overlay explicit settings, lowest precedence first.

    Setting one member of an exclusive pair drops the other member coming
    from a lower layer.
    """
    out: dict = {}
    for layer in layers:
        for key, val in layer.items():
            for a, b in EXCLUSIVE:
                if key == a:
                    out.pop(b, None)
                elif key == b:
                    out.pop(a, None)
            out[key] = val
    return out


# ---------------------------------------------------------------- parser


def _add_common(sp: argparse.ArgumentParser):
    g = sp.add_argument_group("instance")
    g.add_argument("--config", help="key=value config file (flags override it)")
    g.add_argument("--l", type=int, help="letters per block")
    g.add_argument("--c", type=int, help="number of blocks")
    g.add_argument("--c-rule", dest="c_rule", choices=["ln"], help="c = ceil(ln l)")
    g.add_argument("--alpha", type=float, help="load; M = round(alpha * l^2)")
    g.add_argument("--M", type=int, help="number of stored messages")
    g.add_argument("--kappa", type=_fraction, help="threshold coefficient, e.g. 0.5 or 5/6")
    g.add_argument("--kappa-rule", dest="kappa_rule", choices=["max", "thm2"],
                   help="max: 1 - 1/c; thm2: min(1 - gamma, 1 - 1/c)")
    g.add_argument("--gamma", type=float, help="error fraction for retrieval")
    g.add_argument("--r", type=int, help="number of corrupted letters")
    r = sp.add_argument_group("run")
    r.add_argument("--trials", type=int)
    r.add_argument("--seed", type=int, help=f"master seed (default 42, or ${SEED_ENV})")
    r.add_argument("--workers", type=int, help="worker processes (default: all cores)")
    r.add_argument("--step-cap", dest="step_cap", type=int)
    r.add_argument("--out", help="CSV output path (default stdout)")
    r.add_argument("--summary", help="JSON summary path (default <out>.json, else stderr)")
    r.add_argument("--timing", action="store_const", const=True,
                   help="include wall time in the summary (breaks byte-reproducibility)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clique-memory", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {version_string()}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add(name, help):
        sp = sub.add_parser(name, help=help, argument_default=argparse.SUPPRESS)
        _add_common(sp)
        return sp

    sp = add("stability", "probability that stored messages are fixed points")
    sp.add_argument("--scope", choices=SCOPES)
    sp = add("retrieval", "one-step correction of r random letter errors")
    sp.add_argument("--multi-step", dest="multi_step", action="store_const", const=True)
    sp = add("sweep", "stability over a grid of l and alpha")
    sp.add_argument("--l-list", dest="l_list", type=_int_list, help="comma-separated l values")
    sp.add_argument("--alpha-grid", dest="alpha_grid", type=parse_grid, help="start:stop:step or list")
    sp = add("lemma3", "law of Y, connections of a non-message neuron to the first message")
    sp.add_argument("--block", type=int)
    sp.add_argument("--letter", type=int)
    sp = add("census", "how parallel trajectories terminate")
    sp.add_argument("--start", choices=START_MODES)
    sp = add("theory", "efficiency and capacity threshold table")
    sp.add_argument("--alpha-grid", dest="alpha_grid", type=parse_grid)
    sp = add("trace", "energy and activity along one trajectory")
    sp.add_argument("--mode", choices=MODES)
    sp.add_argument("--start", choices=START_MODES)
    sp.add_argument("--messages", help="message list file to store instead of sampling")
    sp.add_argument("--trace-out", dest="trace_out", help="alias of --out for the trace CSV")
    sp = add("gen", "sample a message set and write it as a message list file")
    sp.add_argument("--distinct", action="store_const", const=True)
    return parser


# ---------------------------------------------------------------- resolution


def version_string() -> str:
    return f"v{__version__}"


def resolve(sub: str, explicit: dict) -> dict:
    """Materialize every setting for ``sub`` from the merged explicit values."""
    cfg = RunConfig(subcommand=sub, **{k: v for k, v in explicit.items() if k in KEY_TYPES})
    if cfg.workers is None:
        cfg.workers = os.cpu_count() or 1
    for name in ("l", "trials", "workers", "step_cap"):
        if getattr(cfg, name) < 1:
            raise ConfigError(f"{name} must be >= 1")
    if cfg.messages:
        if not Path(cfg.messages).is_file():
            raise ConfigError(f"message file {cfg.messages} does not exist")
        l, c, msgs = read_messages(cfg.messages)
        cfg.l, cfg.c, cfg.M, cfg.alpha, cfg.c_rule = l, c, len(msgs), None, None
    if cfg.c is None:
        cfg.c_rule = cfg.c_rule or "ln"
        cfg.c = resolve_c(cfg.l, cfg.c_rule)
    if cfg.c < 2 or cfg.l < 2:
        raise ConfigError("l and c must both be >= 2")
    if cfg.M is None:
        cfg.alpha = 0.05 if cfg.alpha is None else cfg.alpha
        if cfg.alpha <= 0:
            raise ConfigError("alpha must be > 0")
        cfg.M = max(1, round(cfg.alpha * cfg.l**2))
    if cfg.M < 1:
        raise ConfigError("M must be >= 1")
    cfg.alpha = cfg.M / cfg.l**2
    if not 0 < cfg.gamma < 1:
        raise ConfigError("gamma must lie in (0, 1)")
    if cfg.kappa is None:
        cfg.kappa_rule = cfg.kappa_rule or ("thm2" if sub == "retrieval" else "max")
        if cfg.kappa_rule == "thm2":
            cfg.kappa = theorem_kappa(cfg.gamma, cfg.c)
        elif cfg.kappa_rule == "max":
            cfg.kappa = resolve_kappa(cfg.c, "max")
        else:
            raise ConfigError(f"unknown kappa_rule {cfg.kappa_rule!r}; use max or thm2")
    if not 0 < cfg.kappa <= 1:
        raise ConfigError(f"kappa must lie in (0, 1], got {cfg.kappa}")
    if cfg.scope not in SCOPES:
        raise ConfigError(f"unknown scope {cfg.scope!r}")
    if cfg.start not in START_MODES:
        raise ConfigError(f"unknown start {cfg.start!r}")
    if cfg.mode not in MODES:
        raise ConfigError(f"unknown mode {cfg.mode!r}")
    if cfg.r is None:
        cfg.r = max(0, max_errors(cfg.gamma, cfg.c)) if sub == "retrieval" else 1
    if sub == "retrieval" and (cfg.r < 0 or cfg.r > cfg.gamma * cfg.c - 1):
        raise ConfigError(f"r exceeds gamma*c - 1 (r={cfg.r}, gamma={cfg.gamma}, c={cfg.c})")
    if cfg.r < 0 or cfg.r > cfg.c:
        raise ConfigError(f"r must lie in [0, c], got {cfg.r}")
    if sub == "stability" and cfg.kappa > 1 - Fraction(1, cfg.c):
        raise ConfigError(f"kappa={cfg.kappa} exceeds 1 - 1/c; stored units would not stay active")
    if sub == "sweep" and cfg.kappa_rule == "thm2":
        raise ConfigError("sweep supports kappa_rule=max or an explicit kappa")
    if sub == "sweep":
        cfg.l_list = cfg.l_list or [64, 128, 256]
        cfg.alpha_grid = cfg.alpha_grid or [0.05]
    if sub == "theory":
        cfg.alpha_grid = cfg.alpha_grid or parse_grid("0.1:1.0:0.1")
    if sub in ("sweep", "theory") and any(a <= 0 for a in cfg.alpha_grid):
        raise ConfigError("alpha grid values must be > 0")
    if sub == "lemma3" and not (0 <= cfg.block < cfg.c and 0 < cfg.letter < cfg.l):
        raise ConfigError("lemma3 needs 0 <= block < c and 0 < letter < l")
    if cfg.trace_out and not cfg.out:
        cfg.out = cfg.trace_out
    if sub == "gen" and not cfg.out:
        raise ConfigError("gen needs --out for the message file")
    if cfg.out and not cfg.summary and sub != "gen":
        cfg.summary = str(Path(cfg.out).with_suffix(".json"))
    for path in (cfg.out, cfg.summary):
        if path:
            parent = Path(path).resolve().parent
            if not parent.is_dir() or not os.access(parent, os.W_OK):
                raise ConfigError(f"cannot write {path}: directory {parent} is missing or not writable")
    return _jsonable(asdict(cfg))


def _jsonable(d: dict) -> dict:
    return {k: (str(v) if isinstance(v, Fraction) else v) for k, v in d.items()}


def _params(cfg: dict) -> ModelParams:
    return ModelParams(cfg["l"], cfg["c"], cfg["M"], _fraction(cfg["kappa"]))


# ---------------------------------------------------------------- output


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue()


SWEEP_HEADER = [
    "experiment", "l", "c", "M", "kappa", "alpha", "successes", "trials",
    "p_hat", "p_fail", "ci_low", "ci_high", "theory_value", "seed",
]


def _row(r: SweepRow) -> list:
    e = r.estimate
    return [r.experiment, r.l, r.c, r.M, r.kappa, r.alpha, e.successes, e.trials,
            e.p_hat, e.failure_rate, e.ci_low, e.ci_high, r.theory_value, r.seed]


def _estimate_json(e: TrialEstimate) -> dict:
    return {"successes": e.successes, "trials": e.trials, "p_hat": e.p_hat,
            "p_fail": e.failure_rate, "ci_low": e.ci_low, "ci_high": e.ci_high}


# ---------------------------------------------------------------- commands


def _single_row(cfg: dict, name: str, est: TrialEstimate, theory_value=None) -> tuple[str, dict]:
    row = SweepRow(name, cfg["l"], cfg["c"], cfg["M"], _fraction(cfg["kappa"]), cfg["alpha"],
                   est, cfg["seed"], theory_value)
    return _csv(SWEEP_HEADER, [_row(row)]), {"estimate": _estimate_json(est)}


def cmd_stability(cfg):
    p = _params(cfg)
    est = stability_experiment(p, cfg["trials"], cfg["scope"], seed=cfg["seed"], workers=cfg["workers"])
    return _single_row(cfg, f"stability-{cfg['scope']}", est, theory.stability_exponent(p.kappa, p.alpha))


def cmd_retrieval(cfg):
    p = _params(cfg)
    est = retrieval_experiment(
        p, cfg["gamma"], cfg["r"], cfg["trials"], seed=cfg["seed"], workers=cfg["workers"],
        override_kappa=True, multi_step=cfg["multi_step"],
    )
    return _single_row(cfg, "retrieval", est, theory.thresholds(p.c, p.kappa).thm2)


def cmd_sweep(cfg):
    c_rule = cfg["c"] if cfg["c_rule"] is None else cfg["c_rule"]
    kappa_rule = _fraction(cfg["kappa"]) if cfg["kappa_rule"] is None else cfg["kappa_rule"]
    rows = capacity_sweep(cfg["l_list"], cfg["alpha_grid"], c_rule, kappa_rule,
                          cfg["trials"], seed=cfg["seed"], workers=cfg["workers"])
    header = SWEEP_HEADER + ["thm1_global", "thm2", "thm3"]
    body = [_row(r) + [r.extra["thm1_global"], r.extra["thm2"], r.extra["thm3"]] for r in rows]
    results = [{"l": r.l, "c": r.c, "M": r.M, "kappa": str(r.kappa), "alpha": r.alpha,
                "estimate": _estimate_json(r.estimate)} for r in rows]
    return _csv(header, body), {"cells": results}


def cmd_lemma3(cfg):
    p = _params(cfg)
    res = lemma3_experiment(p, cfg["trials"], seed=cfg["seed"], workers=cfg["workers"],
                            unit=(cfg["block"], cfg["letter"]))
    rows = [[y, int(res.counts[y]), float(res.pmf[y]), float(res.theory[y])] for y in range(p.c)]
    return _csv(["y", "count", "empirical", "theory"], rows), {"tv_distance": res.tv}


def cmd_census(cfg):
    p = _params(cfg)
    res = convergence_census(p, cfg["start"], cfg["trials"], seed=cfg["seed"], workers=cfg["workers"],
                             r=cfg["r"], step_cap=cfg["step_cap"])
    header = ["start", "trials", "fixed_point", "two_cycle", "cap", "mean_steps", "max_steps"]
    row = [cfg["start"], res.trials, res.fixed_point, res.two_cycle, res.cap, res.mean_steps, res.max_steps]
    return _csv(header, [row]), {"census": dict(zip(header, row))}


def cmd_theory(cfg):
    th = theory.thresholds(cfg["c"], _fraction(cfg["kappa"]))
    rows = []
    for a in cfg["alpha_grid"]:
        eff = theory.efficiency(a)
        rows.append([a, eff.entropy_bits, eff.eta, th.thm1_pointwise, th.thm1_global,
                     th.thm2, th.thm3, th.alpha_star])
    header = ["alpha", "h_bits", "eta", "thm1_pointwise", "thm1_global", "thm2", "thm3", "alpha_star"]
    try:
        root = theory.efficiency_unity_root((0.1, 1.0))
    except ValueError:
        root = None
    return _csv(header, rows), {"thresholds": th.as_dict(), "eta_unity_root": root}


def cmd_trace(cfg):
    p = _params(cfg)
    rng = substream(cfg["seed"], 0)
    if cfg["messages"]:
        _, _, msgs = read_messages(cfg["messages"])
    else:
        msgs = sample_messages(p, rng)
    if cfg["start"] == STORED:
        v0 = encode(msgs[0], p)
    elif cfg["start"] == CORRUPTED:
        v0 = encode(corrupt(BallSpec(tuple(msgs[0]), cfg["r"], EXACT_ERRORS), p, rng), p)
    else:
        v0 = rng.integers(0, 2, size=p.N, dtype=STATE_DTYPE)
    w = build_binary(msgs, p) if cfg["mode"] == GB else build_weights(msgs, p)
    rep = run(w, v0, p, mode=cfg["mode"], step_cap=cfg["step_cap"])
    energies = rep.energy_trace or [None] * len(rep.active_trace)
    rows = [[t, a, e] for t, (a, e) in enumerate(zip(rep.active_trace, energies))]
    return _csv(["step", "active_count", "energy"], rows), {
        "outcome": rep.outcome, "steps": rep.steps,
    }


def cmd_gen(cfg):
    p = _params(cfg)
    msgs = sample_messages(p, substream(cfg["seed"], 0), distinct=cfg["distinct"])
    write_messages(cfg["out"], msgs, p)
    return None, {"messages_written": len(msgs), "path": cfg["out"]}


COMMANDS = {
    "stability": cmd_stability,
    "retrieval": cmd_retrieval,
    "sweep": cmd_sweep,
    "lemma3": cmd_lemma3,
    "census": cmd_census,
    "theory": cmd_theory,
    "trace": cmd_trace,
    "gen": cmd_gen,
}


def _write(path, text: str):
    Path(path).write_text(text, newline="\n")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    flags = {k: v for k, v in vars(args).items() if k not in ("subcommand", "config")}
    sub = args.subcommand
    try:
        _check_exclusive(flags, "command line")
        file_vals = read_config_file(args.config) if getattr(args, "config", None) else {}
        env = {}
        if os.environ.get(SEED_ENV):
            try:
                env["seed"] = int(os.environ[SEED_ENV])
            except ValueError:
                raise ConfigError(f"{SEED_ENV} must be an integer")
        explicit = merge_sources(file_vals, env, flags)
        cfg = resolve(sub, explicit)
    except (ConfigError, ValueError) as exc:
        print(f"clique-memory: error: {exc}", file=sys.stderr)
        return 2

    t0 = time.perf_counter()
    try:
        csv_text, results = COMMANDS[sub](cfg)
    except Exception as exc:  # energy monitor violations, I/O failures
        print(f"clique-memory: {sub} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    wall = time.perf_counter() - t0

    summary = {
        "tool": "clique-memory",
        "version": version_string(),
        "backend": BACKEND,
        "subcommand": sub,
        "config": cfg,
        "results": results,
    }
    if cfg["timing"]:
        summary["wall_time_s"] = wall
    summary_text = json.dumps(summary, indent=2, sort_keys=True) + "\n"
    try:
        if csv_text is not None:
            if cfg["out"]:
                _write(cfg["out"], csv_text)
            else:
                sys.stdout.write(csv_text)
        if cfg["summary"]:
            _write(cfg["summary"], summary_text)
        else:
            sys.stderr.write(summary_text)
    except OSError as exc:
        print(f"clique-memory: cannot write output: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
