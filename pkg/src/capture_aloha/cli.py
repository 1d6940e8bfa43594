"""``capture-aloha`` command-line interface.

Subcommands wrap the library one-to-one. Each prints a ``name = value``
summary and, with ``--out``, writes the same values to CSV; both go through
:func:`capture_aloha.figures.fmt`, so they agree digit for digit.

Exit codes: 0 success, 2 usage or domain error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import figures
from .errors import CaptureAlohaError, ConvergenceError, DomainError, InvariantError
from .fixedpoint import (GroupSpec, SolverOptions, group_node_throughput, network_throughput,
                         solve_heterogeneous, solve_homogeneous)
from .model import (BackoffSchedule, NetworkConfig, db_to_linear, rate_to_threshold,
                    throughput_at)
from .optimize import (approx_optimal_mu, approx_sum_rate, fixed_q_analysis, fixed_q_optimum,
                       hetero_max_sum_rate, max_sum_rate, max_throughput,
                       max_throughput_at_opt_mu)
from .simulate import SimConfig, replicate, run

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3

DEFAULTS = {"k": 0, "backoff": "const", "mode": "approx", "slots": 100_000, "warmup": 1_000,
            "seed": 0, "reps": 1}


class UsageError(CaptureAlohaError):
    pass


def _probability(text):
    v = float(text)
    if not 0.0 < v <= 1.0:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1], got {text}")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return v


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be a non-negative integer, got {text}")
    return v


def _positive_float(text):
    v = float(text)
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"must be positive and finite, got {text}")
    return v


def _finite_float(text):
    v = float(text)
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"must be finite, got {text}")
    return v


def _groups(text):
    """Parse ``n:snr_db,n:snr_db,...``."""
    out = []
    for item in text.split(","):
        try:
            n, snr = item.split(":")
            out.append((_positive_int(n.strip()), db_to_linear(_finite_float(snr.strip()))))
        except (ValueError, argparse.ArgumentTypeError):
            raise argparse.ArgumentTypeError(
                f"expected n:snr_db[,n:snr_db...], got {text!r}") from None
    return GroupSpec(tuple(out))


@dataclass(frozen=True)
class Sweep:
    """A parameter range ``name=start:stop:steps[:linear|log|db]``."""

    name: str
    start: float
    stop: float
    steps: int
    scale: str = "linear"

    def values(self) -> np.ndarray:
        if self.scale == "log":
            return np.geomspace(self.start, self.stop, self.steps)
        v = np.linspace(self.start, self.stop, self.steps)
        return db_to_linear(v) if self.scale == "db" else v


SWEEPABLE = ("q0", "mu", "snr_db")


def _sweep(text):
    try:
        name, spec = text.split("=")
        parts = spec.split(":")
        if len(parts) not in (3, 4):
            raise ValueError
        scale = parts[3].lower() if len(parts) == 4 else "linear"
        sw = Sweep(name.strip().replace("-", "_"), float(parts[0]), float(parts[1]),
                   int(parts[2]), scale)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected name=start:stop:steps[:scale], got {text!r}") from None
    if sw.name not in SWEEPABLE:
        raise argparse.ArgumentTypeError(f"can only sweep {', '.join(SWEEPABLE)}")
    if sw.steps < 1:
        raise argparse.ArgumentTypeError("steps must be >= 1")
    if sw.scale not in ("linear", "log", "db"):
        raise argparse.ArgumentTypeError("scale must be linear, log or db")
    if sw.scale == "db" and sw.name != "mu":
        raise argparse.ArgumentTypeError("db scale applies to mu only (snr_db is already in dB)")
    if sw.scale == "log" and not (sw.start > 0 and sw.stop > 0):
        raise argparse.ArgumentTypeError("log sweeps need positive endpoints")
    return sw


# flag dest -> converter, shared by argparse and the config file reader
CONVERTERS = {
    "n": _positive_int,
    "snr_db": _finite_float,
    "mu": _positive_float,
    "rate": _positive_float,
    "q0": _probability,
    "k": _nonneg_int,
    "backoff": str,
    "mode": str,
    "slots": _positive_int,
    "warmup": _nonneg_int,
    "seed": _nonneg_int,
    "reps": _positive_int,
    "groups": _groups,
    "out": str,
}


def _common_parser():
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("network")
    g.add_argument("--n", type=_positive_int, help="number of nodes")
    g.add_argument("--snr-db", type=_finite_float, help="mean received SNR in dB")
    thr = g.add_mutually_exclusive_group()
    thr.add_argument("--mu", type=_positive_float, help="SINR threshold (linear)")
    thr.add_argument("--rate", type=_positive_float, help="encoding rate in bit/s/Hz (mu = 2^R - 1)")
    g.add_argument("--q0", type=_probability, help="initial transmission probability in (0, 1]")
    g.add_argument("--k", type=_nonneg_int, help="cutoff phase K (default 0)")
    g.add_argument("--backoff", choices=("const", "beb"), help="backoff shape (default const)")
    g.add_argument("--mode", choices=("exact", "approx"), help="fixed-point form (default approx)")
    g.add_argument("--groups", type=_groups, help="heterogeneous groups as n:snr_db,n:snr_db,...")
    s = p.add_argument_group("simulation")
    s.add_argument("--slots", type=_positive_int, help="total slots per replication (default 1e5)")
    s.add_argument("--warmup", type=_nonneg_int, help="discarded leading slots (default 1000)")
    s.add_argument("--seed", type=_nonneg_int, help="base seed (default 0)")
    s.add_argument("--reps", type=_positive_int, help="independent replications (default 1)")
    o = p.add_argument_group("output")
    o.add_argument("--out", help="CSV output path (a directory for `figures`)")
    o.add_argument("--config", type=Path, help="flat key = value file; flags override it")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="capture-aloha",
        description="Saturated slotted Aloha with SINR capture: analysis, optimization, simulation.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, help_):
        return sub.add_parser(name, parents=[common], help=help_, description=help_)

    add("solve", "steady-state point p_A and HOL distribution")
    t = add("throughput", "network throughput and sum rate at the steady state")
    t.add_argument("--sweep", type=_sweep,
                   help="vary one of q0, mu, snr_db: name=start:stop:steps[:linear|log|db]")
    add("optimize-q", "maximum throughput over the backoff parameters")
    add("optimize-mu", "maximum sum rate over the SINR threshold")
    add("fixed-q", "steady state and optimal threshold with every q_i equal to --q0")
    add("hetero", "heterogeneous groups: solve at --mu/--q0, or maximize the sum rate")
    add("simulate", "Monte Carlo simulation")
    f = add("figures", "write CSV data for the standard plots")
    f.add_argument("ids", nargs="+", metavar="FIGURE",
                   help=f"figure ids or 'all': {', '.join(figures.FIGURES)}")
    f.add_argument("--points", type=_positive_int, help="override the number of x points")
    return parser


def read_config(path: Path) -> dict:
    """Parse a flat ``key = value`` file. Keys are flag names with or without dashes."""
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        if key not in CONVERTERS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            out[key] = CONVERTERS[key](value)
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise UsageError(f"{path}:{lineno}: bad value for {key}: {exc}") from None
        if key == "backoff" and value not in ("const", "beb"):
            raise UsageError(f"{path}:{lineno}: backoff must be const or beb")
        if key == "mode" and value not in ("exact", "approx"):
            raise UsageError(f"{path}:{lineno}: mode must be exact or approx")
    if "mu" in out and "rate" in out:
        raise UsageError(f"{path}: mu and rate are mutually exclusive")
    return out


def resolve(args: argparse.Namespace) -> argparse.Namespace:
    """Fill unset flags from ``--config`` and then from :data:`DEFAULTS`."""
    if args.config is not None:
        cfg = read_config(args.config)
        # a threshold given on the command line beats either form in the file
        if args.mu is not None or args.rate is not None:
            cfg.pop("mu", None)
            cfg.pop("rate", None)
        for key, value in cfg.items():
            if getattr(args, key, None) is None:
                setattr(args, key, value)
    for key, value in DEFAULTS.items():
        if getattr(args, key) is None:
            setattr(args, key, value)
    return args


def _need(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        flags = ", ".join("--" + m.replace("_", "-") for m in missing)
        raise UsageError(f"{args.command} needs {flags}")


def _mu(args):
    if args.mu is None and args.rate is None:
        raise UsageError(f"{args.command} needs --mu or --rate")
    return args.mu if args.mu is not None else rate_to_threshold(args.rate)


def _schedule(args, q0=1.0):
    if args.backoff == "beb":
        return BackoffSchedule.beb(q0, args.k)
    return BackoffSchedule.constant(q0, args.k)


def _network(args):
    _need(args, "n", "snr_db", "q0")
    return NetworkConfig(args.n, db_to_linear(args.snr_db), _mu(args), _schedule(args, args.q0))


def _options(args):
    return SolverOptions(mode=args.mode)


# ---- commands: each returns an ordered record (dict) or a figures.Table


def cmd_solve(args):
    cfg = _network(args)
    ss = solve_homogeneous(cfg, _options(args))
    rec = {"p_A": ss.p, "pi_T": ss.pi_T, "attempt_rate": ss.attempt_rate,
           "network_throughput": cfg.n * ss.pi_T, "residual": ss.residual,
           "iterations": ss.iterations}
    rec.update({f"pi_{i}": v for i, v in enumerate(ss.pi)})
    return rec


def _throughput_record(args):
    cfg = _network(args)
    ss = solve_homogeneous(cfg, _options(args))
    tp = throughput_at(ss.p, cfg.mu, cfg.rho)
    return {"p_A": ss.p, "lambda_out": tp.lambda_out, "sum_rate": tp.sum_rate,
            "network_throughput": cfg.n * ss.pi_T}


def cmd_throughput(args):
    if args.sweep is None:
        return _throughput_record(args)
    sw = args.sweep
    rows = []
    for x in sw.values():
        if sw.name == "snr_db":
            args.snr_db = float(x)
        elif sw.name == "mu":
            args.mu, args.rate = float(x), None
        else:
            args.q0 = float(x)
        rows.append(_throughput_record(args))
    return figures.Table((sw.name, *rows[0]),
                         np.column_stack([sw.values()] + [[r[k] for r in rows] for k in rows[0]]))


def cmd_optimize_q(args):
    _need(args, "n", "snr_db")
    mu = _mu(args)
    opt = max_throughput(args.n, mu, db_to_linear(args.snr_db), _schedule(args).multipliers)
    return {"lambda_max": opt.lambda_max, "branch": opt.branch,
            "q0_star": opt.q_star[0], "q0_hat": math.nan if opt.q0_hat is None else opt.q0_hat,
            "sum_rate": opt.lambda_max * math.log2(1.0 + mu)}


def cmd_optimize_mu(args):
    _need(args, "n", "snr_db")
    rho = db_to_linear(args.snr_db)
    opt = max_sum_rate(args.n, rho)
    mu_low, mu_high = approx_optimal_mu(args.n, rho)
    c_high, c_low = approx_sum_rate(args.n, rho)
    return {"C": opt.C, "mu_star": opt.mu_star, "rate": opt.rate, "branch": opt.branch,
            "rho_0": opt.rho_0, "lambda_at_mu_star": max_throughput_at_opt_mu(args.n, rho),
            "mu_low_approx": mu_low, "mu_high_approx": mu_high,
            "C_high_approx": c_high, "C_low_approx": c_low}


def cmd_fixed_q(args):
    _need(args, "n", "snr_db", "q0")
    mu = _mu(args)
    pt = fixed_q_analysis(args.n, args.q0, mu, db_to_linear(args.snr_db))
    rec = {"p_A": pt.p_A, "lambda_out": pt.lambda_out, "sum_rate": pt.sum_rate}
    if args.n * args.q0 >= math.e:
        opt = fixed_q_optimum(args.n, args.q0)
        rec.update(mu_star=opt.mu_star, max_rate=opt.max_rate)
    else:
        rec.update(mu_star=math.nan, max_rate=math.nan)
    return rec


def cmd_hetero(args):
    _need(args, "groups")
    spec = args.groups
    if args.mu is None and args.rate is None:
        opt = hetero_max_sum_rate(spec, _schedule(args).multipliers, mode=args.mode)
        return {"C": opt.C, "mu_star": opt.mu_star, "q0_star": opt.q0_star,
                "lambda_max": opt.lambda_max, "near_optimal_cells": opt.near_optimal_cells,
                "multimodal": opt.multimodal}
    _need(args, "q0")
    mu = _mu(args)
    schedule = _schedule(args, args.q0)
    ss = solve_heterogeneous(spec, mu, schedule, _options(args))
    rec = {}
    for m, p in enumerate(ss.p, 1):
        rec[f"p_A_{m}"] = p
        rec[f"node_throughput_{m}"] = group_node_throughput(p, schedule)
    lam = network_throughput(spec, ss.p, schedule)
    rec.update(network_throughput=lam, sum_rate=lam * math.log2(1.0 + mu),
               residual=ss.residual, iterations=ss.iterations)
    return rec


def cmd_simulate(args):
    sim = SimConfig(slots=args.slots, warmup=args.warmup, seed=args.seed, replications=args.reps)
    if args.groups is not None:
        _need(args, "q0")
        rep_kw = {"mu": _mu(args), "schedule": _schedule(args, args.q0)}
        net = args.groups
    else:
        net, rep_kw = _network(args), {}
    rep = replicate(net, sim, **rep_kw) if sim.replications > 1 else run(net, sim, **rep_kw)
    rec = {"p_hat": rep.p_hat, "throughput": rep.throughput, "sum_rate": rep.sum_rate,
           "attempts": rep.attempts, "successes": rep.successes, "measured_slots": rep.slots,
           "p_hat_first_half": rep.half_p_hat[0], "p_hat_second_half": rep.half_p_hat[1]}
    if len(rep.per_group) > 1:
        for m, g in enumerate(rep.per_group, 1):
            rec[f"p_hat_{m}"] = g.p_hat
            rec[f"node_throughput_{m}"] = g.node_throughput
    if rep.ci_halfwidth is not None:
        rec.update({f"ci_{k}": v for k, v in rep.ci_halfwidth.items()})
    return rec


def cmd_figures(args):
    ids = list(figures.FIGURES) if args.ids == ["all"] else args.ids
    unknown = [i for i in ids if i not in figures.FIGURES]
    if unknown:
        raise UsageError(f"unknown figure id(s) {', '.join(unknown)}; "
                         f"choose from {', '.join(figures.FIGURES)} or 'all'")
    out = Path(args.out or "figures")
    written = []
    for fid in ids:
        table = figures.build(fid, points=args.points, slots=args.slots, seed=args.seed)
        written.append(figures.write_csv(table, out / f"{fid}.csv"))
    return written


COMMANDS = {
    "solve": cmd_solve,
    "throughput": cmd_throughput,
    "optimize-q": cmd_optimize_q,
    "optimize-mu": cmd_optimize_mu,
    "fixed-q": cmd_fixed_q,
    "hetero": cmd_hetero,
    "simulate": cmd_simulate,
}


def _cell(v):
    if isinstance(v, (bool, np.bool_, str)):
        return str(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return figures.fmt(v)


def record_csv(rec: dict) -> str:
    return ",".join(rec) + "\n" + ",".join(_cell(v) for v in rec.values()) + "\n"


def emit(result, out, stream=None):
    stream = stream or sys.stdout
    if isinstance(result, figures.Table):
        text = result.to_csv()
        stream.write(text)
        if out:
            Path(out).write_text(text)
        return
    width = max(len(k) for k in result)
    for k, v in result.items():
        stream.write(f"{k:<{width}} = {_cell(v)}\n")
    if out:
        Path(out).write_text(record_csv(result))


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        resolve(args)
        if args.command == "figures":
            for path in cmd_figures(args):
                print(path)
        else:
            emit(COMMANDS[args.command](args), args.out)
    except (UsageError, DomainError) as exc:
        print(f"capture-aloha {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, InvariantError, ArithmeticError) as exc:
        print(f"capture-aloha {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK
