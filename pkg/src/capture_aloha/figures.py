"""Data behind the standard plots, one table (and one CSV file) per panel.

Every table has an ``x`` column first, named after its quantity (``mu``,
``snr_db``, ``q0`` or ``ratio_db``), followed by one column per curve.
Simulation-backed panels (``fig6*``, ``fig7*``, ``fig8-sumrate``) carry a
``sim_`` column next to each analytic curve; pass ``slots=0`` to skip the
simulations.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .fixedpoint import GroupSpec, SolverOptions, solve_homogeneous
from .model import BackoffSchedule, NetworkConfig, db_to_linear
from .optimize import (approx_optimal_mu, approx_sum_rate, hetero_max_sum_rate, max_sum_rate,
                       max_throughput, max_throughput_at_opt_mu, sum_rate_objective)
from .simulate import SimConfig, run

__all__ = ["Table", "FIGURES", "fmt", "build", "write_csv"]


def fmt(value: float) -> str:
    """Render a float the way every CSV and summary line does (9 significant digits)."""
    return format(float(value), ".9g")


@dataclass(frozen=True)
class Table:
    columns: tuple[str, ...]
    rows: np.ndarray

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.columns.index(name)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow(fmt(v) for v in row)
        return buf.getvalue()


def _table(x_name, x, curves: dict) -> Table:
    cols = [np.asarray(x, dtype=float)] + [np.asarray(v, dtype=float) for v in curves.values()]
    return Table((x_name, *curves), np.column_stack(cols))


def _db_label(db):
    return f"{db:g}dB"


N_DEFAULT = 50


def fig3a(points=61, **_):
    mu = np.logspace(-3, 2, points)
    curves = {}
    for db in (0, 10, 20):
        rho = db_to_linear(db)
        curves[f"rho_{_db_label(db)}"] = [max_throughput(N_DEFAULT, m, rho).lambda_max for m in mu]
    return _table("mu", mu, curves)


def fig3b(points=61, **_):
    snr_db = np.linspace(-30, 30, points)
    curves = {}
    for mu in (0.01, 0.5, 1.0):
        curves[f"mu_{mu:g}"] = [max_throughput(N_DEFAULT, mu, db_to_linear(d)).lambda_max
                                for d in snr_db]
    return _table("snr_db", snr_db, curves)


def fig4a(points=61, **_):
    snr_db = np.linspace(-20, 40, points)
    rho = db_to_linear(snr_db)
    curves = {f"n_{n}": [max_sum_rate(n, r).mu_star for r in rho] for n in (10, 50, 100)}
    curves["approx_high"] = [approx_optimal_mu(N_DEFAULT, r)[1] for r in rho]
    return _table("snr_db", snr_db, curves)


def fig4b(points=61, **_):
    snr_db = np.linspace(-20, 40, points)
    rho = db_to_linear(snr_db)
    curves = {f"n_{n}": [max_throughput_at_opt_mu(n, r) for r in rho] for n in (10, 50, 100)}
    return _table("snr_db", snr_db, curves)


def fig5a(points=41, **_):
    snr_db = np.linspace(0, 40, points)
    rho = db_to_linear(snr_db)
    curves = {f"n_{n}": [max_sum_rate(n, r).C for r in rho] for n in (10, 50, 100)}
    curves["approx_high"] = [approx_sum_rate(N_DEFAULT, r)[0] for r in rho]
    return _table("snr_db", snr_db, curves)


def fig5b(points=41, **_):
    snr_db = np.linspace(-20, 0, points)
    rho = db_to_linear(snr_db)
    curves = {}
    for n in (10, 100, 1000):
        curves[f"n_{n}"] = [max_sum_rate(n, r).C for r in rho]
        curves[f"approx_n_{n}"] = [approx_sum_rate(n, r)[1] for r in rho]
    curves["limit"] = np.full(points, math.exp(-1.0) / math.log(2.0))
    return _table("snr_db", snr_db, curves)


@lru_cache(maxsize=8)
def _q0_sweep(panel, points, slots, seed):
    """Analytic and simulated ``(p_A, throughput)`` over a log grid of ``q0``."""
    q0 = np.logspace(-3, 0, points)
    if panel == "a":
        cases = [(f"K{K}", N_DEFAULT, 1.0, 10.0, K) for K in (0, 2, 5)]
    else:
        cases = [(f"n{n}", n, 0.01, 1.0, 0) for n in (20, 50, 100)]
    p, lam = {}, {}
    for label, n, mu, rho, K in cases:
        rows = []
        for q in q0:
            cfg = NetworkConfig(n, rho, mu, BackoffSchedule.beb(q, K))
            ss = solve_homogeneous(cfg, SolverOptions(mode="approx"))
            row = [ss.p, n * ss.pi_T]
            if slots:
                rep = run(cfg, SimConfig(slots=slots, warmup=min(1000, slots // 2), seed=seed))
                row += [rep.p_hat, rep.throughput]
            rows.append(row)
        rows = np.array(rows)
        p[f"approx_{label}"] = rows[:, 0]
        lam[f"approx_{label}"] = rows[:, 1]
        if slots:
            p[f"sim_{label}"] = rows[:, 2]
            lam[f"sim_{label}"] = rows[:, 3]
    return q0, p, lam


def fig6a(points=13, slots=100_000, seed=0, **_):
    q0, p, _lam = _q0_sweep("a", points, slots, seed)
    return _table("q0", q0, p)


def fig6b(points=13, slots=100_000, seed=0, **_):
    q0, p, _lam = _q0_sweep("b", points, slots, seed)
    return _table("q0", q0, p)


def fig7a(points=13, slots=100_000, seed=0, **_):
    q0, _p, lam = _q0_sweep("a", points, slots, seed)
    return _table("q0", q0, lam)


def fig7b(points=13, slots=100_000, seed=0, **_):
    q0, _p, lam = _q0_sweep("b", points, slots, seed)
    return _table("q0", q0, lam)


def fig8_sumrate(points=13, slots=100_000, seed=0, **_):
    """Sum rate against ``mu`` with ``q0`` set to its throughput-optimal value, K = 0."""
    mu = np.logspace(-2, 2, points)
    curves = {}
    for db in (0, 10, 20):
        rho = db_to_linear(db)
        label = f"rho_{_db_label(db)}"
        curves[label] = sum_rate_objective(mu, N_DEFAULT, rho)
        if slots:
            sim = []
            for m in mu:
                opt = max_throughput(N_DEFAULT, m, rho)
                cfg = NetworkConfig(N_DEFAULT, rho, m, BackoffSchedule.constant(opt.q_star[0]))
                rep = run(cfg, SimConfig(slots=slots, warmup=min(1000, slots // 2), seed=seed))
                sim.append(rep.sum_rate)
            curves[f"sim_{label}"] = sim
    return _table("mu", mu, curves)


def fig9_hetero(points=21, **_):
    """Two groups of 25 nodes, K = 0: maximum sum rate against ``rho1/rho2`` at fixed mean SNR.

    The mean SNR is the node-weighted average ``(n1 rho1 + n2 rho2) / (n1 + n2)``.
    """
    ratio_db = np.linspace(0, 40, points)
    curves = {}
    for db in (0, 10, 15, 20):
        rho_mean = db_to_linear(db)
        curves[f"mean_{_db_label(db)}"] = [
            hetero_max_sum_rate(GroupSpec.two_groups(25, 25, rho_mean, db_to_linear(r))).C
            for r in ratio_db]
    return _table("ratio_db", ratio_db, curves)


FIGURES = {
    "fig3a": fig3a,
    "fig3b": fig3b,
    "fig4a": fig4a,
    "fig4b": fig4b,
    "fig5a": fig5a,
    "fig5b": fig5b,
    "fig6a": fig6a,
    "fig6b": fig6b,
    "fig7a": fig7a,
    "fig7b": fig7b,
    "fig8-sumrate": fig8_sumrate,
    "fig9-hetero": fig9_hetero,
}


def build(figure_id: str, **kw) -> Table:
    try:
        fn = FIGURES[figure_id]
    except KeyError:
        raise KeyError(f"unknown figure {figure_id!r}; choose from {', '.join(FIGURES)}") from None
    kw = {k: v for k, v in kw.items() if v is not None}
    return fn(**kw)


def write_csv(table: Table, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(table.to_csv())
    return path

