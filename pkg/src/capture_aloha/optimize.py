"""Throughput and sum-rate optimization.

Two nested problems. For a fixed SINR threshold ``mu`` the backoff
parameters are tuned so the steady-state point sits at the throughput
maximum ``p_A = exp(-1 - mu/rho)`` whenever that point is reachable with
``q0 <= 1`` (:func:`max_throughput`). The sum rate
``lambda_max(mu) * log2(1 + mu)`` is then maximized over ``mu``
(:func:`max_sum_rate`); the optimum switches between a low-SNR root below
``1/(n-1)`` and a high-SNR root above it at ``rho = rho_threshold(n)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, InvariantError
from .fixedpoint import (GroupSpec, SolverOptions, network_throughput,
                         solve_heterogeneous)
from .lambertw import lambert_w0
from .model import BackoffSchedule

__all__ = [
    "ThroughputOptimum",
    "SumRateOptimum",
    "FixedQPoint",
    "FixedQOptimum",
    "HeteroOptimum",
    "max_throughput",
    "rho_threshold",
    "sum_rate_objective",
    "mu_high_root",
    "mu_low_root",
    "max_sum_rate",
    "lambert_w0",
    "approx_optimal_mu",
    "max_throughput_at_opt_mu",
    "approx_sum_rate",
    "high_snr_slope",
    "fixed_q_analysis",
    "fixed_q_optimum",
    "golden_section_max",
    "hetero_max_sum_rate",
]

LOG2E = 1.0 / math.log(2.0)
MU_XTOL = 1e-10
MAX_DOUBLINGS = 60


@dataclass(frozen=True)
class ThroughputOptimum:
    lambda_max: float
    q_star: tuple[float, ...]
    branch: str  # "achievable" (mu >= 1/(n-1)) or "saturating"
    q0_hat: float | None


@dataclass(frozen=True)
class SumRateOptimum:
    C: float
    mu_star: float
    branch: str  # "high-snr" (rho >= rho_0) or "low-snr"
    rho_0: float

    @property
    def rate(self) -> float:
        return math.log2(1.0 + self.mu_star)


@dataclass(frozen=True)
class FixedQPoint:
    p_A: float
    lambda_out: float
    sum_rate: float


@dataclass(frozen=True)
class FixedQOptimum:
    mu_star: float
    max_rate: float


@dataclass(frozen=True)
class HeteroOptimum:
    C: float
    mu_star: float
    q0_star: float
    lambda_max: float
    mu_grid: np.ndarray
    grid_values: np.ndarray
    near_optimal_cells: int
    multimodal: bool


def _check_n(n):
    if int(n) != n or n < 2:
        raise DomainError(f"need at least two nodes, got n={n!r}")


def _check_pos(**kw):
    for name, v in kw.items():
        if not (v > 0 and math.isfinite(v)):
            raise DomainError(f"{name} must be positive and finite, got {v!r}")


def _x_minus_log1p_over_x2(x: float) -> float:
    """``(x - log1p(x)) / x**2`` without cancellation for small ``x``."""
    if abs(x) < 1e-3:
        return 0.5 - x / 3.0 + x * x / 4.0 - x ** 3 / 5.0 + x ** 4 / 6.0
    return (x - math.log1p(x)) / (x * x)


def max_throughput(n: int, mu: float, rho: float,
                   multipliers: Sequence[float] | BackoffSchedule = (1.0,)) -> ThroughputOptimum:
    """Maximum network throughput over ``q0`` for backoff shape ``multipliers``.

    For ``mu >= 1/(n-1)`` the optimum is ``(mu+1)/mu * exp(-1 - mu/rho)`` at
    ``q0_hat``; below that threshold the optimum sits at ``q_i = 1`` and
    equals ``n exp(-n mu/(mu+1) - mu/rho)``.
    """
    _check_n(n)
    _check_pos(mu=mu, rho=rho)
    if isinstance(multipliers, BackoffSchedule):
        multipliers = multipliers.multipliers
    Q = np.asarray(multipliers, dtype=float)
    if Q.size == 0 or Q[0] != 1.0 or np.any(Q <= 0) or np.any(Q > 1):
        raise DomainError(f"invalid backoff multipliers {tuple(multipliers)}")
    if np.any(np.diff(Q) > 0):
        raise DomainError(f"backoff multipliers must be non-increasing, got {tuple(Q)}")

    if mu >= 1.0 / (n - 1):
        p_star = math.exp(-1.0 - mu / rho)
        K = Q.size - 1
        powers = (1.0 - p_star) ** np.arange(K + 1)
        expectation = float(p_star * np.sum(powers[:K] / Q[:K]) + powers[K] / Q[K])
        q0_hat = (mu + 1.0) / (n * mu) * expectation
        if q0_hat > 1.0 + 1e-12:
            # cannot happen for flat multipliers; a steep backoff near mu = 1/(n-1) can
            # push the required q0 above one
            raise InvariantError(
                f"optimal q0 = {q0_hat:.6g} exceeds 1 for mu={mu:g}, n={n}, Q={tuple(Q.tolist())}")
        q0_hat = min(q0_hat, 1.0)
        lam = (mu + 1.0) / mu * p_star
        return ThroughputOptimum(lam, tuple((q0_hat * Q).tolist()), "achievable", q0_hat)

    lam = n * math.exp(-n * mu / (mu + 1.0) - mu / rho)
    return ThroughputOptimum(lam, (1.0,) * Q.size, "saturating", None)


def rho_threshold(n: int) -> float:
    """Mean SNR separating the low- and high-SNR optimal threshold regimes (tends to 2)."""
    _check_n(n)
    x = 1.0 / (n - 1)
    L = math.log1p(x)
    # 1 - (n-1) ln(n/(n-1)) = x * (x - log1p(x)) / x^2
    return (1.0 + x) * L / (x * _x_minus_log1p_over_x2(x))


def sum_rate_objective(mu, n: int, rho: float):
    """``lambda_max(mu) * log2(1 + mu)``; accepts scalar or array ``mu``."""
    _check_n(n)
    mu = np.asarray(mu, dtype=float)
    high = (mu + 1.0) / mu * np.exp(-1.0 - mu / rho)
    low = n * np.exp(-n * mu / (mu + 1.0) - mu / rho)
    out = np.where(mu >= 1.0 / (n - 1), high, low) * np.log2(1.0 + mu)
    return float(out) if out.ndim == 0 else out


def _g_high(mu, rho):
    # derivative sign of the high-branch objective; strictly decreasing in mu
    L = math.log1p(mu)
    return _x_minus_log1p_over_x2(mu) - (1.0 + mu) * L / (mu * rho)


def _g_low(mu, n, rho):
    return (1.0 + mu) - ((1.0 + mu) ** 2 / rho + n) * math.log1p(mu)


def _bisect_decreasing(G, lo, hi, rtol=1e-13):
    """Root of a decreasing function with ``G(lo) >= 0 >= G(hi)``."""
    for _ in range(400):
        if hi - lo <= min(MU_XTOL, rtol * hi):
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if G(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def mu_high_root(n: int, rho: float) -> float:
    """Root of ``(mu+1)**((mu+1)/rho + 1/mu) = e`` on ``[1/(n-1), inf)``.

    Returns ``1/(n-1)`` when the objective already decreases there
    (``rho <= rho_0``).
    """
    _check_n(n)
    _check_pos(rho=rho)
    lo = 1.0 / (n - 1)
    G = lambda m: _g_high(m, rho)  # noqa: E731
    if G(lo) <= 0:
        return lo
    hi = lo
    for _ in range(MAX_DOUBLINGS):
        hi *= 2.0
        if G(hi) < 0:
            break
    else:
        raise InvariantError(f"no sign change for the high-SNR root after "
                             f"{MAX_DOUBLINGS} doublings (rho={rho:g})")
    return _bisect_decreasing(G, max(lo, hi / 2.0), hi)


def mu_low_root(n: int, rho: float) -> float:
    """Root of ``(mu+1)**((mu+1)/rho + n/(mu+1)) = e`` on ``(0, 1/(n-1)]``.

    Returns ``1/(n-1)`` when the objective still increases there
    (``rho >= rho_0``).
    """
    _check_n(n)
    _check_pos(rho=rho)
    hi = 1.0 / (n - 1)
    G = lambda m: _g_low(m, n, rho)  # noqa: E731
    if G(hi) >= 0:
        return hi
    return _bisect_decreasing(G, 1e-300, hi)


def max_sum_rate(n: int, rho: float) -> SumRateOptimum:
    """Maximum over ``mu`` and the backoff parameters of the sum rate, in bit/s/Hz."""
    _check_n(n)
    _check_pos(rho=rho)
    rho_0 = rho_threshold(n)
    if rho >= rho_0:
        mu = mu_high_root(n, rho)
        C = (mu + 1.0) / mu * math.exp(-1.0 - mu / rho) * math.log2(1.0 + mu)
        return SumRateOptimum(C, mu, "high-snr", rho_0)
    mu = mu_low_root(n, rho)
    C = n * math.exp(-n * mu / (mu + 1.0) - mu / rho) * math.log2(1.0 + mu)
    return SumRateOptimum(C, mu, "low-snr", rho_0)


def approx_optimal_mu(n: int, rho: float) -> tuple[float, float]:
    """Lambert-W approximations of the low-SNR (large ``n``) and high-SNR (large ``rho``) roots.

    The low-SNR value needs ``n >= e`` so that ``-1/n`` stays in the domain of W0.
    """
    _check_n(n)
    _check_pos(rho=rho)
    mu_low = math.expm1(-lambert_w0(-1.0 / n))
    mu_high = math.exp(lambert_w0(rho))
    return mu_low, mu_high


def max_throughput_at_opt_mu(n: int, rho: float) -> float:
    """Maximum network throughput when ``mu`` is set to the sum-rate optimal threshold."""
    opt = max_sum_rate(n, rho)
    mu = opt.mu_star
    if opt.branch == "high-snr":
        return (mu + 1.0) / mu * math.exp(-1.0 - mu / rho)
    return n * math.exp(-n * mu / (mu + 1.0) - mu / rho)


def approx_sum_rate(n: int, rho: float) -> tuple[float, float]:
    """Closed-form approximations of ``C`` for large ``rho`` and for large ``n``."""
    _check_n(n)
    _check_pos(rho=rho)
    w = lambert_w0(rho)
    mu_h = math.exp(w)
    c_high = (1.0 + math.exp(-w)) * math.exp(-1.0 - mu_h / rho) * math.log2(1.0 + mu_h)

    v = lambert_w0(-1.0 / n)
    # n (1 - e^v) written with expm1 to survive v ~ -1/n
    c_low = (-n * v * math.exp(n * math.expm1(v) - math.expm1(-v) / rho) * LOG2E)
    return c_high, c_low


def high_snr_slope(n: int, rho1: float, rho2: float) -> float:
    """Finite-difference slope of ``C`` against ``log2(rho)`` between two high-SNR points."""
    rho_0 = rho_threshold(n)
    if not (rho_0 <= rho1 < rho2):
        raise DomainError(f"need rho_0 = {rho_0:.6g} <= rho1 < rho2, got {rho1!r}, {rho2!r}")
    c1 = max_sum_rate(n, rho1).C
    c2 = max_sum_rate(n, rho2).C
    return (c2 - c1) / (math.log2(rho2) - math.log2(rho1))


def fixed_q_analysis(n: int, q: float, mu: float, rho: float) -> FixedQPoint:
    """Steady state, throughput and sum rate when every node always transmits with ``q``."""
    _check_n(n)
    _check_pos(mu=mu, rho=rho)
    if not (0.0 < q <= 1.0):
        raise DomainError(f"q must lie in (0, 1], got {q!r}")
    p = math.exp(-mu / rho - n * q * mu / (mu + 1.0))
    lam = n * q * p
    return FixedQPoint(p, lam, lam * math.log2(1.0 + mu))


def fixed_q_optimum(n: int, q: float) -> FixedQOptimum:
    """Best threshold and sum rate for a constant ``q`` in the ``rho -> inf`` limit.

    Requires ``n q >= e``; below that ``-1/(nq)`` leaves the domain of W0.
    """
    _check_n(n)
    if not (0.0 < q <= 1.0):
        raise DomainError(f"q must lie in (0, 1], got {q!r}")
    nq = n * q
    if nq < math.e:
        raise DomainError(f"fixed-q optimum needs n*q >= e, got n*q = {nq:.6g}")
    w = lambert_w0(-1.0 / nq)
    mu = math.expm1(-w)
    rate = nq * math.exp(nq * math.expm1(w)) * (-w) * LOG2E
    return FixedQOptimum(mu, rate)


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(f, a: float, b: float, tol: float):
    """Maximize a unimodal ``f`` on ``[a, b]``; returns ``(x, f(x))`` with the best point seen."""
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def _best_throughput(spec, mu, multipliers, options, q0_tol):
    def lam(q0):
        sched = BackoffSchedule(q0, multipliers, "custom")
        st = solve_heterogeneous(spec, mu, sched, options)
        return network_throughput(spec, st.p, sched)

    q0, val = golden_section_max(lam, 1e-6, 1.0, q0_tol)
    edge = lam(1.0)
    return (1.0, edge) if edge >= val else (q0, val)


def hetero_max_sum_rate(spec: GroupSpec, multipliers: Sequence[float] = (1.0,),
                        mode: str = "approx", mu_bounds=(1e-4, 1e3), mu_points: int = 400,
                        q0_tol: float = 1e-5, mu_rtol: float = 1e-6) -> HeteroOptimum:
    """Numerically maximize the sum rate of a multi-group network over ``mu`` and ``q0``.

    No closed form exists once groups have different SNRs. The outer search
    evaluates a log-spaced ``mu`` grid, each point holding the best ``q0``
    from a golden-section search, then refines the best cell with a
    golden-section search in ``log mu``. Nothing guarantees that the
    objective is unimodal, so the result also reports how many grid cells
    come within 1e-3 of the best value and whether they form more than one
    run (``multimodal``). Ties go to the smallest ``mu``.
    """
    options = SolverOptions(mode=mode)
    multipliers = tuple(float(m) for m in multipliers)
    grid = np.logspace(math.log10(mu_bounds[0]), math.log10(mu_bounds[1]), mu_points)

    def rate(mu):
        _, lam = _best_throughput(spec, mu, multipliers, options, q0_tol)
        return lam * math.log2(1.0 + mu)

    values = np.array([rate(m) for m in grid])
    i = int(np.argmax(values))
    near = values >= values[i] * (1.0 - 1e-3)
    runs = int(np.count_nonzero(np.diff(near.astype(int)) == 1) + near[0])

    lo = math.log(grid[max(i - 1, 0)])
    hi = math.log(grid[min(i + 1, grid.size - 1)])
    log_mu, best = golden_section_max(lambda x: rate(math.exp(x)), lo, hi, mu_rtol)
    mu_star = math.exp(log_mu)
    if best < values[i]:
        mu_star, best = float(grid[i]), float(values[i])
    q0_star, lam = _best_throughput(spec, mu_star, multipliers, options, q0_tol)
    return HeteroOptimum(best, mu_star, q0_star, lam, grid, values,
                         int(np.count_nonzero(near)), runs > 1)
