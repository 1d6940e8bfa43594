"""Steady-state point of a saturated network: the self-consistency equation for ``p``.

A HOL packet succeeds with probability ``p``; in turn ``p`` is set by how
often the *other* nodes transmit, which depends on ``p`` through the HOL
chain. The homogeneous equation is

    approx:  p = exp(-mu/rho - n*mu/(mu+1) * tau(p))
    exact:   p = exp(-mu/rho) * (1 - mu/(mu+1) * tau(p)) ** (n-1)

with ``tau(p) = pi_T / p`` the per-slot attempt probability. ``approx``
replaces ``(1-x)**(n-1)`` by ``exp(-n x)``; it is what the closed-form
optimizers use. ``exact`` matches the simulated physics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit

from .errors import ConvergenceError, DomainError, InvariantError, PreconditionError
from .model import BackoffSchedule, NetworkConfig, SteadyState, hol_distribution

__all__ = [
    "GroupSpec",
    "SolverOptions",
    "HeteroSteadyState",
    "fixed_point_map",
    "solve_homogeneous",
    "closed_form_k0",
    "solve_heterogeneous",
    "hetero_fixed_point_map",
    "group_node_throughput",
    "network_throughput",
]

EPS_BRACKET = 1e-12
# floor for roots below EPS_BRACKET (extreme contention); still a normal double
EPS_FLOOR = 1e-300
MODES = ("exact", "approx")


@dataclass(frozen=True)
class SolverOptions:
    mode: str = "approx"
    tolerance: float = 1e-10
    max_iterations: int = 200
    damping: float = 0.5
    # damped sweeps for the heterogeneous system; bisection uses max_iterations
    max_sweeps: int = 20000

    def __post_init__(self):
        if self.mode not in MODES:
            raise DomainError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.tolerance > 0:
            raise DomainError(f"tolerance must be positive, got {self.tolerance!r}")
        if not (0.0 < self.damping <= 1.0):
            raise DomainError(f"damping must lie in (0, 1], got {self.damping!r}")
        if self.max_iterations < 1 or self.max_sweeps < 1:
            raise DomainError("iteration limits must be positive")


@dataclass(frozen=True)
class GroupSpec:
    """Nodes split into groups of ``n_m`` nodes sharing mean received SNR ``rho_m``."""

    groups: tuple[tuple[int, float], ...]

    def __post_init__(self):
        groups = tuple((int(n), float(r)) for n, r in self.groups)
        if not groups:
            raise DomainError("at least one group is required")
        for n, r in groups:
            if n < 1:
                raise DomainError(f"group sizes must be >= 1, got {n}")
            if not (math.isfinite(r) and r > 0):
                raise DomainError(f"group SNRs must be positive and finite, got {r}")
        object.__setattr__(self, "groups", groups)

    @classmethod
    def two_groups(cls, n1, n2, rho_mean, ratio) -> "GroupSpec":
        """Two groups with SNR ratio ``rho1/rho2 = ratio`` and node-weighted mean ``rho_mean``."""
        rho2 = rho_mean * (n1 + n2) / (n1 * ratio + n2)
        return cls(((n1, ratio * rho2), (n2, rho2)))

    @property
    def M(self) -> int:
        return len(self.groups)

    @property
    def sizes(self) -> np.ndarray:
        return np.array([g[0] for g in self.groups])

    @property
    def rhos(self) -> np.ndarray:
        return np.array([g[1] for g in self.groups])

    @property
    def n(self) -> int:
        return int(self.sizes.sum())


@dataclass(frozen=True)
class HeteroSteadyState:
    p: np.ndarray
    pi_T: np.ndarray
    mode: str
    residual: float
    iterations: int
    damping: float


def _inverse_q(schedule: BackoffSchedule) -> tuple[float, ...]:
    return tuple(1.0 / qi for qi in schedule.q.tolist())


def _attempt(p: float, inv_q: tuple[float, ...]) -> float:
    # 1 / (sum_{i<K} p (1-p)^i / q_i + (1-p)^K / q_K); plain floats, K is small
    K = len(inv_q) - 1
    s = 1.0 - p
    w = 1.0
    g = 0.0
    for i in range(K):
        g += p * w * inv_q[i]
        w *= s
    return 1.0 / (g + w * inv_q[K])


def fixed_point_map(config: NetworkConfig, mode: str = "approx"):
    """Return ``h`` such that the steady-state point solves ``p = h(p)``.

    ``h`` is non-increasing on ``(0, 1]`` whenever the schedule is monotone.
    """
    if mode not in MODES:
        raise DomainError(f"mode must be one of {MODES}, got {mode!r}")
    inv_q = _inverse_q(config.schedule)
    n, mu, rho = config.n, config.mu, config.rho
    a = mu / (mu + 1.0)
    noise = math.exp(-mu / rho)

    if mode == "approx":
        def h(p):
            return math.exp(-mu / rho - n * a * _attempt(p, inv_q))
    else:
        def h(p):
            return noise * (1.0 - a * _attempt(p, inv_q)) ** (n - 1)
    return h


def _bisect_root(f, lo, hi, tol, max_iterations):
    flo, fhi = f(lo), f(hi)
    if flo > 0 or fhi < 0:
        raise InvariantError(
            f"no sign change on [{lo:g}, {hi:g}]: f(lo)={flo:.3e}, f(hi)={fhi:.3e}")
    for it in range(1, max_iterations + 1):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        # f(p) = p - h(p) has slope >= 1, so |f(mid)| <= tol also bounds |mid - root|
        if abs(fm) <= tol:
            return mid, abs(fm), it
        if fm < 0:
            lo = mid
        else:
            hi = mid
    raise ConvergenceError(f"bisection did not converge in {max_iterations} iterations", abs(fm))


def _bisect_log_root(f, lo, hi, rtol, max_iterations):
    # geometric bisection with a relative residual test, for roots far below 1e-12
    if f(lo) > 0:
        raise InvariantError(f"root lies below {lo:g}; success probability underflows")
    for it in range(1, max_iterations + 1):
        mid = math.sqrt(lo) * math.sqrt(hi)  # lo * hi would underflow
        fm = f(mid)
        if abs(fm) <= rtol * mid:
            return mid, abs(fm), it
        if fm < 0:
            lo = mid
        else:
            hi = mid
    raise ConvergenceError(f"bisection did not converge in {max_iterations} iterations", abs(fm))


def solve_homogeneous(config: NetworkConfig, options: SolverOptions | None = None,
                      bracket: tuple[float, float] | None = None) -> SteadyState:
    """Unique non-zero root of ``p = h(p)`` by bisection.

    ``h`` is non-increasing for a monotone schedule, so ``p - h(p)`` is
    strictly increasing and ``[1e-12, 1]`` holds exactly one sign change.
    A narrower ``bracket`` may be supplied; it must straddle the root.

    Under extreme contention the root can sit below ``1e-12``. The search
    then continues geometrically on ``[1e-300, 1e-12]`` and the residual is
    held to ``tolerance`` relative to ``p`` instead of absolutely.
    """
    options = options or SolverOptions()
    if not config.schedule.is_monotone:
        raise PreconditionError(
            f"backoff multipliers must be non-increasing, got {config.schedule.multipliers}")
    h = fixed_point_map(config, options.mode)

    def f(x):
        return x - h(x)

    if bracket is None and f(EPS_BRACKET) > 0:
        p, residual, it = _bisect_log_root(f, EPS_FLOOR, EPS_BRACKET, options.tolerance,
                                           options.max_iterations)
    else:
        lo, hi = bracket if bracket is not None else (EPS_BRACKET, 1.0)
        p, residual, it = _bisect_root(f, lo, hi, options.tolerance, options.max_iterations)
    dist = hol_distribution(p, config.schedule)
    return SteadyState(p, dist.pi_T, dist.pi, options.mode, residual, it)


def closed_form_k0(config: NetworkConfig) -> float:
    """``exp(-mu/rho - n mu q0/(mu+1))``: the approx-mode root when every phase uses ``q0``."""
    if not config.schedule.is_flat:
        raise PreconditionError("closed form needs K = 0 or constant multipliers")
    mu = config.mu
    return math.exp(-mu / config.rho - config.n * mu * config.schedule.q0 / (mu + 1.0))


def hetero_fixed_point_map(spec: GroupSpec, mu: float, schedule: BackoffSchedule,
                           mode: str = "approx"):
    """Vector map ``h`` whose fixed point gives the per-group success probabilities."""
    if mode not in MODES:
        raise DomainError(f"mode must be one of {MODES}, got {mode!r}")
    if not mu > 0:
        raise DomainError(f"mu must be positive, got {mu!r}")
    inv_q = _inverse_q(schedule)
    sizes = spec.sizes.astype(float)
    rhos = spec.rhos
    # coupling[l, m] = mu / (mu + rho_l/rho_m): mean interference weight of a group-m
    # transmitter on a group-l packet
    coupling = mu / (mu + rhos[:, None] / rhos[None, :])
    noise = -mu / rhos
    # own group contributes n_l - 1 interferers in the exact product form
    exponents = np.broadcast_to(sizes, coupling.shape) - np.eye(spec.M)

    def h(p):
        tau = np.array([_attempt(float(x), inv_q) for x in p])
        if mode == "approx":
            return np.exp(noise - coupling @ (sizes * tau))
        return np.exp(noise + np.sum(exponents * np.log1p(-coupling * tau[None, :]), axis=1))
    return h


@njit(cache=True)
def _damped_sweeps(p, sizes, rhos, inv_q, mu, exact, tol, damping, max_sweeps):
    # Damped synchronous iteration p <- (1-d) p + d h(p), in place.
    # Returns (sweeps, residual, status): 0 converged, 1 out of sweeps, 2 residual rising.
    M = p.size
    K = inv_q.size - 1
    tau = np.empty(M)
    hp = np.empty(M)
    prev = np.inf
    rising = 0
    residual = np.inf
    for it in range(1, max_sweeps + 1):
        for m in range(M):
            s = 1.0 - p[m]
            w = 1.0
            g = 0.0
            for i in range(K):
                g += p[m] * w * inv_q[i]
                w *= s
            tau[m] = 1.0 / (g + w * inv_q[K])
        residual = 0.0
        for l in range(M):
            acc = -mu / rhos[l]
            for m in range(M):
                c = mu / (mu + rhos[l] / rhos[m])
                if exact:
                    k = sizes[m] - 1.0 if m == l else sizes[m]
                    acc += k * np.log1p(-c * tau[m])
                else:
                    acc -= sizes[m] * c * tau[m]
            hp[l] = np.exp(acc)
            residual = max(residual, abs(p[l] - hp[l]))
        if residual <= tol:
            return it, residual, 0
        rising = rising + 1 if residual > prev else 0
        if rising >= 5:
            return it, residual, 2
        prev = residual
        for l in range(M):
            p[l] = (1.0 - damping) * p[l] + damping * hp[l]
    return max_sweeps, residual, 1


def solve_heterogeneous(spec: GroupSpec, mu: float, schedule: BackoffSchedule,
                        options: SolverOptions | None = None,
                        initial: Sequence[float] | None = None) -> HeteroSteadyState:
    """Jointly solve the ``M`` coupled fixed-point equations by damped iteration.

    Starts from all ones with damping 0.5 and restarts with damping 0.1 if the
    residual keeps growing or the sweep budget runs out. Uniqueness of the
    joint root is not established for ``M >= 2``; the returned residual shows
    how well the point solves the system.
    """
    options = options or SolverOptions()
    if not schedule.is_monotone:
        raise PreconditionError(
            f"backoff multipliers must be non-increasing, got {schedule.multipliers}")
    if not (mu > 0 and math.isfinite(mu)):
        raise DomainError(f"mu must be positive and finite, got {mu!r}")
    start = np.ones(spec.M) if initial is None else np.asarray(initial, dtype=float)
    if start.shape != (spec.M,) or np.any(start <= 0) or np.any(start > 1):
        raise DomainError("initial point must hold one probability in (0, 1] per group")

    inv_q = np.asarray(_inverse_q(schedule))
    sizes = spec.sizes.astype(float)
    rhos = spec.rhos
    exact = options.mode == "exact"
    dampings = [options.damping] + ([0.1] if options.damping > 0.1 else [])
    total = 0
    residual = math.inf
    for d in dampings:
        p = start.copy()
        sweeps, residual, status = _damped_sweeps(p, sizes, rhos, inv_q, float(mu), exact,
                                                  options.tolerance, d, options.max_sweeps)
        total += sweeps
        if status == 0:
            pi_T = np.array([x * _attempt(x, tuple(inv_q)) for x in p.tolist()])
            return HeteroSteadyState(p, pi_T, options.mode, residual, total, d)
    raise ConvergenceError(f"heterogeneous iteration did not converge after {total} sweeps",
                           residual)


def group_node_throughput(p: float, schedule: BackoffSchedule) -> float:
    """Throughput of one node whose HOL packets succeed with probability ``p``.

    This is the node's service rate ``pi_T``, computed as ``p * tau(p)``.
    """
    if not (0.0 < p <= 1.0):
        raise DomainError(f"p must lie in (0, 1], got {p!r}")
    return p * _attempt(p, _inverse_q(schedule))


def network_throughput(spec: GroupSpec, p: Sequence[float], schedule: BackoffSchedule) -> float:
    p = np.asarray(p, dtype=float)
    if p.shape != (spec.M,):
        raise DomainError(f"expected {spec.M} success probabilities, got shape {p.shape}")
    return float(sum(n * group_node_throughput(x, schedule)
                     for n, x in zip(spec.sizes.tolist(), p.tolist())))
