"""Core types and elementary closed forms for saturated slotted Aloha with capture.

All SNR values are linear inside this package. Use :func:`db_to_linear` at
the boundary when a value is given in decibels.

The head-of-line (HOL) packet of every node is a Markov chain over the
states ``T`` (fresh packet) and ``0..K`` (phase = number of failed
transmissions, capped at the cutoff phase ``K``). A packet in state ``T``
or ``i`` transmits with probability ``q0`` or ``q_i`` respectively.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DomainError

__all__ = [
    "BackoffSchedule",
    "NetworkConfig",
    "SteadyState",
    "ThroughputPoint",
    "HolDistribution",
    "db_to_linear",
    "linear_to_db",
    "rate_to_threshold",
    "threshold_to_rate",
    "capture_prob",
    "attempt_rate",
    "hol_distribution",
    "throughput_at",
]


def db_to_linear(db):
    out = 10.0 ** (np.asarray(db, dtype=float) / 10.0)
    return float(out) if out.ndim == 0 else out


def linear_to_db(x):
    return 10.0 * np.log10(x)


@dataclass(frozen=True)
class BackoffSchedule:
    """Transmission probabilities ``q_i = q0 * Q_i`` for phases ``i = 0..K``.

    Use the :meth:`constant`, :meth:`beb` and :meth:`custom` constructors
    rather than building the multiplier tuple by hand.

    The constructor only checks that every ``q_i`` is a probability and that
    ``Q_0 = 1``. Monotonicity (``Q_i <= Q_{i-1}``) is what the fixed-point
    solvers need; they check :attr:`is_monotone` and refuse otherwise, while
    the simulator happily runs any schedule.
    """

    q0: float
    multipliers: tuple[float, ...] = (1.0,)
    kind: str = "constant"

    def __post_init__(self):
        q0 = float(self.q0)
        if not (0.0 < q0 <= 1.0):
            raise DomainError(f"q0 must lie in (0, 1], got {self.q0!r}")
        mult = tuple(float(m) for m in self.multipliers)
        if not mult:
            raise DomainError("at least one multiplier (Q_0) is required")
        if mult[0] != 1.0:
            raise DomainError(f"Q_0 must equal 1, got {mult[0]!r}")
        if any(not (0.0 < m <= 1.0) for m in mult):
            raise DomainError(f"multipliers must lie in (0, 1], got {mult!r}")
        if self.kind not in ("constant", "binary-exponential", "custom"):
            raise DomainError(f"unknown schedule kind {self.kind!r}")
        object.__setattr__(self, "q0", q0)
        object.__setattr__(self, "multipliers", mult)

    @classmethod
    def constant(cls, q0: float, K: int = 0) -> "BackoffSchedule":
        if K < 0:
            raise DomainError(f"cutoff phase K must be non-negative, got {K}")
        return cls(q0, (1.0,) * (K + 1), "constant")

    @classmethod
    def beb(cls, q0: float, K: int) -> "BackoffSchedule":
        """Binary exponential backoff, ``Q_i = 2**-i``."""
        if K < 0:
            raise DomainError(f"cutoff phase K must be non-negative, got {K}")
        return cls(q0, tuple(2.0 ** -i for i in range(K + 1)), "binary-exponential")

    @classmethod
    def custom(cls, q0: float, multipliers: Sequence[float]) -> "BackoffSchedule":
        return cls(q0, tuple(multipliers), "custom")

    @property
    def K(self) -> int:
        return len(self.multipliers) - 1

    @property
    def q(self) -> np.ndarray:
        """Effective per-phase transmission probabilities ``q_0..q_K``."""
        return self.q0 * np.asarray(self.multipliers)

    @property
    def is_monotone(self) -> bool:
        m = self.multipliers
        return all(m[i] <= m[i - 1] for i in range(1, len(m)))

    @property
    def is_flat(self) -> bool:
        """True when every phase uses the same probability (``K = 0`` or ``Q_i = 1``)."""
        return all(m == 1.0 for m in self.multipliers)

    def with_q0(self, q0: float) -> "BackoffSchedule":
        return BackoffSchedule(q0, self.multipliers, self.kind)


@dataclass(frozen=True)
class NetworkConfig:
    """A homogeneous network: ``n`` nodes, mean received SNR ``rho``, SINR threshold ``mu``."""

    n: int
    rho: float
    mu: float
    schedule: BackoffSchedule = field(default_factory=lambda: BackoffSchedule(1.0))

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"node count must be a positive integer, got {self.n!r}")
        if not (math.isfinite(self.rho) and self.rho > 0):
            raise DomainError(f"rho must be positive and finite, got {self.rho!r}")
        if not (math.isfinite(self.mu) and self.mu > 0):
            raise DomainError(f"mu must be positive and finite, got {self.mu!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "rho", float(self.rho))
        object.__setattr__(self, "mu", float(self.mu))

    @classmethod
    def from_rate(cls, n, rho, rate, schedule=None) -> "NetworkConfig":
        kw = {} if schedule is None else {"schedule": schedule}
        return cls(n, rho, rate_to_threshold(rate), **kw)

    @property
    def rate(self) -> float:
        return threshold_to_rate(self.mu)


class HolDistribution(NamedTuple):
    pi_T: float
    pi: np.ndarray


@dataclass(frozen=True)
class SteadyState:
    """Solved steady-state point and the HOL distribution evaluated there."""

    p: float
    pi_T: float
    pi: np.ndarray
    mode: str
    residual: float
    iterations: int = 0

    @property
    def attempt_rate(self) -> float:
        """Probability that a HOL packet transmits in a given slot (``pi_T / p``)."""
        return self.pi_T / self.p


@dataclass(frozen=True)
class ThroughputPoint:
    lambda_out: float
    sum_rate: float


def rate_to_threshold(rate):
    """SINR threshold needed to carry ``rate`` bit/s/Hz: ``2**R - 1``."""
    if np.any(np.asarray(rate) < 0):
        raise DomainError(f"rate must be non-negative, got {rate!r}")
    out = np.exp2(np.asarray(rate, dtype=float)) - 1.0
    return float(out) if out.ndim == 0 else out


def threshold_to_rate(mu):
    if np.any(np.asarray(mu) < 0):
        raise DomainError(f"SINR threshold must be non-negative, got {mu!r}")
    out = np.log2(1.0 + np.asarray(mu, dtype=float))
    return float(out) if out.ndim == 0 else out


def capture_prob(i: int, mu: float, rho: float) -> float:
    """Probability that a packet clears threshold ``mu`` against ``i`` interferers.

    Desired and interfering powers are independent exponentials with mean
    ``rho`` (Rayleigh fading, noise normalised to one), which gives
    ``exp(-mu/rho) / (1 + mu)**i``.
    """
    if i < 0:
        raise DomainError(f"interferer count must be non-negative, got {i}")
    if not rho > 0:
        raise DomainError(f"rho must be positive, got {rho!r}")
    if mu < 0:
        raise DomainError(f"mu must be non-negative, got {mu!r}")
    return math.exp(-mu / rho - i * math.log1p(mu))


def _check_p(p):
    if not (0.0 < p <= 1.0):
        raise DomainError(f"success probability must lie in (0, 1], got {p!r}")


def _service_denominator(p: float, q: np.ndarray) -> float:
    # sum_{i<K} (1-p)^i / q_i + (1-p)^K / (p q_K)
    K = len(q) - 1
    powers = (1.0 - p) ** np.arange(K + 1)
    return float(np.sum(powers[:K] / q[:K]) + powers[K] / (p * q[K]))


def attempt_rate(p: float, schedule: BackoffSchedule) -> float:
    """Per-slot transmission probability of a HOL packet at success probability ``p``.

    Equals ``pi_T / p``, i.e. ``1 / E[1/q_X]`` with ``X`` geometric on
    ``{0, 1, ...}`` with parameter ``p`` and phases beyond ``K`` clamped.
    """
    _check_p(p)
    q = schedule.q
    K = schedule.K
    powers = (1.0 - p) ** np.arange(K + 1)
    g = float(p * np.sum(powers[:K] / q[:K]) + powers[K] / q[K])
    return 1.0 / g


def hol_distribution(p: float, schedule: BackoffSchedule) -> HolDistribution:
    """Stationary distribution of the HOL chain for a fixed success probability ``p``.

    Returns ``pi_T`` (the per-node service rate) and ``pi[0..K]``. For
    ``K = 0`` the states 0 and K coincide and ``pi_0 = 1 - p*q0``.
    """
    _check_p(p)
    q = schedule.q
    K = schedule.K
    pi_T = 1.0 / _service_denominator(p, q)
    if K == 0:
        pi = np.array([(1.0 - p * q[0]) / (p * q[0]) * pi_T])
    else:
        i = np.arange(K + 1)
        pi = (1.0 - p) ** i / q * pi_T
        pi[0] = (1.0 - q[0]) / q[0] * pi_T
        pi[K] /= p
    return HolDistribution(pi_T, pi)


def throughput_at(p_A: float, mu: float, rho: float) -> ThroughputPoint:
    """Network throughput and sum rate at steady-state point ``p_A``.

    ``lambda_out = (mu + 1) * (-p_A ln p_A / mu - p_A / rho)``, which is
    ``n * pi_T`` rewritten through the large-``n`` fixed-point equation, so
    ``n`` and the backoff schedule drop out. Only ``p_A`` in
    ``(0, exp(-mu/rho)]`` is attainable.
    """
    if not (mu > 0 and rho > 0):
        raise DomainError(f"mu and rho must be positive, got mu={mu!r}, rho={rho!r}")
    upper = math.exp(-mu / rho)
    # a converged fixed point may overshoot the endpoint by the solver tolerance
    if not (0.0 < p_A <= upper * (1.0 + 1e-9)):
        raise DomainError(f"p_A must lie in (0, exp(-mu/rho)] = (0, {upper:.6g}], got {p_A!r}")
    p_A = min(p_A, upper)
    lam = max((mu + 1.0) * (-p_A * math.log(p_A) / mu - p_A / rho), 0.0)
    return ThroughputPoint(lam, lam * math.log2(1.0 + mu))
