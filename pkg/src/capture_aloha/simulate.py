"""Monte Carlo simulation of a saturated slotted Aloha network with SINR capture.

Every node always holds a packet. In each slot:

1. each HOL packet transmits with the probability of its state (``q0`` in
   state T, ``q_i`` in phase ``i``);
2. every transmitter's received power is ``rho_k * |h_k|^2`` with
   ``|h_k|^2 ~ Exp(1)`` drawn fresh per slot (Rayleigh block fading, noise
   power 1);
3. packet ``j`` is decoded iff ``P_j / (sum of other transmitters' P + 1) >= mu``,
   independently of the others, so several packets can be decoded in one
   slot;
4. a decoded packet is replaced by a fresh one in state T; a failed one
   moves from T or 0 to phase ``min(K, 1)`` and from phase ``i`` to
   ``min(K, i+1)``; a silent packet moves T -> 0 or stays put.

Random numbers come from numpy's Philox generator keyed through
``SeedSequence(seed, spawn_key=(stream,))``. Replication ``r`` uses stream
``r``, so replications use disjoint keys. The slot loop itself is compiled
with numba.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np
from numba import njit

from .errors import DomainError
from .fixedpoint import GroupSpec
from .model import BackoffSchedule, NetworkConfig

__all__ = ["SimConfig", "GroupStats", "SimReport", "decode_mask", "make_generator", "run",
           "replicate"]

_Z95 = NormalDist().inv_cdf(0.975)


@dataclass(frozen=True)
class SimConfig:
    slots: int = 100_000
    warmup: int = 1_000
    seed: int = 0
    replications: int = 1
    block: int = 4096

    def __post_init__(self):
        if not (self.slots > self.warmup >= 0):
            raise DomainError(f"need slots > warmup >= 0, got slots={self.slots}, "
                              f"warmup={self.warmup}")
        if self.replications < 1:
            raise DomainError(f"replications must be >= 1, got {self.replications}")
        if self.seed < 0:
            raise DomainError("seed must be a non-negative integer")
        if self.block < 1:
            raise DomainError("block must be positive")

    @property
    def measured(self) -> int:
        return self.slots - self.warmup


@dataclass(frozen=True)
class GroupStats:
    nodes: int
    rho: float
    attempts: int
    successes: int
    slots: int

    @property
    def p_hat(self) -> float:
        return self.successes / self.attempts if self.attempts else math.nan

    @property
    def node_throughput(self) -> float:
        return self.successes / (self.nodes * self.slots)


@dataclass(frozen=True)
class SimReport:
    """Measured quantities over the slots after warmup.

    ``state_attempts[0]`` / ``state_successes[0]`` count state T; index
    ``i + 1`` counts phase ``i``. ``half_p_hat`` holds the success ratio of
    the first and second half of the measured window, a cheap stationarity
    check. ``ci_halfwidth`` is only filled for aggregated reports.
    """

    n: int
    mu: float
    slots: int
    attempts: int
    successes: int
    decode_histogram: np.ndarray
    per_group: tuple[GroupStats, ...]
    state_attempts: np.ndarray
    state_successes: np.ndarray
    half_p_hat: tuple[float, float]
    replications: int = 1
    ci_halfwidth: dict[str, float] | None = None
    runs: tuple["SimReport", ...] = field(default=(), repr=False)

    @property
    def p_hat(self) -> float:
        return self.successes / self.attempts if self.attempts else math.nan

    @property
    def throughput(self) -> float:
        return self.successes / self.slots

    @property
    def sum_rate(self) -> float:
        return self.throughput * math.log2(1.0 + self.mu)

    @property
    def state_p_hat(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return self.state_successes / self.state_attempts


def decode_mask(powers, mu):
    """Which transmitters in one slot clear the SINR threshold.

    ``powers`` holds the received powers of the transmitting nodes (noise
    power is 1). Mirrors the rule used inside the compiled slot loop.
    """
    powers = np.asarray(powers, dtype=float)
    interference = powers.sum() - powers
    return powers >= mu * (interference + 1.0)


def make_generator(seed: int, stream: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(stream,))))


@njit(cache=True, nogil=True)
def _run_block(state, q, rho, group, mu, u_tx, u_fade, first_slot, warmup, midpoint,
               attempts, successes, hist, st_att, st_succ):
    n = state.size
    K = q.size - 1
    tx = np.zeros(n, dtype=np.bool_)
    power = np.zeros(n)
    for t in range(u_tx.shape[0]):
        slot = first_slot + t
        total = 0.0
        for k in range(n):
            s = state[k]
            prob = q[0] if s < 0 else q[s]
            if u_tx[t, k] < prob:
                tx[k] = True
                # 1 - u lies in (0, 1], so the log is finite
                power[k] = -rho[k] * np.log(1.0 - u_fade[t, k])
                total += power[k]
            else:
                tx[k] = False
        measure = slot >= warmup
        half = 0 if slot < midpoint else 1
        decoded = 0
        for k in range(n):
            s = state[k]
            if tx[k]:
                ok = power[k] >= mu * (total - power[k] + 1.0)
                if measure:
                    attempts[half, group[k]] += 1
                    st_att[s + 1] += 1
                if ok:
                    decoded += 1
                    if measure:
                        successes[half, group[k]] += 1
                        st_succ[s + 1] += 1
                    state[k] = -1
                elif s <= 0:
                    state[k] = min(K, 1)
                else:
                    state[k] = min(K, s + 1)
            elif s < 0:
                state[k] = 0
        if measure:
            hist[decoded] += 1


def _nodes(config, mu, schedule):
    if isinstance(config, NetworkConfig):
        return (config.mu, config.schedule, np.full(config.n, config.rho),
                np.zeros(config.n, dtype=np.int64), ((config.n, config.rho),))
    if isinstance(config, GroupSpec):
        if mu is None or schedule is None:
            raise DomainError("a GroupSpec needs mu and schedule")
        if not (mu > 0 and math.isfinite(mu)):
            raise DomainError(f"mu must be positive and finite, got {mu!r}")
        rho = np.repeat(config.rhos, config.sizes)
        group = np.repeat(np.arange(config.M), config.sizes).astype(np.int64)
        return float(mu), schedule, rho, group, config.groups
    raise DomainError(f"cannot simulate a {type(config).__name__}")


def run(config: NetworkConfig | GroupSpec, sim: SimConfig, *, mu: float | None = None,
        schedule: BackoffSchedule | None = None, stream: int = 0) -> SimReport:
    """Simulate one replication on random stream ``stream``.

    ``config`` is either a homogeneous :class:`NetworkConfig` or a
    :class:`GroupSpec`, in which case ``mu`` and ``schedule`` are required.
    """
    mu, schedule, rho, group, groups = _nodes(config, mu, schedule)
    n = rho.size
    G = len(groups)
    K = schedule.K
    q = schedule.q

    rng = make_generator(sim.seed, stream)
    state = np.full(n, -1, dtype=np.int64)
    attempts = np.zeros((2, G), dtype=np.int64)
    successes = np.zeros((2, G), dtype=np.int64)
    hist = np.zeros(n + 1, dtype=np.int64)
    st_att = np.zeros(K + 2, dtype=np.int64)
    st_succ = np.zeros(K + 2, dtype=np.int64)
    midpoint = sim.warmup + sim.measured // 2

    done = 0
    while done < sim.slots:
        b = min(sim.block, sim.slots - done)
        u_tx = rng.random((b, n))
        u_fade = rng.random((b, n))
        _run_block(state, q, rho, group, mu, u_tx, u_fade, done, sim.warmup, midpoint,
                   attempts, successes, hist, st_att, st_succ)
        done += b

    per_group = tuple(
        GroupStats(nm, rm, int(attempts[:, m].sum()), int(successes[:, m].sum()), sim.measured)
        for m, (nm, rm) in enumerate(groups))
    with np.errstate(invalid="ignore", divide="ignore"):
        halves = successes.sum(axis=1) / attempts.sum(axis=1)
    return SimReport(n, mu, sim.measured, int(attempts.sum()), int(successes.sum()), hist,
                     per_group, st_att, st_succ, (float(halves[0]), float(halves[1])))


def _halfwidth(values):
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return math.nan
    return float(_Z95 * values.std(ddof=1) / math.sqrt(values.size))


def replicate(config: NetworkConfig | GroupSpec, sim: SimConfig, *, mu: float | None = None,
              schedule: BackoffSchedule | None = None) -> SimReport:
    """Run ``sim.replications`` independent replications and pool them.

    Counts are summed, so the pooled ``p_hat`` is the attempt-weighted mean
    of the per-replication values. ``ci_halfwidth`` gives 95% normal
    half-widths of ``p_hat``, ``throughput`` and ``sum_rate`` across
    replications (NaN with a single replication).
    """
    runs = tuple(run(config, sim, mu=mu, schedule=schedule, stream=r)
                 for r in range(sim.replications))
    first = runs[0]
    per_group = tuple(
        GroupStats(g.nodes, g.rho, sum(r.per_group[m].attempts for r in runs),
                   sum(r.per_group[m].successes for r in runs), g.slots * len(runs))
        for m, g in enumerate(first.per_group))
    ci = {
        "p_hat": _halfwidth([r.p_hat for r in runs]),
        "throughput": _halfwidth([r.throughput for r in runs]),
        "sum_rate": _halfwidth([r.sum_rate for r in runs]),
    }
    halves = tuple(float(np.mean([r.half_p_hat[h] for r in runs])) for h in (0, 1))
    return SimReport(
        first.n, first.mu, sum(r.slots for r in runs), sum(r.attempts for r in runs),
        sum(r.successes for r in runs), sum(r.decode_histogram for r in runs), per_group,
        sum(r.state_attempts for r in runs), sum(r.state_successes for r in runs), halves,
        len(runs), ci, runs)
