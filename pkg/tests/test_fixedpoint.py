import math
import time

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy.optimize import brentq

from capture_aloha import (BackoffSchedule, ConvergenceError, DomainError, GroupSpec,
                           InvariantError, NetworkConfig, PreconditionError, SolverOptions,
                           closed_form_k0, fixed_point_map, group_node_throughput,
                           hetero_fixed_point_map, max_throughput, network_throughput,
                           solve_heterogeneous, solve_homogeneous)
from conftest import exact_k0_root

APPROX = SolverOptions(mode="approx")
EXACT = SolverOptions(mode="exact")


def reference_h(n, mu, rho, q, mode):
    """Independent numpy form of the self-consistency map."""
    q = np.asarray(q, dtype=float)
    K = q.size - 1

    def h(p):
        w = (1.0 - p) ** np.arange(K + 1)
        tau = 1.0 / (p * np.sum(w[:K] / q[:K]) + w[K] / q[K])
        a = mu / (mu + 1.0)
        if mode == "approx":
            return math.exp(-mu / rho - n * a * tau)
        return math.exp(-mu / rho) * (1.0 - a * tau) ** (n - 1)
    return h


@st.composite
def configs(draw, n_min=2, n_max=500):
    n = draw(st.integers(n_min, n_max))
    mu = draw(st.floats(1e-3, 20))
    rho = draw(st.floats(max(1e-2, mu / 50), 1e3))
    K = draw(st.integers(0, 6))
    q0 = draw(st.floats(1e-4, 1.0))
    schedule = BackoffSchedule.beb(q0, K) if draw(st.booleans()) else BackoffSchedule.constant(q0, K)
    return NetworkConfig(n, rho, mu, schedule)


class TestHomogeneous:
    def test_closed_form_approx(self):
        cfg = NetworkConfig(50, 10, 1, BackoffSchedule.constant(0.04))
        ss = solve_homogeneous(cfg, APPROX)
        assert ss.p == pytest.approx(math.exp(-1.1), abs=1e-9)
        assert ss.residual <= APPROX.tolerance
        assert ss.pi_T + ss.pi.sum() == pytest.approx(1.0, abs=1e-12)

    def test_closed_form_exact(self):
        cfg = NetworkConfig(50, 10, 1, BackoffSchedule.constant(0.04))
        p = solve_homogeneous(cfg, EXACT).p
        assert p == pytest.approx(math.exp(-0.1) * 0.98 ** 49, abs=1e-9)
        assert p == pytest.approx(0.336239, abs=1e-6)

    @pytest.mark.parametrize("n", [1, 5, 500])
    def test_vanishing_contention(self, n):
        cfg = NetworkConfig(n, 4.0, 2.0, BackoffSchedule.constant(1e-9))
        expected = math.exp(-0.5 - n * (2.0 / 3.0) * 1e-9)
        assert solve_homogeneous(cfg).p == pytest.approx(expected, abs=1e-10)
        assert solve_homogeneous(cfg).p == pytest.approx(math.exp(-0.5), rel=1e-6)

    @pytest.mark.parametrize("mode", ["approx", "exact"])
    def test_beb_against_brentq(self, mode):
        s = BackoffSchedule.beb(0.5, 2)
        cfg = NetworkConfig(50, 10, 1, s)
        h = reference_h(50, 1, 10, s.q, mode)
        ref = brentq(lambda p: p - h(p), 1e-12, 1.0, xtol=1e-13, rtol=1e-15)
        assert solve_homogeneous(cfg, SolverOptions(mode=mode)).p == pytest.approx(ref, abs=1e-10)

    def test_runtime(self):
        cfg = NetworkConfig(50, 10, 1, BackoffSchedule.constant(0.04))
        solve_homogeneous(cfg)
        t = time.perf_counter()
        solve_homogeneous(cfg)
        assert time.perf_counter() - t < 1e-3

    def test_non_monotone_rejected(self):
        cfg = NetworkConfig(10, 1, 1, BackoffSchedule.custom(0.5, (1.0, 0.25, 0.5)))
        with pytest.raises(PreconditionError):
            solve_homogeneous(cfg)

    def test_bad_bracket(self):
        cfg = NetworkConfig(50, 10, 1, BackoffSchedule.constant(0.04))
        with pytest.raises(InvariantError):
            solve_homogeneous(cfg, bracket=(0.5, 1.0))

    def test_iteration_budget(self):
        cfg = NetworkConfig(50, 10, 1, BackoffSchedule.constant(0.04))
        with pytest.raises(ConvergenceError) as info:
            solve_homogeneous(cfg, SolverOptions(max_iterations=3))
        assert info.value.residual > 0

    def test_bad_mode(self):
        with pytest.raises(DomainError):
            SolverOptions(mode="fast")
        with pytest.raises(DomainError):
            SolverOptions(damping=0.0)

    def test_root_below_default_bracket(self):
        cfg = NetworkConfig(15000, 1.0, 0.01, BackoffSchedule.constant(1.0))
        expected = math.exp(-0.01 - 15000 * 0.01 / 1.01)
        assert expected < 1e-60
        assert solve_homogeneous(cfg).p == pytest.approx(expected, rel=1e-9)

    def test_underflow_reported(self):
        cfg = NetworkConfig(10, 0.1, 100.0, BackoffSchedule.constant(0.5))
        with pytest.raises(InvariantError):
            solve_homogeneous(cfg)

    @given(configs(), st.lists(st.tuples(st.floats(0.01, 0.99), st.floats(0.01, 0.99)),
                               min_size=10, max_size=10))
    def test_unique_root(self, cfg, brackets):
        root = solve_homogeneous(cfg).p
        assume(root > 1e-6)  # absolute tolerance dominates below this
        for a, b in brackets:
            lo, hi = root * a, root + (1.0 - root) * b
            p = solve_homogeneous(cfg, bracket=(lo, hi)).p
            assert abs(p - root) <= 10 * APPROX.tolerance

    @given(configs(), st.sampled_from(["approx", "exact"]))
    def test_map_non_increasing(self, cfg, mode):
        h = fixed_point_map(cfg, mode)
        values = [h(p) for p in np.linspace(1e-6, 1.0, 100)]
        assert all(b <= a * (1 + 1e-12) for a, b in zip(values, values[1:]))

    @given(configs(), st.sampled_from(["approx", "exact"]))
    def test_root_between_endpoint_values(self, cfg, mode):
        h = fixed_point_map(cfg, mode)
        p = solve_homogeneous(cfg, SolverOptions(mode=mode)).p
        assert h(1.0) - 1e-10 <= p <= h(1e-12) + 1e-10

    @given(configs())
    def test_residual_against_reference(self, cfg):
        ss = solve_homogeneous(cfg)
        h = reference_h(cfg.n, cfg.mu, cfg.rho, cfg.schedule.q, "approx")
        assert abs(ss.p - h(ss.p)) <= 2e-10

    @given(configs(n_min=2, n_max=300), st.floats(0.05, 0.95))
    def test_non_increasing_in_q0(self, cfg, shrink):
        hi = solve_homogeneous(cfg).p
        lo_q = cfg.schedule.with_q0(cfg.schedule.q0 * shrink)
        p = solve_homogeneous(NetworkConfig(cfg.n, cfg.rho, cfg.mu, lo_q)).p
        assert p >= hi - 1e-10

    @pytest.mark.parametrize("n_min, n_max, tol", [(50, 999, 0.02), (1000, 20000, 1e-3)])
    @given(data=st.data())
    def test_modes_agree_at_moderate_load(self, n_min, n_max, tol, data):
        # load capped at the throughput-optimal q0; overloaded networks separate further
        n = data.draw(st.integers(n_min, n_max))
        mu = data.draw(st.floats(1e-3, 100))
        rho = data.draw(st.floats(max(0.1, mu / 50), 1e3))
        K = data.draw(st.integers(0, 5))
        shape = BackoffSchedule.beb(1.0, K) if data.draw(st.booleans()) else BackoffSchedule.constant(1.0, K)
        try:
            q_cap = max_throughput(n, mu, rho, shape.multipliers).q_star[0]
        except InvariantError:
            q_cap = 1.0
        q0 = q_cap * data.draw(st.floats(1e-3, 1.0))
        cfg = NetworkConfig(n, rho, mu, shape.with_q0(q0))
        a = solve_homogeneous(cfg, APPROX).p
        e = solve_homogeneous(cfg, EXACT).p
        assert abs(a / e - 1) <= tol


class TestClosedForm:
    def test_examples(self):
        assert closed_form_k0(NetworkConfig(50, 10, 1, BackoffSchedule.constant(0.04))) == \
            pytest.approx(0.332871, abs=1e-6)
        assert closed_form_k0(NetworkConfig(50, 1, 0.01, BackoffSchedule.constant(1.0))) == \
            pytest.approx(math.exp(-0.01 - 50 * 0.01 / 1.01), abs=1e-10)
        tiny = closed_form_k0(NetworkConfig(50, 10, 1, BackoffSchedule.constant(1e-300)))
        assert tiny == math.exp(-0.1)

    def test_needs_flat_schedule(self):
        with pytest.raises(PreconditionError):
            closed_form_k0(NetworkConfig(50, 10, 1, BackoffSchedule.beb(0.5, 2)))
        # K > 0 with constant multipliers is fine
        closed_form_k0(NetworkConfig(50, 10, 1, BackoffSchedule.constant(0.5, 3)))

    @given(configs())
    def test_matches_solver(self, cfg):
        flat = NetworkConfig(cfg.n, cfg.rho, cfg.mu, BackoffSchedule.constant(cfg.schedule.q0, cfg.schedule.K))
        assert solve_homogeneous(flat).p == pytest.approx(closed_form_k0(flat), abs=1e-9)


def two_group_closed_form(n1, n2, mu, rho1, rho2, q0):
    p1 = math.exp(-mu / rho1 - n1 * mu * q0 / (mu + 1) - n2 * mu * q0 / (mu + rho1 / rho2))
    p2 = math.exp(-mu / rho2 - n1 * mu * q0 / (mu + rho2 / rho1) - n2 * mu * q0 / (mu + 1))
    return p1, p2


class TestHeterogeneous:
    def test_single_group_matches_homogeneous(self):
        s = BackoffSchedule.beb(0.3, 3)
        for mode in ("approx", "exact"):
            opts = SolverOptions(mode=mode)
            hom = solve_homogeneous(NetworkConfig(40, 5.0, 0.7, s), opts).p
            het = solve_heterogeneous(GroupSpec(((40, 5.0),)), 0.7, s, opts).p[0]
            assert het == pytest.approx(hom, abs=1e-9)

    def test_equal_snr(self):
        ss = solve_heterogeneous(GroupSpec(((25, 10.0), (25, 10.0))), 1.0, BackoffSchedule.constant(0.04))
        np.testing.assert_allclose(ss.p, math.exp(-1.1), atol=1e-9)

    def test_two_group_closed_form(self):
        s = BackoffSchedule.constant(0.04)
        ss = solve_heterogeneous(GroupSpec(((25, 20.0), (25, 5.0))), 1.0, s)
        np.testing.assert_allclose(ss.p, two_group_closed_form(25, 25, 1.0, 20.0, 5.0, 0.04), atol=1e-9)
        lam = [group_node_throughput(p, s) for p in ss.p]
        np.testing.assert_allclose(lam, 0.04 * ss.p, rtol=1e-12)
        assert lam[0] > lam[1]

    def test_exact_mode_residual(self):
        spec = GroupSpec(((10, 30.0), (20, 3.0), (5, 0.5)))
        s = BackoffSchedule.beb(0.2, 4)
        ss = solve_heterogeneous(spec, 0.8, s, EXACT)
        h = hetero_fixed_point_map(spec, 0.8, s, "exact")
        assert np.max(np.abs(ss.p - h(ss.p))) <= 1e-9

    def test_equal_snr_equal_node_throughput(self):
        s = BackoffSchedule.beb(0.1, 3)
        ss = solve_heterogeneous(GroupSpec(((10, 3.0), (30, 3.0))), 2.0, s)
        a, b = (group_node_throughput(p, s) for p in ss.p)
        assert a == pytest.approx(b, rel=1e-9)

    def test_strong_group_dominates(self):
        spec = GroupSpec.two_groups(25, 25, 10.0, 100.0)
        assert spec.rhos[0] / spec.rhos[1] == pytest.approx(100.0)
        assert np.average(spec.rhos, weights=spec.sizes) == pytest.approx(10.0)
        s = BackoffSchedule.constant(0.04)
        ss = solve_heterogeneous(spec, 1.0, s)
        assert group_node_throughput(ss.p[0], s) > group_node_throughput(ss.p[1], s)

    def test_network_throughput(self):
        spec = GroupSpec(((25, 20.0), (25, 5.0)))
        s = BackoffSchedule.constant(0.04)
        p = solve_heterogeneous(spec, 1.0, s).p
        assert network_throughput(spec, p, s) == pytest.approx(25 * 0.04 * p.sum(), rel=1e-12)

    def test_sweep_budget(self):
        with pytest.raises(ConvergenceError):
            solve_heterogeneous(GroupSpec(((25, 20.0), (25, 5.0))), 1.0, BackoffSchedule.constant(0.04),
                                SolverOptions(max_sweeps=2))

    def test_group_validation(self):
        with pytest.raises(DomainError):
            GroupSpec(())
        with pytest.raises(DomainError):
            GroupSpec(((0, 1.0),))
        with pytest.raises(DomainError):
            GroupSpec(((3, -1.0),))

    @given(st.lists(st.tuples(st.integers(1, 40), st.floats(0.1, 100)), min_size=1, max_size=4),
           st.floats(0.01, 10), st.floats(1e-3, 0.2), st.integers(0, 4),
           st.lists(st.floats(0.05, 1.0), min_size=4, max_size=4))
    def test_insensitive_to_start(self, groups, mu, q0, K, start):
        spec = GroupSpec(tuple(groups))
        s = BackoffSchedule.beb(q0, K)
        base = solve_heterogeneous(spec, mu, s).p
        h = hetero_fixed_point_map(spec, mu, s)
        assert np.max(np.abs(base - h(base))) <= 1e-9
        other = solve_heterogeneous(spec, mu, s, initial=np.asarray(start[:spec.M])).p
        np.testing.assert_allclose(other, base, atol=1e-8)

    @given(st.integers(1, 60), st.integers(1, 60), st.floats(0.1, 100), st.floats(0.01, 10),
           st.floats(1e-3, 0.3))
    def test_equal_snrs_match_homogeneous(self, n1, n2, rho, mu, q0):
        s = BackoffSchedule.constant(q0)
        het = solve_heterogeneous(GroupSpec(((n1, rho), (n2, rho))), mu, s).p
        hom = solve_homogeneous(NetworkConfig(n1 + n2, rho, mu, s)).p
        np.testing.assert_allclose(het, hom, atol=1e-9)
