import math

import numpy as np
from hypothesis import settings

settings.register_profile("default", deadline=None)
settings.load_profile("default")


def hol_transition_matrix(p, q):
    """Transition matrix of one HOL packet over states (T, 0, ..., K), built slot by slot.

    Written out from the per-slot rules alone so tests can compare the
    package's closed forms against a plain linear-algebra stationary vector.
    """
    K = len(q) - 1
    size = K + 2
    P = np.zeros((size, size))

    def idx(state):  # state -1 is T
        return state + 1

    for s in range(-1, K + 1):
        qs = q[0] if s < 0 else q[s]
        fail_to = min(K, 1) if s <= 0 else min(K, s + 1)
        P[idx(s), idx(-1)] += qs * p
        P[idx(s), idx(fail_to)] += qs * (1.0 - p)
        P[idx(s), idx(0 if s < 0 else s)] += 1.0 - qs
    return P


def stationary(P):
    size = P.shape[0]
    A = np.vstack([P.T - np.eye(size), np.ones(size)])
    b = np.zeros(size + 1)
    b[-1] = 1.0
    return np.linalg.lstsq(A, b, rcond=None)[0]


def exact_k0_root(n, mu, rho, q0):
    """Exact-mode steady state for K = 0, where the attempt rate is q0 regardless of p."""
    return math.exp(-mu / rho) * (1.0 - mu / (mu + 1.0) * q0) ** (n - 1)


def pytest_terminal_summary(terminalreporter):
    import sys
    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(module.RESULTS):
        terminalreporter.write_line(module.RESULTS[number])
