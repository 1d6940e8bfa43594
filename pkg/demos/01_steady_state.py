# %% [markdown]
# # Steady state of a saturated capture network
#
# Fifty nodes, SINR threshold mu = 1 (one bit per slot), mean SNR 10 dB.
# The success probability of a HOL packet solves a scalar fixed point.

# %%
import math

from capture_aloha import BackoffSchedule, NetworkConfig, SolverOptions, closed_form_k0, solve_homogeneous

cfg = NetworkConfig(50, rho=10.0, mu=1.0, schedule=BackoffSchedule.constant(0.04))
approx = solve_homogeneous(cfg)
exact = solve_homogeneous(cfg, SolverOptions(mode="exact"))
print(f"approx p_A = {approx.p:.6f}  (closed form {closed_form_k0(cfg):.6f}, e^-1.1 = {math.exp(-1.1):.6f})")
print(f"exact  p_A = {exact.p:.6f}")

# %% [markdown]
# Binary exponential backoff spreads retransmissions over K extra phases.
# More phases lower the attempt rate and raise p_A.

# %%
for K in (0, 2, 5):
    ss = solve_homogeneous(NetworkConfig(50, 10.0, 1.0, BackoffSchedule.beb(0.2, K)))
    print(f"K={K}: p_A={ss.p:.4f}  attempt rate={ss.attempt_rate:.4f}  pi_T={ss.pi_T:.4f}")
