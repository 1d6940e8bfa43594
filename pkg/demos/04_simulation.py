# %% [markdown]
# # Checking the analysis by simulation
#
# The simulator draws fresh Rayleigh fading per slot and applies the SINR
# test to every transmitter, so several packets can get through at once.

# %%
from capture_aloha import (BackoffSchedule, NetworkConfig, SimConfig, SolverOptions, replicate,
                           solve_homogeneous)

cfg = NetworkConfig(50, 10.0, 1.0, BackoffSchedule.beb(0.04, 2))
rep = replicate(cfg, SimConfig(slots=200_000, seed=1, replications=4))
approx = solve_homogeneous(cfg)
exact = solve_homogeneous(cfg, SolverOptions(mode="exact"))
print(f"simulated p_A = {rep.p_hat:.4f} +/- {rep.ci_halfwidth['p_hat']:.4f}")
print(f"analysis      = {approx.p:.4f} (approx), {exact.p:.4f} (exact)")
print(f"throughput    = {rep.throughput:.4f} vs {cfg.n * approx.pi_T:.4f}")
print("per-state success:", rep.state_p_hat.round(4))

# %% [markdown]
# Low threshold, everyone transmitting: dozens of packets decode per slot.

# %%
dense = NetworkConfig(50, 1.0, 0.01, BackoffSchedule.constant(1.0))
r = replicate(dense, SimConfig(slots=20_000))
print(f"throughput {r.throughput:.2f} packets/slot; busiest slot decoded "
      f"{r.decode_histogram.nonzero()[0].max()} packets")
