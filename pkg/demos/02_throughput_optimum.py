# %% [markdown]
# # Tuning the transmission probability
#
# Throughput as a function of the initial transmission probability q0,
# next to the closed-form optimum.

# %%
import numpy as np

from capture_aloha import BackoffSchedule, NetworkConfig, solve_homogeneous, throughput_at
from capture_aloha.optimize import max_throughput

n, mu, rho = 50, 1.0, 10.0
opt = max_throughput(n, mu, rho)
print(f"lambda_max={opt.lambda_max:.6f} at q0={opt.q0_hat:.4f} ({opt.branch})")

for q0 in np.geomspace(0.005, 0.5, 9):
    p = solve_homogeneous(NetworkConfig(n, rho, mu, BackoffSchedule.constant(q0))).p
    print(f"q0={q0:.4f}  throughput={throughput_at(p, mu, rho).lambda_out:.4f}")

# %% [markdown]
# Below mu = 1/(n-1) interference barely hurts, so everyone should transmit
# every slot. Throughput then exceeds one packet per slot.

# %%
low = max_throughput(n, 0.01, 1.0)
print(f"mu=0.01: lambda_max={low.lambda_max:.3f}, q*={low.q_star}, branch={low.branch}")
