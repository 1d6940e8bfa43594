# %% [markdown]
# # Two groups at different distances
#
# Half the nodes sit close to the receiver, half far away. The mean SNR is
# held fixed while the ratio between groups grows.

# %%
from capture_aloha import BackoffSchedule, GroupSpec, group_node_throughput, solve_heterogeneous
from capture_aloha.optimize import hetero_max_sum_rate

sched = BackoffSchedule.constant(0.04)
spec = GroupSpec(((25, 20.0), (25, 5.0)))
p = solve_heterogeneous(spec, 1.0, sched).p
for (size, rho), pm in zip(spec.groups, p):
    print(f"{size} nodes at rho={rho:g}: p_A={pm:.4f}, per-node throughput={group_node_throughput(pm, sched):.5f}")

# %% [markdown]
# Best sum rate over threshold and q0 as the SNR gap widens, at 20 dB mean.

# %%
for ratio_db in (0, 10, 20, 30, 40):
    opt = hetero_max_sum_rate(GroupSpec.two_groups(25, 25, 100.0, 10 ** (ratio_db / 10)), mu_points=100)
    print(f"ratio {ratio_db:>2} dB: C={opt.C:.4f} mu*={opt.mu_star:.3g} q0*={opt.q0_star:.3g}"
          f"{'  (several near-optimal regions)' if opt.multimodal else ''}")
