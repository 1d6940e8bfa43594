# %% [markdown]
# # Choosing the SINR threshold
#
# A higher threshold carries more bits per packet but decodes fewer
# packets. The sum rate trades the two off.

# %%
import math

from capture_aloha.optimize import (approx_optimal_mu, approx_sum_rate, max_sum_rate,
                                    rho_threshold)

n = 50
print(f"regime boundary rho_0({n}) = {rho_threshold(n):.5f}")
for db in (-10, 0, 10, 20, 30, 40):
    rho = 10 ** (db / 10)
    opt = max_sum_rate(n, rho)
    hi, lo = approx_sum_rate(n, rho)
    print(f"{db:>4} dB  C={opt.C:.4f}  mu*={opt.mu_star:.4g}  {opt.branch:<8}"
          f"  approx high={hi:.4f} low={lo:.4f}")

# %% [markdown]
# In large networks at low SNR the best threshold shrinks towards zero and
# the sum rate levels off.

# %%
for n in (10, 100, 1000, 10 ** 5):
    print(f"n={n:>6}  C={max_sum_rate(n, 1.0).C:.5f}  mu_l~{approx_optimal_mu(n, 1.0)[0]:.3g}")
print(f"limit e^-1 log2 e = {math.exp(-1) * math.log2(math.e):.5f}")
