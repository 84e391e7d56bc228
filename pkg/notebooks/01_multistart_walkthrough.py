# %% [markdown]
# # Single start versus multi-start
#
# A short MA(1) series whose likelihood has two local maxima. The CSS-initialized
# fit climbs the nearer one; random root-sampled restarts find the other.

# %%
import numpy as np

from armaml import ArmaOrder, ArmaParams, MultistartConfig, TimeSeries, fit_multistart, fit_single
from armaml.likelihood import kalman_loglik

values = [
    -2.186416, -0.417671, -0.295127, 0.230142, 0.242827, 1.634151, 0.635426, -1.586308,
    -1.338573, 1.244038, -0.25499, 1.023979, 0.091794, -0.580602, 0.933671, -0.172784,
    -1.136395, -0.165755, 1.227489, -0.61445, 1.324528, -0.388881, -0.794936, -0.604888,
    0.022939,
]
x = TimeSeries.from_values(values)
order = ArmaOrder(0, 1)

# %% [markdown]
# Scan the concentrated log-likelihood over theta.

# %%
grid = np.linspace(-0.99, 0.99, 199)
ll = np.array([kalman_loglik(x, ArmaParams([], [t]), order).loglik for t in grid])
for t, v in zip(grid[::15], ll[::15]):
    print(f"theta={t:+.2f}  loglik={v:.3f}")

# %%
single = fit_single(x, order)
multi = fit_multistart(x, order, MultistartConfig(M=10))
print("single:", single.params.theta, round(single.loglik, 4))
print("multi: ", multi.params.theta, round(multi.loglik, 4), "starts", multi.n_starts_used)

# %% [markdown]
# Log-likelihood reached by each start, in order. The stopping rule ends the run
# after M starts in a row fail to improve on the best so far.

# %%
print(np.round(multi.per_start_logliks, 4))
