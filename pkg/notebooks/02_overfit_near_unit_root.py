# %% [markdown]
# # Overfitting an AR(1) with ARMA(2,1)
#
# A redundant model lets the MA root drift to the unit circle. Fisher standard
# errors become unreliable there, while the profile interval stays honest about
# how little the data say about theta1.

# %%
import warnings

from armaml import ArmaOrder, ArmaParams, GeneratorSpec, fit_multistart, simulate
from armaml.inference import build_aic_table, fisher_se, profile_ci, wald_interval

x = simulate(GeneratorSpec(ArmaOrder(1, 0), ArmaParams([0.8], [], 0.5, 579.0), 98, seed=5))

# %%
table = build_aic_table(x, 2, 2)
print(table.to_text())
print("best order:", table.best_order())

# %%
order = ArmaOrder(2, 1, True)
fit = fit_multistart(x, order)
with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    fit = fit.with_se(fisher_se(fit, x))
for name, est, se in zip(order.param_names(), fit.params.to_vector(True), fit.se):
    print(f"{name:>6} {est:10.4f} {se:8.4f}")

# %%
curve = profile_ci(x, order, fit, "theta1")
print("Wald   ", wald_interval(fit.params.theta[0], fit.se[2]))
print("profile", (curve.ci_low, curve.ci_high), "truncated:", curve.low_truncated, curve.high_truncated)
