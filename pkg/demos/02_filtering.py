"""Filter the latent growth rate under subjective beliefs.

Agents never see the growth rate itself — only dividends and a public
signal.  Each agent runs the optimal linear filter implied by their own
model: a believed long-run mean, initial guess, and signal correlation.
The posterior variance has a closed form whose limit and transient rate we
verify here, and each subjective model carries a likelihood-ratio density
that prices that agent's view.  Run with:  python3 demos/02_filtering.py
"""

import numpy as np

from marketsel import (
    AgentBeliefs,
    EconomyParams,
    PathGrid,
    alphas,
    run_agent_filter,
    simulate_market_path,
    variance,
)

params = EconomyParams(
    xi=0.6, mu_bar=0.035, mu0=0.035, sigma_D=0.1, sigma_mu=0.08,
    phi=0.5, lam=0.1,
)

# Posterior variance: starts at zero (the initial rate is known), rises,
# and saturates at nu_limit; over-confidence (phi_i near 1) keeps it low.
print("believed corr   limit variance   transient rate")
for phi_i in (-0.5, 0.0, 0.5, 0.9):
    coeffs = alphas(params, phi_i)
    print(f"{phi_i:12.1f} {coeffs.nu_limit:16.6f} {coeffs.rate:14.3f}")

# Filter one path under three models; the correct-belief agent tracks the
# truth best in mean square.
grid = PathGrid(dt=0.01, n_steps=20_000, seed=11)
path = simulate_market_path(params, grid)
models = {
    "rational":       AgentBeliefs(mu_bar_i=0.035, mu0_i=0.035, phi_i=0.5),
    "optimist":       AgentBeliefs(mu_bar_i=0.055, mu0_i=0.035, phi_i=0.5),
    "over-confident": AgentBeliefs(mu_bar_i=0.035, mu0_i=0.035, phi_i=0.9),
}
print("\nmodel            RMSE vs true rate   terminal log-density")
for name, beliefs in models.items():
    record = run_agent_filter(params, beliefs, path)
    rmse = float(np.sqrt(np.mean((record.mu - path.mu_D) ** 2)))
    print(f"{name:16s} {rmse:17.5f} {record.log_Z[-1]:22.3f}")

# The subjective density is a positive martingale under the true measure:
# its cross-path mean stays at one even as single paths drift away.
n_paths = 4000
from marketsel import simulate_market_batch

batch = simulate_market_batch(params, PathGrid(dt=1e-3, n_steps=1000, seed=3), n_paths)
record = run_agent_filter(params, models["optimist"], batch)
terminal = np.exp(record.log_Z[:, -1])
print(
    f"\nmean terminal density over {n_paths} paths:",
    round(float(terminal.mean()), 4),
    "+/-",
    round(float(terminal.std() / np.sqrt(n_paths)), 4),
)

# And the closed-form variance can be checked on the fly against its limit.
coeffs = alphas(params, 0.5)
t = np.array([1.0, 5.0, 20.0, 100.0])
print("\nvariance on its way to the limit:", np.round(variance(coeffs, params, t), 6))
print("limit:", round(coeffs.nu_limit, 6))
