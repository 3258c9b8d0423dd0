"""Verify long-run limit claims numerically: time averages and trends.

The selection results rest on a catalog of ergodic limits for time
averages of smoothed stochastic integrals.  Each catalog entry has a
closed form; Monte Carlo time averages must approach it as the horizon
grows.  Alongside: drift averages of one equilibrium run against their
ergodic limits, and a quadratic-variation probe whose unbounded growth is
the fingerprint of a non-convergent (oscillating) quantity.
Run with:  python3 demos/05_longrun_limits.py
"""

import numpy as np

from marketsel import (
    AgentBeliefs,
    AgentPrefs,
    AgentSpec,
    EconomyParams,
    FunctionalId,
    PathGrid,
    drift_limits_check,
    estimate_limit,
    limit_status,
    qv_growth_probe,
    simulate_equilibrium,
)

# A few catalog entries at two horizons: the error shrinks as T grows.
entries = (
    FunctionalId("L5.4.ii", a=1.0),
    FunctionalId("L5.4.iii", a=1.0, b=2.0),
    FunctionalId("L5.5.i", a=1.0, b=1.0),
    FunctionalId("L5.3.i", a=1.0),
)
print("entry      closed      T=500       T=2000      status")
for functional in entries:
    short = estimate_limit(
        functional, PathGrid(dt=0.01, n_steps=50_000, seed=42), n_seeds=6
    )
    long = estimate_limit(
        functional, PathGrid(dt=0.01, n_steps=200_000, seed=42), n_seeds=6
    )
    print(
        f"{functional.lemma:10s} {long.closed_form:+.5f}  {short.estimate:+.5f}"
        f"   {long.estimate:+.5f}   {limit_status(long)}"
    )

# Drift averages of a simulated economy against their theoretical limits.
params = EconomyParams(
    xi=0.6, mu_bar=0.035, mu0=0.035, sigma_D=0.1, sigma_mu=0.08,
    phi=0.5, lam=0.1,
)
beliefs = AgentBeliefs(mu_bar_i=0.035, mu0_i=0.035, phi_i=0.5)
optimist = AgentBeliefs(mu_bar_i=0.055, mu0_i=0.035, phi_i=0.5)
agents = (
    AgentSpec(AgentPrefs(gamma=2.0, rho=0.02, beta=0.0, c0=0.5), beliefs),
    AgentSpec(AgentPrefs(gamma=2.0, rho=0.02, beta=0.0, c0=0.5), optimist),
)
eq = simulate_equilibrium(
    params, agents, PathGrid(dt=0.01, n_steps=50_000, seed=9)
)[0]
drift = drift_limits_check(params, agents, eq)
# Note on the last row: the reported limit is the raw half-squared
# forecast-error (mu_bar_i - mu_bar)^2 / (2 sigma_D^2).  The simulated
# average settles below it because each filter mean-reverts toward its
# believed long-run growth, damping a persistent bias by the factor
# xi / (xi + alpha_2) — here 0.655, and 0.655^2 * 0.02 = 0.0086 is what
# the time average actually approaches.
print("\nquantity               average     limit")
print(f"habit index slope     {drift.habit_average:+.5f}   {drift.habit_limit:+.5f}")
print(f"growth-rate average   {drift.growth_average:+.5f}   {drift.growth_limit:+.5f}")
for i in range(2):
    print(
        f"half-mean sq error {i}  {drift.delta_sq_average[i]:+.5f}"
        f"   {drift.delta_sq_limit[i]:+.5f}"
    )

# The quadratic-variation probe: strictly increasing across doublings, as
# an almost-surely divergent object should be.
probe = qv_growth_probe(PathGrid(dt=1e-3, n_steps=8_000, seed=1))
print("\nQV probe horizons :", probe.horizons)
print("QV probe values   :", np.round(probe.values, 3))
print("strictly growing  :", probe.growing)
