"""Independent oracle implementations used by the test suite.

Each oracle reaches a quantity the library computes in closed form (or by
a custom solver) through a deliberately different route — generic ODE
integration, resolvent-form integral representations, log-sum-exp
algebra, or a generic bracketed scalar root finder — so agreement is
evidence of correctness rather than of shared code.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq
from scipy.special import logsumexp

from marketsel import AgentBeliefs, AgentPrefs, EconomyParams, MarketPath
from marketsel.filtering import alphas, variance, y_factor


def riccati_ode_variance(
    params: EconomyParams, phi_i: float, times: np.ndarray
) -> np.ndarray:
    """Filter conditional variance by generic stiff ODE integration.

    Integrates ``v' = sigma_mu^2 (1 - phi_i^2) - 2 xi v - v^2 / sigma_D^2``
    from ``v(0) = 0`` with a high-order adaptive scheme at tight
    tolerances, entirely independent of the closed-form solution.
    """
    source = params.sigma_mu**2 * (1.0 - phi_i**2)

    def rhs(_t, v):
        return source - 2.0 * params.xi * v - v**2 / params.sigma_D**2

    sol = solve_ivp(
        rhs,
        (0.0, float(times[-1])),
        [0.0],
        method="DOP853",
        rtol=1e-11,
        atol=1e-14,
        t_eval=np.asarray(times, dtype=float),
    )
    assert sol.success, sol.message
    return sol.y[0]


def resolvent_filter_mean(
    params: EconomyParams, beliefs: AgentBeliefs, path: MarketPath
) -> np.ndarray:
    """Filtered mean through its integral (variation-of-constants) form.

    With ``y(t)`` the filter growth factor and ``v(t)`` the conditional
    variance, the filtered mean solves a linear SDE whose explicit solution
    is::

        m(t) = m(0)/y(t)
             + (xi mu_bar_i / y(t)) * integral_0^t y(s) ds
             + (1 / (sigma_D^2 y(t))) * integral_0^t v(s) y(s) (dlogD_s + sigma_D^2/2 ds)
             + (sigma_mu phi_i / y(t)) * integral_0^t y(s) ds_s

    discretized here with left-point sums.  This shares no code with the
    recursive filter implementation.
    """
    grid = path.grid
    times = grid.times()
    dt = grid.dt
    coeffs = alphas(params, beliefs.phi_i)
    y = y_factor(coeffs, params, times)
    v = variance(coeffs, params, times)

    d_log_D = np.diff(path.log_D)
    ds = np.diff(path.s)
    y_left = y[:-1]
    v_left = v[:-1]

    drift_part = np.concatenate(
        [[0.0], np.cumsum(params.xi * beliefs.mu_bar_i * y_left) * dt]
    )
    observation = d_log_D + 0.5 * params.sigma_D**2 * dt
    gain_part = np.concatenate(
        [[0.0], np.cumsum(v_left * y_left * observation)]
    ) / params.sigma_D**2
    signal_part = params.sigma_mu * beliefs.phi_i * np.concatenate(
        [[0.0], np.cumsum(y_left * ds)]
    )
    return (beliefs.mu0_i + drift_part + gain_part + signal_part) / y


def log_clearing_homogeneous(
    gamma: float, c0: np.ndarray, log_M_homog: np.ndarray
) -> np.ndarray:
    """Log equilibrium kernel for common curvature, via log-sum-exp.

    With one curvature ``gamma`` across agents the clearing equation is
    solvable in closed form:
    ``log M = gamma * logsumexp_i(log c0_i + log M_homog_i / gamma)``.
    """
    log_c0 = np.log(np.asarray(c0, dtype=float))[:, np.newaxis]
    terms = log_c0 + np.asarray(log_M_homog, dtype=float) / gamma
    return gamma * logsumexp(terms, axis=0)


def brute_clear_point(
    prefs: list[AgentPrefs], log_M_homog_point: np.ndarray
) -> float:
    """One clearing root via a generic bracketed scalar solver.

    Uses ``brentq`` on the clearing excess-demand function.  At the point
    where the largest single-agent term equals one the excess demand is
    non-negative (it is exactly zero for a lone agent, so the bracket is
    pushed one unit further down to make it strictly positive); pushing
    ``gamma_max (log N + 50)`` beyond it caps every term at
    ``e^{-50} / N``, making the excess demand strictly negative.
    """
    log_c0 = np.log([p.c0 for p in prefs])
    gammas = np.array([p.gamma for p in prefs])
    ell = np.asarray(log_M_homog_point, dtype=float)

    def excess(m: float) -> float:
        return float(np.sum(np.exp(log_c0 + (ell - m) / gammas))) - 1.0

    lo = float(np.max(ell + gammas * log_c0)) - 1.0
    hi = lo + 1.0 + float(np.max(gammas) * (np.log(len(prefs)) + 50.0))
    return brentq(excess, lo, hi, xtol=1e-14, rtol=8.9e-16)
