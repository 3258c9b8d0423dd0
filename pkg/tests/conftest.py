"""Shared fixtures for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from marketsel import (
    AgentBeliefs,
    AgentPrefs,
    AgentSpec,
    EconomyParams,
    PathGrid,
    simulate_market_path,
)

#: Believed-correlation values spanning the admissible range, including the
#: degenerate endpoint -1 (zero posterior variance) and a near-unit value.
PHI_I_SPAN = (-1.0, -0.5, 0.0, 0.5, 0.9)


@pytest.fixture(scope="session")
def std_params() -> EconomyParams:
    """A moderate, well-conditioned economy used across tests."""
    return EconomyParams(
        xi=0.6,
        mu_bar=0.035,
        mu0=0.035,
        sigma_D=0.1,
        sigma_mu=0.08,
        phi=0.5,
        lam=0.1,
    )


@pytest.fixture(scope="session")
def crra_agents(std_params: EconomyParams) -> tuple[AgentSpec, AgentSpec]:
    """Two CRRA agents with correct beliefs, curvature 2 and 4."""
    beliefs = AgentBeliefs(
        mu_bar_i=std_params.mu_bar, mu0_i=std_params.mu0, phi_i=std_params.phi
    )
    return (
        AgentSpec(AgentPrefs(gamma=2.0, rho=0.02, beta=0.0, c0=0.5), beliefs),
        AgentSpec(AgentPrefs(gamma=4.0, rho=0.02, beta=0.0, c0=0.5), beliefs),
    )


@pytest.fixture(scope="session")
def short_grid() -> PathGrid:
    """A small grid for fast unit tests: T of 10 at dt of 0.01."""
    return PathGrid(dt=0.01, n_steps=1000, seed=2024)


@pytest.fixture(scope="session")
def short_path(std_params: EconomyParams, short_grid: PathGrid):
    """One simulated market path on the short grid."""
    return simulate_market_path(std_params, short_grid)


@pytest.fixture(scope="session")
def mixed_agents() -> tuple[AgentSpec, AgentSpec, AgentSpec]:
    """Three agents heterogeneous in everything except curvature."""
    return (
        AgentSpec(
            AgentPrefs(gamma=2.0, rho=0.01, beta=0.0, c0=0.3),
            AgentBeliefs(mu_bar_i=0.04, mu0_i=0.04, phi_i=-0.3),
        ),
        AgentSpec(
            AgentPrefs(gamma=2.0, rho=0.02, beta=0.5, c0=0.3),
            AgentBeliefs(mu_bar_i=0.05, mu0_i=0.05, phi_i=0.4),
        ),
        AgentSpec(
            AgentPrefs(gamma=2.0, rho=0.03, beta=1.0, c0=0.4),
            AgentBeliefs(mu_bar_i=0.06, mu0_i=0.06, phi_i=0.8),
        ),
    )


def assert_series_close(
    actual: np.ndarray,
    expected: np.ndarray,
    abs_tol: float,
    label: str = "series",
) -> None:
    """Assert max absolute deviation with an informative message."""
    err = float(np.max(np.abs(np.asarray(actual) - np.asarray(expected))))
    assert err <= abs_tol, f"{label}: max abs error {err:.3e} > {abs_tol:.3e}"
