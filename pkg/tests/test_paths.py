"""Tests for the exogenous-path simulation module."""

from __future__ import annotations

import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from marketsel import (
    ConfigurationError,
    EconomyParams,
    InputError,
    MarketPath,
    PathGrid,
    aggregate_increments,
    compute_living_index,
    compute_signal,
    generate_wiener,
    generate_wiener_batch,
    ou_step_scale,
    simulate_dividend,
    simulate_growth_rate,
    simulate_market_batch,
    simulate_market_path,
)

from conftest import assert_series_close


class TestValidation:
    def test_economy_rejects_bad_values(self):
        good = dict(
            xi=0.6, mu_bar=0.03, mu0=0.03, sigma_D=0.1, sigma_mu=0.08,
            phi=0.5, lam=0.0,
        )
        for field, value in [
            ("xi", 0.0),
            ("xi", -1.0),
            ("sigma_D", 0.0),
            ("sigma_mu", -0.1),
            ("phi", -0.1),
            ("phi", 1.0),
            ("lam", -0.5),
            ("mu_bar", math.inf),
            ("mu0", math.nan),
        ]:
            with pytest.raises(ConfigurationError):
                EconomyParams(**{**good, field: value})

    def test_grid_rejects_bad_values(self):
        for kwargs in [
            dict(dt=0.0, n_steps=10, seed=0),
            dict(dt=-0.1, n_steps=10, seed=0),
            dict(dt=0.1, n_steps=0, seed=0),
            dict(dt=0.1, n_steps=10, seed=-1),
            dict(dt=0.1, n_steps=10, seed=2**64),
            dict(dt=0.1, n_steps=10, seed=0, path_index=-1),
        ]:
            with pytest.raises(ConfigurationError):
                PathGrid(**kwargs)

    def test_grid_accessors(self):
        grid = PathGrid(dt=0.25, n_steps=8, seed=3)
        assert grid.horizon == 2.0
        np.testing.assert_allclose(grid.times(), np.arange(9) * 0.25)
        assert grid.with_path_index(5).path_index == 5
        assert grid.with_path_index(5).seed == grid.seed


class TestRandomStreams:
    def test_same_key_bit_identical(self):
        grid = PathGrid(dt=0.01, n_steps=500, seed=11, path_index=4)
        a = generate_wiener(grid)
        b = generate_wiener(grid)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x, y)

    def test_distinct_keys_distinct_draws(self):
        grid = PathGrid(dt=0.01, n_steps=500, seed=11)
        other_path = generate_wiener(grid.with_path_index(1))
        other_seed = generate_wiener(PathGrid(dt=0.01, n_steps=500, seed=12))
        base = generate_wiener(grid)
        assert not np.array_equal(base.dW1, other_path.dW1)
        assert not np.array_equal(base.dW1, other_seed.dW1)

    def test_batch_rows_match_single_paths(self):
        grid = PathGrid(dt=0.02, n_steps=64, seed=7, path_index=3)
        batch = generate_wiener_batch(grid, 5)
        assert batch.dW1.shape == (5, 64)
        for p in range(5):
            single = generate_wiener(grid.with_path_index(3 + p))
            np.testing.assert_array_equal(batch.dW1[p], single.dW1)
            np.testing.assert_array_equal(batch.dW2[p], single.dW2)
            np.testing.assert_array_equal(batch.dW3[p], single.dW3)

    def test_increment_scale(self):
        grid = PathGrid(dt=0.04, n_steps=200_000, seed=5)
        draws = generate_wiener(grid)
        for arr in draws:
            assert abs(arr.std() / math.sqrt(grid.dt) - 1.0) < 0.01
            assert abs(arr.mean()) < 3.0 * math.sqrt(grid.dt / grid.n_steps)


class TestGrowthRate:
    def test_step_scale_formula(self, std_params):
        dt = 0.3
        expected = std_params.sigma_mu * math.sqrt(
            (1.0 - math.exp(-2.0 * std_params.xi * dt))
            / (2.0 * std_params.xi * dt)
        )
        assert ou_step_scale(std_params, dt) == pytest.approx(expected, rel=1e-14)

    def test_deterministic_decay_when_noiseless(self):
        params = EconomyParams(
            xi=0.8, mu_bar=0.03, mu0=0.10, sigma_D=0.1, sigma_mu=0.0,
            phi=0.0, lam=0.0,
        )
        grid = PathGrid(dt=0.05, n_steps=400, seed=0)
        mu = simulate_growth_rate(params, grid, generate_wiener(grid).dW2)
        expected = params.mu_bar + (params.mu0 - params.mu_bar) * np.exp(
            -params.xi * grid.times()
        )
        assert_series_close(mu, expected, 1e-14, "noiseless growth state")

    def test_transition_identity(self, std_params):
        grid = PathGrid(dt=0.1, n_steps=300, seed=9)
        dW2 = generate_wiener(grid).dW2
        mu = simulate_growth_rate(std_params, grid, dW2)
        decay = math.exp(-std_params.xi * grid.dt)
        stepped = (
            std_params.mu_bar
            + (mu[:-1] - std_params.mu_bar) * decay
            + ou_step_scale(std_params, grid.dt) * dW2
        )
        assert_series_close(mu[1:], stepped, 1e-12, "one-step transition")

    def test_stationary_moments(self):
        params = EconomyParams(
            xi=1.0, mu_bar=0.05, mu0=0.05, sigma_D=0.1, sigma_mu=0.08,
            phi=0.0, lam=0.0,
        )
        grid = PathGrid(dt=0.05, n_steps=400_000, seed=17)
        mu = simulate_growth_rate(params, grid, generate_wiener(grid).dW2)
        stationary_var = params.sigma_mu**2 / (2.0 * params.xi)
        assert abs(mu.mean() - params.mu_bar) < 4.0 * math.sqrt(
            stationary_var * 2.0 / (params.xi * grid.horizon)
        )
        assert abs(mu.var() / stationary_var - 1.0) < 0.05


class TestDividendAndIndex:
    def test_log_dividend_against_exact_drift_integral(self):
        params = EconomyParams(
            xi=0.7, mu_bar=0.02, mu0=0.12, sigma_D=0.15, sigma_mu=0.0,
            phi=0.0, lam=0.0,
        )
        grid = PathGrid(dt=0.01, n_steps=1000, seed=21)
        draws = generate_wiener(grid)
        mu = simulate_growth_rate(params, grid, draws.dW2)
        _, log_D = simulate_dividend(params, grid, mu, draws.dW1)
        t = grid.times()
        drift_integral = params.mu_bar * t + (params.mu0 - params.mu_bar) * (
            1.0 - np.exp(-params.xi * t)
        ) / params.xi
        brownian = np.concatenate([[0.0], np.cumsum(draws.dW1)])
        expected = (
            drift_integral - 0.5 * params.sigma_D**2 * t + params.sigma_D * brownian
        )
        # trapezoid vs exact integral of the smooth decay curve: O(dt^2)
        assert_series_close(log_D, expected, 1e-6, "log dividend")
        assert log_D[0] == 0.0

    def test_frozen_index_when_lam_zero(self, std_params, short_grid, short_path):
        params = EconomyParams(
            xi=0.6, mu_bar=0.035, mu0=0.035, sigma_D=0.1, sigma_mu=0.08,
            phi=0.5, lam=0.0, x0=0.7,
        )
        x = compute_living_index(params, short_grid, short_path.log_D)
        np.testing.assert_array_equal(x, np.full_like(x, 0.7))

    def test_index_exact_for_constant_dividend(self):
        params = EconomyParams(
            xi=0.6, mu_bar=0.0, mu0=0.0, sigma_D=0.1, sigma_mu=0.0,
            phi=0.0, lam=0.8, x0=-1.0,
        )
        grid = PathGrid(dt=0.05, n_steps=200, seed=0)
        level = 2.5
        log_D = np.full(grid.n_steps + 1, level)
        x = compute_living_index(params, grid, log_D)
        expected = level + (params.x0 - level) * np.exp(-params.lam * grid.times())
        assert_series_close(x, expected, 1e-12, "index relaxation")

    def test_signal_decomposition(self, short_grid):
        draws = generate_wiener(short_grid)
        s0 = compute_signal(short_grid, 0.0, draws.dW2, draws.dW3)
        np.testing.assert_allclose(
            np.diff(s0), draws.dW3, rtol=0.0, atol=1e-14
        )
        phi = 0.6
        s = compute_signal(short_grid, phi, draws.dW2, draws.dW3)
        np.testing.assert_allclose(
            np.diff(s),
            phi * draws.dW2 + math.sqrt(1.0 - phi**2) * draws.dW3,
            rtol=0.0,
            atol=1e-14,
        )
        with pytest.raises(ConfigurationError):
            compute_signal(short_grid, 1.0, draws.dW2, draws.dW3)

    def test_signal_correlation(self):
        grid = PathGrid(dt=0.01, n_steps=300_000, seed=23)
        draws = generate_wiener(grid)
        phi = 0.5
        s = compute_signal(grid, phi, draws.dW2, draws.dW3)
        sample = np.corrcoef(np.diff(s), draws.dW2)[0, 1]
        assert abs(sample - phi) < 4.0 / math.sqrt(grid.n_steps)


class TestMarketPath:
    def test_batch_matches_single(self, std_params):
        grid = PathGrid(dt=0.02, n_steps=128, seed=31, path_index=2)
        batch = simulate_market_batch(std_params, grid, 4)
        for p in range(4):
            single = simulate_market_path(
                std_params, grid.with_path_index(2 + p)
            )
            for name in ("dW1", "dW2", "dW3", "mu_D", "log_D", "x", "s"):
                np.testing.assert_array_equal(
                    getattr(batch, name)[p], getattr(single, name), err_msg=name
                )

    def test_initial_conditions(self, short_path, std_params):
        assert short_path.log_D[0] == 0.0
        assert short_path.s[0] == 0.0
        assert short_path.x[0] == std_params.x0
        assert short_path.mu_D[0] == std_params.mu0
        np.testing.assert_allclose(short_path.D, np.exp(short_path.log_D))

    def test_shape_validation(self, std_params, short_grid, short_path):
        with pytest.raises(InputError):
            MarketPath(
                params=std_params,
                grid=short_grid,
                dW1=short_path.dW1[:-1],
                dW2=short_path.dW2,
                dW3=short_path.dW3,
                mu_D=short_path.mu_D,
                log_D=short_path.log_D,
                x=short_path.x,
                s=short_path.s,
            )
        with pytest.raises(InputError):
            MarketPath(
                params=std_params,
                grid=short_grid,
                dW1=short_path.dW1,
                dW2=short_path.dW2,
                dW3=short_path.dW3,
                mu_D=short_path.mu_D,
                log_D=short_path.log_D + 1.0,
                x=short_path.x,
                s=short_path.s,
            )

    def test_aggregation_couples_resolutions(self, std_params):
        fine = PathGrid(dt=0.01, n_steps=1000, seed=13)
        coarse = PathGrid(dt=0.1, n_steps=100, seed=13)
        draws = generate_wiener(fine)
        coarse_draws = aggregate_increments(draws, 10)
        assert coarse_draws.dW1.shape == (100,)
        np.testing.assert_allclose(
            coarse_draws.dW1.sum(), draws.dW1.sum(), atol=1e-12
        )
        fine_path = simulate_market_path(std_params, fine, draws)
        coarse_path = simulate_market_path(std_params, coarse, coarse_draws)
        # same underlying Wiener path seen at coarse times: paths must be
        # close (discretization error only), not merely statistically alike
        assert (
            float(np.max(np.abs(fine_path.log_D[::10] - coarse_path.log_D)))
            < 0.05
        )
        with pytest.raises(InputError):
            aggregate_increments(draws, 3)
        with pytest.raises(InputError):
            aggregate_increments(draws, 0)


class TestCsv:
    def test_header_and_values(self, short_path):
        buf = io.StringIO()
        from marketsel import write_market_path_csv

        write_market_path_csv(buf, short_path)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "time,dW1,dW2,dW3,mu_D,log_D,x,s"
        assert len(lines) == short_path.grid.n_steps + 2
        first = lines[1].split(",")
        assert float(first[0]) == 0.0
        assert float(first[1]) == short_path.dW1[0]
        # final row has no increments
        last = lines[-1].split(",")
        assert last[1] == "" and last[2] == "" and last[3] == ""
        assert float(last[5]) == short_path.log_D[-1]

    def test_rejects_batch(self, std_params):
        grid = PathGrid(dt=0.1, n_steps=4, seed=1)
        batch = simulate_market_batch(std_params, grid, 2)
        from marketsel import write_market_path_csv

        with pytest.raises(InputError):
            write_market_path_csv(io.StringIO(), batch)


@settings(max_examples=40, deadline=None)
@given(
    xi=st.floats(0.05, 5.0),
    dt=st.floats(1e-4, 1.0),
    sigma_mu=st.floats(0.0, 2.0),
)
def test_step_scale_bounds(xi, dt, sigma_mu):
    """The exact step scale is positive and below the naive Euler scale."""
    params = EconomyParams(
        xi=xi, mu_bar=0.0, mu0=0.0, sigma_D=1.0, sigma_mu=sigma_mu,
        phi=0.0, lam=0.0,
    )
    scale = ou_step_scale(params, dt)
    assert scale <= sigma_mu * (1.0 + 1e-12)
    if sigma_mu > 0.0:
        assert scale > 0.0
