"""Exogenous market paths: dividend, growth state, habit index, and signal.

The simulated economy is driven by three independent Wiener processes
``W1, W2, W3`` on a uniform time grid.  The aggregate dividend ``D`` pays at
rate ``dD/D = mu_D dt + sigma_D dW1`` with ``D(0) = 1``; its conditional mean
growth rate ``mu_D`` is an Ornstein-Uhlenbeck state reverting to ``mu_bar`` at
rate ``xi`` with volatility ``sigma_mu`` driven by ``W2``.  A living-standard
index ``x`` tracks log dividends through the linear dynamics
``dx = lam (log D - x) dt``, and a public signal ``s`` with increments
``ds = phi dW2 + sqrt(1 - phi^2) dW3`` carries partial information about the
growth-state innovations.

Discretization choices
----------------------
* ``mu_D`` uses the exact one-step Gaussian transition of the
  Ornstein-Uhlenbeck process, not an Euler step: the conditional mean decays
  by ``exp(-xi dt)`` and the shock is the step's ``W2`` increment rescaled to
  the exact conditional standard deviation.
* ``log D`` is the single source of truth for the dividend.  Its increment
  combines a trapezoidal quadrature of the drift integral, the Ito
  correction ``-sigma_D^2 dt / 2``, and the ``W1`` increment; ``D`` is always
  recovered as ``exp(log_D)``.
* ``x`` advances by the exact solution of its linear one-step problem with
  ``log D`` frozen at the trapezoidal step average.

Reproducibility
---------------
Every path is generated from an independent, deterministic random stream.
The stream for a path is keyed by the pair ``(seed, path_index)`` through
``numpy.random.SeedSequence(entropy=seed, spawn_key=(path_index,))`` feeding
``numpy.random.default_rng``; the three increment rows are drawn in a single
``standard_normal((3, n_steps))`` call (row order ``dW1, dW2, dW3``) and
scaled by ``sqrt(dt)``.  Identical ``(seed, path_index)`` pairs therefore
yield bit-identical increments regardless of batch size, process, or call
order.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import IO, NamedTuple

import numpy as np
from scipy.signal import lfilter

from ._util import write_csv
from .errors import ConfigurationError, InputError

__all__ = [
    "EconomyParams",
    "PathGrid",
    "WienerIncrements",
    "DividendPath",
    "MarketPath",
    "generate_wiener",
    "generate_wiener_batch",
    "simulate_growth_rate",
    "simulate_dividend",
    "compute_living_index",
    "compute_signal",
    "simulate_market_path",
    "simulate_market_batch",
    "aggregate_increments",
    "ou_step_scale",
    "write_market_path_csv",
]


@dataclass(frozen=True)
class EconomyParams:
    """Primitive parameters of the dividend economy.

    Attributes
    ----------
    xi : float
        Mean-reversion rate of the growth state; strictly positive.
    mu_bar : float
        Long-run mean of the growth state.
    mu0 : float
        Initial growth state.
    sigma_D : float
        Dividend volatility; strictly positive.
    sigma_mu : float
        Growth-state volatility; non-negative.
    phi : float
        Correlation loading of the public signal on the growth-state driver,
        in ``[0, 1)``.
    lam : float
        Adjustment speed of the living-standard index; non-negative
        (``0`` freezes the index at ``x0``).
    x0 : float
        Initial living-standard index.
    """

    xi: float
    mu_bar: float
    mu0: float
    sigma_D: float
    sigma_mu: float
    phi: float
    lam: float
    x0: float = 0.0

    def __post_init__(self) -> None:
        if not self.xi > 0.0:
            raise ConfigurationError("xi must be strictly positive")
        if not self.sigma_D > 0.0:
            raise ConfigurationError("sigma_D must be strictly positive")
        if self.sigma_mu < 0.0:
            raise ConfigurationError("sigma_mu must be non-negative")
        if not 0.0 <= self.phi < 1.0:
            raise ConfigurationError("phi must lie in [0, 1)")
        if self.lam < 0.0:
            raise ConfigurationError("lam must be non-negative")
        for name in ("xi", "mu_bar", "mu0", "sigma_D", "sigma_mu", "phi", "lam", "x0"):
            if not np.isfinite(getattr(self, name)):
                raise ConfigurationError(f"{name} must be finite")


@dataclass(frozen=True)
class PathGrid:
    """Uniform simulation grid plus the random-stream key of one path.

    ``times`` has ``n_steps + 1`` points ``0, dt, ..., n_steps * dt``;
    increment arrays have length ``n_steps``.  The pair ``(seed, path_index)``
    keys the deterministic random stream as described in the module
    docstring, so two grids that agree on the pair produce bit-identical
    draws.
    """

    dt: float
    n_steps: int
    seed: int
    path_index: int = 0

    def __post_init__(self) -> None:
        if not self.dt > 0.0:
            raise ConfigurationError("dt must be strictly positive")
        if self.n_steps < 1:
            raise ConfigurationError("n_steps must be at least 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigurationError("seed must fit in an unsigned 64-bit integer")
        if self.path_index < 0:
            raise ConfigurationError("path_index must be non-negative")

    @property
    def horizon(self) -> float:
        """Final grid time ``n_steps * dt``."""
        return self.n_steps * self.dt

    def times(self) -> np.ndarray:
        """Grid times, shape ``(n_steps + 1,)``."""
        return np.arange(self.n_steps + 1, dtype=np.float64) * self.dt

    def with_path_index(self, path_index: int) -> "PathGrid":
        """Copy of this grid addressing a different path stream."""
        return replace(self, path_index=path_index)

    def generator(self) -> np.random.Generator:
        """The deterministic generator for this ``(seed, path_index)`` pair."""
        seq = np.random.SeedSequence(entropy=int(self.seed), spawn_key=(int(self.path_index),))
        return np.random.default_rng(seq)


class WienerIncrements(NamedTuple):
    """Increments of the three driving Wiener processes over each grid step."""

    dW1: np.ndarray
    dW2: np.ndarray
    dW3: np.ndarray


def generate_wiener(grid: PathGrid) -> WienerIncrements:
    """Draw the three driver increments for one path.

    Returns arrays of shape ``(n_steps,)`` with independent ``N(0, dt)``
    entries, reproducible per ``(seed, path_index)``.
    """
    draws = grid.generator().standard_normal((3, grid.n_steps))
    draws *= np.sqrt(grid.dt)
    return WienerIncrements(draws[0], draws[1], draws[2])


def generate_wiener_batch(grid: PathGrid, n_paths: int) -> WienerIncrements:
    """Draw increments for paths ``path_index, ..., path_index + n_paths - 1``.

    Row ``p`` of each returned ``(n_paths, n_steps)`` array is bit-identical
    to ``generate_wiener(grid.with_path_index(grid.path_index + p))``.
    """
    if n_paths < 1:
        raise ConfigurationError("n_paths must be at least 1")
    out = np.empty((3, n_paths, grid.n_steps), dtype=np.float64)
    for p in range(n_paths):
        d = generate_wiener(grid.with_path_index(grid.path_index + p))
        out[0, p] = d.dW1
        out[1, p] = d.dW2
        out[2, p] = d.dW3
    return WienerIncrements(out[0], out[1], out[2])


def ou_step_scale(params: EconomyParams, dt: float) -> float:
    """Rescaling applied to a ``W2`` increment in the exact growth-state step.

    The exact one-step conditional variance of the growth state is
    ``sigma_mu^2 (1 - exp(-2 xi dt)) / (2 xi)``; multiplying the raw
    ``N(0, dt)`` increment by this factor reproduces it exactly:
    ``scale = sigma_mu * sqrt(-expm1(-2 xi dt) / (2 xi dt))``.
    """
    x = 2.0 * params.xi * dt
    return params.sigma_mu * np.sqrt(-np.expm1(-x) / x)


def _zero_state_ar1(decay: float, forcing: np.ndarray) -> np.ndarray:
    """Response of ``y[k+1] = decay * y[k] + forcing[k]`` from ``y[0] = 0``.

    ``forcing`` has shape ``(..., n)``; the result has shape ``(..., n + 1)``
    with a leading zero along the last axis.
    """
    resp = lfilter([1.0], [1.0, -decay], forcing, axis=-1)
    pad = np.zeros(forcing.shape[:-1] + (1,), dtype=np.float64)
    return np.concatenate([pad, resp], axis=-1)


def simulate_growth_rate(params: EconomyParams, grid: PathGrid, dW2: np.ndarray) -> np.ndarray:
    """Growth-state path from its exact Ornstein-Uhlenbeck transition.

    ``mu_D[k+1] = mu_bar + (mu_D[k] - mu_bar) exp(-xi dt) + scale * dW2[k]``
    with ``scale`` from :func:`ou_step_scale`, so every marginal distribution
    is exact regardless of ``dt``.  ``dW2`` may carry leading batch axes;
    the result appends one grid point: shape ``(..., n_steps + 1)``.
    """
    dW2 = np.asarray(dW2, dtype=np.float64)
    decay = np.exp(-params.xi * grid.dt)
    noise = _zero_state_ar1(decay, ou_step_scale(params, grid.dt) * dW2)
    k = np.arange(grid.n_steps + 1, dtype=np.float64)
    deterministic = params.mu_bar + (params.mu0 - params.mu_bar) * np.exp(-params.xi * grid.dt * k)
    return deterministic + noise


class DividendPath(NamedTuple):
    """Dividend levels and their log, ``D = exp(log_D)`` with ``log_D`` primary."""

    D: np.ndarray
    log_D: np.ndarray


def simulate_dividend(
    params: EconomyParams, grid: PathGrid, mu_D: np.ndarray, dW1: np.ndarray
) -> DividendPath:
    """Dividend path as ``(D, log_D)``; ``log_D[0] = 0`` so ``D[0] = 1``.

    Each step adds the trapezoidal quadrature of the drift integral, the Ito
    correction, and the dividend shock::

        log_D[k+1] - log_D[k] = (mu_D[k] + mu_D[k+1]) dt / 2
                                - sigma_D^2 dt / 2 + sigma_D dW1[k]

    The log path is the single source of truth; ``D`` is its exponential.
    """
    mu_D = np.asarray(mu_D, dtype=np.float64)
    dW1 = np.asarray(dW1, dtype=np.float64)
    drift = 0.5 * (mu_D[..., :-1] + mu_D[..., 1:]) * grid.dt
    increments = drift - 0.5 * params.sigma_D**2 * grid.dt + params.sigma_D * dW1
    log_D = np.zeros(increments.shape[:-1] + (grid.n_steps + 1,), dtype=np.float64)
    np.cumsum(increments, axis=-1, out=log_D[..., 1:])
    return DividendPath(np.exp(log_D), log_D)


def compute_living_index(params: EconomyParams, grid: PathGrid, log_D: np.ndarray) -> np.ndarray:
    """Living-standard index driven by ``dx = lam (log D - x) dt``.

    Each step applies the exact solution of the linear one-step problem with
    ``log D`` frozen at its trapezoidal step average ``L[k]``::

        x[k+1] = L[k] + (x[k] - L[k]) exp(-lam dt),
        L[k] = (log_D[k] + log_D[k+1]) / 2

    With ``lam = 0`` the index stays at ``x0`` identically.
    """
    log_D = np.asarray(log_D, dtype=np.float64)
    decay = np.exp(-params.lam * grid.dt)
    gain = -np.expm1(-params.lam * grid.dt)  # 1 - exp(-lam dt), accurate for small lam dt
    level_avg = 0.5 * (log_D[..., :-1] + log_D[..., 1:])
    forced = _zero_state_ar1(decay, gain * level_avg)
    k = np.arange(grid.n_steps + 1, dtype=np.float64)
    return params.x0 * decay**k + forced


def compute_signal(
    grid: PathGrid, phi: float, dW2: np.ndarray, dW3: np.ndarray
) -> np.ndarray:
    """Public signal path ``s`` with ``s[0] = 0``.

    Increments are ``phi dW2 + sqrt(1 - phi^2) dW3``; the signal is their
    running sum, itself a standard Wiener path correlated with the
    growth-state driver through ``phi`` in ``[0, 1)``.
    """
    if not 0.0 <= phi < 1.0:
        raise ConfigurationError("phi must lie in [0, 1)")
    dW2 = np.asarray(dW2, dtype=np.float64)
    dW3 = np.asarray(dW3, dtype=np.float64)
    increments = phi * dW2 + np.sqrt(1.0 - phi**2) * dW3
    out = np.zeros(increments.shape[:-1] + (grid.n_steps + 1,), dtype=np.float64)
    np.cumsum(increments, axis=-1, out=out[..., 1:])
    return out


@dataclass(frozen=True)
class MarketPath:
    """One simulated realization of the exogenous market state.

    Level arrays (``mu_D, log_D, x, s``) have shape ``(..., n_steps + 1)``;
    increment arrays (``dW1, dW2, dW3``) have shape ``(..., n_steps)``.
    Leading axes, if any, index a batch of paths.  Invariants:
    ``log_D[..., 0] = 0`` (so ``D`` starts at 1), ``x[..., 0] = x0``,
    ``s[..., 0] = 0``, and ``mu_D[..., 0] = mu0``.
    """

    params: EconomyParams
    grid: PathGrid
    dW1: np.ndarray
    dW2: np.ndarray
    dW3: np.ndarray
    mu_D: np.ndarray
    log_D: np.ndarray
    x: np.ndarray
    s: np.ndarray

    def __post_init__(self) -> None:
        n = self.grid.n_steps
        for name in ("dW1", "dW2", "dW3"):
            if getattr(self, name).shape[-1] != n:
                raise InputError(f"{name} must have {n} increments along the last axis")
        for name in ("mu_D", "log_D", "x", "s"):
            if getattr(self, name).shape[-1] != n + 1:
                raise InputError(f"{name} must have {n + 1} grid points along the last axis")
        if not np.all(self.log_D[..., 0] == 0.0):
            raise InputError("log_D must start at 0 (D starts at 1)")
        if not np.all(self.s[..., 0] == 0.0):
            raise InputError("s must start at 0")
        if not np.all(self.x[..., 0] == self.params.x0):
            raise InputError("x must start at x0")
        if not np.all(self.mu_D[..., 0] == self.params.mu0):
            raise InputError("mu_D must start at mu0")

    @property
    def times(self) -> np.ndarray:
        return self.grid.times()

    @property
    def D(self) -> np.ndarray:
        """Dividend level, derived from the log path."""
        return np.exp(self.log_D)


def simulate_market_path(
    params: EconomyParams, grid: PathGrid, increments: WienerIncrements | None = None
) -> MarketPath:
    """Simulate one market path on ``grid``.

    ``increments`` substitutes externally supplied driver increments (for
    refinement couplings or reuse); by default they are drawn from the path's
    own deterministic stream.
    """
    if increments is None:
        increments = generate_wiener(grid)
    dW1, dW2, dW3 = increments
    mu_D = simulate_growth_rate(params, grid, dW2)
    _, log_D = simulate_dividend(params, grid, mu_D, dW1)
    x = compute_living_index(params, grid, log_D)
    s = compute_signal(grid, params.phi, dW2, dW3)
    return MarketPath(
        params=params, grid=grid, dW1=dW1, dW2=dW2, dW3=dW3,
        mu_D=mu_D, log_D=log_D, x=x, s=s,
    )


def simulate_market_batch(params: EconomyParams, grid: PathGrid, n_paths: int) -> MarketPath:
    """Simulate ``n_paths`` paths at once; arrays gain a leading path axis.

    Row ``p`` equals ``simulate_market_path`` on
    ``grid.with_path_index(grid.path_index + p)`` bit-for-bit.
    """
    return simulate_market_path(params, grid, generate_wiener_batch(grid, n_paths))


def aggregate_increments(increments: WienerIncrements, factor: int) -> WienerIncrements:
    """Sum consecutive groups of ``factor`` fine increments into coarse ones.

    This is the refinement coupling: a grid with ``factor`` times coarser
    steps driven by the aggregated increments sees the same underlying Wiener
    paths at its grid times, which is what makes convergence-order
    measurements across resolutions meaningful.
    """
    if factor < 1:
        raise InputError("factor must be at least 1")
    n = increments.dW1.shape[-1]
    if n % factor != 0:
        raise InputError("n_steps must be divisible by the aggregation factor")

    def agg(a: np.ndarray) -> np.ndarray:
        shaped = a.reshape(a.shape[:-1] + (n // factor, factor))
        return shaped.sum(axis=-1)

    return WienerIncrements(agg(increments.dW1), agg(increments.dW2), agg(increments.dW3))


def write_market_path_csv(stream: IO[str], path: MarketPath) -> None:
    """Emit one (non-batched) path as CSV.

    One row per grid point with columns
    ``time, dW1, dW2, dW3, mu_D, log_D, x, s``; the increment columns hold
    the step starting at that row's time and are empty on the final row.
    """
    if path.log_D.ndim != 1:
        raise InputError("CSV emission expects a single path, not a batch")
    times = path.times
    n = path.grid.n_steps

    def rows():
        for k in range(n + 1):
            inc = (
                (path.dW1[k], path.dW2[k], path.dW3[k]) if k < n else (None, None, None)
            )
            yield (times[k], *inc, path.mu_D[k], path.log_D[k], path.x[k], path.s[k])

    write_csv(stream, ["time", "dW1", "dW2", "dW3", "mu_D", "log_D", "x", "s"], rows())
