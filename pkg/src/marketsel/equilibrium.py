"""Market clearing: from per-agent pricing kernels to the equilibrium one.

Each agent, if alone in the economy, would price consumption with a kernel
``M_i`` determined by their preferences and their filtered beliefs:

``log M_i(t) = -rho_i t - gamma_i log D(t) + log Z_i(t)
+ (gamma_i - 1) beta_i x(t)``.

With many agents the equilibrium kernel ``M`` solves the market-clearing
equation ``sum_i c0_i (M_i/M)^{1/gamma_i} = 1`` at every time: the left side
is each agent's optimal consumption share, so the shares sum to the dividend.
The left side is strictly decreasing in ``M`` from ``+inf`` to ``0``, so the
root exists, is unique, and brackets cheaply.

All kernel levels are carried in log space end to end — over long horizons
``M_i`` spans hundreds of e-folds, and ratios ``M_i/M`` are only ever formed
as ``exp`` of log differences.  The clearing solve runs in ``log M`` with a
bracketed, safeguarded Newton iteration (bisection fallback) to relative
tolerance ``1e-12``; contributions of agents so dominated that their share
underflows below ``1e-300`` are dropped from the clearing sum with a logged
warning, which is the correct limiting behavior.

Per-agent interest rates and prices of risk follow the single-agent formulas
``r_i = rho_i + gamma_i mu_i - sigma_D^2 gamma_i (gamma_i + 1)/2
- beta_i (gamma_i - 1)(x - log D)`` and ``theta_i = gamma_i sigma_D -
delta_i``; the heterogeneous-economy rates blend them through
risk-tolerance weights ``omega_i`` proportional to ``share_i / gamma_i``,
with a convexity correction on the interest rate.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import IO, NamedTuple, Sequence

import numpy as np

from ._util import write_csv
from .errors import ConfigurationError, ConvergenceError, InputError
from .filtering import (
    AgentBeliefs,
    FilterPath,
    run_agent_filter,
    run_rational_agent,
)
from .paths import EconomyParams, MarketPath, PathGrid, simulate_market_batch

__all__ = [
    "AgentPrefs",
    "AgentSpec",
    "RatePair",
    "EquilibriumPoint",
    "EquilibriumPath",
    "homogeneous_spd",
    "homogeneous_rates",
    "clear_market",
    "consumption_shares",
    "risk_tolerance_weights",
    "heterogeneous_rates",
    "check_initial_consumption",
    "compute_equilibrium_path",
    "simulate_equilibrium",
    "write_equilibrium_csv",
]

logger = logging.getLogger(__name__)

#: Clearing-sum contributions below this level are treated as exactly zero.
_DROP_LEVEL = math.log(1e-300)

#: Relative tolerance (in log M, hence relative in M) of the clearing solve.
_CLEARING_TOL = 1e-12

#: Iteration cap of the clearing solve.
_CLEARING_MAX_ITER = 200


@dataclass(frozen=True)
class AgentPrefs:
    """One agent's preference parameters.

    Attributes
    ----------
    gamma:
        Relative risk aversion, ``> 0`` (``gamma = 1`` is allowed; no
        utility normalization ever enters the computed formulas).
    rho:
        Time-preference (impatience) rate.
    beta:
        Habit strength, ``>= 0``; scales how the living-standard index
        enters marginal utility.
    c0:
        Initial consumption level, ``> 0``.  Across the agents of one
        economy these must sum to the initial dividend ``1``.
    """

    gamma: float
    rho: float
    beta: float
    c0: float

    def __post_init__(self) -> None:
        for name in ("gamma", "rho", "beta", "c0"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ConfigurationError(f"{name} must be finite, got {value!r}")
        if not self.gamma > 0.0:
            raise ConfigurationError(f"gamma must be > 0, got {self.gamma!r}")
        if not self.beta >= 0.0:
            raise ConfigurationError(f"beta must be >= 0, got {self.beta!r}")
        if not self.c0 > 0.0:
            raise ConfigurationError(f"c0 must be > 0, got {self.c0!r}")


@dataclass(frozen=True)
class AgentSpec:
    """Preferences and beliefs of one agent, bundled."""

    prefs: AgentPrefs
    beliefs: AgentBeliefs


class RatePair(NamedTuple):
    """Interest rate and market price of risk (elementwise arrays or scalars)."""

    r: np.ndarray | float
    theta: np.ndarray | float


def homogeneous_spd(
    prefs: AgentPrefs, path: MarketPath, record: FilterPath
) -> np.ndarray:
    """Log pricing-kernel levels of an economy populated by this agent alone.

    ``log M_i = -rho t - gamma log D + log Z_i + (gamma - 1) beta x``; the
    result stays in log space (exponentiate for levels — over long horizons
    the levels themselves overflow).
    """
    if record.mu.shape[-1] != path.log_D.shape[-1]:
        raise InputError(
            f"filter record has {record.mu.shape[-1]} levels, "
            f"expected {path.log_D.shape[-1]}"
        )
    times = path.grid.times()
    return (
        -prefs.rho * times
        - prefs.gamma * path.log_D
        + record.log_Z
        + (prefs.gamma - 1.0) * prefs.beta * path.x
    )


def homogeneous_rates(
    params: EconomyParams,
    prefs: AgentPrefs,
    mu_i: np.ndarray | float,
    delta: np.ndarray | float,
    x: np.ndarray | float,
    log_D: np.ndarray | float,
) -> RatePair:
    """Interest rate and price of risk of this agent's one-agent economy.

    ``r = rho + gamma mu_i - sigma_D^2 gamma (gamma + 1) / 2
    - beta (gamma - 1) (x - log D)`` and ``theta = gamma sigma_D - delta``,
    evaluated elementwise.
    """
    gamma = prefs.gamma
    r = (
        prefs.rho
        + gamma * np.asarray(mu_i, dtype=float)
        - 0.5 * params.sigma_D ** 2 * gamma * (gamma + 1.0)
        - prefs.beta * (gamma - 1.0) * (np.asarray(x, float) - np.asarray(log_D, float))
    )
    theta = gamma * params.sigma_D - np.asarray(delta, dtype=float)
    return RatePair(r=r, theta=theta)


def _log_weights(prefs: Sequence[AgentPrefs]) -> tuple[np.ndarray, np.ndarray]:
    """Per-agent ``log c0`` and ``gamma`` as arrays; validates positivity."""
    if not prefs:
        raise InputError("at least one agent is required")
    gammas = np.array([p.gamma for p in prefs], dtype=float)
    log_c0 = np.array([math.log(p.c0) for p in prefs], dtype=float)
    return log_c0, gammas


def clear_market(
    prefs: Sequence[AgentPrefs], log_M_homog: np.ndarray
) -> float | np.ndarray:
    """Solve the market-clearing equation for the equilibrium log kernel.

    ``log_M_homog`` holds the per-agent log kernel levels along axis 0; any
    trailing shape (time grid, batch of paths) is solved elementwise.  The
    root of ``g(m) = sum_i c0_i exp((log M_i - m)/gamma_i) - 1`` is found by
    a bracketed Newton iteration in ``m = log M`` with bisection fallback;
    ``g`` is strictly decreasing and convex in ``m``, so Newton steps from
    the lower bracket converge monotonically.  Relative tolerance ``1e-12``;
    more than 200 iterations raises a convergence error carrying the final
    bracket.  Returns ``log M`` with the trailing shape (a scalar for a
    single point).
    """
    log_M_homog = np.asarray(log_M_homog, dtype=float)
    log_c0, gammas = _log_weights(prefs)
    if log_M_homog.ndim == 0 or log_M_homog.shape[0] != len(prefs):
        raise InputError(
            f"log_M_homog must have leading axis of length {len(prefs)}, "
            f"got shape {log_M_homog.shape}"
        )
    if not np.all(np.isfinite(log_M_homog)):
        raise InputError("log_M_homog must be finite")

    scalar = log_M_homog.ndim == 1
    levels = log_M_homog.reshape(len(prefs), -1)
    lead = (len(prefs), 1)
    ell = levels + 0.0
    log_c0_col = log_c0.reshape(lead)
    gammas_col = gammas.reshape(lead)

    # g(lo) >= 0 because the maximizing agent's term alone is >= 1 there;
    # g(hi) <= 0 because every term is <= 1/N there.
    lo = np.max(ell + gammas_col * log_c0_col, axis=0)
    hi = np.max(ell + gammas_col * (log_c0_col + math.log(len(prefs))), axis=0)
    m = lo.copy()
    dropped = 0

    def evaluate(points: np.ndarray, cols: np.ndarray):
        nonlocal dropped
        u = log_c0_col + (ell[:, cols] - points) / gammas_col
        small = u < _DROP_LEVEL
        if np.any(small):
            dropped += int(np.count_nonzero(small))
        with np.errstate(over="ignore"):
            terms = np.where(small, 0.0, np.exp(u))
        g = terms.sum(axis=0) - 1.0
        slope = (terms / gammas_col).sum(axis=0)
        return g, slope

    active = np.arange(m.shape[0])
    g, slope = evaluate(m, active)
    converged = False
    for _ in range(_CLEARING_MAX_ITER):
        still = (np.abs(g) > 1e-13) & (
            hi[active] - lo[active]
            > _CLEARING_TOL * np.maximum(1.0, np.abs(m[active]))
        )
        active = active[still]
        if active.size == 0:
            converged = True
            break
        g = g[still]
        slope = slope[still]
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = m[active] + g / slope
        midpoint = 0.5 * (lo[active] + hi[active])
        inside = (newton > lo[active]) & (newton < hi[active]) & np.isfinite(newton)
        proposal = np.where(inside, newton, midpoint)
        g, slope = evaluate(proposal, active)
        above = g > 0.0
        lo[active] = np.where(above, proposal, lo[active])
        hi[active] = np.where(above, hi[active], proposal)
        m[active] = proposal
    if not converged:
        first = int(active[0])
        raise ConvergenceError(
            f"market clearing failed to converge within {_CLEARING_MAX_ITER} "
            f"iterations at {active.size} grid point(s)",
            bracket=(float(lo[first]), float(hi[first])),
            time_index=first,
        )

    if dropped:
        logger.warning(
            "market clearing dropped %d dominated contribution(s) below 1e-300",
            dropped,
        )
    result = m.reshape(log_M_homog.shape[1:])
    if scalar:
        return float(result)
    return result


def consumption_shares(
    prefs: Sequence[AgentPrefs],
    log_M_homog: np.ndarray,
    log_M: float | np.ndarray,
) -> np.ndarray:
    """Per-agent consumption shares ``c0_i exp((log M_i - log M)/gamma_i)``.

    With ``log M`` from :func:`clear_market` the shares sum to one; shares of
    heavily dominated agents underflow smoothly to zero.
    """
    log_M_homog = np.asarray(log_M_homog, dtype=float)
    log_c0, gammas = _log_weights(prefs)
    lead = (len(prefs),) + (1,) * (log_M_homog.ndim - 1)
    return np.exp(
        log_c0.reshape(lead)
        + (log_M_homog - np.asarray(log_M, dtype=float)) / gammas.reshape(lead)
    )


def risk_tolerance_weights(
    gammas: Sequence[float] | np.ndarray, shares: np.ndarray
) -> np.ndarray:
    """Relative risk-tolerance weights ``(share_i/gamma_i) / sum_j (...)``."""
    shares = np.asarray(shares, dtype=float)
    gammas = np.asarray(gammas, dtype=float)
    lead = (shares.shape[0],) + (1,) * (shares.ndim - 1)
    scaled = shares / gammas.reshape(lead)
    return scaled / scaled.sum(axis=0, keepdims=True)


def heterogeneous_rates(
    omega: np.ndarray,
    r_homog: np.ndarray,
    theta_homog: np.ndarray,
    gammas: Sequence[float] | np.ndarray,
) -> RatePair:
    """Blend one-agent rates into the heterogeneous-economy rates.

    The price of risk is the risk-tolerance-weighted average
    ``theta = sum_i omega_i theta_i`` (computed first); the interest rate
    adds a convexity correction,
    ``r = sum_i omega_i r_i
    + (1/2) sum_i (1 - 1/gamma_i) omega_i (theta_i - theta)^2``.
    Inputs carry agents along axis 0; trailing axes are elementwise.
    """
    omega = np.asarray(omega, dtype=float)
    r_homog = np.asarray(r_homog, dtype=float)
    theta_homog = np.asarray(theta_homog, dtype=float)
    gammas = np.asarray(gammas, dtype=float)
    lead = (omega.shape[0],) + (1,) * (omega.ndim - 1)
    theta = (omega * theta_homog).sum(axis=0)
    correction = 0.5 * (
        (1.0 - 1.0 / gammas.reshape(lead)) * omega * (theta_homog - theta) ** 2
    ).sum(axis=0)
    r = (omega * r_homog).sum(axis=0) + correction
    return RatePair(r=r, theta=theta)


@dataclass(frozen=True)
class EquilibriumPoint:
    """Equilibrium quantities at a single grid time.

    ``M`` and ``M_homog`` are levels (exponentiated); per-agent vectors are
    indexed like the agent list that produced them.
    """

    M: float
    M_homog: np.ndarray
    shares: np.ndarray
    omega: np.ndarray
    r: float
    theta: float
    r_homog: np.ndarray
    theta_homog: np.ndarray


@dataclass(frozen=True)
class EquilibriumPath:
    """Equilibrium quantities along one path (or a batch of paths).

    Kernel levels are stored in log space (``log_M``, ``log_M_homog``);
    per-agent arrays carry agents along axis 0 over the same grid as the
    embedded market path.  ``market``, ``rational`` and ``filters`` keep the
    inputs that produced the equilibrium so downstream diagnostics can reuse
    them without re-simulation.
    """

    market: MarketPath
    rational: FilterPath
    filters: tuple[FilterPath, ...]
    log_M: np.ndarray
    log_M_homog: np.ndarray
    shares: np.ndarray
    omega: np.ndarray
    r: np.ndarray
    theta: np.ndarray
    r_homog: np.ndarray
    theta_homog: np.ndarray

    def __post_init__(self) -> None:
        base = self.market.log_D.shape
        per_agent = (len(self.filters),) + base
        for name, expected in (
            ("log_M", base),
            ("r", base),
            ("theta", base),
            ("log_M_homog", per_agent),
            ("shares", per_agent),
            ("omega", per_agent),
            ("r_homog", per_agent),
            ("theta_homog", per_agent),
        ):
            if getattr(self, name).shape != expected:
                raise InputError(
                    f"{name} has shape {getattr(self, name).shape}, "
                    f"expected {expected}"
                )

    @property
    def times(self) -> np.ndarray:
        return self.market.grid.times()

    @property
    def M(self) -> np.ndarray:
        """Equilibrium kernel levels; may overflow for extreme horizons."""
        return np.exp(self.log_M)

    @property
    def n_agents(self) -> int:
        return len(self.filters)

    def at(self, k: int) -> EquilibriumPoint:
        """Single-time view with exponentiated kernel levels (single path)."""
        if self.log_M.ndim != 1:
            raise InputError("at() requires a single-path equilibrium")
        return EquilibriumPoint(
            M=float(np.exp(self.log_M[k])),
            M_homog=np.exp(self.log_M_homog[:, k]),
            shares=self.shares[:, k],
            omega=self.omega[:, k],
            r=float(self.r[k]),
            theta=float(self.theta[k]),
            r_homog=self.r_homog[:, k],
            theta_homog=self.theta_homog[:, k],
        )


def check_initial_consumption(agents: Sequence[AgentSpec]) -> None:
    """Validate that initial consumptions sum to the unit initial dividend."""
    if not agents:
        raise ConfigurationError("at least one agent is required")
    total = math.fsum(spec.prefs.c0 for spec in agents)
    if abs(total - 1.0) > 1e-12:
        raise ConfigurationError(
            f"initial consumptions must sum to 1 within 1e-12, got {total!r}"
        )


def compute_equilibrium_path(
    params: EconomyParams, agents: Sequence[AgentSpec], path: MarketPath
) -> EquilibriumPath:
    """Run filters, clear the market, and assemble rates along one path.

    Accepts a batched market path (leading path axis) as well; all outputs
    then carry the same batch axis.
    """
    check_initial_consumption(agents)
    prefs = [spec.prefs for spec in agents]
    gammas = np.array([p.gamma for p in prefs])

    rational = run_rational_agent(params, path)
    filters = tuple(
        run_agent_filter(params, spec.beliefs, path, rational=rational)
        for spec in agents
    )
    log_M_homog = np.stack(
        [homogeneous_spd(p, path, rec) for p, rec in zip(prefs, filters)]
    )
    log_M = np.asarray(clear_market(prefs, log_M_homog))
    shares = consumption_shares(prefs, log_M_homog, log_M)
    omega = risk_tolerance_weights(gammas, shares)
    rates = [
        homogeneous_rates(params, p, rec.mu, rec.delta, path.x, path.log_D)
        for p, rec in zip(prefs, filters)
    ]
    r_homog = np.stack([pair.r for pair in rates])
    theta_homog = np.stack([pair.theta for pair in rates])
    r, theta = heterogeneous_rates(omega, r_homog, theta_homog, gammas)
    return EquilibriumPath(
        market=path,
        rational=rational,
        filters=filters,
        log_M=log_M,
        log_M_homog=log_M_homog,
        shares=shares,
        omega=omega,
        r=r,
        theta=theta,
        r_homog=r_homog,
        theta_homog=theta_homog,
    )


def _slice_market(path: MarketPath, grid: PathGrid, p: int) -> MarketPath:
    return MarketPath(
        params=path.params,
        grid=grid,
        dW1=path.dW1[p],
        dW2=path.dW2[p],
        dW3=path.dW3[p],
        mu_D=path.mu_D[p],
        log_D=path.log_D[p],
        x=path.x[p],
        s=path.s[p],
    )


def _slice_filter(record: FilterPath, p: int) -> FilterPath:
    return FilterPath(
        mu=record.mu[p],
        delta=record.delta[p],
        log_Z=record.log_Z[p],
        dW0=None if record.dW0 is None else record.dW0[p],
    )


def _slice_equilibrium(
    batched: EquilibriumPath, grid: PathGrid, p: int
) -> EquilibriumPath:
    return EquilibriumPath(
        market=_slice_market(batched.market, grid, p),
        rational=_slice_filter(batched.rational, p),
        filters=tuple(_slice_filter(rec, p) for rec in batched.filters),
        log_M=batched.log_M[p],
        log_M_homog=batched.log_M_homog[:, p],
        shares=batched.shares[:, p],
        omega=batched.omega[:, p],
        r=batched.r[p],
        theta=batched.theta[p],
        r_homog=batched.r_homog[:, p],
        theta_homog=batched.theta_homog[:, p],
    )


def _simulate_chunk(
    params: EconomyParams,
    agents: Sequence[AgentSpec],
    grid: PathGrid,
    count: int,
) -> EquilibriumPath:
    """Batched equilibrium for ``count`` consecutive path indices."""
    batch = simulate_market_batch(params, grid, count)
    return compute_equilibrium_path(params, agents, batch)


def simulate_equilibrium(
    params: EconomyParams,
    agents: Sequence[AgentSpec],
    grid: PathGrid,
    n_paths: int = 1,
    threads: int = 1,
) -> list[EquilibriumPath]:
    """End-to-end pipeline: paths, filters, clearing, shares, and rates.

    Returns one single-path :class:`EquilibriumPath` per path index
    ``grid.path_index, ..., grid.path_index + n_paths - 1``.  Every path is
    deterministic in ``(seed, path_index)`` alone, so results are identical
    whatever ``threads`` is; with ``threads > 1`` the paths are split into
    contiguous chunks across worker processes.
    """
    if n_paths < 1:
        raise InputError(f"n_paths must be >= 1, got {n_paths!r}")
    if threads < 1:
        raise InputError(f"threads must be >= 1, got {threads!r}")
    check_initial_consumption(agents)

    agents = tuple(agents)
    if threads == 1:
        chunks = [(grid, n_paths)]
        batches = [_simulate_chunk(params, agents, grid, n_paths)]
    else:
        bounds = np.linspace(0, n_paths, min(threads, n_paths) + 1).astype(int)
        chunks = [
            (grid.with_path_index(grid.path_index + int(start)), int(stop - start))
            for start, stop in zip(bounds[:-1], bounds[1:])
            if stop > start
        ]
        with ProcessPoolExecutor(max_workers=len(chunks)) as pool:
            batches = list(
                pool.map(
                    _simulate_chunk,
                    *zip(*((params, agents, g, count) for g, count in chunks)),
                )
            )

    results: list[EquilibriumPath] = []
    for (chunk_grid, count), batch in zip(chunks, batches):
        for p in range(count):
            results.append(
                _slice_equilibrium(
                    batch, chunk_grid.with_path_index(chunk_grid.path_index + p), p
                )
            )
    return results


def write_equilibrium_csv(stream: IO[str], eq: EquilibriumPath) -> None:
    """Write one path's equilibrium as CSV.

    Columns: time, log kernel level, per-agent shares, per-agent weights,
    interest rate, price of risk, then per-agent one-agent-economy rates.
    Agent columns are numbered from 1 in agent-list order.
    """
    if eq.log_M.ndim != 1:
        raise InputError("write_equilibrium_csv expects a single-path record")
    n = eq.n_agents
    idx = range(1, n + 1)
    header = (
        ["time", "log_M"]
        + [f"share_{i}" for i in idx]
        + [f"omega_{i}" for i in idx]
        + ["r", "theta"]
        + [f"r_homog_{i}" for i in idx]
        + [f"theta_homog_{i}" for i in idx]
    )
    times = eq.times

    def rows():
        for k in range(times.shape[0]):
            yield (
                [times[k], eq.log_M[k]]
                + list(eq.shares[:, k])
                + list(eq.omega[:, k])
                + [eq.r[k], eq.theta[k]]
                + list(eq.r_homog[:, k])
                + list(eq.theta_homog[:, k])
            )

    write_csv(stream, header, rows())
