"""Who survives in the long run: survival indices and extinction diagnostics.

Each agent carries a scalar survival index

``kappa = rho + (mu_bar - sigma_D^2/2) (gamma + (1 - gamma) beta)
+ ((mu_bar_i - mu_bar)/sigma_D)^2 / 2
+ (xi^2 + (sigma_mu/sigma_D)^2 (1 - phi phi_i))
/ (2 sqrt(xi^2 + (sigma_mu/sigma_D)^2 (1 - phi_i^2)))``

combining impatience, effective risk aversion ``gamma + (1 - gamma) beta``
applied to the economy's growth, the squared long-run forecast error, and a
confidence term that prices how the agent's believed signal quality ``phi_i``
relates to the true one ``phi``.  The agent with the strictly smallest index
dominates: every other agent's consumption share decays exponentially, at
rate ``(kappa_winner - kappa_i)/gamma_i`` per unit time in log share.

For two agents who differ only in believed signal correlation, the winner
has a closed-form description in the ``(phi1, phi2)`` plane (with
``phi1 <= phi <= phi2``): agent 2 wins everywhere once ``phi1`` is below an
``a``-dependent threshold, and otherwise wins exactly below a rational
boundary curve ``phi2*(phi1)``, where ``a = (xi sigma_D / sigma_mu)^2``.
``region_grid`` cross-validates this closed form against the survival-index
argmin on a rectangle of cell centers.

Empirical counterparts (``extinction_slope``, ``tolerance_weights_limit``)
measure share decay and risk-tolerance weights on simulated equilibria over
a trailing window, for comparison against the theoretical rates.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from typing import IO, NamedTuple, Sequence

import numpy as np

from ._util import trailing_window_slice, write_csv
from .equilibrium import AgentPrefs, AgentSpec, EquilibriumPath
from .errors import AmbiguityError, ConfigurationError, InputError
from .filtering import AgentBeliefs
from .paths import EconomyParams

__all__ = [
    "SurvivalReport",
    "DominanceResult",
    "RegionWinner",
    "RegionTable",
    "ExtinctionReport",
    "WeightsLimit",
    "survival_index",
    "effective_risk_aversion",
    "dominant_agent",
    "survival_report",
    "phi1_threshold",
    "phi2_boundary",
    "two_agent_correlation_region",
    "region_grid",
    "extinction_slope",
    "tolerance_weights_limit",
    "write_region_csv",
]

logger = logging.getLogger(__name__)

#: Absolute tolerance under which two survival indices count as tied.
AMBIGUITY_TOLERANCE = 1e-10

#: Distance from the region boundary below which no winner is claimed.
BOUNDARY_TOLERANCE = 1e-12


def survival_index(params: EconomyParams, spec: AgentSpec) -> float:
    """Survival index of one agent under the true model ``params``."""
    prefs, beliefs = spec.prefs, spec.beliefs
    ratio = params.sigma_mu / params.sigma_D
    growth = params.mu_bar - 0.5 * params.sigma_D ** 2
    forecast_error = (beliefs.mu_bar_i - params.mu_bar) / params.sigma_D
    confidence = (params.xi ** 2 + ratio ** 2 * (1.0 - params.phi * beliefs.phi_i)) / (
        2.0 * math.sqrt(params.xi ** 2 + ratio ** 2 * (1.0 - beliefs.phi_i ** 2))
    )
    return (
        prefs.rho
        + growth * effective_risk_aversion(prefs.gamma, prefs.beta)
        + 0.5 * forecast_error ** 2
        + confidence
    )


def effective_risk_aversion(
    gamma: float | np.ndarray, beta: float | np.ndarray
) -> float | np.ndarray:
    """Risk aversion after the habit adjustment: ``gamma + (1 - gamma) beta``.

    Increasing in ``beta`` for ``gamma < 1``, decreasing for ``gamma > 1``,
    and constant at one for ``gamma = 1``.
    """
    return gamma + (1.0 - gamma) * beta


class DominanceResult(NamedTuple):
    """Winner index and its margin over the runner-up."""

    winner: int
    gap: float


def dominant_agent(
    kappas: Sequence[float] | np.ndarray, tolerance: float = AMBIGUITY_TOLERANCE
) -> DominanceResult:
    """Index of the strictly smallest survival index, with its margin.

    A unique minimizer is required: if any other index lies within
    ``tolerance`` of the minimum the configuration is degenerate and an
    ambiguity error naming the tied agents is raised.  A single agent wins
    with an infinite margin.
    """
    arr = np.asarray(kappas, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise InputError("kappas must be a nonempty one-dimensional sequence")
    if not np.all(np.isfinite(arr)):
        raise InputError("kappas must be finite")
    winner = int(np.argmin(arr))
    if arr.size == 1:
        return DominanceResult(winner=winner, gap=math.inf)
    tied = np.flatnonzero(arr <= arr[winner] + tolerance)
    if tied.size > 1:
        raise AmbiguityError(
            "no strictly dominant agent: survival indices "
            f"{[float(arr[i]) for i in tied]} at positions {tied.tolist()} "
            f"are tied within {tolerance!r}",
            indices=tuple(int(i) for i in tied),
        )
    rest = np.delete(arr, winner)
    return DominanceResult(winner=winner, gap=float(rest.min() - arr[winner]))


@dataclass(frozen=True)
class SurvivalReport:
    """Per-agent survival indices with the dominant agent singled out."""

    kappa: np.ndarray
    winner: int
    gap: float
    effective_gamma: np.ndarray


def survival_report(
    params: EconomyParams,
    agents: Sequence[AgentSpec],
    tolerance: float = AMBIGUITY_TOLERANCE,
) -> SurvivalReport:
    """Compute all survival indices and identify the dominant agent."""
    if not agents:
        raise InputError("at least one agent is required")
    kappa = np.array([survival_index(params, spec) for spec in agents])
    winner, gap = dominant_agent(kappa, tolerance=tolerance)
    effective = np.array(
        [effective_risk_aversion(s.prefs.gamma, s.prefs.beta) for s in agents]
    )
    return SurvivalReport(
        kappa=kappa, winner=winner, gap=gap, effective_gamma=effective
    )


class RegionWinner(enum.Enum):
    """Outcome of the two-agent correlation-region classification."""

    AGENT1 = "agent1"
    AGENT2 = "agent2"
    BOUNDARY = "boundary"


def _check_region_params(a: float, phi: float) -> None:
    if not (math.isfinite(a) and a > 0.0):
        raise ConfigurationError(f"a must be positive, got {a!r}")
    if not (math.isfinite(phi) and 0.0 <= phi < 1.0):
        raise ConfigurationError(f"phi must lie in [0, 1), got {phi!r}")


def phi1_threshold(a: float, phi: float) -> float:
    """Below this ``phi1`` value agent 2 wins for every admissible ``phi2``.

    ``t1 = 2 a phi (1 + a) / (a phi^2 + (a + 1 - phi)^2) - 1``.
    """
    _check_region_params(a, phi)
    return 2.0 * a * phi * (1.0 + a) / (a * phi ** 2 + (a + 1.0 - phi) ** 2) - 1.0


def phi2_boundary(a: float, phi: float, phi1: float) -> float:
    """The ``phi2`` level on the winner boundary above a given ``phi1``.

    ``phi2* = (2 (a + 1) phi - (a + 1 + phi^2) phi1)
    / (a + 1 + phi^2 - 2 phi phi1)``; the denominator is bounded below by
    ``a + 1 - phi^2 > 0``.  For ``phi1`` at or below :func:`phi1_threshold`
    the value exceeds the admissible range (the boundary has left the
    rectangle); at ``phi1 = phi`` it returns ``phi`` exactly.
    """
    _check_region_params(a, phi)
    s = a + 1.0 + phi ** 2
    return (2.0 * (a + 1.0) * phi - s * phi1) / (s - 2.0 * phi * phi1)


def two_agent_correlation_region(
    a: float, phi: float, phi1: float, phi2: float
) -> RegionWinner:
    """Closed-form winner between two agents differing only in ``phi_i``.

    Requires ``phi1 <= phi <= phi2`` (agent 1 under-estimates the signal
    correlation, agent 2 over-estimates).  Agent 2 wins whenever
    ``phi1 <= phi1_threshold(a, phi)``; otherwise agent 2 wins exactly when
    ``phi2`` lies below the boundary curve :func:`phi2_boundary`.  Points
    within ``1e-12`` of the curve are flagged as boundary — no winner is
    claimed there.
    """
    _check_region_params(a, phi)
    for name, value in (("phi1", phi1), ("phi2", phi2)):
        if not math.isfinite(value):
            raise ConfigurationError(f"{name} must be finite, got {value!r}")
    if not (-1.0 <= phi1 <= phi <= phi2 < 1.0):
        raise ConfigurationError(
            f"need -1 <= phi1 <= phi <= phi2 < 1, got "
            f"phi1={phi1!r}, phi={phi!r}, phi2={phi2!r}"
        )
    if phi1 <= phi1_threshold(a, phi):
        return RegionWinner.AGENT2
    curve = phi2_boundary(a, phi, phi1)
    if abs(phi2 - curve) <= BOUNDARY_TOLERANCE:
        return RegionWinner.BOUNDARY
    return RegionWinner.AGENT2 if phi2 < curve else RegionWinner.AGENT1


def _region_economy(a: float, phi: float) -> EconomyParams:
    """A normalized economy whose survival indices isolate the phi terms.

    With unit volatilities, ``xi = sqrt(a)`` reproduces the requested ``a``;
    the growth term is zeroed so only the confidence term varies with the
    believed correlation.
    """
    return EconomyParams(
        xi=math.sqrt(a),
        mu_bar=0.5,
        mu0=0.5,
        sigma_D=1.0,
        sigma_mu=1.0,
        phi=phi,
        lam=0.0,
    )


def _argmin_winner(
    params: EconomyParams, phi1: float, phi2: float
) -> tuple[RegionWinner, float, float]:
    """Survival-index comparison of the two region agents at one cell."""
    prefs = AgentPrefs(gamma=1.0, rho=0.0, beta=0.0, c0=0.5)
    kappa1 = survival_index(
        params, AgentSpec(prefs, AgentBeliefs(params.mu_bar, params.mu0, phi1))
    )
    kappa2 = survival_index(
        params, AgentSpec(prefs, AgentBeliefs(params.mu_bar, params.mu0, phi2))
    )
    try:
        winner, _ = dominant_agent([kappa1, kappa2])
    except AmbiguityError:
        return RegionWinner.BOUNDARY, kappa1, kappa2
    return (
        RegionWinner.AGENT1 if winner == 0 else RegionWinner.AGENT2,
        kappa1,
        kappa2,
    )


@dataclass(frozen=True)
class RegionTable:
    """Cell-center classification of the two-agent correlation rectangle.

    ``winner_closed_form`` and ``winner_argmin`` hold :class:`RegionWinner`
    values per cell (axis 0 indexes ``phi1``, axis 1 indexes ``phi2``);
    ``boundary_distance`` is the Euclidean distance from each cell center to
    the sampled boundary curve, and ``mismatches`` counts disagreements on
    cells farther than ``band`` from the curve.
    """

    a: float
    phi: float
    phi1: np.ndarray
    phi2: np.ndarray
    winner_closed_form: np.ndarray
    winner_argmin: np.ndarray
    kappa1: np.ndarray
    kappa2: np.ndarray
    boundary_distance: np.ndarray
    band: float
    mismatches: int


def region_grid(
    a: float,
    phi: float,
    phi1_range: tuple[float, float] = (-1.0, 0.5),
    phi2_range: tuple[float, float] = (0.5, 1.0),
    n1: int = 21,
    n2: int = 21,
    band: float = 1e-3,
) -> RegionTable:
    """Classify an ``n1 x n2`` grid of cell centers both ways.

    Each cell center is classified by the closed-form region formulas and,
    independently, by the argmin of the two survival indices; the two must
    agree away from the boundary curve.  Cells within ``band`` of the curve
    (where both classifiers are discontinuous) are excluded from the
    mismatch count, as are cells flagged as boundary/tied by either
    classifier.  Cell centers with ``phi1 = phi2 = phi`` are degenerate
    (identical agents) and come back as boundary.
    """
    _check_region_params(a, phi)
    if n1 < 1 or n2 < 1:
        raise ConfigurationError("grid must have at least one cell per axis")
    lo1, hi1 = map(float, phi1_range)
    lo2, hi2 = map(float, phi2_range)
    if not (-1.0 <= lo1 < hi1 <= phi and phi <= lo2 < hi2 <= 1.0):
        raise ConfigurationError(
            "need -1 <= phi1 range <= phi <= phi2 range <= 1, got "
            f"{phi1_range!r} x {phi2_range!r} around phi={phi!r}"
        )

    centers1 = lo1 + (np.arange(n1) + 0.5) * (hi1 - lo1) / n1
    centers2 = lo2 + (np.arange(n2) + 0.5) * (hi2 - lo2) / n2
    params = _region_economy(a, phi)

    # Boundary curve sampled densely for distance-to-curve measurements.
    t1 = phi1_threshold(a, phi)
    u = np.linspace(max(t1, lo1), phi, 20001)
    curve = np.array([phi2_boundary(a, phi, ui) for ui in u])
    keep = curve <= hi2
    curve_pts = np.column_stack([u[keep], curve[keep]])

    closed = np.empty((n1, n2), dtype=object)
    argmin = np.empty((n1, n2), dtype=object)
    kappa1 = np.empty((n1, n2))
    kappa2 = np.empty((n1, n2))
    distance = np.empty((n1, n2))
    mismatches = 0
    for i, p1 in enumerate(centers1):
        for j, p2 in enumerate(centers2):
            closed[i, j] = two_agent_correlation_region(a, phi, p1, p2)
            argmin[i, j], kappa1[i, j], kappa2[i, j] = _argmin_winner(
                params, p1, p2
            )
            if curve_pts.size:
                distance[i, j] = float(
                    np.min(np.hypot(curve_pts[:, 0] - p1, curve_pts[:, 1] - p2))
                )
            else:
                distance[i, j] = math.inf
            off_band = distance[i, j] > band
            flagged = RegionWinner.BOUNDARY in (closed[i, j], argmin[i, j])
            if off_band and not flagged and closed[i, j] != argmin[i, j]:
                mismatches += 1
    return RegionTable(
        a=a,
        phi=phi,
        phi1=centers1,
        phi2=centers2,
        winner_closed_form=closed,
        winner_argmin=argmin,
        kappa1=kappa1,
        kappa2=kappa2,
        boundary_distance=distance,
        band=band,
        mismatches=mismatches,
    )


def write_region_csv(stream: IO[str], table: RegionTable) -> None:
    """Write the region classification as CSV, one row per cell."""
    header = [
        "phi1",
        "phi2",
        "winner_closed_form",
        "winner_argmin",
        "kappa1",
        "kappa2",
    ]

    def rows():
        for i, p1 in enumerate(table.phi1):
            for j, p2 in enumerate(table.phi2):
                yield [
                    p1,
                    p2,
                    table.winner_closed_form[i, j].value,
                    table.winner_argmin[i, j].value,
                    table.kappa1[i, j],
                    table.kappa2[i, j],
                ]

    write_csv(stream, header, rows())


class ExtinctionReport(NamedTuple):
    """Empirical versus theoretical log-share-ratio slopes per agent."""

    empirical: np.ndarray
    theoretical: np.ndarray
    winner: int
    window_start: int


def extinction_slope(
    times: np.ndarray,
    shares: np.ndarray,
    kappas: Sequence[float] | np.ndarray,
    gammas: Sequence[float] | np.ndarray,
    window_fraction: float = 0.5,
    winner: int | None = None,
) -> ExtinctionReport:
    """Least-squares decay rate of each agent's log share ratio.

    For each agent ``i`` the empirical slope is fit to
    ``log(share_i(t) / share_winner(t))`` over the trailing
    ``window_fraction`` of the horizon and compared against the theoretical
    ``(kappa_winner - kappa_i) / gamma_i``.  ``winner`` defaults to the
    argmin of ``kappas`` (no ambiguity check here, so identical agents
    report slope zero).  Time points where a share has underflowed to zero
    are dropped with a logged warning; an agent with fewer than two usable
    points reports ``nan``.
    """
    times = np.asarray(times, dtype=float)
    shares = np.asarray(shares, dtype=float)
    kappas = np.asarray(kappas, dtype=float)
    gammas = np.asarray(gammas, dtype=float)
    if shares.ndim != 2 or shares.shape[1] != times.shape[0]:
        raise InputError(
            f"shares must have shape (n_agents, {times.shape[0]}), "
            f"got {shares.shape}"
        )
    n_agents = shares.shape[0]
    if kappas.shape != (n_agents,) or gammas.shape != (n_agents,):
        raise InputError("kappas and gammas must have one entry per agent")
    if winner is None:
        winner = int(np.argmin(kappas))
    elif not 0 <= winner < n_agents:
        raise InputError(f"winner index {winner!r} out of range")

    window = trailing_window_slice(times.shape[0], window_fraction)
    t_win = times[window]
    empirical = np.empty(n_agents)
    truncated = 0
    for i in range(n_agents):
        ratio = shares[i, window]
        base = shares[winner, window]
        valid = (ratio > 0.0) & (base > 0.0)
        if np.count_nonzero(valid) < 2:
            empirical[i] = math.nan
            truncated += 1
            continue
        if not np.all(valid):
            truncated += 1
        y = np.log(ratio[valid] / base[valid])
        empirical[i] = float(np.polyfit(t_win[valid], y, 1)[0])
    if truncated:
        logger.warning(
            "extinction_slope: %d agent(s) had underflowed shares in the "
            "window; their fits use the truncated window",
            truncated,
        )
    theoretical = (kappas[winner] - kappas) / gammas
    return ExtinctionReport(
        empirical=empirical,
        theoretical=theoretical,
        winner=winner,
        window_start=window.start,
    )


class WeightsLimit(NamedTuple):
    """Trailing risk-tolerance weights of an equilibrium run."""

    final: np.ndarray
    trailing_mean: np.ndarray
    window_start: int


def tolerance_weights_limit(
    eq: EquilibriumPath, window_fraction: float = 0.5
) -> WeightsLimit:
    """Report per-agent risk-tolerance weights over the trailing window.

    The dominant agent's weight approaches one as its share does; callers
    compare ``final[winner]`` (or the trailing mean) against their
    threshold.
    """
    if eq.omega.ndim != 2:
        raise InputError("tolerance_weights_limit expects a single-path run")
    window = trailing_window_slice(eq.omega.shape[1], window_fraction)
    return WeightsLimit(
        final=eq.omega[:, -1].copy(),
        trailing_mean=eq.omega[:, window].mean(axis=1),
        window_start=window.start,
    )
