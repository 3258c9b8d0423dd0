"""Numerical verification of long-run limits.

Three families of checks live here:

* **Ergodic time averages.**  A catalog of twelve functionals — time
  averages of products of exponentially-weighted (Ornstein-Uhlenbeck-type)
  stochastic integrals over one or two Brownian drivers — each with an exact
  long-run limit (zero for the mixed/independent cases, simple rational
  expressions in the rate parameters otherwise).  ``estimate_limit``
  discretizes the nested integrals by left-point Euler sums on a uniform
  grid and averages across seeds; ``closed_form_limit`` supplies the exact
  value.  The quadratic-variation probe covers the one catalogued object
  whose limit is infinite: its discretized quadratic variation must keep
  growing across doubling horizons.

* **Decay rates.**  ``fit_decay_rate`` extracts exponential rates from
  error series (filter variance and growth-factor residuals decay at known
  multiples of ``alpha2 + xi``).

* **Equilibrium asymptotics.**  Diagnostics on simulated equilibria:
  pathwise drift averages against their ergodic limits
  (``drift_limits_check``), decay of the gaps between the equilibrium rates
  and the dominant agent's one-agent rates (``rate_gap_series``), and a
  divergence probe for dominated agents reporting running maxima on a
  law-of-the-iterated-logarithm scale.  Divergence is graded as a growth
  trend, never as a finite-horizon pass/fail: unbounded-limsup statements
  are not decidable at desk scale.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import IO, Callable, NamedTuple, Sequence

import numpy as np

from ._util import trailing_window_slice, write_csv
from .equilibrium import AgentSpec, EquilibriumPath
from .errors import ConfigurationError, InputError
from .paths import (
    EconomyParams,
    PathGrid,
    WienerIncrements,
    _zero_state_ar1,
    generate_wiener,
)

__all__ = [
    "LEMMA_IDS",
    "FunctionalId",
    "LimitEstimate",
    "QvGrowthProbe",
    "DriftLimitsReport",
    "RateGaps",
    "DivergenceProbe",
    "closed_form_limit",
    "estimate_limit",
    "default_functional_suite",
    "limit_status",
    "fit_decay_rate",
    "qv_growth_probe",
    "drift_limits_check",
    "rate_gap_series",
    "divergence_probe",
    "theta_gap_limit",
    "r_gap_limit",
    "write_limit_report_csv",
]

logger = logging.getLogger(__name__)

#: Functional identifiers in catalog order.
LEMMA_IDS = (
    "L5.2.ii",
    "L5.2.iii",
    "L5.3.i",
    "L5.3.ii",
    "L5.4.i",
    "L5.4.ii",
    "L5.4.iii",
    "L5.5.i",
    "L5.5.ii",
    "L5.5.iii",
    "L5.5.iv",
    "L5.5.v",
)

#: Rate parameters each functional requires.
_REQUIRED: dict[str, tuple[str, ...]] = {
    "L5.2.ii": ("a",),
    "L5.2.iii": ("a", "b"),
    "L5.3.i": ("a",),
    "L5.3.ii": ("a", "b"),
    "L5.4.i": ("a", "b"),
    "L5.4.ii": ("a",),
    "L5.4.iii": ("a", "b"),
    "L5.5.i": ("a", "b"),
    "L5.5.ii": ("a", "b"),
    "L5.5.iii": ("a", "b", "xi"),
    "L5.5.iv": ("a", "b"),
    "L5.5.v": ("a", "b"),
}


@dataclass(frozen=True)
class FunctionalId:
    """One catalog entry: a functional identifier plus its rate parameters.

    Exactly the parameters the functional uses may be supplied, and they
    must be positive; the two-sided resolvent entry (``L5.5.iii``)
    additionally requires ``a != xi`` and ``b != xi`` since its closed form
    carries the prefactor ``1/((a - xi)(b - xi))``.
    """

    lemma: str
    a: float | None = None
    b: float | None = None
    xi: float | None = None

    def __post_init__(self) -> None:
        if self.lemma not in _REQUIRED:
            raise ConfigurationError(
                f"unknown functional {self.lemma!r}; expected one of {LEMMA_IDS}"
            )
        required = _REQUIRED[self.lemma]
        for name in ("a", "b", "xi"):
            value = getattr(self, name)
            if name in required:
                if value is None or not math.isfinite(value) or value <= 0.0:
                    raise ConfigurationError(
                        f"{self.lemma} requires {name} > 0, got {value!r}"
                    )
            elif value is not None:
                raise ConfigurationError(
                    f"{self.lemma} does not use parameter {name}"
                )
        if self.lemma == "L5.5.iii" and (self.a == self.xi or self.b == self.xi):
            raise ConfigurationError(
                "L5.5.iii requires a != xi and b != xi, got "
                f"a={self.a!r}, b={self.b!r}, xi={self.xi!r}"
            )

    @property
    def min_rate(self) -> float:
        """Smallest rate parameter in use; sets the mixing time scale."""
        return min(
            float(getattr(self, name)) for name in _REQUIRED[self.lemma]
        )


def closed_form_limit(functional: FunctionalId) -> float:
    """Exact long-run value of the catalogued time average."""
    a, b, xi = functional.a, functional.b, functional.xi
    lemma = functional.lemma
    if lemma in ("L5.2.ii", "L5.2.iii", "L5.3.i", "L5.3.ii", "L5.4.i", "L5.5.v"):
        return 0.0
    if lemma == "L5.4.ii":
        return 1.0 / (2.0 * a)
    if lemma == "L5.4.iii":
        return 1.0 / (a + b)
    if lemma == "L5.5.i":
        return 1.0 / (2.0 * b * (a + b) * (a + 2.0 * b))
    if lemma == "L5.5.ii":
        return 1.0 / (2.0 * a * (2.0 * a + b))
    if lemma == "L5.5.iii":
        return (
            1.0
            / ((a - xi) * (b - xi))
            * (
                1.0 / (a + b)
                + 1.0 / (2.0 * xi)
                - 1.0 / (a + xi)
                - 1.0 / (b + xi)
            )
        )
    assert lemma == "L5.5.iv"
    return 1.0 / (2.0 * (a + b) * (a + 2.0 * b))


def _ou_levels(rate: float, driver: np.ndarray, dt: float) -> np.ndarray:
    """Levels of ``integral of e^{-rate (t - s)} dW_s`` on the grid.

    Discretized as ``U[k+1] = e^{-rate dt} (U[k] + dW[k])`` with ``U[0] = 0``
    (the step's increment enters with the left-endpoint weight).
    """
    decay = math.exp(-rate * dt)
    return _zero_state_ar1(decay, decay * driver)


def _smoothed_levels(rate: float, levels: np.ndarray, dt: float) -> np.ndarray:
    """Levels of ``integral of e^{-rate (t - s)} X_s ds`` for a level series.

    Left-point Euler: ``V[k+1] = e^{-rate dt} (V[k] + X[k] dt)``.
    """
    decay = math.exp(-rate * dt)
    return _zero_state_ar1(decay, decay * dt * levels[..., :-1])


def _estimate_single(
    functional: FunctionalId, increments: WienerIncrements, dt: float
) -> float:
    """Left-point estimate of the functional's time average on one path."""
    dW, dB = increments.dW1, increments.dW2
    n = dW.shape[-1]
    horizon = n * dt
    a, b, xi = functional.a, functional.b, functional.xi
    lemma = functional.lemma

    if lemma == "L5.2.ii":
        u = _ou_levels(a, dW, dt)
        return float(np.sum(u[:-1] * dB)) / horizon
    if lemma == "L5.2.iii":
        d = _smoothed_levels(a + b, _ou_levels(b, dW, dt), dt)
        return float(np.sum(d[:-1] * dB)) / horizon
    if lemma == "L5.3.i":
        u = _ou_levels(a, dW, dt)
        return float(np.sum(u[:-1])) * dt / horizon
    if lemma == "L5.3.ii":
        d = _smoothed_levels(a + b, _ou_levels(b, dW, dt), dt)
        return float(np.sum(d[:-1])) * dt / horizon
    if lemma == "L5.4.i":
        u = _ou_levels(a, dW, dt)
        v = _ou_levels(b, dB, dt)
        return float(np.sum(u[:-1] * v[:-1])) * dt / horizon
    if lemma == "L5.4.ii":
        u = _ou_levels(a, dW, dt)
        return float(np.sum(u[:-1] ** 2)) * dt / horizon
    if lemma == "L5.4.iii":
        u = _ou_levels(a, dW, dt)
        v = _ou_levels(b, dW, dt)
        return float(np.sum(u[:-1] * v[:-1])) * dt / horizon
    if lemma == "L5.5.i":
        d = _smoothed_levels(a + b, _ou_levels(b, dW, dt), dt)
        return float(np.sum(d[:-1] ** 2)) * dt / horizon
    if lemma == "L5.5.ii":
        u = _ou_levels(a, dW, dt)
        d = _smoothed_levels(a + b, u, dt)
        return float(np.sum(u[:-1] * d[:-1])) * dt / horizon
    if lemma == "L5.5.iii":
        u = _ou_levels(xi, dW, dt)
        qa = _smoothed_levels(a, u, dt)
        qb = _smoothed_levels(b, u, dt)
        return float(np.sum(qa[:-1] * qb[:-1])) * dt / horizon
    if lemma == "L5.5.iv":
        d = _smoothed_levels(a + b, _ou_levels(b, dW, dt), dt)
        u = _ou_levels(a + b, dW, dt)
        return float(np.sum(d[:-1] * u[:-1])) * dt / horizon
    assert lemma == "L5.5.v"
    d = _smoothed_levels(a + b, _ou_levels(b, dW, dt), dt)
    u = _ou_levels(a + b, dB, dt)
    return float(np.sum(d[:-1] * u[:-1])) * dt / horizon


@dataclass(frozen=True)
class LimitEstimate:
    """Cross-seed estimate of one catalogued time average."""

    functional: FunctionalId
    estimate: float
    closed_form: float
    stderr: float
    horizon: float
    n_seeds: int
    short_horizon: bool


def estimate_limit(
    functional: FunctionalId, grid: PathGrid, n_seeds: int = 1
) -> LimitEstimate:
    """Monte Carlo time-average estimate of one catalogued functional.

    Runs ``n_seeds`` independent paths (path indices
    ``grid.path_index, ...``) and reports the cross-seed mean and standard
    error.  Horizons shorter than ``50 / min(rate params)`` mix too slowly
    for the time average to settle and are flagged (and logged) as short.
    """
    if n_seeds < 1:
        raise InputError(f"n_seeds must be >= 1, got {n_seeds!r}")
    horizon = grid.horizon
    short = horizon < 50.0 / functional.min_rate
    if short:
        logger.warning(
            "%s: horizon %g is short of the recommended %g; "
            "estimate flagged as short-horizon",
            functional.lemma,
            horizon,
            50.0 / functional.min_rate,
        )
    values = np.empty(n_seeds)
    for s in range(n_seeds):
        increments = generate_wiener(grid.with_path_index(grid.path_index + s))
        values[s] = _estimate_single(functional, increments, grid.dt)
    estimate = float(values.mean())
    stderr = (
        float(values.std(ddof=1) / math.sqrt(n_seeds)) if n_seeds > 1 else 0.0
    )
    return LimitEstimate(
        functional=functional,
        estimate=estimate,
        closed_form=closed_form_limit(functional),
        stderr=stderr,
        horizon=horizon,
        n_seeds=n_seeds,
        short_horizon=short,
    )


def default_functional_suite(
    a: float = 1.0, b: float = 2.0, xi: float = 0.5
) -> tuple[FunctionalId, ...]:
    """The full catalog, instantiated with one set of rate parameters."""
    out = []
    for lemma in LEMMA_IDS:
        required = _REQUIRED[lemma]
        kwargs = {name: {"a": a, "b": b, "xi": xi}[name] for name in required}
        out.append(FunctionalId(lemma=lemma, **kwargs))
    return tuple(out)


def limit_status(estimate: LimitEstimate) -> str:
    """Grade an estimate: ``pass``, ``warn`` (short horizon), or ``fail``.

    The tolerance is 15% of the closed form (5 percentage points absolute
    for zero limits), widened by three standard errors; short-horizon
    estimates are graded ``warn`` rather than failed.
    """
    tol = (
        0.15 * abs(estimate.closed_form)
        if estimate.closed_form != 0.0
        else 0.05
    )
    within = abs(estimate.estimate - estimate.closed_form) <= max(
        tol, 3.0 * estimate.stderr
    )
    if estimate.short_horizon:
        return "warn"
    return "pass" if within else "fail"


def write_limit_report_csv(
    stream: IO[str], estimates: Sequence[LimitEstimate]
) -> None:
    """Write the verification report as CSV, one row per functional."""
    header = [
        "lemma",
        "a",
        "b",
        "xi",
        "closed_form",
        "estimate",
        "stderr",
        "horizon",
        "status",
    ]

    def rows():
        for est in estimates:
            fid = est.functional
            yield [
                fid.lemma,
                fid.a,
                fid.b,
                fid.xi,
                est.closed_form,
                est.estimate,
                est.stderr,
                est.horizon,
                limit_status(est),
            ]

    write_csv(stream, header, rows())


def fit_decay_rate(
    times: np.ndarray,
    values: np.ndarray,
    window: slice | None = None,
) -> float:
    """Least-squares exponent of an exponentially decaying error series.

    Fits ``log(values)`` against ``times`` (optionally restricted to
    ``window``) and returns the slope; a series ``c e^{lambda t}`` recovers
    ``lambda`` to rounding error for any ``c > 0``.  Non-positive entries
    (an error series that touched zero) are dropped from the fit; fewer
    than two usable points is an error.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.shape != values.shape or times.ndim != 1:
        raise InputError("times and values must be matching 1-d arrays")
    if window is not None:
        times = times[window]
        values = values[window]
    positive = values > 0.0
    if np.count_nonzero(positive) < times.shape[0]:
        logger.warning(
            "fit_decay_rate: dropped %d non-positive value(s) from the window",
            int(times.shape[0] - np.count_nonzero(positive)),
        )
    times = times[positive]
    values = values[positive]
    if times.shape[0] < 2:
        raise InputError(
            "fit_decay_rate needs at least two positive values in the window"
        )
    return float(np.polyfit(times, np.log(values), 1)[0])


@dataclass(frozen=True)
class QvGrowthProbe:
    """Discretized quadratic variation at doubling horizons.

    The probed object is the stochastic integral of
    ``e^{-s} W((e^{2s} - 1)/2)`` against an independent Brownian motion; its
    quadratic variation ``integral of e^{-2s} W((e^{2s}-1)/2)^2 ds`` grows
    without bound (on average like ``t/2``).  ``values[i]`` is the
    discretized quadratic variation at ``horizons[i]``; ``growing`` is True
    when every doubling strictly increased it.  This is a trend report, not
    a proof of divergence.
    """

    horizons: np.ndarray
    values: np.ndarray
    growing: bool


def qv_growth_probe(grid: PathGrid, n_doublings: int = 3) -> QvGrowthProbe:
    """Quadratic-variation growth check across doubling horizons.

    The time-changed Brownian motion is simulated exactly: over step ``k``
    its variance grows by ``e^{2 t_k}(e^{2 dt} - 1)/2``, so the full horizon
    must stay modest (``e^{2T}`` must be representable; ``T`` up to ~300).
    """
    if n_doublings < 1:
        raise InputError(f"n_doublings must be >= 1, got {n_doublings!r}")
    horizon = grid.horizon
    if 2.0 * horizon > 700.0:
        raise InputError(
            "horizon too long for the exact time change; keep T <= 350"
        )
    t = grid.times()
    tau = 0.5 * np.expm1(2.0 * t)
    rng = grid.generator()
    gauss = rng.standard_normal(grid.n_steps)
    w = np.concatenate([[0.0], np.cumsum(gauss * np.sqrt(np.diff(tau)))])
    integrand = np.exp(-2.0 * t[:-1]) * w[:-1] ** 2
    qv = np.concatenate([[0.0], np.cumsum(integrand) * grid.dt])

    horizons = horizon / 2.0 ** np.arange(n_doublings, -1, -1, dtype=float)
    indices = np.minimum(
        np.round(horizons / grid.dt).astype(int), grid.n_steps
    )
    values = qv[indices]
    growing = bool(np.all(np.diff(values) > 0.0))
    return QvGrowthProbe(horizons=horizons, values=values, growing=growing)


def _confidence_term(params: EconomyParams, phi_i: float) -> float:
    """The survival-index confidence term for believed correlation phi_i."""
    ratio = params.sigma_mu / params.sigma_D
    return (params.xi ** 2 + ratio ** 2 * (1.0 - params.phi * phi_i)) / (
        2.0 * math.sqrt(params.xi ** 2 + ratio ** 2 * (1.0 - phi_i ** 2))
    )


@dataclass(frozen=True)
class DriftLimitsReport:
    """Pathwise drift averages against their theoretical long-run values.

    ``delta_sq_average[i]`` is ``(1/(2T)) integral of delta_i^2`` for agent
    ``i``; its theoretical limit combines the squared forecast error with
    the confidence-term gap to the rational benchmark.
    """

    habit_average: float
    habit_limit: float
    growth_average: float
    growth_limit: float
    delta_sq_average: np.ndarray
    delta_sq_limit: np.ndarray


def drift_limits_check(
    params: EconomyParams,
    agents: Sequence[AgentSpec],
    eq: EquilibriumPath,
) -> DriftLimitsReport:
    """Compare a run's drift averages with their ergodic limits.

    Reports ``x(T)/T`` against ``mu_bar - sigma_D^2/2``, the time average
    of the growth state against ``mu_bar``, and each agent's
    ``(1/(2T)) integral of delta^2`` against
    ``((mu_bar_i - mu_bar)/sigma_D)^2 / 2 + confidence_i - confidence_0``
    (the rational agent's confidence subtracted).
    """
    market = eq.market
    if market.log_D.ndim != 1:
        raise InputError("drift_limits_check expects a single-path run")
    if len(agents) != len(eq.filters):
        raise InputError(
            f"got {len(agents)} agent specs for {len(eq.filters)} filter records"
        )
    horizon = market.grid.horizon
    dt = market.grid.dt
    habit_average = float(market.x[-1]) / horizon
    growth_average = float(np.trapezoid(market.mu_D, dx=dt)) / horizon
    delta_sq = np.array(
        [
            float(np.trapezoid(rec.delta ** 2, dx=dt)) / (2.0 * horizon)
            for rec in eq.filters
        ]
    )
    rational_confidence = _confidence_term(params, params.phi)
    limits = np.array(
        [
            0.5 * ((spec.beliefs.mu_bar_i - params.mu_bar) / params.sigma_D) ** 2
            + _confidence_term(params, spec.beliefs.phi_i)
            - rational_confidence
            for spec in agents
        ]
    )
    return DriftLimitsReport(
        habit_average=habit_average,
        habit_limit=params.mu_bar - 0.5 * params.sigma_D ** 2,
        growth_average=growth_average,
        growth_limit=params.mu_bar,
        delta_sq_average=delta_sq,
        delta_sq_limit=limits,
    )


@dataclass(frozen=True)
class RateGaps:
    """Gaps between equilibrium rates and the winner's one-agent rates."""

    theta_gap: np.ndarray
    r_gap: np.ndarray
    theta_first_median: float
    theta_trailing_median: float
    r_first_median: float
    r_trailing_median: float


def rate_gap_series(eq: EquilibriumPath, winner: int) -> RateGaps:
    """Absolute rate gaps to the winner, with first/trailing decile medians.

    As the winner's consumption share approaches one, the equilibrium
    interest rate and price of risk converge to the winner's one-agent
    values, so both gap series must decay; the decile medians summarize
    start versus end of the run.
    """
    if eq.r.ndim != 1:
        raise InputError("rate_gap_series expects a single-path run")
    if not 0 <= winner < eq.n_agents:
        raise InputError(f"winner index {winner!r} out of range")
    theta_gap = np.abs(eq.theta - eq.theta_homog[winner])
    r_gap = np.abs(eq.r - eq.r_homog[winner])
    n = theta_gap.shape[0]
    first = slice(0, max(1, n // 10))
    trailing = trailing_window_slice(n, 0.1)
    return RateGaps(
        theta_gap=theta_gap,
        r_gap=r_gap,
        theta_first_median=float(np.median(theta_gap[first])),
        theta_trailing_median=float(np.median(theta_gap[trailing])),
        r_first_median=float(np.median(r_gap[first])),
        r_trailing_median=float(np.median(r_gap[trailing])),
    )


def theta_gap_limit(
    params: EconomyParams, winner: AgentSpec, other: AgentSpec
) -> float:
    """Constant limit of ``theta - theta_other`` when confidences match.

    Valid when the dominated agent shares the winner's believed correlation
    and long-run mean structure so that their filter errors cancel:
    ``sigma_D (gamma_w - gamma_i) - (mu_bar_w - mu_bar_i)/sigma_D``.
    """
    return params.sigma_D * (
        winner.prefs.gamma - other.prefs.gamma
    ) - (winner.beliefs.mu_bar_i - other.beliefs.mu_bar_i) / params.sigma_D


def r_gap_limit(
    params: EconomyParams, winner: AgentSpec, other: AgentSpec
) -> float:
    """Constant limit of ``r - r_other`` in the matched-confidence case.

    ``rho_w - rho_i + gamma_w (mu_bar_w - mu_bar_i)`` under the same
    matching conditions as :func:`theta_gap_limit` (equal ``gamma`` aside,
    the interest-rate gap also picks up the winner's exposure to the
    long-run-mean belief difference).
    """
    return (
        winner.prefs.rho
        - other.prefs.rho
        + winner.prefs.gamma
        * (winner.beliefs.mu_bar_i - other.beliefs.mu_bar_i)
    )


@dataclass(frozen=True)
class DivergenceProbe:
    """Running-maximum report for a dominated agent's price-of-risk gap.

    ``gap`` is the signed series ``theta - theta_i``; ``running_max`` the
    prefix maximum of its absolute value; ``lil_scale`` the
    ``sqrt(2 t log log t)`` companion (``nan`` where undefined, ``t <= e``);
    ``checkpoint_maxima`` the running max at the final doubling horizons
    ``T/8, T/4, T/2, T`` and ``increased`` whether each doubling produced a
    strictly larger maximum.  Growth trends only — no finite-horizon
    verdict on divergence is claimed.
    """

    times: np.ndarray
    gap: np.ndarray
    running_max: np.ndarray
    lil_scale: np.ndarray
    checkpoint_maxima: np.ndarray
    increased: np.ndarray


def divergence_probe(eq: EquilibriumPath, dominated: int) -> DivergenceProbe:
    """Probe unbounded-fluctuation behavior of a dominated agent's gap."""
    if eq.theta.ndim != 1:
        raise InputError("divergence_probe expects a single-path run")
    if not 0 <= dominated < eq.n_agents:
        raise InputError(f"dominated index {dominated!r} out of range")
    times = eq.times
    gap = eq.theta - eq.theta_homog[dominated]
    running_max = np.maximum.accumulate(np.abs(gap))
    with np.errstate(invalid="ignore", divide="ignore"):
        inner = np.log(np.log(times))
        lil_scale = np.where(
            times > math.e, np.sqrt(2.0 * times * inner), math.nan
        )
    n = times.shape[0] - 1
    checkpoints = [max(1, n // 8), max(1, n // 4), max(1, n // 2), n]
    maxima = running_max[checkpoints]
    increased = np.diff(maxima) > 0.0
    return DivergenceProbe(
        times=times,
        gap=gap,
        running_max=running_max,
        lil_scale=lil_scale,
        checkpoint_maxima=maxima,
        increased=increased,
    )
