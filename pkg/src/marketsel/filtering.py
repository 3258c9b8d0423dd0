"""Per-agent learning about the latent growth state.

Agents observe the dividend and the public signal but not the growth state
``mu_D`` itself.  Each agent carries a Gaussian prior and updates it by
linear (Kalman-Bucy) filtering under their own belief parameters: a believed
long-run mean ``mu_bar_i``, a believed initial mean ``mu0_i``, and a believed
signal correlation ``phi_i``.  Because the observation structure is linear
with deterministic coefficients, the posterior variance ``nu`` and the
auxiliary growth factor ``y`` are deterministic functions of time with closed
forms built from two root constants ``alpha1 < 0 <= alpha2``:

* ``nu(t) = alpha2 sigma_D^2 (1 - e^{-q t}) / (1 - (alpha2/alpha1) e^{-q t})``
  with rate ``q = alpha2 - alpha1``, increasing from ``nu(0) = 0`` to the
  fixed point ``alpha2 sigma_D^2``;
* ``log y(t) = xi t + sigma_D^{-2} * integral of nu`` evaluated through an
  exact antiderivative (or adaptive quadrature when configured).

The conditional-mean path ``mu_i`` follows a linear filter equation driven by
realized dividend growth and the signal; it is discretized by an Euler step
with the filter gain frozen at the left endpoint of each step.  All closed
forms are written against ``e^{-q t}`` so that long horizons saturate to the
fixed point instead of overflowing.

The "rational" agent runs the same filter with belief parameters equal to the
true ones.  Its innovation process ``W0`` (the dividend shock as seen through
the rational filter) is the integrator for every other agent's belief density
``Z``, accumulated in log space so that ``Z`` stays strictly positive at any
horizon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import IO, NamedTuple, Sequence

import numpy as np
from scipy.integrate import quad

from ._util import write_csv
from .errors import ConfigurationError, InputError
from .paths import EconomyParams, MarketPath

__all__ = [
    "AgentBeliefs",
    "FilterCoeffs",
    "FilterPath",
    "ErrorDensity",
    "alphas",
    "variance",
    "variance_integral",
    "log_y_factor",
    "y_factor",
    "run_filter",
    "run_rational_filter",
    "rational_innovations",
    "error_and_density",
    "run_agent_filter",
    "run_rational_agent",
    "write_filter_csv",
]

#: Recognized evaluation methods for the ``y`` growth factor.
Y_METHODS = ("closed", "quad")


@dataclass(frozen=True)
class AgentBeliefs:
    """One agent's belief parameters for the growth-state filter.

    Attributes
    ----------
    mu_bar_i:
        Believed long-run average of the mean growth rate.
    mu0_i:
        Believed initial mean growth rate (the prior mean at time zero).
    phi_i:
        Believed correlation between the public signal and the growth-state
        shocks, in ``[-1, 1)``.  The left endpoint is allowed: with
        ``phi_i = -1`` the signal is believed to reveal the growth shocks
        completely and the posterior variance stays at zero.
    """

    mu_bar_i: float
    mu0_i: float
    phi_i: float

    def __post_init__(self) -> None:
        for name in ("mu_bar_i", "mu0_i", "phi_i"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ConfigurationError(f"{name} must be finite, got {value!r}")
        if not -1.0 <= self.phi_i < 1.0:
            raise ConfigurationError(
                f"phi_i must lie in [-1, 1), got {self.phi_i!r}"
            )

    @classmethod
    def rational(cls, params: EconomyParams) -> "AgentBeliefs":
        """Beliefs that coincide with the true model parameters."""
        return cls(mu_bar_i=params.mu_bar, mu0_i=params.mu0, phi_i=params.phi)


@dataclass(frozen=True)
class FilterCoeffs:
    """Root constants of the filter-variance fixed-point equation.

    Attributes
    ----------
    alpha1:
        Negative root; controls how fast the variance leaves the unstable
        branch.  Always ``< 0``.
    alpha2:
        Nonnegative root; ``alpha2 * sigma_D**2`` is the long-run posterior
        variance.
    nu_limit:
        The long-run variance ``alpha2 * sigma_D**2``.
    """

    alpha1: float
    alpha2: float
    nu_limit: float

    def __post_init__(self) -> None:
        if not (self.alpha1 < 0.0):
            raise ConfigurationError(f"alpha1 must be negative, got {self.alpha1!r}")
        if not (self.alpha2 >= 0.0):
            raise ConfigurationError(
                f"alpha2 must be nonnegative, got {self.alpha2!r}"
            )
        if not (self.nu_limit >= 0.0):
            raise ConfigurationError(
                f"nu_limit must be nonnegative, got {self.nu_limit!r}"
            )

    @property
    def root_ratio(self) -> float:
        """``alpha2 / alpha1``; nonpositive, so denominators stay >= 1."""
        return self.alpha2 / self.alpha1

    @property
    def rate(self) -> float:
        """``alpha2 - alpha1``, the exponential rate of variance convergence."""
        return self.alpha2 - self.alpha1


def alphas(params: EconomyParams, phi_i: float) -> FilterCoeffs:
    """Solve the variance fixed-point equation for one agent.

    The roots are ``+/- sqrt(xi^2 + (sigma_mu/sigma_D)^2 (1 - phi_i^2)) - xi``;
    the nonnegative one scales the long-run posterior variance.
    """
    if not math.isfinite(phi_i) or not -1.0 <= phi_i < 1.0:
        raise ConfigurationError(f"phi_i must lie in [-1, 1), got {phi_i!r}")
    ratio = params.sigma_mu / params.sigma_D
    root = math.sqrt(params.xi ** 2 + ratio ** 2 * (1.0 - phi_i ** 2))
    alpha2 = max(0.0, root - params.xi)
    alpha1 = -root - params.xi
    return FilterCoeffs(
        alpha1=alpha1, alpha2=alpha2, nu_limit=alpha2 * params.sigma_D ** 2
    )


def _check_times(t: np.ndarray | float) -> np.ndarray:
    arr = np.asarray(t, dtype=float)
    if arr.size and (not np.all(np.isfinite(arr)) or np.any(arr < 0.0)):
        raise InputError("t must contain only finite values >= 0")
    return arr


def variance(
    coeffs: FilterCoeffs, params: EconomyParams, t: float | np.ndarray
) -> float | np.ndarray:
    """Posterior variance ``nu(t)`` of the growth state, elementwise in ``t``.

    Evaluated as ``nu_limit (1 - e^{-q t}) / (1 - (alpha2/alpha1) e^{-q t})``
    with ``q = alpha2 - alpha1``; for large ``t`` the exponential underflows
    to zero and the expression saturates at ``nu_limit`` instead of
    overflowing.
    """
    arr = _check_times(t)
    decay = np.exp(-coeffs.rate * arr)
    result = coeffs.nu_limit * (1.0 - decay) / (1.0 - coeffs.root_ratio * decay)
    if arr.ndim == 0:
        return float(result)
    return result


def variance_integral(
    coeffs: FilterCoeffs, params: EconomyParams, t: float | np.ndarray
) -> float | np.ndarray:
    """Exact ``integral of nu(s) ds`` from 0 to ``t``, elementwise in ``t``.

    Antiderivative of the closed-form variance:
    ``sigma_D^2 (alpha2 t + log1p(-(alpha2/alpha1) e^{-q t})
    - log1p(-(alpha2/alpha1)))``.
    """
    arr = _check_times(t)
    ratio = coeffs.root_ratio
    decay = np.exp(-coeffs.rate * arr)
    result = params.sigma_D ** 2 * (
        coeffs.alpha2 * arr + np.log1p(-ratio * decay) - math.log1p(-ratio)
    )
    if arr.ndim == 0:
        return float(result)
    return result


def log_y_factor(
    coeffs: FilterCoeffs,
    params: EconomyParams,
    t: float | np.ndarray,
    method: str = "closed",
) -> float | np.ndarray:
    """``log y(t) = xi t + sigma_D^{-2} * integral of nu``, elementwise in ``t``.

    ``method="closed"`` uses the exact antiderivative of the variance;
    ``method="quad"`` integrates the variance by adaptive quadrature to
    relative tolerance ``1e-10`` (one quadrature per requested time).
    """
    arr = _check_times(t)
    if method == "closed":
        integral = variance_integral(coeffs, params, arr)
    elif method == "quad":
        flat = np.atleast_1d(arr).ravel()
        values = np.empty(flat.shape)
        for idx, upper in enumerate(flat):
            if upper == 0.0:
                values[idx] = 0.0
                continue
            values[idx], _ = quad(
                lambda s: variance(coeffs, params, s),
                0.0,
                upper,
                epsrel=1e-10,
                epsabs=0.0,
                limit=500,
            )
        integral = values.reshape(np.atleast_1d(arr).shape)
        if arr.ndim == 0:
            integral = integral[0]
    else:
        raise ConfigurationError(
            f"unknown y-factor method {method!r}; expected one of {Y_METHODS}"
        )
    result = params.xi * arr + np.asarray(integral) / params.sigma_D ** 2
    if arr.ndim == 0:
        return float(result)
    return result


def y_factor(
    coeffs: FilterCoeffs,
    params: EconomyParams,
    t: float | np.ndarray,
    method: str = "closed",
) -> float | np.ndarray:
    """Deterministic growth factor ``y(t)``; see :func:`log_y_factor`.

    Grows like ``e^{(alpha2 + xi) t}`` for large ``t``, so very long horizons
    can overflow to ``inf``; use :func:`log_y_factor` for asymptotics work.
    """
    return np.exp(log_y_factor(coeffs, params, t, method=method))


def _signal_increments(params: EconomyParams, path: MarketPath) -> np.ndarray:
    """Signal increments rebuilt from the driving Wiener increments."""
    return params.phi * path.dW2 + math.sqrt(1.0 - params.phi ** 2) * path.dW3


def _filter_means(
    params: EconomyParams,
    mu_bars: np.ndarray,
    mu0s: np.ndarray,
    phis: np.ndarray,
    path: MarketPath,
) -> np.ndarray:
    """Euler solution of the conditional-mean equation, stacked over agents.

    ``mu_bars``, ``mu0s`` and ``phis`` have shape ``(A,)``; the result has
    shape ``(A,) + batch_shape + (n_steps + 1,)`` where ``batch_shape`` is
    the path's leading batch shape (empty for a single path).
    """
    dt = path.grid.dt
    n_steps = path.grid.n_steps
    batch_shape = path.dW1.shape[:-1]
    lead = (len(mu_bars),) + (1,) * len(batch_shape)

    # Deterministic per-agent gain table nu(t_k) / sigma_D^2 at left endpoints.
    t_left = dt * np.arange(n_steps)
    gain = np.empty((len(mu_bars), n_steps))
    for a, phi_i in enumerate(phis):
        coeffs = alphas(params, float(phi_i))
        gain[a] = variance(coeffs, params, t_left) / params.sigma_D ** 2
    gain = gain.reshape(lead + (n_steps,))

    # Observed dividend growth per step, with the Ito correction undone so the
    # filter sees dD/D rather than d(log D).
    growth_obs = np.diff(path.log_D, axis=-1) + 0.5 * params.sigma_D ** 2 * dt
    ds = _signal_increments(params, path)

    mu_bars_col = mu_bars.reshape(lead + (1,))
    phis_col = phis.reshape(lead + (1,))
    # mu[k+1] = hold[k] * mu[k] + drive[k]: linear one-step recursion with a
    # deterministic coefficient and a path-dependent forcing term.
    hold = 1.0 - (params.xi + gain) * dt
    drive = (
        params.xi * mu_bars_col * dt
        + gain * growth_obs
        + params.sigma_mu * phis_col * ds
    )

    out = np.empty((len(mu_bars),) + batch_shape + (n_steps + 1,))
    out[..., 0] = mu0s.reshape(lead)
    current = np.broadcast_to(out[..., 0], (len(mu_bars),) + batch_shape).copy()
    for k in range(n_steps):
        current = hold[..., k] * current + drive[..., k]
        out[..., k + 1] = current
    return out


def run_filter(
    params: EconomyParams, beliefs: AgentBeliefs, path: MarketPath
) -> np.ndarray:
    """Conditional-mean path ``mu_i`` of one agent along a realized path.

    Euler discretization of the filter equation
    ``d mu_i = -xi (mu_i - mu_bar_i) dt
    + (nu_i(t)/sigma_D^2) (dD/D - mu_i dt) + sigma_mu phi_i ds``
    with the realized ``dD/D`` taken as the log-dividend increment plus the
    Ito correction ``sigma_D^2 dt / 2`` and the gain frozen at each step's
    left endpoint.  Returns levels of shape ``batch_shape + (n_steps + 1,)``.
    """
    stacked = _filter_means(
        params,
        np.array([beliefs.mu_bar_i]),
        np.array([beliefs.mu0_i]),
        np.array([beliefs.phi_i]),
        path,
    )
    return stacked[0]


def run_rational_filter(params: EconomyParams, path: MarketPath) -> np.ndarray:
    """Conditional-mean path of the agent whose beliefs match the truth."""
    return run_filter(params, AgentBeliefs.rational(params), path)


def rational_innovations(
    params: EconomyParams, path: MarketPath, mu_0: np.ndarray
) -> np.ndarray:
    """Innovation increments ``dW0`` of the rational agent.

    ``dW0[k] = dW1[k] - ((mu_0[k] - mu_D[k]) / sigma_D) dt`` with levels taken
    at the left endpoint of each step.  Under the physical measure ``W0`` is a
    Brownian motion because the rational filter error is conditionally
    centered.
    """
    mu_0 = np.asarray(mu_0, dtype=float)
    if mu_0.shape != path.mu_D.shape:
        raise InputError(
            f"mu_0 has shape {mu_0.shape}, expected {path.mu_D.shape}"
        )
    dt = path.grid.dt
    drift = (mu_0[..., :-1] - path.mu_D[..., :-1]) / params.sigma_D
    return path.dW1 - drift * dt


class ErrorDensity(NamedTuple):
    """Estimation-error path and the belief density it generates."""

    delta: np.ndarray
    Z: np.ndarray


def _log_density(delta: np.ndarray, dW0: np.ndarray, dt: float) -> np.ndarray:
    """Log of the belief density: cumulative ``delta dW0 - delta^2 dt / 2``."""
    increments = delta[..., :-1] * dW0 - 0.5 * delta[..., :-1] ** 2 * dt
    log_Z = np.zeros(delta.shape)
    np.cumsum(increments, axis=-1, out=log_Z[..., 1:])
    return log_Z


def error_and_density(
    sigma_D: float,
    mu_i: np.ndarray,
    mu_0: np.ndarray,
    dW0: np.ndarray,
    dt: float,
) -> ErrorDensity:
    """Estimation error ``delta`` and belief density ``Z`` of one agent.

    ``delta[k] = (mu_i[k] - mu_0[k]) / sigma_D`` compares the agent's filter
    to the rational one; ``Z`` is accumulated in log space as cumulative sums
    of ``delta dW0 - delta^2 dt / 2`` (left-endpoint levels against the
    rational innovations) and exponentiated, so it is strictly positive with
    ``Z[0] = 1``.
    """
    mu_i = np.asarray(mu_i, dtype=float)
    mu_0 = np.asarray(mu_0, dtype=float)
    dW0 = np.asarray(dW0, dtype=float)
    if mu_i.shape != mu_0.shape:
        raise InputError(
            f"mu_i has shape {mu_i.shape}, expected {mu_0.shape}"
        )
    if dW0.shape != mu_0.shape[:-1] + (mu_0.shape[-1] - 1,):
        raise InputError(
            f"dW0 has shape {dW0.shape}, expected {mu_0.shape[:-1] + (mu_0.shape[-1] - 1,)}"
        )
    if not (dt > 0.0 and math.isfinite(dt)):
        raise InputError(f"dt must be positive and finite, got {dt!r}")
    delta = (mu_i - mu_0) / sigma_D
    return ErrorDensity(delta=delta, Z=np.exp(_log_density(delta, dW0, dt)))


@dataclass(frozen=True)
class FilterPath:
    """One agent's filter output along a realized market path.

    ``log_Z`` is the stored source of truth for the belief density so that
    extreme horizons cannot underflow it to zero; ``Z`` is derived.  ``dW0``
    is present only on the rational agent's record, whose ``delta`` is
    identically zero and whose density is identically one.
    """

    mu: np.ndarray
    delta: np.ndarray
    log_Z: np.ndarray
    dW0: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.delta.shape != self.mu.shape:
            raise InputError(
                f"delta has shape {self.delta.shape}, expected {self.mu.shape}"
            )
        if self.log_Z.shape != self.mu.shape:
            raise InputError(
                f"log_Z has shape {self.log_Z.shape}, expected {self.mu.shape}"
            )
        if self.dW0 is not None and self.dW0.shape != self.mu.shape[:-1] + (
            self.mu.shape[-1] - 1,
        ):
            raise InputError(
                f"dW0 has shape {self.dW0.shape}, expected "
                f"{self.mu.shape[:-1] + (self.mu.shape[-1] - 1,)}"
            )

    @property
    def Z(self) -> np.ndarray:
        """Belief density levels, ``exp(log_Z)``; strictly positive."""
        return np.exp(self.log_Z)

    @property
    def is_rational(self) -> bool:
        """Whether this record carries the rational agent's innovations."""
        return self.dW0 is not None


def run_rational_agent(params: EconomyParams, path: MarketPath) -> FilterPath:
    """Full filter record of the rational agent, including innovations."""
    mu_0 = run_rational_filter(params, path)
    dW0 = rational_innovations(params, path, mu_0)
    zeros = np.zeros(mu_0.shape)
    return FilterPath(mu=mu_0, delta=zeros, log_Z=zeros.copy(), dW0=dW0)


def run_agent_filter(
    params: EconomyParams,
    beliefs: AgentBeliefs,
    path: MarketPath,
    rational: FilterPath | None = None,
) -> FilterPath:
    """Full filter record of one agent relative to the rational benchmark.

    ``rational`` may be passed to reuse an already-computed rational record
    (it must come from the same path); otherwise it is recomputed here.
    """
    if rational is None:
        rational = run_rational_agent(params, path)
    if rational.dW0 is None:
        raise InputError("rational record lacks innovation increments dW0")
    mu_i = run_filter(params, beliefs, path)
    delta = (mu_i - rational.mu) / params.sigma_D
    log_Z = _log_density(delta, rational.dW0, path.grid.dt)
    return FilterPath(mu=mu_i, delta=delta, log_Z=log_Z)


def write_filter_csv(
    stream: IO[str],
    times: np.ndarray,
    records: Sequence[FilterPath],
    indices: Sequence[int] | None = None,
) -> None:
    """Write filter records as CSV: time, then mu, delta, Z per agent.

    Column names carry the agent indices (``mu_1, mu_2, ..., delta_1, ...,
    Z_1, ...``); ``indices`` defaults to ``1..len(records)``.  Batched records
    are not supported here — dump one path at a time.
    """
    if indices is None:
        indices = list(range(1, len(records) + 1))
    if len(indices) != len(records):
        raise InputError(
            f"got {len(indices)} indices for {len(records)} filter records"
        )
    times = np.asarray(times, dtype=float)
    for record in records:
        if record.mu.ndim != 1:
            raise InputError("write_filter_csv expects single-path records")
        if record.mu.shape != times.shape:
            raise InputError(
                f"record has {record.mu.shape[0]} levels, expected {times.shape[0]}"
            )
    header = (
        ["time"]
        + [f"mu_{i}" for i in indices]
        + [f"delta_{i}" for i in indices]
        + [f"Z_{i}" for i in indices]
    )
    densities = [record.Z for record in records]

    def rows():
        for k in range(times.shape[0]):
            yield (
                [times[k]]
                + [record.mu[k] for record in records]
                + [record.delta[k] for record in records]
                + [Z[k] for Z in densities]
            )

    write_csv(stream, header, rows())
