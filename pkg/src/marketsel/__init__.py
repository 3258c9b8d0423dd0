"""marketsel: simulation and analysis of a market-selection economy.

Heterogeneous agents observe a dividend stream whose mean growth rate is a
latent Ornstein-Uhlenbeck state.  Each agent filters the state under
subjective beliefs about its long-run mean and about the correlation of a
public signal, trades in a complete market, and consumes.  The market
selects: exactly one agent's consumption share survives in the long run,
and a closed-form survival index identifies the winner from primitives.

Modules
-------
``paths``
    Exact simulation of the exogenous economy: dividends, the latent
    growth state, the living-standard index, and the public signal.
``filtering``
    Per-agent Kalman filtering in closed form: conditional-variance and
    growth-factor formulas plus the filtered-mean recursion, and each
    agent's pricing-density process.
``equilibrium``
    Market clearing across agents: the state-price density, consumption
    shares, risk-tolerance weights, and the interest rate and price of
    risk.
``selection``
    Survival-index analytics: the index itself, the long-run winner, the
    two-agent correlation region, and extinction-rate measurements.
``asymptotics``
    Numerical verification of long-run limits: a catalog of ergodic time
    averages with closed-form values, decay-rate fits, and drift and
    divergence diagnostics on simulated equilibria.
``config`` / ``cli``
    Strict JSON run configuration and the ``marketsel`` command-line
    interface built on it.
"""

from .asymptotics import (
    LEMMA_IDS,
    DivergenceProbe,
    DriftLimitsReport,
    FunctionalId,
    LimitEstimate,
    QvGrowthProbe,
    RateGaps,
    closed_form_limit,
    default_functional_suite,
    divergence_probe,
    drift_limits_check,
    estimate_limit,
    fit_decay_rate,
    limit_status,
    qv_growth_probe,
    r_gap_limit,
    rate_gap_series,
    theta_gap_limit,
    write_limit_report_csv,
)
from .config import (
    DUMP_KINDS,
    LimitsConfig,
    OutputConfig,
    RegionConfig,
    RunConfig,
    SurvivalConfig,
    config_to_dict,
    dump_config,
    load_config,
    parse_config,
)
from .equilibrium import (
    AgentPrefs,
    AgentSpec,
    EquilibriumPath,
    EquilibriumPoint,
    RatePair,
    check_initial_consumption,
    clear_market,
    compute_equilibrium_path,
    consumption_shares,
    heterogeneous_rates,
    homogeneous_rates,
    homogeneous_spd,
    risk_tolerance_weights,
    simulate_equilibrium,
    write_equilibrium_csv,
)
from .errors import (
    AmbiguityError,
    ConfigurationError,
    ConvergenceError,
    InputError,
    MarketselError,
)
from .filtering import (
    Y_METHODS,
    AgentBeliefs,
    ErrorDensity,
    FilterCoeffs,
    FilterPath,
    alphas,
    error_and_density,
    log_y_factor,
    rational_innovations,
    run_agent_filter,
    run_filter,
    run_rational_agent,
    run_rational_filter,
    variance,
    variance_integral,
    write_filter_csv,
    y_factor,
)
from .paths import (
    DividendPath,
    EconomyParams,
    MarketPath,
    PathGrid,
    WienerIncrements,
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
    write_market_path_csv,
)
from .selection import (
    DominanceResult,
    ExtinctionReport,
    RegionTable,
    RegionWinner,
    SurvivalReport,
    WeightsLimit,
    dominant_agent,
    effective_risk_aversion,
    extinction_slope,
    phi1_threshold,
    phi2_boundary,
    region_grid,
    survival_index,
    survival_report,
    tolerance_weights_limit,
    two_agent_correlation_region,
    write_region_csv,
)

__version__ = "1.0.0"

__all__ = [
    "__version__",
    # errors
    "MarketselError",
    "ConfigurationError",
    "InputError",
    "ConvergenceError",
    "AmbiguityError",
    # paths
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
    # filtering
    "Y_METHODS",
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
    # equilibrium
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
    # selection
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
    # asymptotics
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
    # config
    "DUMP_KINDS",
    "OutputConfig",
    "SurvivalConfig",
    "RegionConfig",
    "LimitsConfig",
    "RunConfig",
    "parse_config",
    "load_config",
    "config_to_dict",
    "dump_config",
]
