"""Run configuration: strict JSON parsing, defaults, and echoing.

A run is described by one JSON file with documented top-level blocks::

    {
      "economy":  {"xi": 0.6, "mu_bar": 0.035, "mu0": 0.035, "sigma_D": 0.1,
                   "sigma_mu": 0.08, "phi": 0.5, "lambda": 0.0, "x0": 0.0},
      "agents":   [{"gamma": 2.0, "rho": 0.02, "beta": 0.0, "c0": 0.5,
                    "mu_bar_i": 0.035, "mu0_i": 0.035, "phi_i": 0.5}, ...],
      "grid":     {"dt": 0.01, "n_steps": 70000, "seed": 0},
      "n_paths":  1,
      "threads":  null,
      "outputs":  {"directory": "out",
                   "dumps": ["paths", "filters", "equilibrium"]},
      "filtering": {"y_method": "closed"},
      "survival": {"window_fraction": 0.5},
      "region":   {"a": 1.0, "phi": 0.5, "phi1_range": [-1.0, 0.5],
                   "phi2_range": [0.5, 1.0], "n1": 21, "n2": 21,
                   "band": 0.001},
      "limits":   {"horizon": 5000.0, "dt": 0.01, "n_seeds": 20,
                   "functionals": [{"lemma": "L5.4.ii", "a": 1.0}, ...],
                   "qv_horizon": 8.0, "qv_dt": 0.001}
    }

Parsing is strict: unknown keys anywhere are rejected with the offending
key path, so typos cannot silently fall back to defaults.  The ``economy``
block spells the adjustment speed ``"lambda"`` (a Python keyword, hence the
``lam`` attribute on the parsed object).  ``economy``, ``agents``, and
``grid`` have no defaults — commands that need them fail with a
configuration error when they are missing; every other block is optional.
``dump_config`` echoes the fully-resolved configuration (defaults filled
in) as JSON that re-parses to an equal ``RunConfig``, which each command
writes next to its outputs for reproducibility.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence, TypeVar

from .asymptotics import FunctionalId, default_functional_suite
from .equilibrium import AgentPrefs, AgentSpec, check_initial_consumption
from .errors import ConfigurationError
from .filtering import Y_METHODS, AgentBeliefs
from .paths import EconomyParams, PathGrid

__all__ = [
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

#: CSV dump families ``cmd_simulate`` can emit.
DUMP_KINDS = ("paths", "filters", "equilibrium")

_T = TypeVar("_T")


@dataclass(frozen=True)
class OutputConfig:
    """Where outputs go and which per-path CSV dumps to emit."""

    directory: str = "out"
    dumps: tuple[str, ...] = DUMP_KINDS


@dataclass(frozen=True)
class SurvivalConfig:
    """Windowing for extinction-slope and weight-limit diagnostics."""

    window_fraction: float = 0.5


@dataclass(frozen=True)
class RegionConfig:
    """Rectangle and resolution for the two-agent correlation region."""

    a: float = 1.0
    phi: float = 0.5
    phi1_range: tuple[float, float] = (-1.0, 0.5)
    phi2_range: tuple[float, float] = (0.5, 1.0)
    n1: int = 21
    n2: int = 21
    band: float = 1e-3


@dataclass(frozen=True)
class LimitsConfig:
    """Grid, replication, and catalog entries for limit verification."""

    horizon: float = 5000.0
    dt: float = 0.01
    n_seeds: int = 20
    functionals: tuple[FunctionalId, ...] = default_functional_suite()
    qv_horizon: float = 8.0
    qv_dt: float = 1e-3

    def __post_init__(self) -> None:
        if not self.horizon > 0.0:
            raise ConfigurationError("limits.horizon must be strictly positive")
        for name in ("dt", "qv_horizon", "qv_dt"):
            if not getattr(self, name) > 0.0:
                raise ConfigurationError(
                    f"limits.{name} must be strictly positive"
                )
        if self.n_seeds < 1:
            raise ConfigurationError("limits.n_seeds must be at least 1")

    def grid(self, seed: int) -> PathGrid:
        """The estimator grid for one seed."""
        return PathGrid(
            dt=self.dt, n_steps=round(self.horizon / self.dt), seed=seed
        )

    def qv_grid(self, seed: int) -> PathGrid:
        """The (much shorter) quadratic-variation probe grid."""
        return PathGrid(
            dt=self.qv_dt, n_steps=round(self.qv_horizon / self.qv_dt), seed=seed
        )


@dataclass(frozen=True)
class RunConfig:
    """Fully-resolved run description shared by all commands.

    ``economy``, ``agents``, and ``grid`` are ``None`` when their blocks
    were absent; commands that need them reject such configs.  ``threads``
    is ``None`` for "use available parallelism".
    """

    economy: EconomyParams | None = None
    agents: tuple[AgentSpec, ...] | None = None
    grid: PathGrid | None = None
    n_paths: int = 1
    threads: int | None = None
    outputs: OutputConfig = OutputConfig()
    y_method: str = "closed"
    survival: SurvivalConfig = SurvivalConfig()
    region: RegionConfig = RegionConfig()
    limits: LimitsConfig = LimitsConfig()

    def require_economy(self) -> EconomyParams:
        if self.economy is None:
            raise ConfigurationError("config block 'economy' is required")
        return self.economy

    def require_agents(self) -> tuple[AgentSpec, ...]:
        if self.agents is None:
            raise ConfigurationError("config block 'agents' is required")
        return self.agents

    def require_grid(self) -> PathGrid:
        if self.grid is None:
            raise ConfigurationError("config block 'grid' is required")
        return self.grid


def _expect_mapping(value: Any, path: str) -> dict[str, Any]:
    if not isinstance(value, dict):
        raise ConfigurationError(f"{path} must be an object")
    return dict(value)


def _finish(block: Mapping[str, Any], path: str) -> None:
    """Reject any keys left unconsumed in a block."""
    if block:
        key = sorted(block)[0]
        raise ConfigurationError(f"unknown config key {path}{key!r}")


def _number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError(f"{path} must be a number")
    if not math.isfinite(value):
        raise ConfigurationError(f"{path} must be finite")
    return float(value)


def _integer(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigurationError(f"{path} must be an integer")
    return value


def _string(value: Any, path: str) -> str:
    if not isinstance(value, str):
        raise ConfigurationError(f"{path} must be a string")
    return value


def _take(
    block: dict[str, Any],
    key: str,
    path: str,
    convert: Callable[[Any, str], _T],
    default: _T | None = None,
    required: bool = False,
) -> _T | None:
    if key not in block:
        if required:
            raise ConfigurationError(f"missing config key {path}{key!r}")
        return default
    return convert(block.pop(key), f"{path}{key}")


def _pair(value: Any, path: str) -> tuple[float, float]:
    if not isinstance(value, list) or len(value) != 2:
        raise ConfigurationError(f"{path} must be a two-element array")
    return (_number(value[0], f"{path}[0]"), _number(value[1], f"{path}[1]"))


def _parse_economy(value: Any) -> EconomyParams:
    block = _expect_mapping(value, "economy")
    path = "economy."
    kwargs = {
        name: _take(block, name, path, _number, required=True)
        for name in ("xi", "mu_bar", "mu0", "sigma_D", "sigma_mu", "phi")
    }
    kwargs["lam"] = _take(block, "lambda", path, _number, required=True)
    kwargs["x0"] = _take(block, "x0", path, _number, default=0.0)
    _finish(block, path)
    return EconomyParams(**kwargs)


def _parse_agent(value: Any, path: str) -> AgentSpec:
    block = _expect_mapping(value, path)
    path = path + "."
    prefs = AgentPrefs(
        gamma=_take(block, "gamma", path, _number, required=True),
        rho=_take(block, "rho", path, _number, required=True),
        beta=_take(block, "beta", path, _number, required=True),
        c0=_take(block, "c0", path, _number, required=True),
    )
    beliefs = AgentBeliefs(
        mu_bar_i=_take(block, "mu_bar_i", path, _number, required=True),
        mu0_i=_take(block, "mu0_i", path, _number, required=True),
        phi_i=_take(block, "phi_i", path, _number, required=True),
    )
    _finish(block, path)
    return AgentSpec(prefs=prefs, beliefs=beliefs)


def _parse_agents(value: Any) -> tuple[AgentSpec, ...]:
    if not isinstance(value, list) or not value:
        raise ConfigurationError("agents must be a non-empty array")
    agents = tuple(
        _parse_agent(entry, f"agents[{i}]") for i, entry in enumerate(value)
    )
    check_initial_consumption(agents)
    return agents


def _parse_grid(value: Any) -> PathGrid:
    block = _expect_mapping(value, "grid")
    path = "grid."
    grid = PathGrid(
        dt=_take(block, "dt", path, _number, required=True),
        n_steps=_take(block, "n_steps", path, _integer, required=True),
        seed=_take(block, "seed", path, _integer, required=True),
    )
    _finish(block, path)
    return grid


def _parse_outputs(value: Any) -> OutputConfig:
    block = _expect_mapping(value, "outputs")
    path = "outputs."
    directory = _take(block, "directory", path, _string, default="out")
    dumps = block.pop("dumps", list(DUMP_KINDS))
    if not isinstance(dumps, list):
        raise ConfigurationError("outputs.dumps must be an array")
    for entry in dumps:
        if entry not in DUMP_KINDS:
            raise ConfigurationError(
                f"outputs.dumps entries must be among {DUMP_KINDS}, "
                f"got {entry!r}"
            )
    if len(set(dumps)) != len(dumps):
        raise ConfigurationError("outputs.dumps entries must be unique")
    _finish(block, path)
    return OutputConfig(directory=directory, dumps=tuple(dumps))


def _parse_filtering(value: Any) -> str:
    block = _expect_mapping(value, "filtering")
    method = _take(block, "y_method", "filtering.", _string, default="closed")
    if method not in Y_METHODS:
        raise ConfigurationError(
            f"filtering.y_method must be one of {Y_METHODS}, got {method!r}"
        )
    _finish(block, "filtering.")
    return method


def _parse_survival(value: Any) -> SurvivalConfig:
    block = _expect_mapping(value, "survival")
    fraction = _take(
        block, "window_fraction", "survival.", _number, default=0.5
    )
    _finish(block, "survival.")
    if not 0.0 < fraction <= 1.0:
        raise ConfigurationError(
            "survival.window_fraction must lie in (0, 1]"
        )
    return SurvivalConfig(window_fraction=fraction)


def _parse_region(value: Any) -> RegionConfig:
    block = _expect_mapping(value, "region")
    path = "region."
    defaults = RegionConfig()
    region = RegionConfig(
        a=_take(block, "a", path, _number, default=defaults.a),
        phi=_take(block, "phi", path, _number, default=defaults.phi),
        phi1_range=_take(
            block, "phi1_range", path, _pair, default=defaults.phi1_range
        ),
        phi2_range=_take(
            block, "phi2_range", path, _pair, default=defaults.phi2_range
        ),
        n1=_take(block, "n1", path, _integer, default=defaults.n1),
        n2=_take(block, "n2", path, _integer, default=defaults.n2),
        band=_take(block, "band", path, _number, default=defaults.band),
    )
    _finish(block, path)
    return region


def _parse_functional(value: Any, path: str) -> FunctionalId:
    block = _expect_mapping(value, path)
    path = path + "."
    lemma = _take(block, "lemma", path, _string, required=True)
    kwargs: dict[str, float] = {}
    for name in ("a", "b", "xi"):
        number = _take(block, name, path, _number)
        if number is not None:
            kwargs[name] = number
    _finish(block, path)
    return FunctionalId(lemma=lemma, **kwargs)


def _parse_limits(value: Any) -> LimitsConfig:
    block = _expect_mapping(value, "limits")
    path = "limits."
    defaults = LimitsConfig()
    functionals = defaults.functionals
    if "functionals" in block:
        raw = block.pop("functionals")
        if not isinstance(raw, list) or not raw:
            raise ConfigurationError(
                "limits.functionals must be a non-empty array"
            )
        functionals = tuple(
            _parse_functional(entry, f"limits.functionals[{i}]")
            for i, entry in enumerate(raw)
        )
    limits = LimitsConfig(
        horizon=_take(block, "horizon", path, _number, default=defaults.horizon),
        dt=_take(block, "dt", path, _number, default=defaults.dt),
        n_seeds=_take(block, "n_seeds", path, _integer, default=defaults.n_seeds),
        functionals=functionals,
        qv_horizon=_take(
            block, "qv_horizon", path, _number, default=defaults.qv_horizon
        ),
        qv_dt=_take(block, "qv_dt", path, _number, default=defaults.qv_dt),
    )
    _finish(block, path)
    return limits


def parse_config(text: str, source: str = "config") -> RunConfig:
    """Parse a JSON config document into a :class:`RunConfig`.

    Unknown keys at any level are rejected; missing optional blocks take
    their documented defaults.
    """
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{source} is not valid JSON: {exc}") from exc
    block = _expect_mapping(document, source)

    economy = agents = grid = threads = None
    if "economy" in block:
        economy = _parse_economy(block.pop("economy"))
    if "agents" in block:
        agents = _parse_agents(block.pop("agents"))
    if "grid" in block:
        grid = _parse_grid(block.pop("grid"))
    n_paths = _take(block, "n_paths", "", _integer, default=1)
    if n_paths < 1:
        raise ConfigurationError("n_paths must be at least 1")
    if "threads" in block and block["threads"] is not None:
        threads = _take(block, "threads", "", _integer)
        if threads < 1:
            raise ConfigurationError("threads must be at least 1")
    else:
        block.pop("threads", None)
    outputs = (
        _parse_outputs(block.pop("outputs"))
        if "outputs" in block
        else OutputConfig()
    )
    y_method = (
        _parse_filtering(block.pop("filtering"))
        if "filtering" in block
        else "closed"
    )
    survival = (
        _parse_survival(block.pop("survival"))
        if "survival" in block
        else SurvivalConfig()
    )
    region = (
        _parse_region(block.pop("region")) if "region" in block else RegionConfig()
    )
    limits = (
        _parse_limits(block.pop("limits")) if "limits" in block else LimitsConfig()
    )
    _finish(block, "")
    return RunConfig(
        economy=economy,
        agents=agents,
        grid=grid,
        n_paths=n_paths,
        threads=threads,
        outputs=outputs,
        y_method=y_method,
        survival=survival,
        region=region,
        limits=limits,
    )


def load_config(path: str | Path) -> RunConfig:
    """Read and parse a config file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, source=str(path))


def _functional_to_dict(functional: FunctionalId) -> dict[str, Any]:
    out: dict[str, Any] = {"lemma": functional.lemma}
    for name in ("a", "b", "xi"):
        value = getattr(functional, name)
        if value is not None:
            out[name] = value
    return out


def config_to_dict(config: RunConfig) -> dict[str, Any]:
    """The JSON-ready form of a config; ``parse_config`` inverts it."""
    document: dict[str, Any] = {}
    if config.economy is not None:
        economy = config.economy
        document["economy"] = {
            "xi": economy.xi,
            "mu_bar": economy.mu_bar,
            "mu0": economy.mu0,
            "sigma_D": economy.sigma_D,
            "sigma_mu": economy.sigma_mu,
            "phi": economy.phi,
            "lambda": economy.lam,
            "x0": economy.x0,
        }
    if config.agents is not None:
        document["agents"] = [
            {
                "gamma": spec.prefs.gamma,
                "rho": spec.prefs.rho,
                "beta": spec.prefs.beta,
                "c0": spec.prefs.c0,
                "mu_bar_i": spec.beliefs.mu_bar_i,
                "mu0_i": spec.beliefs.mu0_i,
                "phi_i": spec.beliefs.phi_i,
            }
            for spec in config.agents
        ]
    if config.grid is not None:
        document["grid"] = {
            "dt": config.grid.dt,
            "n_steps": config.grid.n_steps,
            "seed": config.grid.seed,
        }
    document["n_paths"] = config.n_paths
    document["threads"] = config.threads
    document["outputs"] = {
        "directory": config.outputs.directory,
        "dumps": list(config.outputs.dumps),
    }
    document["filtering"] = {"y_method": config.y_method}
    document["survival"] = {"window_fraction": config.survival.window_fraction}
    document["region"] = {
        "a": config.region.a,
        "phi": config.region.phi,
        "phi1_range": list(config.region.phi1_range),
        "phi2_range": list(config.region.phi2_range),
        "n1": config.region.n1,
        "n2": config.region.n2,
        "band": config.region.band,
    }
    document["limits"] = {
        "horizon": config.limits.horizon,
        "dt": config.limits.dt,
        "n_seeds": config.limits.n_seeds,
        "functionals": [
            _functional_to_dict(f) for f in config.limits.functionals
        ],
        "qv_horizon": config.limits.qv_horizon,
        "qv_dt": config.limits.qv_dt,
    }
    return document


def dump_config(config: RunConfig) -> str:
    """Serialize the fully-resolved config as stable, re-parseable JSON."""
    return json.dumps(config_to_dict(config), indent=2) + "\n"
