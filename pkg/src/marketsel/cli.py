"""Command-line interface.

Four commands drive the library end to end::

    marketsel simulate      --config run.json [--seed N --paths N --out DIR --threads N]
    marketsel survival      --config run.json [--beta-sweep "0,0.5,1" --out DIR]
    marketsel region        [--config run.json --out DIR]
    marketsel verify-limits [--config run.json --seed N --out DIR]

Every command writes its CSV outputs plus an ``effective_config.json``
echo (the fully-resolved configuration, flag overrides included) into the
output directory, so any figure or table can be reproduced from that one
artifact.  Exit codes: ``0`` success, ``2`` configuration or input error,
``3`` numerical failure (market-clearing non-convergence, a survival-index
tie, a region mismatch, or a limit estimate far off its closed form).

Outputs are deterministic: the config bytes and seed fully determine every
emitted CSV, byte for byte, regardless of ``--threads``.
"""

from __future__ import annotations

import dataclasses
import logging
import os
import sys
from pathlib import Path
from typing import Callable, Sequence

import click

from . import asymptotics, config as config_mod, equilibrium, filtering, paths, selection
from .errors import (
    AmbiguityError,
    ConfigurationError,
    ConvergenceError,
    InputError,
)

__all__ = ["main"]

#: Exit codes per the external interface contract.
EXIT_CONFIG_ERROR = 2
EXIT_NUMERICAL_FAILURE = 3


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _guarded(action: Callable[[], None]) -> None:
    """Run a command body, mapping library errors to exit codes."""
    try:
        action()
    except (ConfigurationError, InputError) as exc:
        _fail(EXIT_CONFIG_ERROR, str(exc))
    except ConvergenceError as exc:
        detail = str(exc)
        if exc.time_index is not None:
            detail += f" (time index {exc.time_index})"
        _fail(EXIT_NUMERICAL_FAILURE, detail)
    except AmbiguityError as exc:
        _fail(EXIT_NUMERICAL_FAILURE, str(exc))


def _load(config_path: str | None) -> config_mod.RunConfig:
    if config_path is None:
        return config_mod.RunConfig()
    return config_mod.load_config(config_path)


def _resolve(
    cfg: config_mod.RunConfig,
    seed: int | None,
    n_paths: int | None,
    out: str | None,
    threads: int | None,
) -> config_mod.RunConfig:
    """Fold CLI flag overrides into the parsed config."""
    if seed is not None and not 0 <= seed < 2**64:
        raise ConfigurationError("--seed must fit in an unsigned 64-bit integer")
    if seed is not None and cfg.grid is not None:
        cfg = dataclasses.replace(
            cfg, grid=dataclasses.replace(cfg.grid, seed=seed)
        )
    if n_paths is not None:
        if n_paths < 1:
            raise ConfigurationError("--paths must be at least 1")
        cfg = dataclasses.replace(cfg, n_paths=n_paths)
    if threads is not None:
        if threads < 1:
            raise ConfigurationError("--threads must be at least 1")
        cfg = dataclasses.replace(cfg, threads=threads)
    if out is not None:
        cfg = dataclasses.replace(
            cfg, outputs=dataclasses.replace(cfg.outputs, directory=out)
        )
    return cfg


def _prepare_out(cfg: config_mod.RunConfig) -> Path:
    """Create the output directory and drop the effective-config echo."""
    out_dir = Path(cfg.outputs.directory)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "effective_config.json").write_text(config_mod.dump_config(cfg))
    return out_dir


def _effective_threads(cfg: config_mod.RunConfig) -> int:
    if cfg.threads is not None:
        return cfg.threads
    return os.cpu_count() or 1


def _echo_survival(report: selection.SurvivalReport) -> None:
    for i, (kappa, eff) in enumerate(zip(report.kappa, report.effective_gamma)):
        marker = "  <- winner" if i == report.winner else ""
        click.echo(
            f"agent {i}: kappa={kappa:.6g} effective_gamma={eff:.6g}{marker}"
        )
    click.echo(f"winner: agent {report.winner} (gap {report.gap:.6g})")


def _write_survival_csv(
    out_dir: Path, report: selection.SurvivalReport
) -> None:
    from ._util import write_csv

    with open(out_dir / "survival.csv", "w", newline="") as stream:
        write_csv(
            stream,
            ["agent", "kappa", "effective_gamma", "is_winner"],
            (
                [i, report.kappa[i], report.effective_gamma[i], i == report.winner]
                for i in range(report.kappa.shape[0])
            ),
        )


@click.group()
def main() -> None:
    """Simulation and analysis of a market-selection economy.

    Heterogeneous agents filter a latent dividend growth state under
    subjective beliefs, trade in a complete market, and the market selects
    for the lowest survival index; these commands simulate the economy,
    tabulate survival, map the two-agent survival region, and verify
    long-run limit theorems numerically.
    """
    logging.basicConfig(
        stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s"
    )


@main.command()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="JSON run configuration.")
@click.option("--seed", type=int, default=None, help="Override grid.seed.")
@click.option("--paths", "n_paths", type=int, default=None,
              help="Override the number of simulated paths.")
@click.option("--out", type=click.Path(), default=None,
              help="Override the output directory.")
@click.option("--threads", type=int, default=None,
              help="Worker processes (default: available parallelism).")
def simulate(
    config_path: str | None,
    seed: int | None,
    n_paths: int | None,
    out: str | None,
    threads: int | None,
) -> None:
    """Simulate equilibrium paths and write CSV dumps plus reports."""

    def action() -> None:
        cfg = _resolve(_load(config_path), seed, n_paths, out, threads)
        params = cfg.require_economy()
        agents = cfg.require_agents()
        grid = cfg.require_grid()
        cfg = dataclasses.replace(cfg, threads=_effective_threads(cfg))
        out_dir = _prepare_out(cfg)

        results = equilibrium.simulate_equilibrium(
            params, agents, grid, n_paths=cfg.n_paths, threads=cfg.threads
        )

        for p, eq in enumerate(results):
            if "paths" in cfg.outputs.dumps:
                with open(
                    out_dir / f"market_path_{p:03d}.csv", "w", newline=""
                ) as stream:
                    paths.write_market_path_csv(stream, eq.market)
            if "filters" in cfg.outputs.dumps:
                with open(
                    out_dir / f"filters_{p:03d}.csv", "w", newline=""
                ) as stream:
                    filtering.write_filter_csv(stream, eq.times, eq.filters)
            if "equilibrium" in cfg.outputs.dumps:
                with open(
                    out_dir / f"equilibrium_{p:03d}.csv", "w", newline=""
                ) as stream:
                    equilibrium.write_equilibrium_csv(stream, eq)

        report = selection.survival_report(params, agents)
        _echo_survival(report)
        _write_survival_csv(out_dir, report)

        gammas = [spec.prefs.gamma for spec in agents]
        from ._util import write_csv

        with open(out_dir / "extinction.csv", "w", newline="") as stream:
            def rows():
                for p, eq in enumerate(results):
                    ext = selection.extinction_slope(
                        eq.times,
                        eq.shares,
                        report.kappa,
                        gammas,
                        window_fraction=cfg.survival.window_fraction,
                        winner=report.winner,
                    )
                    for i in range(len(agents)):
                        yield [
                            p,
                            i,
                            ext.empirical[i],
                            ext.theoretical[i],
                            i == ext.winner,
                            ext.window_start,
                            eq.shares[i, -1],
                        ]
            write_csv(
                stream,
                [
                    "path",
                    "agent",
                    "empirical_slope",
                    "theoretical_slope",
                    "is_winner",
                    "window_start",
                    "final_share",
                ],
                rows(),
            )
        click.echo(
            f"wrote {len(results)} path(s) to {out_dir} "
            f"(dumps: {', '.join(cfg.outputs.dumps) or 'none'})"
        )

    _guarded(action)


@main.command()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="JSON run configuration.")
@click.option("--out", type=click.Path(), default=None,
              help="Write survival.csv (and the sweep table) here.")
@click.option("--beta-sweep", "beta_sweep", type=str, default=None,
              help="Comma-separated habit weights; tabulates the survival "
                   "index per agent for each, ordered by effective risk "
                   "aversion.")
def survival(
    config_path: str | None, out: str | None, beta_sweep: str | None
) -> None:
    """Print the survival-index table and the long-run winner."""

    def action() -> None:
        cfg = _resolve(_load(config_path), None, None, out, None)
        params = cfg.require_economy()
        agents = cfg.require_agents()

        out_dir = _prepare_out(cfg) if out is not None else None

        if beta_sweep is not None:
            try:
                betas = [float(tok) for tok in beta_sweep.split(",") if tok.strip()]
            except ValueError as exc:
                raise ConfigurationError(
                    f"--beta-sweep must be comma-separated numbers: {exc}"
                ) from exc
            if not betas:
                raise ConfigurationError("--beta-sweep is empty")
            rows = []
            for beta in betas:
                for i, spec in enumerate(agents):
                    swept = dataclasses.replace(
                        spec, prefs=dataclasses.replace(spec.prefs, beta=beta)
                    )
                    rows.append(
                        (
                            selection.effective_risk_aversion(
                                spec.prefs.gamma, beta
                            ),
                            beta,
                            i,
                            selection.survival_index(params, swept),
                        )
                    )
            rows.sort()
            click.echo("effective_gamma  beta      agent  kappa")
            for eff, beta, i, kappa in rows:
                click.echo(f"{eff:<16.6g} {beta:<9.6g} {i:<6d} {kappa:.6g}")
            if out_dir is not None:
                from ._util import write_csv

                with open(
                    out_dir / "survival_sweep.csv", "w", newline=""
                ) as stream:
                    write_csv(
                        stream,
                        ["effective_gamma", "beta", "agent", "kappa"],
                        ([eff, beta, i, kappa] for eff, beta, i, kappa in rows),
                    )
            return

        report = selection.survival_report(params, agents)
        _echo_survival(report)
        if out_dir is not None:
            _write_survival_csv(out_dir, report)

    _guarded(action)


@main.command()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="JSON run configuration (region block).")
@click.option("--out", type=click.Path(), default=None,
              help="Override the output directory.")
def region(config_path: str | None, out: str | None) -> None:
    """Map the two-agent correlation region and cross-check it.

    Classifies each cell of the believed-correlation rectangle by the
    closed-form boundary and independently by survival-index comparison;
    disagreements off the boundary band exit with a numerical failure.
    """

    def action() -> None:
        cfg = _resolve(_load(config_path), None, None, out, None)
        r = cfg.region
        table = selection.region_grid(
            a=r.a,
            phi=r.phi,
            phi1_range=r.phi1_range,
            phi2_range=r.phi2_range,
            n1=r.n1,
            n2=r.n2,
            band=r.band,
        )
        out_dir = _prepare_out(cfg)
        with open(out_dir / "region.csv", "w", newline="") as stream:
            selection.write_region_csv(stream, table)
        n_cells = table.winner_closed_form.size
        click.echo(
            f"region grid {r.n1}x{r.n2}: {n_cells} cells, "
            f"{table.mismatches} mismatch(es) outside the {r.band:g} band"
        )
        if table.mismatches:
            raise ConvergenceError(
                f"{table.mismatches} region cell(s) disagree between the "
                "closed-form boundary and the survival-index comparison"
            )

    _guarded(action)


@main.command("verify-limits")
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="JSON run configuration (limits block).")
@click.option("--seed", type=int, default=None,
              help="Override the estimator seed.")
@click.option("--out", type=click.Path(), default=None,
              help="Override the output directory.")
def verify_limits(
    config_path: str | None, seed: int | None, out: str | None
) -> None:
    """Estimate the catalogued long-run limits and drift averages.

    Writes ``limits_report.csv`` comparing each time-average estimate with
    its closed form, runs the quadratic-variation growth probe, and — when
    the config carries economy/agents/grid blocks — checks one simulated
    path's drift averages against their ergodic limits.  Short horizons
    produce warnings; estimates far off their closed form fail the run.
    """

    def action() -> None:
        cfg = _resolve(_load(config_path), seed, None, out, None)
        base_seed = seed
        if base_seed is None:
            base_seed = cfg.grid.seed if cfg.grid is not None else 0
        out_dir = _prepare_out(cfg)

        limits = cfg.limits
        grid = limits.grid(base_seed)
        estimates = [
            asymptotics.estimate_limit(fid, grid, n_seeds=limits.n_seeds)
            for fid in limits.functionals
        ]
        with open(out_dir / "limits_report.csv", "w", newline="") as stream:
            asymptotics.write_limit_report_csv(stream, estimates)

        counts = {"pass": 0, "warn": 0, "fail": 0}
        for est in estimates:
            status = asymptotics.limit_status(est)
            counts[status] += 1
            fid = est.functional
            params_txt = ", ".join(
                f"{name}={getattr(fid, name):g}"
                for name in ("a", "b", "xi")
                if getattr(fid, name) is not None
            )
            click.echo(
                f"{fid.lemma:<9s} ({params_txt}): closed={est.closed_form:+.6f} "
                f"estimate={est.estimate:+.6f} stderr={est.stderr:.2e} [{status}]"
            )

        probe = asymptotics.qv_growth_probe(limits.qv_grid(base_seed))
        values = ", ".join(f"{v:.3g}" for v in probe.values)
        click.echo(
            "quadratic-variation probe at horizons "
            f"{', '.join(f'{h:g}' for h in probe.horizons)}: {values} "
            f"(growing: {'yes' if probe.growing else 'no'})"
        )

        if (
            cfg.economy is not None
            and cfg.agents is not None
            and cfg.grid is not None
        ):
            eq = equilibrium.simulate_equilibrium(
                cfg.economy, cfg.agents, cfg.grid, n_paths=1, threads=1
            )[0]
            drift = asymptotics.drift_limits_check(cfg.economy, cfg.agents, eq)
            from ._util import write_csv

            with open(out_dir / "drift_report.csv", "w", newline="") as stream:
                def rows():
                    yield ["habit_growth", drift.habit_average, drift.habit_limit]
                    yield [
                        "dividend_growth",
                        drift.growth_average,
                        drift.growth_limit,
                    ]
                    for i, (avg, lim) in enumerate(
                        zip(drift.delta_sq_average, drift.delta_sq_limit)
                    ):
                        yield [f"delta_sq_agent_{i}", avg, lim]
                write_csv(stream, ["quantity", "average", "limit"], rows())
            click.echo(
                f"drift averages (T={cfg.grid.horizon:g}): "
                f"habit {drift.habit_average:+.5f} vs {drift.habit_limit:+.5f}; "
                f"growth {drift.growth_average:+.5f} vs {drift.growth_limit:+.5f}"
            )

        click.echo(
            f"summary: {counts['pass']} pass, {counts['warn']} warn, "
            f"{counts['fail']} fail"
        )
        if counts["fail"]:
            raise ConvergenceError(
                f"{counts['fail']} limit estimate(s) far off their closed form"
            )

    _guarded(action)


if __name__ == "__main__":
    main()
