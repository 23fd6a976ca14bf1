"""
Comandos CLI - geração de instâncias, execuções, oráculos, ensembles e validação
"""
import json
from contextlib import contextmanager
from pathlib import Path
from typing import Optional

import click
import numpy as np
from loguru import logger
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from tmqmc.config import settings
from tmqmc.core.instance import SpinConfiguration, SpinGlassInstance, random_instance
from tmqmc.core.transfer import TransferOperator
from tmqmc.errors import ConfigError, TmqmcError
from tmqmc.models.schemas import ExperimentConfig, RunReport
from tmqmc.services.anneal import PRESETS
from tmqmc.services.ensemble import EnsembleService, derive_seed
from tmqmc.services.oracle import OracleService
from tmqmc.services.validation import PropertySuite
from tmqmc.storage.artifacts import ArtifactStore

console = Console()


# --- Erros e configuração

@contextmanager
def domain_errors():
    """Converte erros de domínio em ClickException (exit 1) com o diagnóstico"""
    try:
        yield
    except TmqmcError as e:
        raise click.ClickException(e.detail)
    except ValidationError as e:
        raise click.ClickException(f"Invalid configuration: {e}")
    except OSError as e:
        raise click.ClickException(f"File error: {e}")


def build_config(config_path: Optional[str], preset: Optional[str] = None, n: Optional[int] = None,
                 seed: Optional[int] = None, ensemble: Optional[dict] = None, **fields) -> ExperimentConfig:
    """JSON de configuração + preset + flags (as flags prevalecem)"""
    data = json.loads(Path(config_path).read_text(encoding="utf-8")) if config_path else {}
    instance = dict(data.get("instance") or {})
    group = dict(data.get("ensemble") or {})

    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {', '.join(PRESETS)}")
        values = dict(PRESETS[preset])
        instance = {"n": values.pop("n"), "seed": instance.get("seed", 0)}
        if "instances" in values:
            group["instances"] = values.pop("instances")
        data.update(values)

    if n is not None:
        instance = {"n": n, "seed": instance.get("seed", 0)}
    if seed is not None:
        instance["seed"] = seed
    group.update({k: v for k, v in (ensemble or {}).items() if v is not None})
    data.update({k: v for k, v in fields.items() if v is not None})
    data["instance"] = instance
    data["ensemble"] = group
    return ExperimentConfig.model_validate(data)


def resolve_instance(config: ExperimentConfig) -> SpinGlassInstance:
    if config.instance.path is not None:
        return ArtifactStore.read_instance(config.instance.path)
    return random_instance(config.instance.n, config.instance.seed)


def _store(out: Optional[str], config: Optional[ExperimentConfig] = None) -> ArtifactStore:
    return ArtifactStore(out or (config.out_dir if config else None))


def _fmt(value, digits: int = 6) -> str:
    return "-" if value is None else f"{value:.{digits}f}"


# --- Opções compartilhadas

def config_options(func):
    for option in reversed([
        click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="Experiment JSON"),
        click.option("--out", default=None, help="Output directory"),
        click.option("--threads", type=int, default=None, help="Worker threads"),
        click.option("--preset", default=None, help=f"One of: {', '.join(PRESETS)}"),
        click.option("--n", type=int, default=None, help="Number of spins (generated instance)"),
        click.option("--seed", type=int, default=None, help="Instance seed"),
        click.option("--plackets", type=int, default=None, help="Chain length L"),
        click.option("--steps", type=int, default=None, help="Monte Carlo steps"),
        click.option("--omega-in", type=float, default=None, help="Initial transverse field"),
        click.option("--run-seed", type=int, default=None, help="Seed of the Monte Carlo stream"),
    ]):
        func = option(func)
    return func


# --- Instâncias e paisagem

@click.command()
@click.option("--n", type=int, required=True, help="Number of spins")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", default=None, help="Output directory")
@click.option("--name", default="instance.json", show_default=True)
def gen(n: int, seed: int, out: Optional[str], name: str):
    """Gera uma instância ±J e grava o JSON"""
    with domain_errors():
        path = _store(out).write_instance(random_instance(n, seed), name)
    click.echo(str(path))


@click.command()
@config_options
@click.option("--starts", type=int, default=50, show_default=True, help="Greedy random starts")
@click.option("--moves", type=int, default=1_000_000, show_default=True, help="Greedy flips per start")
def landscape(config_path, out, threads, preset, n, seed, plackets, steps, omega_in, run_seed, starts, moves):
    """Estado fundamental, densidade de estados, caminho de flips e descidas gulosas"""
    with domain_errors():
        config = build_config(config_path, preset, n, seed)
        inst = resolve_instance(config)
        store = _store(out, config)
        ground = OracleService.exhaustive_ground_state(inst, threads)
        store.write_model(ground, "ground_state.json")

        table = Table(title=f"Landscape N={inst.n_spins}")
        table.add_column("quantity")
        table.add_column("value", justify="right")
        table.add_row("ground energy", str(ground.energy))
        table.add_row("ground density", _fmt(ground.intensive))
        table.add_row("degeneracy", str(ground.degeneracy))

        if inst.n_spins <= settings.DOS_MAX_SPINS:
            dos = OracleService.density_of_states(inst, threads)
            store.write_dos(dos)
            table.add_row("largest level count", str(max(dos.histogram.values())))
        if inst.n_spins <= settings.EIGEN_MAX_SPINS:
            table.add_row("local minima", str(OracleService.local_minima(inst).total))

        profile = OracleService.flip_path_profile(inst)
        store.write_flip_path(profile)
        table.add_row("flip path minimum", str(min(profile)))

        runs = []
        base = config.run_seed if run_seed is None else run_seed
        for k in range(starts):
            start_rng = np.random.default_rng(derive_seed(base, k))
            start = SpinConfiguration.random(inst.n_spins, start_rng)
            runs.append(OracleService.greedy_downhill(inst, start, moves, derive_seed(base, k, 1)))
        if runs:
            store.write_greedy(runs)
            reached = sum(r.final_energy == ground.energy for r in runs)
            table.add_row("greedy reached ground", f"{reached}/{starts}")
    console.print(table)


# --- Execuções

def _print_report(report: RunReport):
    table = Table(title=f"{report.mode} N={report.n_spins} L={report.plackets} steps={report.steps}")
    table.add_column("quantity")
    table.add_column("value", justify="right")
    table.add_row("final energy", str(report.final_raw_energy))
    table.add_row("final density", _fmt(report.final_intensive))
    table.add_row("mean density", _fmt(report.mean_density))
    table.add_row("stderr", _fmt(report.stderr))
    table.add_row("accept rate", _fmt(report.acceptance.accept_rate, 4))
    if report.relaxation_fit is not None:
        table.add_row("relaxation slope", f"{report.relaxation_fit.slope:.3e}")
    table.add_row("wall time [s]", _fmt(report.wall_time, 2))
    console.print(table)


def _run_mode(mode: str, config_path, out, threads, preset, n, seed, plackets, steps, omega_in, run_seed, **extra):
    with domain_errors():
        config = build_config(
            config_path, preset, n, seed, mode=mode, plackets=plackets, steps=steps,
            omega_in=omega_in, run_seed=run_seed, **extra,
        )
        inst = resolve_instance(config)
        report = EnsembleService.run_single(config, inst, config.run_seed)
        store = _store(out, config)
        store.write_model(report, f"{mode}_report.json")
        store.write_trajectory(report.trajectory, f"{mode}_trajectory.csv")
        store.write_trajectory(report.long_trajectory, f"{mode}_trajectory_long.csv")
    _print_report(report)


@click.command()
@config_options
@click.option("--cutoff", "cutoff_fraction", type=float, default=None, help="Fraction of T at which omega reaches 0")
def anneal(**kwargs):
    """Annealing linear de omega_in até Ω = 0"""
    _run_mode("anneal", **kwargs)


@click.command()
@config_options
@click.option("--omega", type=float, default=None, help="Static transverse field")
@click.option("--burn-in", type=int, default=None, help="Steps discarded before measuring")
def static(**kwargs):
    """Amostragem com Ω fixo"""
    _run_mode("static", **kwargs)


@click.command()
@config_options
@click.option("--omega", type=float, default=None, help="Target transverse field")
@click.option("--prefix-steps", type=int, default=None, help="Ramp length inside the step budget")
def preanneal(**kwargs):
    """Rampa até omega e amostragem estática com o mesmo orçamento"""
    _run_mode("preanneal", **kwargs)


# --- Oráculo espectral

@click.command()
@config_options
@click.option("--omega", type=float, required=True, help="Transverse field")
@click.option("--full", is_flag=True, help="Also write the amplitudes")
def eigen(config_path, out, threads, preset, n, seed, plackets, steps, omega_in, run_seed, omega, full):
    """Par dominante de W por power iteration"""
    with domain_errors():
        config = build_config(config_path, preset, n, seed)
        inst = resolve_instance(config)
        result = OracleService.dominant_eigenpair(TransferOperator(instance=inst, omega=omega))
        path = _store(out, config).write_spectral(result, full=full)

    table = Table(title=f"Dominant eigenpair N={inst.n_spins} omega={omega}")
    table.add_column("quantity")
    table.add_column("value", justify="right")
    table.add_row("theta1", f"{result.theta1:.12g}")
    table.add_row("<H_0>", f"{result.classical_expectation:.10g}")
    table.add_row("<H_0> density", _fmt(result.expectation_density))
    table.add_row("iterations", str(result.iterations))
    console.print(table)
    logger.info(f"Spectral result written to {path}")


# --- Ensembles

@click.command()
@config_options
@click.option("--mode", type=click.Choice(["anneal", "static", "preanneal"]), default=None)
@click.option("--omega", type=float, default=None)
@click.option("--burn-in", type=int, default=None)
@click.option("--prefix-steps", type=int, default=None)
@click.option("--instances", type=int, default=None)
@click.option("--reps", type=int, default=None, help="Repetitions per instance")
@click.option("--seed-base", type=int, default=None)
@click.option("--sweep-steps", type=int, multiple=True, help="Repeat the ensemble for each step budget")
@click.option("--compare-omegas", type=float, multiple=True, help="Static vs pre-annealed at each omega")
def ensemble(config_path, out, threads, preset, n, seed, plackets, steps, omega_in, run_seed,
             mode, omega, burn_in, prefix_steps, instances, reps, seed_base, sweep_steps, compare_omegas):
    """Ensemble de instâncias × repetições com oráculos anexados"""
    with domain_errors():
        config = build_config(
            config_path, preset, n, seed,
            ensemble={"instances": instances, "repetitions": reps, "seed_base": seed_base},
            mode=mode, omega=omega, burn_in=burn_in, prefix_steps=prefix_steps,
            plackets=plackets, steps=steps, omega_in=omega_in, run_seed=run_seed,
        )
        store = _store(out, config)

        if sweep_steps:
            points = EnsembleService.sweep_steps(config, list(sweep_steps), threads)
            store.write_sweep(points)
            table = Table(title="Final energy vs annealing time")
            for col in ("steps", "mean density", "stderr", "oracle", "success"):
                table.add_column(col, justify="right")
            for p in points:
                table.add_row(str(p.steps), _fmt(p.mean_final_density), _fmt(p.stderr),
                              _fmt(p.mean_oracle_density), _fmt(p.success_rate, 3))
        elif compare_omegas:
            points = EnsembleService.compare_modes(config, list(compare_omegas), threads)
            store.write_comparison(points)
            table = Table(title="Static vs pre-annealed sampling")
            for col in ("omega", "exact", "static", "preanneal", "|static err|", "|preanneal err|"):
                table.add_column(col, justify="right")
            for p in points:
                table.add_row(f"{p.omega:g}", _fmt(p.exact_density), _fmt(p.static_density), _fmt(p.preanneal_density),
                              _fmt(p.static_abs_error), _fmt(p.preanneal_abs_error))
        else:
            summary = EnsembleService.ensemble_run(config, threads)
            store.write_summary(summary)
            store.write_model(summary, "summary.json")
            table = Table(title=f"Ensemble {summary.mode} N={summary.n_spins} ({len(summary.cells)} cells)")
            table.add_column("quantity")
            table.add_column("value", justify="right")
            table.add_row("mean final density", _fmt(summary.mean_final_density))
            table.add_row("stderr", _fmt(summary.mean_final_stderr))
            table.add_row("mean oracle density", _fmt(summary.mean_oracle_density))
            table.add_row("success rate", _fmt(summary.success_rate, 3))
            table.add_row("mean |error|", _fmt(summary.mean_abs_error))
            table.add_row("failed cells", str(summary.failures))
    console.print(table)


# --- Validação

@click.command()
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--trials", type=int, default=2000, show_default=True, help="Random draws per fuzz check")
@click.pass_context
def validate(ctx: click.Context, seed: int, trials: int):
    """Roda a bateria de propriedades e imprime passa/falha"""
    results = PropertySuite(seed=seed, trials=trials).run()
    table = Table(title="Property suite")
    table.add_column("check")
    table.add_column("result")
    table.add_column("detail")
    for r in results:
        table.add_row(r.name, "[green]pass[/green]" if r.passed else "[red]FAIL[/red]", r.detail)
    console.print(table)
    if not all(r.passed for r in results):
        ctx.exit(1)


COMMANDS = [gen, landscape, anneal, static, preanneal, eigen, ensemble, validate]
