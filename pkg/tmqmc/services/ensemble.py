"""
Ensemble Service - células (instância, repetição) com sementes derivadas,
oráculos anexados e agregados
"""
from typing import Optional

import numpy as np
from joblib import Parallel, delayed
from loguru import logger

from tmqmc.config import settings
from tmqmc.core.instance import SpinGlassInstance, intensive_density, random_instance
from tmqmc.core.transfer import TransferOperator
from tmqmc.errors import ConfigError
from tmqmc.models.schemas import (
    AnnealSchedule,
    EnsembleCell,
    EnsembleSummary,
    ExperimentConfig,
    ModeComparisonPoint,
    RunReport,
    StepSweepPoint,
)
from tmqmc.services.anneal import AnnealService
from tmqmc.services.oracle import OracleService
from tmqmc.storage.artifacts import ArtifactStore

_MASK = (1 << 64) - 1


def _splitmix(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_seed(base: int, *parts: int) -> int:
    """Semente de 64 bits estável para (base, parte_1, ..., parte_k)"""
    z = _splitmix(base & _MASK)
    for part in parts:
        z = _splitmix(z ^ (part & _MASK))
    return z


def prefix_steps_for(config: ExperimentConfig) -> int:
    """Prefixo de pré-annealing; metade do orçamento se não informado"""
    prefix = config.prefix_steps if config.prefix_steps is not None else config.steps // 2
    return max(1, prefix)


def _load_instances(config: ExperimentConfig) -> list[tuple[int, SpinGlassInstance]]:
    source = config.instance
    if source.path is not None:
        inst = ArtifactStore.read_instance(source.path)
        return [(inst.seed if inst.seed is not None else 0, inst)]
    seeds = [derive_seed(config.ensemble.seed_base, i) for i in range(config.ensemble.instances)]
    return [(seed, random_instance(source.n, seed)) for seed in seeds]


class EnsembleService:
    """Service para execuções em lote e varreduras"""

    @staticmethod
    def run_single(config: ExperimentConfig, inst: SpinGlassInstance, seed: int) -> RunReport:
        """Uma execução do modo configurado"""
        plackets = config.plackets_for(inst.n_spins, settings.PLACKETS_PER_SPIN)
        windows = dict(short_window=config.short_window, long_window=config.long_window)
        if config.mode == "anneal":
            schedule = AnnealSchedule(
                omega_in=config.omega_in, total_steps=config.steps, cutoff_fraction=config.cutoff_fraction,
            )
            return AnnealService.run_annealed(inst, plackets, schedule, seed, **windows)
        if config.mode == "static":
            return AnnealService.run_static(
                inst, plackets, config.omega, config.steps - config.burn_in, config.burn_in, seed, **windows,
            )
        prefix = AnnealSchedule(
            omega_in=config.omega_in,
            total_steps=prefix_steps_for(config),
            cutoff_fraction=config.cutoff_fraction,
            omega_final=config.omega,
        )
        return AnnealService.run_preannealed_static(inst, plackets, config.omega, prefix, config.steps, seed, **windows)

    @staticmethod
    def oracle_energy(config: ExperimentConfig, inst: SpinGlassInstance) -> Optional[float]:
        """Estado fundamental exato (anneal) ou <H> do autovetor dominante (static/preanneal)"""
        return EnsembleService._oracle(config, inst)[0]

    @staticmethod
    def _oracle(config: ExperimentConfig, inst: SpinGlassInstance) -> tuple[Optional[float], Optional[str]]:
        """(energia do oráculo, motivo da ausência)"""
        n = inst.n_spins
        cap = settings.EXHAUSTIVE_MAX_SPINS if config.mode == "anneal" else settings.EIGEN_MAX_SPINS
        if n > cap:
            return None, f"no {config.mode} oracle above N = {cap}"
        try:
            if config.mode == "anneal":
                return float(OracleService.exhaustive_ground_state(inst).energy), None
            op = TransferOperator(instance=inst, omega=config.omega)
            return OracleService.dominant_eigenpair(op).classical_expectation, None
        except Exception as e:
            logger.error(f"Oracle failed for instance seed {inst.seed}: {e}")
            return None, getattr(e, "detail", str(e))

    @staticmethod
    def _cell(config: ExperimentConfig, index: int, instance_seed: int, inst: SpinGlassInstance,
              rep: int, oracle: tuple[Optional[float], Optional[str]]) -> EnsembleCell:
        cell_seed = derive_seed(config.ensemble.seed_base, index, rep)
        cell = EnsembleCell(instance_index=index, instance_seed=instance_seed, rep=rep, cell_seed=cell_seed,
                            oracle_energy=oracle[0], oracle_error=oracle[1])
        try:
            report = EnsembleService.run_single(config, inst, cell_seed)
        except Exception as e:
            logger.error(f"Cell ({index}, {rep}) failed: {e}")
            return cell.model_copy(update={"error": getattr(e, "detail", str(e))})

        success = None
        if config.mode == "anneal" and oracle[0] is not None:
            success = report.final_raw_energy == int(oracle[0])
        return cell.model_copy(update={
            "final_energy": report.final_raw_energy,
            "success": success,
            "mean_density": report.mean_density if report.mean_density is not None else report.final_intensive,
            "stderr": report.stderr,
        })

    @staticmethod
    def ensemble_run(config: ExperimentConfig, threads: Optional[int] = None) -> EnsembleSummary:
        """Todas as células em ordem de configuração, independente da ordem de término"""
        instances = _load_instances(config)
        if not instances:
            raise ConfigError("empty ensemble: instances must be >= 1")
        n = instances[0][1].n_spins
        logger.info(f"Ensemble started: mode={config.mode} N={n} instances={len(instances)} "
                    f"repetitions={config.ensemble.repetitions}")

        oracles = [EnsembleService._oracle(config, inst) for _, inst in instances]
        attached = sum(energy is not None for energy, _ in oracles)
        if attached:
            logger.info(f"Oracle attached for {attached} of {len(instances)} instances")

        cells = Parallel(n_jobs=threads or config.threads, prefer="threads")(
            delayed(EnsembleService._cell)(config, index, seed, inst, rep, oracles[index])
            for index, (seed, inst) in enumerate(instances)
            for rep in range(config.ensemble.repetitions)
        )
        summary = _summarize(config.mode, n, cells)
        logger.info(f"Ensemble finished: {len(cells)} cells, {summary.failures} failures")
        return summary

    @staticmethod
    def sweep_steps(config: ExperimentConfig, steps_list: list[int], threads: Optional[int] = None) -> list[StepSweepPoint]:
        """Energia final média em função do tempo de annealing τ"""
        points = []
        for steps in steps_list:
            summary = EnsembleService.ensemble_run(
                ExperimentConfig.model_validate({**config.model_dump(), "steps": steps}), threads,
            )
            if summary.mean_final_density is None:
                raise ConfigError(f"every cell failed at steps={steps}")
            points.append(StepSweepPoint(
                steps=steps,
                mean_final_density=summary.mean_final_density,
                stderr=summary.mean_final_stderr or 0.0,
                mean_oracle_density=summary.mean_oracle_density,
                success_rate=summary.success_rate,
            ))
        return points

    @staticmethod
    def compare_modes(config: ExperimentConfig, omegas: list[float], threads: Optional[int] = None) -> list[ModeComparisonPoint]:
        """Static vs pré-annealing com o mesmo orçamento e a mesma janela de medida"""
        prefix = prefix_steps_for(config)
        base = config.model_dump()
        points = []
        for omega in omegas:
            static = EnsembleService.ensemble_run(ExperimentConfig.model_validate(
                {**base, "mode": "static", "omega": omega, "burn_in": prefix}), threads)
            pre = EnsembleService.ensemble_run(ExperimentConfig.model_validate(
                {**base, "mode": "preanneal", "omega": omega, "prefix_steps": prefix}), threads)
            if None in (static.mean_abs_error, pre.mean_abs_error):
                raise ConfigError(f"mode comparison at omega={omega} needs the spectral oracle (N <= {settings.EIGEN_MAX_SPINS})")
            points.append(ModeComparisonPoint(
                omega=omega,
                exact_density=static.mean_oracle_density,
                static_density=static.mean_final_density,
                preanneal_density=pre.mean_final_density,
                static_abs_error=static.mean_abs_error,
                preanneal_abs_error=pre.mean_abs_error,
                oracle_missing=max(static.oracle_missing, pre.oracle_missing),
            ))
            logger.info(f"omega={omega}: static error {static.mean_abs_error:.5f}, pre-annealed {pre.mean_abs_error:.5f}")
        return points


def _mean_stderr(values: list[float]) -> tuple[Optional[float], Optional[float]]:
    if not values:
        return None, None
    if len(values) == 1:
        return float(values[0]), None
    return float(np.mean(values)), float(np.std(values, ddof=1) / np.sqrt(len(values)))


def _summarize(mode: str, n: int, cells: list[EnsembleCell]) -> EnsembleSummary:
    done = [c for c in cells if c.error is None]
    mean_final, stderr_final = _mean_stderr([c.mean_density for c in done])
    with_oracle = [c for c in done if c.oracle_energy is not None]
    mean_oracle, _ = _mean_stderr([intensive_density(c.oracle_energy, n) for c in with_oracle])

    missing = len(done) - len(with_oracle)
    if missing and with_oracle:
        logger.warning(f"Oracle missing for {missing} of {len(done)} cells; oracle aggregates use the other {len(with_oracle)}")

    decided = [c.success for c in done if c.success is not None]
    errors = [abs(c.mean_density - intensive_density(c.oracle_energy, n)) for c in with_oracle]
    return EnsembleSummary(
        mode=mode,
        n_spins=n,
        cells=cells,
        mean_final_density=mean_final,
        mean_final_stderr=stderr_final,
        mean_oracle_density=mean_oracle,
        success_rate=sum(decided) / len(decided) if decided else None,
        mean_abs_error=float(np.mean(errors)) if errors else None,
        failures=len(cells) - len(done),
        oracle_missing=missing,
    )
