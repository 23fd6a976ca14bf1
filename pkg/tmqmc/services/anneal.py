"""
Anneal Service - schedules lineares e os três modos de execução
(annealing até Ω = 0, Ω estático e estático com pré-annealing)
"""
import time
from typing import Callable, Literal, Optional

import numpy as np
from loguru import logger

from tmqmc.config import settings
from tmqmc.core.chain import PlacketChain, init_chain, run_block
from tmqmc.core.instance import SpinConfiguration, SpinGlassInstance, classical_energy, intensive_density
from tmqmc.errors import IndexRangeError, InvalidSizeError, ScheduleError
from tmqmc.models.schemas import AcceptanceStats, AnnealSchedule, MeasurementRecord, RelaxationFit, RunReport

# Presets: escala completa (N = 30, longos) e escala de mesa
PRESETS: dict[str, dict] = {
    "full-anneal": {"n": 30, "plackets": 600, "steps": 10_000_000, "omega_in": 5.0},
    "full-fast": {"n": 30, "plackets": 600, "steps": 1_000_000, "omega_in": 7.5},
    "full-sweep": {"n": 30, "plackets": 600, "steps": 10_000_000, "omega_in": 1.5, "instances": 30},
    "full-static": {"n": 20, "plackets": 400, "steps": 100_000, "omega_in": 5.0, "instances": 40},
    "desk-anneal": {"n": 10, "plackets": 200, "steps": 200_000, "omega_in": 2.0, "instances": 20},
    "desk-simu": {"n": 12, "plackets": 240, "steps": 100_000, "omega_in": 2.0, "instances": 20},
}


def omega_at(schedule: AnnealSchedule, t: int) -> float:
    """Ω(t) = Ω_f + (Ω_in - Ω_f)·max(0, 1 - t/(c·T))"""
    if not 0 <= t <= schedule.total_steps:
        raise IndexRangeError(f"step {t} outside [0, {schedule.total_steps}]")
    return float(schedule_omegas(schedule, t, t + 1)[0])


def schedule_omegas(schedule: AnnealSchedule, start: int, stop: int) -> np.ndarray:
    """Ω(t) para t em [start, stop), vetorizado"""
    t = np.arange(start, stop, dtype=np.float64)
    ramp = np.clip(1.0 - t / schedule.ramp_steps, 0.0, None)
    return schedule.omega_final + (schedule.omega_in - schedule.omega_final) * ramp


class _Windows:
    """Médias de energia por janela de passos"""

    def __init__(self, size: int, n_spins: int, plackets: int):
        self.size = size
        self.n_spins = n_spins
        self.plackets = plackets
        self.records: list[MeasurementRecord] = []
        self.raw_means: list[float] = []
        self._step = 0
        self._reset()

    def _reset(self):
        self._energy = 0.0
        self._omega = 0.0
        self._accepted = 0
        self._count = 0

    def push(self, energies: np.ndarray, omegas: np.ndarray, accepted: np.ndarray) -> None:
        pos = 0
        total = len(energies)
        while pos < total:
            take = min(self.size - self._count, total - pos)
            chunk = slice(pos, pos + take)
            self._energy += float(energies[chunk].sum())
            self._omega += float(omegas[chunk].sum())
            self._accepted += int(accepted[chunk].sum())
            self._count += take
            self._step += take
            pos += take
            if self._count == self.size:
                self._flush()

    def _flush(self):
        if not self._count:
            return
        raw_mean = self._energy / self._count
        self.raw_means.append(raw_mean)
        self.records.append(MeasurementRecord(
            step=self._step,
            omega=self._omega / self._count,
            mean_intensive_energy=intensive_density(raw_mean, self.n_spins),
            accept_rate=self._accepted / (self._count * self.plackets),
        ))
        self._reset()

    def finish(self) -> list[MeasurementRecord]:
        self._flush()
        return self.records


def relaxation_fit(records: list[MeasurementRecord]) -> Optional[RelaxationFit]:
    """Reta por mínimos quadrados (pesos unitários) sobre as médias de janela longa"""
    if len(records) < 3:
        return None
    steps = np.array([r.step for r in records], dtype=np.float64)
    values = np.array([r.mean_intensive_energy for r in records])
    slope, intercept = np.polyfit(steps, values, 1)
    residuals = values - (slope * steps + intercept)
    return RelaxationFit(slope=float(slope), intercept=float(intercept), chi2=float(residuals @ residuals), points=len(records))


class AnnealService:
    """Service para execuções de Monte Carlo sobre uma instância"""

    @staticmethod
    def _simulate(
            mode: Literal["anneal", "static", "preanneal"],
            inst: SpinGlassInstance,
            plackets: int,
            total_steps: int,
            omegas_for: Callable[[int, int], np.ndarray],
            measure_from: Optional[int],
            seed: int,
            short_window: Optional[int] = None,
            long_window: Optional[int] = None,
    ) -> RunReport:
        """Laço comum: cadeia uniforme aleatória, blocos de passos no kernel, janelas de medida"""
        if plackets < 2:
            raise InvalidSizeError(f"a chain needs at least 2 plackets, got {plackets}")
        started = time.perf_counter()
        rng = np.random.default_rng(seed)
        c0 = SpinConfiguration.random(inst.n_spins, rng)
        while classical_energy(inst, c0).raw == inst.pair_count:
            # W(c0, c0) = C - E = 0: cadeia uniforme de peso nulo
            c0 = SpinConfiguration.random(inst.n_spins, rng)
        chain: PlacketChain = init_chain(inst, c0, plackets)

        short = _Windows(short_window or settings.SHORT_WINDOW, inst.n_spins, plackets)
        long = _Windows(long_window or settings.LONG_WINDOW, inst.n_spins, plackets)
        batches = _Windows(short_window or settings.SHORT_WINDOW, inst.n_spins, plackets)
        measured_sum = 0.0
        measured_count = 0
        stats = AcceptanceStats()

        per_block = max(1, settings.VISIT_BLOCK // plackets)
        done = 0
        while done < total_steps:
            todo = min(per_block, total_steps - done)
            omegas = omegas_for(done, done + todo)
            block = run_block(chain, inst, omegas, rng)
            short.push(block.step_energy, omegas, block.step_accepted)
            long.push(block.step_energy, omegas, block.step_accepted)
            if measure_from is not None and done + todo > measure_from:
                cut = max(0, measure_from - done)
                batches.push(block.step_energy[cut:], omegas[cut:], block.step_accepted[cut:])
                measured_sum += float(block.step_energy[cut:].sum())
                measured_count += todo - cut
            stats = AcceptanceStats(
                proposed=stats.proposed + block.stats.proposed,
                allowed=stats.allowed + block.stats.allowed,
                accepted=stats.accepted + block.stats.accepted,
            )
            done += todo
            logger.debug(f"{mode}: {done}/{total_steps} steps, omega={omegas[-1]:.4f}, accept={block.stats.accept_rate:.4f}")

        final = chain.configuration(chain.lowest_placket())
        mean_raw = stderr_raw = None
        if measured_count:
            mean_raw = measured_sum / measured_count
            # só lotes completos; o resto parcial fica fora do erro padrão
            if len(batches.raw_means) > 1:
                stderr_raw = float(np.std(batches.raw_means, ddof=1) / np.sqrt(len(batches.raw_means)))

        long_records = long.finish()
        return RunReport(
            mode=mode,
            n_spins=inst.n_spins,
            plackets=plackets,
            steps=total_steps,
            seed=seed,
            trajectory=short.finish(),
            long_trajectory=long_records,
            final_configuration=final,
            final_raw_energy=classical_energy(inst, final).raw,
            acceptance=stats,
            wall_time=time.perf_counter() - started,
            mean_raw_energy=mean_raw,
            stderr_raw=stderr_raw,
            relaxation_fit=relaxation_fit(long_records) if mode == "anneal" else None,
        )

    @staticmethod
    def run_annealed(
            inst: SpinGlassInstance,
            plackets: int,
            schedule: AnnealSchedule,
            seed: int,
            short_window: Optional[int] = None,
            long_window: Optional[int] = None,
    ) -> RunReport:
        """Reduz Ω linearmente até zero (em cutoff_fraction·T) e lê o placket de menor energia"""
        if schedule.omega_final != 0.0:
            raise ScheduleError("annealed runs ramp down to omega = 0")
        report = AnnealService._simulate(
            "anneal", inst, plackets, schedule.total_steps,
            lambda a, b: schedule_omegas(schedule, a, b),
            None, seed, short_window, long_window,
        )
        logger.info(f"Annealed N={inst.n_spins} L={plackets} T={schedule.total_steps}: final energy {report.final_raw_energy}")
        return report

    @staticmethod
    def run_static(
            inst: SpinGlassInstance,
            plackets: int,
            omega: float,
            steps: int,
            burn_in: int,
            seed: int,
            short_window: Optional[int] = None,
            long_window: Optional[int] = None,
    ) -> RunReport:
        """Ω fixo desde o início; mede após burn_in"""
        if omega <= 0:
            raise ScheduleError(f"static sampling requires omega > 0, got {omega}")
        if steps < 1 or burn_in < 0:
            raise ScheduleError("static sampling needs steps >= 1 and burn_in >= 0")
        return AnnealService._simulate(
            "static", inst, plackets, burn_in + steps,
            lambda a, b: np.full(b - a, omega),
            burn_in, seed, short_window, long_window,
        )

    @staticmethod
    def run_preannealed_static(
            inst: SpinGlassInstance,
            plackets: int,
            omega_target: float,
            schedule_prefix: AnnealSchedule,
            steps: int,
            seed: int,
            short_window: Optional[int] = None,
            long_window: Optional[int] = None,
    ) -> RunReport:
        """Rampa de Ω_in até omega_target no prefixo, depois Ω fixo; `steps` inclui o prefixo"""
        if omega_target <= 0:
            raise ScheduleError(f"pre-annealed sampling requires omega_target > 0, got {omega_target}")
        if not np.isclose(schedule_prefix.omega_final, omega_target):
            raise ScheduleError("schedule prefix must end at omega_target")
        prefix = schedule_prefix.total_steps
        if prefix >= steps:
            raise ScheduleError(f"prefix of {prefix} steps leaves nothing to measure in a budget of {steps}")

        def omegas_for(a: int, b: int) -> np.ndarray:
            out = np.full(b - a, omega_target)
            if a < prefix:
                out[: prefix - a] = schedule_omegas(schedule_prefix, a, min(b, prefix))
            return out

        return AnnealService._simulate(
            "preanneal", inst, plackets, steps, omegas_for, prefix, seed, short_window, long_window,
        )
