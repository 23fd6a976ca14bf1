"""
Artefatos - instâncias JSON, trajetórias e resumos CSV, resultados espectrais
"""
import csv
import json
from pathlib import Path
from typing import Iterable, Optional, Union

from loguru import logger

from tmqmc.config import settings
from tmqmc.core.instance import SpinGlassInstance
from tmqmc.errors import DimensionError
from tmqmc.models.schemas import (
    DensityOfStates,
    EnsembleSummary,
    GreedyResult,
    MeasurementRecord,
    ModeComparisonPoint,
    SpectralResult,
    StepSweepPoint,
)

TRAJECTORY_HEADER = ["step", "omega", "energy_density", "accept_rate"]
SUMMARY_HEADER = ["instance_seed", "rep", "final_energy", "oracle_energy", "success", "mean_density", "stderr"]


def _blank(value) -> str:
    return "" if value is None else str(value)


class ArtifactStore:
    """Escrita/leitura dos arquivos de um diretório de saída"""

    def __init__(self, root: Union[str, Path, None] = None):
        self.root = Path(root or settings.OUTPUT_DIR)

    def path(self, name: str) -> Path:
        self.root.mkdir(parents=True, exist_ok=True)
        return self.root / name

    def _write_rows(self, name: str, header: list[str], rows: Iterable[list]) -> Path:
        target = self.path(name)
        with target.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
        logger.debug(f"Wrote {target}")
        return target

    # --- Instâncias

    def write_instance(self, inst: SpinGlassInstance, name: str = "instance.json") -> Path:
        target = self.path(name)
        payload = {"n": inst.n_spins, "seed": inst.seed, "couplings": list(inst.couplings)}
        target.write_text(json.dumps(payload), encoding="utf-8")
        return target

    @staticmethod
    def read_instance(path: Union[str, Path]) -> SpinGlassInstance:
        """Carrega {"n", "seed", "couplings"}; os acoplamentos mandam, (n, seed) é procedência"""
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(data, dict) or "n" not in data or "couplings" not in data:
            raise DimensionError(f"{path}: instance file needs the fields n and couplings")
        return SpinGlassInstance(n_spins=int(data["n"]), couplings=tuple(data["couplings"]), seed=data.get("seed"))

    # --- Trajetórias e relatórios

    def write_trajectory(self, records: list[MeasurementRecord], name: str = "trajectory.csv") -> Path:
        return self._write_rows(name, TRAJECTORY_HEADER, (
            [r.step, repr(r.omega), repr(r.mean_intensive_energy), repr(r.accept_rate)] for r in records
        ))

    @staticmethod
    def read_trajectory(path: Union[str, Path]) -> list[MeasurementRecord]:
        with Path(path).open(newline="", encoding="utf-8") as fh:
            return [
                MeasurementRecord(
                    step=int(row["step"]),
                    omega=float(row["omega"]),
                    mean_intensive_energy=float(row["energy_density"]),
                    accept_rate=float(row["accept_rate"]),
                )
                for row in csv.DictReader(fh)
            ]

    def write_model(self, model, name: str) -> Path:
        """Qualquer relatório pydantic como JSON"""
        target = self.path(name)
        target.write_text(model.model_dump_json(indent=2), encoding="utf-8")
        return target

    def write_summary(self, summary: EnsembleSummary, name: str = "summary.csv") -> Path:
        return self._write_rows(name, SUMMARY_HEADER, (
            [
                c.instance_seed, c.rep, _blank(c.final_energy), _blank(c.oracle_energy),
                "" if c.success is None else int(c.success),
                _blank(None if c.mean_density is None else repr(c.mean_density)),
                _blank(None if c.stderr is None else repr(c.stderr)),
            ]
            for c in summary.cells
        ))

    # --- Paisagem

    def write_dos(self, dos: DensityOfStates, name: str = "dos.csv") -> Path:
        return self._write_rows(name, ["energy", "count"], ([e, dos.histogram[e]] for e in sorted(dos.histogram)))

    def write_flip_path(self, profile: list[int], name: str = "flip_path.csv") -> Path:
        return self._write_rows(name, ["flip_index", "energy"], enumerate(profile))

    def write_greedy(self, runs: list[GreedyResult], name: str = "greedy.csv") -> Path:
        """Traços concatenados; `start` separa as descidas"""
        return self._write_rows(name, ["start", "move", "energy"], (
            [k, m, e] for k, run in enumerate(runs) for m, e in zip(run.moves, run.energies)
        ))

    def write_spectral(self, result: SpectralResult, name: str = "eigen.json", full: Optional[bool] = False) -> Path:
        """{theta1, classical_expectation, iterations}; `full` inclui as amplitudes"""
        if full:
            return self.write_model(result, name)
        target = self.path(name)
        payload = {
            "n": result.n_spins,
            "omega": result.omega,
            "theta1": result.theta1,
            "classical_expectation": result.classical_expectation,
            "expectation_density": result.expectation_density,
            "ground_energy": result.ground_energy,
            "theta2": result.theta2,
            "iterations": result.iterations,
        }
        target.write_text(json.dumps(payload, indent=2), encoding="utf-8")
        return target

    # --- Varreduras

    def write_sweep(self, points: list[StepSweepPoint], name: str = "sweep.csv") -> Path:
        return self._write_rows(name, ["steps", "mean_final_density", "stderr", "mean_oracle_density", "success_rate"], (
            [p.steps, repr(p.mean_final_density), repr(p.stderr), _blank(p.mean_oracle_density), _blank(p.success_rate)]
            for p in points
        ))

    def write_comparison(self, points: list[ModeComparisonPoint], name: str = "compare.csv") -> Path:
        return self._write_rows(name, ["omega", "exact_density", "static_density", "preanneal_density",
                                       "static_abs_error", "preanneal_abs_error", "oracle_missing"], (
            [repr(p.omega), repr(p.exact_density), repr(p.static_density), repr(p.preanneal_density),
             repr(p.static_abs_error), repr(p.preanneal_abs_error), p.oracle_missing]
            for p in points
        ))
