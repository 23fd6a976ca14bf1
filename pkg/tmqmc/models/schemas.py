"""
Pydantic Models - Relatórios, configurações e resumos
"""
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, computed_field, model_validator

from tmqmc.core.instance import SpinConfiguration, intensive_density
from tmqmc.errors import ConfigError

# TRANSFER

class ValidityReport(BaseModel):
    """Condições de Perron-Frobenius verificadas por enumeração"""
    n_spins: int
    omega: float
    nonnegative: bool
    min_diagonal: int
    argmin_bits: int
    symmetric: bool
    pairs_checked: int
    irreducible: bool
    components: int

    @computed_field
    @property
    def valid(self) -> bool:
        return self.nonnegative and self.symmetric and self.irreducible


# CADEIA

class MeasurementRecord(BaseModel):
    """Média de energia da cadeia numa janela de passos"""
    step: int
    omega: float
    mean_intensive_energy: float
    accept_rate: float = 0.0


class AcceptanceStats(BaseModel):
    """Contagens de visitas"""
    proposed: int = 0
    allowed: int = 0
    accepted: int = 0

    @computed_field
    @property
    def accept_rate(self) -> float:
        return self.accepted / self.proposed if self.proposed else 0.0


# ANNEALING

class AnnealSchedule(BaseModel):
    """Ω(t) linear de omega_in até omega_final, atingido em cutoff_fraction·T"""
    model_config = ConfigDict(frozen=True)

    omega_in: float = Field(gt=0.0)
    total_steps: int = Field(ge=1)
    cutoff_fraction: float = Field(default=0.95, gt=0.0, le=1.0)
    omega_final: float = Field(default=0.0, ge=0.0)

    @model_validator(mode="after")
    def _check_final(self):
        if self.omega_final > self.omega_in:
            raise ValueError("omega_final must not exceed omega_in")
        return self

    @property
    def ramp_steps(self) -> float:
        return self.cutoff_fraction * self.total_steps


class RelaxationFit(BaseModel):
    """Reta de mínimos quadrados sobre a trajetória de janela longa"""
    slope: float
    intercept: float
    chi2: float
    points: int


class RunReport(BaseModel):
    """Resultado de uma execução (anneal, static ou preanneal)"""
    mode: Literal["anneal", "static", "preanneal"]
    n_spins: int
    plackets: int
    steps: int
    seed: int
    trajectory: list[MeasurementRecord] = []
    long_trajectory: list[MeasurementRecord] = []
    final_configuration: SpinConfiguration
    final_raw_energy: int
    acceptance: AcceptanceStats
    wall_time: float
    mean_raw_energy: Optional[float] = None
    stderr_raw: Optional[float] = None
    relaxation_fit: Optional[RelaxationFit] = None

    @computed_field
    @property
    def final_intensive(self) -> float:
        return intensive_density(self.final_raw_energy, self.n_spins)

    @computed_field
    @property
    def mean_density(self) -> Optional[float]:
        if self.mean_raw_energy is None:
            return None
        return intensive_density(self.mean_raw_energy, self.n_spins)

    @computed_field
    @property
    def stderr(self) -> Optional[float]:
        if self.stderr_raw is None:
            return None
        return intensive_density(self.stderr_raw, self.n_spins)


# ORÁCULOS

class GroundStateReport(BaseModel):
    """Estado fundamental exato por busca exaustiva"""
    n_spins: int
    energy: int
    representatives: list[SpinConfiguration]
    degeneracy: int

    @computed_field
    @property
    def intensive(self) -> float:
        return intensive_density(self.energy, self.n_spins)


class DensityOfStates(BaseModel):
    """Histograma exato energia -> número de configurações"""
    n_spins: int
    histogram: dict[int, int]

    @property
    def total(self) -> int:
        return sum(self.histogram.values())

    @property
    def min_energy(self) -> int:
        return min(self.histogram)


class GreedyResult(BaseModel):
    """Descida gulosa: traço dos movimentos aceitos"""
    moves: list[int]
    energies: list[int]
    attempted: int
    final_configuration: SpinConfiguration
    final_energy: int
    is_local_minimum: bool


class SpectralResult(BaseModel):
    """Par dominante de W"""
    n_spins: int
    omega: float
    theta1: float
    amplitudes: list[float]
    classical_expectation: float
    ground_energy: float
    theta2: Optional[float] = None
    iterations: int

    @computed_field
    @property
    def expectation_density(self) -> float:
        return intensive_density(self.classical_expectation, self.n_spins)


class ChainMarginal(BaseModel):
    """P(μ = k) exato da cadeia comparado a γ_k²"""
    n_spins: int
    plackets: int
    omega: float
    probabilities: list[float]
    amplitudes_squared: list[float]
    deviation: float
    theta_ratio: float


# HARNESS

class InstanceSource(BaseModel):
    """Arquivo de instância ou (n, seed)"""
    path: Optional[str] = None
    n: Optional[int] = Field(default=None, ge=2)
    seed: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _one_source(self):
        if (self.path is None) == (self.n is None):
            raise ConfigError("instance source needs exactly one of path or n")
        return self


class EnsembleSpec(BaseModel):
    """Tamanho do ensemble e semente base"""
    instances: int = Field(default=1, ge=0)
    repetitions: int = Field(default=1, ge=1)
    seed_base: int = Field(default=0, ge=0)


class ExperimentConfig(BaseModel):
    """Configuração completa de um experimento (JSON)"""
    mode: Literal["anneal", "static", "preanneal"] = "anneal"
    instance: InstanceSource
    plackets: Optional[int] = Field(default=None, ge=2)
    omega_in: float = Field(default=5.0, gt=0.0)
    steps: int = Field(default=10_000, ge=1)
    cutoff_fraction: float = Field(default=0.95, gt=0.0, le=1.0)
    omega: Optional[float] = None
    burn_in: int = Field(default=0, ge=0)
    prefix_steps: Optional[int] = Field(default=None, ge=0)
    run_seed: int = Field(default=0, ge=0)
    ensemble: EnsembleSpec = EnsembleSpec()
    out_dir: Optional[str] = None
    short_window: int = Field(default=500, ge=1)
    long_window: int = Field(default=10_000, ge=1)
    threads: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _consistent(self):
        if self.mode in ("static", "preanneal") and (self.omega is None or self.omega <= 0):
            raise ConfigError(f"mode {self.mode} requires omega > 0")
        if self.mode == "preanneal":
            if self.omega > self.omega_in:
                raise ConfigError("preanneal target omega must not exceed omega_in")
            if self.prefix_steps is not None and self.prefix_steps >= self.steps:
                raise ConfigError("prefix_steps must be smaller than the total step budget")
        if self.mode == "static" and self.burn_in >= self.steps:
            raise ConfigError("burn_in must be smaller than steps")
        if self.instance.path is not None and self.ensemble.instances > 1:
            raise ConfigError("an instance file supports a single-instance ensemble only")
        return self

    def plackets_for(self, n: int, per_spin: int) -> int:
        return self.plackets if self.plackets is not None else per_spin * n


class EnsembleCell(BaseModel):
    """Uma célula (instância, repetição) do ensemble"""
    instance_index: int
    instance_seed: int
    rep: int
    cell_seed: int
    final_energy: Optional[int] = None
    oracle_energy: Optional[float] = None
    success: Optional[bool] = None
    mean_density: Optional[float] = None
    stderr: Optional[float] = None
    error: Optional[str] = None
    oracle_error: Optional[str] = None


class EnsembleSummary(BaseModel):
    """Resultados por célula e agregados"""
    mode: str
    n_spins: int
    cells: list[EnsembleCell]
    mean_final_density: Optional[float] = None
    mean_final_stderr: Optional[float] = None
    mean_oracle_density: Optional[float] = None
    success_rate: Optional[float] = None
    mean_abs_error: Optional[float] = None
    failures: int = 0
    oracle_missing: int = 0  # células concluídas sem oráculo (fora dos agregados do oráculo)


class StepSweepPoint(BaseModel):
    """Energia final média em função de τ"""
    steps: int
    mean_final_density: float
    stderr: float
    mean_oracle_density: Optional[float] = None
    success_rate: Optional[float] = None


class ModeComparisonPoint(BaseModel):
    """Static vs pre-annealed contra o oráculo espectral num Ω"""
    omega: float
    exact_density: float
    static_density: float
    preanneal_density: float
    static_abs_error: float
    preanneal_abs_error: float
    oracle_missing: int = 0


class CheckResult(BaseModel):
    """Resultado de uma verificação de propriedade"""
    name: str
    passed: bool
    detail: str = ""
