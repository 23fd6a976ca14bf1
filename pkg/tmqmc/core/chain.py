"""
Cadeia - anel uniforme de L plackets e dinâmica restrita de flip único

Peso da cadeia: P(A) ∝ Π_λ W(μ_λ, μ_{λ+1}) com λ+1 periódico. Um movimento
(λ, i) só é permitido quando cada vizinho é igual a μ_λ ou difere dele
exatamente no spin i; a aceitação é min(1, razão das duas ligações tocadas).
"""
import math

import numpy as np
from pydantic import BaseModel, ConfigDict

from tmqmc.config import settings
from tmqmc.core import kernels
from tmqmc.core.instance import SpinConfiguration, SpinGlassInstance, classical_energy, intensive_density
from tmqmc.core.transfer import TransferOperator, w_element
from tmqmc.errors import CapExceededError, ChainWeightError, DimensionError, IndexRangeError, InvalidSizeError
from tmqmc.models.schemas import AcceptanceStats, MeasurementRecord


class MoveProposal(BaseModel):
    """Flip do spin `spin` no placket `placket`"""
    model_config = ConfigDict(frozen=True)

    placket: int
    spin: int


class PlacketChain:
    """L configurações num anel, com energias clássicas em cache"""

    def __init__(self, n_spins: int, plackets: np.ndarray, energies: np.ndarray):
        if plackets.shape != energies.shape or plackets.ndim != 1:
            raise DimensionError("plackets and energies must be 1-d arrays of equal length")
        if plackets.shape[0] < 2:
            raise InvalidSizeError(f"a chain needs at least 2 plackets, got {plackets.shape[0]}")
        self.n_spins = n_spins
        self.plackets = plackets.astype(np.int64, copy=False)
        self.energies = energies.astype(np.int64, copy=False)

    @property
    def length(self) -> int:
        return int(self.plackets.shape[0])

    def configuration(self, lam: int) -> SpinConfiguration:
        return SpinConfiguration(n=self.n_spins, bits=int(self.plackets[lam % self.length]))

    def copy(self) -> "PlacketChain":
        return PlacketChain(self.n_spins, self.plackets.copy(), self.energies.copy())

    def recompute_energies(self, inst: SpinGlassInstance) -> np.ndarray:
        """Energias recalculadas do zero (para conferir o cache)"""
        return np.array([classical_energy(inst, self.configuration(lam)).raw for lam in range(self.length)], dtype=np.int64)

    def lowest_placket(self) -> int:
        """Leitura final: placket de menor energia em cache"""
        return int(np.argmin(self.energies))

    def state_code(self) -> int:
        """Estado inteiro empacotado: Σ_λ μ_λ << (N·λ)"""
        code = 0
        for lam in range(self.length):
            code |= int(self.plackets[lam]) << (self.n_spins * lam)
        return code

    @classmethod
    def from_code(cls, inst: SpinGlassInstance, code: int, length: int) -> "PlacketChain":
        n = inst.n_spins
        mask = (1 << n) - 1
        plackets = np.array([(code >> (n * lam)) & mask for lam in range(length)], dtype=np.int64)
        chain = cls(n, plackets, np.zeros(length, dtype=np.int64))
        chain.energies = chain.recompute_energies(inst)
        return chain


class BlockResult(BaseModel):
    """Saída de um bloco de passos do kernel"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    step_energy: np.ndarray
    step_accepted: np.ndarray
    stats: AcceptanceStats
    states: np.ndarray


def init_chain(inst: SpinGlassInstance, c0: SpinConfiguration, length: int) -> PlacketChain:
    """Todos os L plackets iguais a c0"""
    if length < 2:
        raise InvalidSizeError(f"a chain needs at least 2 plackets, got {length}")
    energy = classical_energy(inst, c0).raw
    return PlacketChain(
        inst.n_spins,
        np.full(length, c0.bits, dtype=np.int64),
        np.full(length, energy, dtype=np.int64),
    )


def _check_move(chain: PlacketChain, mv: MoveProposal) -> None:
    if not 0 <= mv.placket < chain.length:
        raise IndexRangeError(f"placket index {mv.placket} out of range [0, {chain.length})")
    if not 0 <= mv.spin < chain.n_spins:
        raise IndexRangeError(f"spin index {mv.spin} out of range [0, {chain.n_spins})")


def is_allowed(chain: PlacketChain, mv: MoveProposal) -> bool:
    """Cada vizinho igual a μ_λ ou diferente só no spin i"""
    _check_move(chain, mv)
    mask = 1 << mv.spin
    m = int(chain.plackets[mv.placket])
    for nu in (mv.placket - 1, mv.placket + 1):
        diff = int(chain.plackets[nu % chain.length]) ^ m
        if diff not in (0, mask):
            return False
    return True


def acceptance_ratio(chain: PlacketChain, op: TransferOperator, mv: MoveProposal) -> float:
    """[W(a, μ') W(μ', b)] / [W(a, μ) W(μ, b)] para o movimento permitido mv"""
    if not is_allowed(chain, mv):
        raise ChainWeightError(f"move {mv} is not allowed on this chain")
    m = chain.configuration(mv.placket)
    moved = m.flip(mv.spin)
    left = chain.configuration(mv.placket - 1)
    right = chain.configuration(mv.placket + 1)
    denominator = w_element(op, left, m) * w_element(op, m, right)
    if denominator <= 0.0:
        raise ChainWeightError("zero-weight bond around the visited placket")
    return w_element(op, left, moved) * w_element(op, moved, right) / denominator


def chain_log_weight(chain: PlacketChain, op: TransferOperator) -> float:
    """Σ log W(μ_λ, μ_{λ+1}); -inf sinaliza estado de peso nulo"""
    total = 0.0
    for lam in range(chain.length):
        w = w_element(op, chain.configuration(lam), chain.configuration(lam + 1))
        if w <= 0.0:
            return -math.inf
        total += math.log(w)
    return total


def run_block(chain: PlacketChain, inst: SpinGlassInstance, omegas: np.ndarray,
              rng: np.random.Generator, record_states: bool = False) -> BlockResult:
    """len(omegas) passos; Ω fixo dentro de cada passo"""
    steps = int(omegas.shape[0])
    visits = steps * chain.length
    step_energy = np.empty(steps, dtype=np.float64)
    step_accepted = np.empty(steps, dtype=np.int64)
    counts = np.zeros(3, dtype=np.int64)
    states = np.empty(steps if record_states else 0, dtype=np.int64)
    kernels.run_steps(
        inst.coupling_matrix, inst.n_spins, inst.pair_count,
        chain.plackets, chain.energies, np.ascontiguousarray(omegas, dtype=np.float64),
        rng.integers(0, chain.length, size=visits, dtype=np.int64),
        rng.integers(0, inst.n_spins, size=visits, dtype=np.int64),
        rng.random(visits),
        step_energy, step_accepted, counts, states,
    )
    stats = AcceptanceStats(proposed=int(counts[0]), allowed=int(counts[1]), accepted=int(counts[2]))
    return BlockResult(step_energy=step_energy, step_accepted=step_accepted, stats=stats, states=states)


def mc_step(chain: PlacketChain, op: TransferOperator, rng: np.random.Generator) -> AcceptanceStats:
    """Um passo de Monte Carlo: L visitas com Ω = op.omega"""
    return run_block(chain, op.instance, np.array([op.omega]), rng).stats


def measure(chain: PlacketChain, step: int, omega: float) -> MeasurementRecord:
    """Energia clássica média sobre os L plackets, em N^{3/2}"""
    mean_raw = float(chain.energies.mean())
    return MeasurementRecord(step=step, omega=omega, mean_intensive_energy=intensive_density(mean_raw, chain.n_spins))


def sample_states(chain: PlacketChain, op: TransferOperator, steps: int, rng: np.random.Generator) -> np.ndarray:
    """Estado empacotado da cadeia após cada passo (N·L pequeno)"""
    bits = chain.n_spins * chain.length
    if bits > settings.CHAIN_STATE_MAX_BITS:
        raise CapExceededError(f"chain state needs {bits} bits, cap is {settings.CHAIN_STATE_MAX_BITS}")
    per_block = max(1, settings.VISIT_BLOCK // chain.length)
    out = []
    done = 0
    while done < steps:
        todo = min(per_block, steps - done)
        out.append(run_block(chain, op.instance, np.full(todo, op.omega), rng, record_states=True).states)
        done += todo
    return np.concatenate(out) if out else np.empty(0, dtype=np.int64)


def placket_marginal(states: np.ndarray, n_spins: int, placket: int = 0) -> np.ndarray:
    """Frequência empírica de cada configuração num placket"""
    mask = (1 << n_spins) - 1
    values = (states >> (n_spins * placket)) & mask
    return np.bincount(values, minlength=1 << n_spins) / max(len(states), 1)
