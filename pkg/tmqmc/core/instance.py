"""
Instância - realização da desordem ±J, configurações clássicas e energia exata

Convenções:
- spins indexados a partir de 0; bit i = 1 -> σ_i = +1, bit i = 0 -> σ_i = -1
- acoplamentos listados em ordem row-major sobre i < j
- gerador: PCG64(seed), um sorteio integers(0, 2) por par; trocar o gerador
  muda o formato das instâncias
"""
from functools import cached_property
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, computed_field, model_validator

from tmqmc.core import kernels
from tmqmc.errors import DimensionError, IndexRangeError, InvalidSizeError

# configurações empacotadas em int64
MAX_SPINS = 62


class SpinGlassInstance(BaseModel):
    """N spins + tabela triangular superior de J_ij ∈ {-1, +1}"""
    model_config = ConfigDict(frozen=True)

    n_spins: int
    couplings: tuple[int, ...]
    seed: Optional[int] = None

    @model_validator(mode="after")
    def _check_table(self):
        if not 2 <= self.n_spins <= MAX_SPINS:
            raise InvalidSizeError(f"n_spins must be in [2, {MAX_SPINS}], got {self.n_spins}")
        expected = self.n_spins * (self.n_spins - 1) // 2
        if len(self.couplings) != expected:
            raise DimensionError(f"expected {expected} couplings for n={self.n_spins}, got {len(self.couplings)}")
        if any(j not in (-1, 1) for j in self.couplings):
            raise DimensionError("couplings must be exactly -1 or +1")
        return self

    @property
    def pair_count(self) -> int:
        """C = N(N-1)/2"""
        return self.n_spins * (self.n_spins - 1) // 2

    @cached_property
    def coupling_matrix(self) -> np.ndarray:
        """Matriz simétrica N×N (int64) com diagonal nula"""
        n = self.n_spins
        matrix = np.zeros((n, n), dtype=np.int64)
        rows, cols = np.triu_indices(n, 1)
        matrix[rows, cols] = self.couplings
        matrix[cols, rows] = self.couplings
        return matrix

    def coupling(self, i: int, j: int) -> int:
        return int(self.coupling_matrix[i, j])


class SpinConfiguration(BaseModel):
    """Configuração clássica empacotada (autoestado de todos os σ^z)"""
    model_config = ConfigDict(frozen=True)

    n: int
    bits: int

    @model_validator(mode="after")
    def _check_bits(self):
        if not 1 <= self.n <= MAX_SPINS:
            raise InvalidSizeError(f"configuration size must be in [1, {MAX_SPINS}], got {self.n}")
        if not 0 <= self.bits < (1 << self.n):
            raise DimensionError(f"bits {self.bits} do not fit in {self.n} spins")
        return self

    @classmethod
    def all_up(cls, n: int) -> "SpinConfiguration":
        return cls(n=n, bits=(1 << n) - 1)

    @classmethod
    def all_down(cls, n: int) -> "SpinConfiguration":
        return cls(n=n, bits=0)

    @classmethod
    def from_spins(cls, spins) -> "SpinConfiguration":
        """A partir de uma sequência de ±1"""
        bits = 0
        for i, s in enumerate(spins):
            if s not in (-1, 1):
                raise DimensionError(f"spin values must be ±1, got {s} at {i}")
            if s == 1:
                bits |= 1 << i
        return cls(n=len(spins), bits=bits)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "SpinConfiguration":
        return cls(n=n, bits=int(rng.integers(0, 1 << n, dtype=np.int64)))

    def spin(self, i: int) -> int:
        return 1 if (self.bits >> i) & 1 else -1

    def spins(self) -> np.ndarray:
        return np.where((self.bits >> np.arange(self.n, dtype=np.int64)) & 1, 1, -1).astype(np.int64)

    def flip(self, i: int) -> "SpinConfiguration":
        if not 0 <= i < self.n:
            raise IndexRangeError(f"spin index {i} out of range [0, {self.n})")
        return SpinConfiguration(n=self.n, bits=self.bits ^ (1 << i))

    def hamming(self, other: "SpinConfiguration") -> int:
        if other.n != self.n:
            raise DimensionError(f"configurations of size {self.n} and {other.n}")
        return (self.bits ^ other.bits).bit_count()


class EnergyValue(BaseModel):
    """Energia clássica: inteira (unidades de J) e densidade intensiva raw / N^{3/2}"""
    model_config = ConfigDict(frozen=True)

    raw: int
    n: int

    @computed_field
    @property
    def intensive(self) -> float:
        return intensive_density(self.raw, self.n)


def intensive_density(raw: float, n: int) -> float:
    return raw / n ** 1.5


# --- Operações

def random_instance(n: int, seed: int) -> SpinGlassInstance:
    """Sorteia J_ij = ±1 equiprováveis, determinístico em seed"""
    if n < 2 or n > MAX_SPINS:
        raise InvalidSizeError(f"n must be in [2, {MAX_SPINS}], got {n}")
    if not 0 <= seed < 1 << 64:
        raise InvalidSizeError(f"seed must be a 64-bit unsigned integer, got {seed}")
    rng = np.random.Generator(np.random.PCG64(seed))
    draws = rng.integers(0, 2, size=n * (n - 1) // 2, dtype=np.int64)
    return SpinGlassInstance(n_spins=n, couplings=tuple(int(j) for j in 2 * draws - 1), seed=seed)


def ferromagnet(n: int) -> SpinGlassInstance:
    """Instância sem frustração, todos J_ij = +1"""
    return SpinGlassInstance(n_spins=n, couplings=(1,) * (n * (n - 1) // 2))


def _check_size(inst: SpinGlassInstance, c: SpinConfiguration) -> None:
    if c.n != inst.n_spins:
        raise DimensionError(f"configuration has {c.n} spins, instance has {inst.n_spins}")


def classical_energy(inst: SpinGlassInstance, c: SpinConfiguration) -> EnergyValue:
    """raw = -Σ_{i<j} J_ij s_i s_j (aritmética inteira exata)"""
    _check_size(inst, c)
    s = c.spins()
    raw = -int(s @ inst.coupling_matrix @ s) // 2
    return EnergyValue(raw=raw, n=inst.n_spins)


def local_fields(inst: SpinGlassInstance, c: SpinConfiguration) -> np.ndarray:
    """h_i = Σ_j J_ij s_j"""
    _check_size(inst, c)
    return inst.coupling_matrix @ c.spins()


def flip_delta(inst: SpinGlassInstance, c: SpinConfiguration, i: int) -> int:
    """E(flip(c, i)) - E(c) = 2 s_i Σ_{j≠i} J_ij s_j"""
    _check_size(inst, c)
    if not 0 <= i < inst.n_spins:
        raise IndexRangeError(f"spin index {i} out of range [0, {inst.n_spins})")
    return int(kernels.flip_delta(inst.coupling_matrix, inst.n_spins, c.bits, i))


def global_flip(c: SpinConfiguration) -> SpinConfiguration:
    return SpinConfiguration(n=c.n, bits=c.bits ^ ((1 << c.n) - 1))
