"""
Transfer - operador W = C·I - H_tot avaliado implicitamente

Elementos: W(k, k) = C - E_k, W(k, l) = Ω se Hamming(k, l) = 1, 0 caso contrário.
W nunca é materializado fora dos oráculos densos de sistemas minúsculos.
"""
from functools import cached_property

import networkx as nx
import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from tmqmc.config import settings
from tmqmc.core import kernels
from tmqmc.core.instance import SpinConfiguration, SpinGlassInstance, classical_energy
from tmqmc.errors import CapExceededError, DimensionError
from tmqmc.models.schemas import ValidityReport


class TransferOperator(BaseModel):
    """W para uma instância e um campo transverso Ω ≥ 0"""
    model_config = ConfigDict(frozen=True)

    instance: SpinGlassInstance
    omega: float = Field(ge=0.0)

    @property
    def n_spins(self) -> int:
        return self.instance.n_spins

    @property
    def shift(self) -> int:
        """C = N(N-1)/2"""
        return self.instance.pair_count

    @property
    def dimension(self) -> int:
        return 1 << self.n_spins

    @cached_property
    def energies(self) -> np.ndarray:
        """E_k de todas as configurações (int64, índice = bits)"""
        _require_cap(self.n_spins, settings.EIGEN_MAX_SPINS, "full-basis evaluation")
        return kernels.all_energies(self.instance.coupling_matrix, self.n_spins)

    @cached_property
    def diagonal(self) -> np.ndarray:
        return (self.shift - self.energies).astype(np.float64)

    def row_action(self, vec: np.ndarray) -> np.ndarray:
        """W·v sobre a base completa"""
        if vec.shape != (self.dimension,):
            raise DimensionError(f"vector of shape {vec.shape}, expected ({self.dimension},)")
        out = np.empty(self.dimension, dtype=np.float64)
        return kernels.row_action(self.diagonal, self.n_spins, float(self.omega), vec, out)

    def dense_matrix(self) -> np.ndarray:
        """W denso (apenas para oráculos de N pequeno)"""
        _require_cap(self.n_spins, settings.VALIDATE_MAX_SPINS, "dense transfer matrix")
        dim = self.dimension
        matrix = np.diag(self.diagonal)
        rows = np.arange(dim)
        for i in range(self.n_spins):
            matrix[rows, rows ^ (1 << i)] = self.omega
        return matrix


def _require_cap(n: int, cap: int, what: str) -> None:
    if n > cap:
        raise CapExceededError(f"{what} limited to N <= {cap}, got N = {n}", estimated_cost=float(n) * 2.0 ** n)


def w_element(op: TransferOperator, k: SpinConfiguration, l: SpinConfiguration) -> float:
    """W(k, l)"""
    n = op.n_spins
    if k.n != n or l.n != n:
        raise DimensionError(f"configurations of size {k.n}/{l.n} for an instance of {n} spins")
    distance = k.hamming(l)
    if distance == 0:
        return float(op.shift - classical_energy(op.instance, k).raw)
    if distance == 1:
        return float(op.omega)
    return 0.0


def single_flip_graph(op: TransferOperator) -> nx.Graph:
    """Grafo dos elementos fora da diagonal não nulos (hipercubo se Ω > 0)"""
    graph = nx.Graph()
    graph.add_nodes_from(range(op.dimension))
    if op.omega > 0:
        rows = np.arange(op.dimension)
        for i in range(op.n_spins):
            cols = rows ^ (1 << i)
            upper = rows < cols
            graph.add_edges_from(zip(rows[upper].tolist(), cols[upper].tolist()))
    return graph


def validate(op: TransferOperator, sample_pairs: int = 256, seed: int = 0) -> ValidityReport:
    """Não negatividade, simetria (amostrada) e irredutibilidade de W"""
    n = op.n_spins
    _require_cap(n, settings.VALIDATE_MAX_SPINS, "transfer validation")

    diagonal = op.shift - op.energies
    argmin = int(np.argmin(diagonal))
    min_diagonal = int(diagonal[argmin])

    rng = np.random.default_rng(seed)
    symmetric = True
    for _ in range(sample_pairs):
        k = SpinConfiguration.random(n, rng)
        # metade vizinhos de flip único, metade pares arbitrários
        if rng.random() < 0.5:
            l = k.flip(int(rng.integers(0, n)))
        else:
            l = SpinConfiguration.random(n, rng)
        if w_element(op, k, l) != w_element(op, l, k):
            symmetric = False
            break

    components = nx.number_connected_components(single_flip_graph(op))
    report = ValidityReport(
        n_spins=n,
        omega=op.omega,
        nonnegative=min_diagonal >= 0,
        min_diagonal=min_diagonal,
        argmin_bits=argmin,
        symmetric=symmetric,
        pairs_checked=sample_pairs,
        irreducible=components == 1,
        components=components,
    )
    if not report.irreducible:
        logger.debug(f"Transfer operator reducible at omega={op.omega}: {components} closed subspaces")
    return report
