"""
Oracle Service - referências exatas

Busca exaustiva, densidade de estados, perfis da paisagem de energia, par
dominante de W (power iteration / diagonalização densa) e enumeração exata
da cadeia de plackets.
"""
from typing import Optional

import networkx as nx
import numpy as np
from joblib import Parallel, delayed
from loguru import logger

from tmqmc.config import settings
from tmqmc.core import kernels
from tmqmc.core.instance import SpinConfiguration, SpinGlassInstance, classical_energy, flip_delta
from tmqmc.core.transfer import TransferOperator
from tmqmc.errors import CapExceededError, ChainWeightError, ConvergenceError, DegenerateSpectrumError, InvalidSizeError
from tmqmc.models.schemas import ChainMarginal, DensityOfStates, GreedyResult, GroundStateReport, SpectralResult


def _require(n: int, cap: int, what: str, cost: float) -> None:
    if n > cap:
        raise CapExceededError(f"{what} limited to N <= {cap}, got N = {n}", estimated_cost=cost)


def _half_ranges(n: int) -> list[tuple[int, int]]:
    """Trechos [start, stop) da metade Z2 (spin 0 fixo para cima)"""
    total = 1 << (n - 1)
    chunk = 1 << settings.ENUM_CHUNK_BITS
    return [(start, min(start + chunk, total)) for start in range(0, total, chunk)]


def _chunk_histogram(couplings: np.ndarray, n: int, start: int, stop: int, shift: int) -> np.ndarray:
    hist = np.zeros(2 * shift + 1, dtype=np.int64)
    kernels.gray_histogram(couplings, n, start, stop, shift, hist)
    return hist


def _chain_weights(op: TransferOperator, length: int) -> np.ndarray:
    """Peso Π W(μ_λ, μ_{λ+1}) de todos os estados empacotados da cadeia"""
    n = op.n_spins
    bits = n * length
    if bits > settings.CHAIN_STATE_MAX_BITS:
        raise CapExceededError(f"chain enumeration needs {bits} bits, cap is {settings.CHAIN_STATE_MAX_BITS}",
                               estimated_cost=float(length) * 2.0 ** bits)
    codes = np.arange(1 << bits, dtype=np.int64)
    mask = (1 << n) - 1
    weights = np.ones(codes.shape[0])
    for lam in range(length):
        x = (codes >> (n * lam)) & mask
        y = (codes >> (n * ((lam + 1) % length))) & mask
        d = x ^ y
        single = (d != 0) & ((d & (d - 1)) == 0)
        weights *= np.where(d == 0, op.diagonal[x], np.where(single, op.omega, 0.0))
    return weights


def _move_graph(op: TransferOperator, length: int, weights: np.ndarray) -> nx.Graph:
    """Movimentos permitidos entre estados de peso positivo"""
    n = op.n_spins
    mask = (1 << n) - 1
    graph = nx.Graph()
    positive = np.flatnonzero(weights > 0).tolist()
    graph.add_nodes_from(positive)
    for code in positive:
        for lam in range(length):
            m = (code >> (n * lam)) & mask
            a = (code >> (n * ((lam - 1) % length))) & mask
            b = (code >> (n * ((lam + 1) % length))) & mask
            for i in range(n):
                bit = 1 << i
                if (a ^ m) in (0, bit) and (b ^ m) in (0, bit):
                    target = code ^ (bit << (n * lam))
                    if weights[target] > 0:
                        graph.add_edge(code, target)
    return graph


class OracleService:
    """Service para os oráculos exatos"""

    # --- Paisagem clássica

    @staticmethod
    def exhaustive_ground_state(inst: SpinGlassInstance, threads: Optional[int] = None) -> GroundStateReport:
        """Mínimo exato de H sobre 2^N configurações (Gray code, metade Z2)"""
        n = inst.n_spins
        _require(n, settings.EXHAUSTIVE_MAX_SPINS, "exhaustive search", float(n) * 2.0 ** (n - 1))
        max_reps = settings.MAX_REPRESENTATIVES
        parts = Parallel(n_jobs=threads or settings.THREADS, prefer="threads")(
            delayed(kernels.gray_min)(inst.coupling_matrix, n, start, stop, max_reps)
            for start, stop in _half_ranges(n)
        )

        # redução associativa (min, contagem, representantes)
        energy = min(int(p[0]) for p in parts)
        count = 0
        reps: list[int] = []
        for emin, cnt, part_reps, nreps in parts:
            if int(emin) == energy:
                count += int(cnt)
                reps.extend(int(b) for b in part_reps[:nreps])
        return GroundStateReport(
            n_spins=n,
            energy=energy,
            representatives=[SpinConfiguration(n=n, bits=b) for b in reps[:max_reps]],
            degeneracy=2 * count,
        )

    @staticmethod
    def density_of_states(inst: SpinGlassInstance, threads: Optional[int] = None) -> DensityOfStates:
        """Histograma exato energia -> contagem"""
        n = inst.n_spins
        _require(n, settings.DOS_MAX_SPINS, "density of states", float(n) * 2.0 ** (n - 1))
        shift = inst.pair_count
        parts = Parallel(n_jobs=threads or settings.THREADS, prefer="threads")(
            delayed(_chunk_histogram)(inst.coupling_matrix, n, start, stop, shift)
            for start, stop in _half_ranges(n)
        )
        hist = 2 * np.sum(parts, axis=0)
        return DensityOfStates(
            n_spins=n,
            histogram={int(e) - shift: int(c) for e, c in enumerate(hist) if c},
        )

    @staticmethod
    def local_minima(inst: SpinGlassInstance) -> DensityOfStates:
        """Censo dos mínimos locais de flip único, por energia"""
        op = TransferOperator(instance=inst, omega=0.0)
        minima = kernels.local_minimum_energies(op.energies, inst.n_spins)
        values, counts = np.unique(minima, return_counts=True)
        return DensityOfStates(n_spins=inst.n_spins, histogram={int(e): int(c) for e, c in zip(values, counts)})

    @staticmethod
    def flip_path_profile(inst: SpinGlassInstance) -> list[int]:
        """Energias ao virar os spins 0..N-1 em ordem, de todos para cima até todos para baixo"""
        c = SpinConfiguration.all_up(inst.n_spins)
        energy = classical_energy(inst, c).raw
        profile = [energy]
        for i in range(inst.n_spins):
            energy += flip_delta(inst, c, i)
            c = c.flip(i)
            profile.append(energy)
        return profile

    @staticmethod
    def greedy_downhill(inst: SpinGlassInstance, start: SpinConfiguration, max_moves: int, seed: int) -> GreedyResult:
        """Flip aleatório aceito somente se a energia diminui estritamente"""
        if max_moves < 1:
            raise InvalidSizeError(f"max_moves must be >= 1, got {max_moves}")
        classical_energy(inst, start)
        n = inst.n_spins
        rng = np.random.default_rng(seed)
        bits = start.bits
        moves: list[int] = []
        energies: list[int] = []
        capacity = inst.pair_count + 2
        done = 0
        while done < max_moves:
            todo = min(settings.VISIT_BLOCK, max_moves - done)
            trace_moves = np.empty(capacity, dtype=np.int64)
            trace_energies = np.empty(capacity, dtype=np.int64)
            bits, energy, ntrace = kernels.greedy_walk(
                inst.coupling_matrix, n, bits, rng.integers(0, n, size=todo, dtype=np.int64),
                trace_moves, trace_energies,
            )
            first = 0 if done == 0 else 1
            moves.extend(int(m) + done for m in trace_moves[first:ntrace])
            energies.extend(int(e) for e in trace_energies[first:ntrace])
            done += todo
        final = SpinConfiguration(n=n, bits=int(bits))
        return GreedyResult(
            moves=moves,
            energies=energies,
            attempted=max_moves,
            final_configuration=final,
            final_energy=energies[-1],
            is_local_minimum=bool(kernels.is_local_minimum(inst.coupling_matrix, n, final.bits)),
        )

    # --- Espectro de W

    @staticmethod
    def dense_spectrum(op: TransferOperator) -> tuple[np.ndarray, np.ndarray]:
        """Autovalores (ordem decrescente) e autovetores de W denso"""
        _require(op.n_spins, settings.DENSE_MAX_SPINS, "dense diagonalization", float(op.dimension) ** 3)
        values, vectors = np.linalg.eigh(op.dense_matrix())
        order = np.argsort(values)[::-1]
        return values[order], vectors[:, order]

    @staticmethod
    def dominant_eigenpair(op: TransferOperator, tol: Optional[float] = None, max_iter: Optional[int] = None) -> SpectralResult:
        """Power iteration sobre a ação implícita de W, a partir do vetor uniforme"""
        if op.omega <= 0:
            raise DegenerateSpectrumError("omega = 0 leaves the dominant eigenvalue degenerate")
        _require(op.n_spins, settings.EIGEN_MAX_SPINS, "power iteration", float(op.n_spins) * 2.0 ** op.n_spins)
        tol = settings.POWER_TOL if tol is None else tol
        max_iter = settings.POWER_MAX_ITER if max_iter is None else max_iter

        vec = np.full(op.dimension, 1.0 / np.sqrt(op.dimension))
        theta = 0.0
        change = np.inf
        stable = 0
        for iteration in range(1, max_iter + 1):
            image = op.row_action(vec)
            new_theta = float(vec @ image)
            residual = float(np.linalg.norm(image - new_theta * vec)) / new_theta
            change = abs(new_theta - theta) / new_theta
            stable = stable + 1 if change < tol else 0
            theta = new_theta
            vec = image / np.linalg.norm(image)
            if stable >= 10 and residual <= settings.POWER_RESIDUAL_TOL:
                break
        else:
            raise ConvergenceError("power iteration did not converge", max_iter, change)

        probabilities = vec * vec
        theta2 = None
        if op.n_spins <= settings.DENSE_MAX_SPINS:
            values, _ = OracleService.dense_spectrum(op)
            magnitudes = np.sort(np.abs(values))[::-1]
            theta2 = float(magnitudes[1])
        logger.debug(f"Power iteration N={op.n_spins} omega={op.omega}: theta1={theta:.12g} in {iteration} iterations")
        return SpectralResult(
            n_spins=op.n_spins,
            omega=op.omega,
            theta1=theta,
            amplitudes=vec.tolist(),
            classical_expectation=float(probabilities @ op.energies),
            ground_energy=op.shift - theta,
            theta2=theta2,
            iterations=iteration,
        )

    # --- Enumeração exata da cadeia

    @staticmethod
    def exact_chain_marginal(op: TransferOperator, length: int) -> ChainMarginal:
        """P(μ = k) = (W^L)_kk / tr(W^L) comparado a γ_k²"""
        if op.omega <= 0:
            raise DegenerateSpectrumError("omega = 0 leaves the dominant eigenvalue degenerate")
        _require(op.n_spins, settings.MARGINAL_MAX_SPINS, "exact chain marginal", float(op.dimension) ** 3 * length)
        if not 2 <= length <= settings.MARGINAL_MAX_PLACKETS:
            raise CapExceededError(f"chain length must be in [2, {settings.MARGINAL_MAX_PLACKETS}], got {length}")
        values, vectors = OracleService.dense_spectrum(op)
        power = np.linalg.matrix_power(op.dense_matrix() / values[0], length)
        probabilities = np.diag(power) / np.trace(power)
        amplitudes_squared = vectors[:, 0] ** 2
        magnitudes = np.sort(np.abs(values))[::-1]
        return ChainMarginal(
            n_spins=op.n_spins,
            plackets=length,
            omega=op.omega,
            probabilities=probabilities.tolist(),
            amplitudes_squared=amplitudes_squared.tolist(),
            deviation=float(np.max(np.abs(probabilities - amplitudes_squared))),
            theta_ratio=float(magnitudes[1] / magnitudes[0]),
        )

    @staticmethod
    def exact_chain_distribution(op: TransferOperator, length: int, reachable_from: Optional[int] = None) -> np.ndarray:
        """
        Pesos normalizados de todos os estados da cadeia (índice = estado empacotado).

        Com `reachable_from`, restringe à classe comunicante desse estado sob os
        movimentos permitidos: é a distribuição estacionária que a dinâmica
        restrita de fato alcança.
        """
        weights = _chain_weights(op, length)
        if reachable_from is not None:
            if weights[reachable_from] <= 0:
                raise ChainWeightError("starting chain state has zero weight")
            component = nx.node_connected_component(_move_graph(op, length, weights), reachable_from)
            keep = np.zeros(weights.shape[0], dtype=bool)
            keep[list(component)] = True
            weights = np.where(keep, weights, 0.0)
        total = weights.sum()
        if total <= 0:
            raise DegenerateSpectrumError("every chain state has zero weight")
        return weights / total

    @staticmethod
    def marginal_from_distribution(distribution: np.ndarray, n_spins: int, placket: int = 0) -> np.ndarray:
        """Marginal de um placket a partir da distribuição da cadeia inteira"""
        codes = np.arange(distribution.shape[0], dtype=np.int64)
        values = (codes >> (n_spins * placket)) & ((1 << n_spins) - 1)
        return np.bincount(values, weights=distribution, minlength=1 << n_spins)
