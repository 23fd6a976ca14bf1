"""
Validation Service - bateria de propriedades verificáveis em segundos
"""
from typing import Callable

import numpy as np
from loguru import logger

from tmqmc.config import settings
from tmqmc.core.chain import MoveProposal, PlacketChain, acceptance_ratio, init_chain, is_allowed, run_block
from tmqmc.core.instance import SpinConfiguration, classical_energy, flip_delta, global_flip, random_instance
from tmqmc.core.transfer import TransferOperator, validate
from tmqmc.models.schemas import CheckResult
from tmqmc.services.ensemble import derive_seed
from tmqmc.services.oracle import OracleService


def detailed_balance_gap(op: TransferOperator, length: int) -> float:
    """max |P(A)·min(1, r_AB) - P(B)·min(1, r_BA)| sobre todos os movimentos permitidos entre estados positivos"""
    n = op.n_spins
    dist = OracleService.exact_chain_distribution(op, length)
    worst = 0.0
    for code in np.flatnonzero(dist > 0).tolist():
        chain = PlacketChain.from_code(op.instance, code, length)
        for lam in range(length):
            for i in range(n):
                mv = MoveProposal(placket=lam, spin=i)
                target = code ^ (1 << (i + n * lam))
                if not is_allowed(chain, mv) or dist[target] <= 0:
                    continue
                moved = PlacketChain.from_code(op.instance, target, length)
                forward = dist[code] * min(1.0, acceptance_ratio(chain, op, mv))
                backward = dist[target] * min(1.0, acceptance_ratio(moved, op, mv))
                worst = max(worst, abs(forward - backward))
    return worst


def marginal_deviations(op: TransferOperator, lengths: list[int]) -> tuple[list[float], float]:
    """max_k |P(μ = k) - γ_k²| por L e a razão (θ2/θ1)²"""
    marginals = [OracleService.exact_chain_marginal(op, length) for length in lengths]
    return [m.deviation for m in marginals], marginals[0].theta_ratio ** 2


class PropertySuite:
    """Verificações rápidas de exatidão; cada uma devolve um CheckResult"""

    def __init__(self, seed: int = 0, trials: int = 2000):
        self.seed = seed
        self.trials = trials
        self.rng = np.random.default_rng(seed)

    def _instance(self, k: int, n: int):
        return random_instance(n, derive_seed(self.seed, k))

    # --- Energia clássica

    def check_parity(self) -> CheckResult:
        """Todas as 2^N energias, N = 2..VALIDATE_MAX_SPINS"""
        for n in range(2, settings.VALIDATE_MAX_SPINS + 1):
            inst = self._instance(n, n)
            energies = TransferOperator(instance=inst, omega=0.0).energies
            bad = np.flatnonzero(((energies - inst.pair_count) % 2 != 0) | (np.abs(energies) > inst.pair_count))
            if bad.size:
                return CheckResult(name="parity", passed=False, detail=f"E={energies[bad[0]]} at bits={bad[0]} for N={n}")
        return CheckResult(name="parity", passed=True, detail=f"exhaustive for N = 2..{settings.VALIDATE_MAX_SPINS}")

    def check_z2(self) -> CheckResult:
        for k in range(self.trials):
            inst = self._instance(k, int(self.rng.integers(2, 16)))
            c = SpinConfiguration.random(inst.n_spins, self.rng)
            if classical_energy(inst, c).raw != classical_energy(inst, global_flip(c)).raw:
                return CheckResult(name="z2", passed=False, detail=f"bits={c.bits} N={inst.n_spins}")
        return CheckResult(name="z2", passed=True, detail=f"{self.trials} configurations")

    def check_flip_delta(self) -> CheckResult:
        for k in range(self.trials):
            inst = self._instance(k, int(self.rng.integers(2, 24)))
            c = SpinConfiguration.random(inst.n_spins, self.rng)
            i = int(self.rng.integers(0, inst.n_spins))
            expected = classical_energy(inst, c.flip(i)).raw - classical_energy(inst, c).raw
            if flip_delta(inst, c, i) != expected:
                return CheckResult(name="flip_delta", passed=False, detail=f"bits={c.bits} spin={i}")
        return CheckResult(name="flip_delta", passed=True, detail=f"{self.trials} triples")

    # --- Operador de transferência

    def check_transfer_validity(self) -> CheckResult:
        inst = self._instance(0, 6)
        positive = validate(TransferOperator(instance=inst, omega=0.5), seed=self.seed)
        frozen = validate(TransferOperator(instance=inst, omega=0.0), seed=self.seed)
        passed = positive.valid and not frozen.irreducible and positive.min_diagonal >= 0
        return CheckResult(name="transfer_validity", passed=passed,
                           detail=f"components at omega=0: {frozen.components}")

    def check_spectral_consistency(self) -> CheckResult:
        worst = 0.0
        for k in range(6):
            inst = self._instance(k, 2 + k % 3)
            for omega in (0.3, 1.0, 3.0):
                op = TransferOperator(instance=inst, omega=omega)
                result = OracleService.dominant_eigenpair(op)
                values, vectors = OracleService.dense_spectrum(op)
                dense_expectation = float(vectors[:, 0] ** 2 @ op.energies)
                h_min = float(np.linalg.eigvalsh(op.shift * np.eye(op.dimension) - op.dense_matrix())[0])
                worst = max(
                    worst,
                    abs(result.theta1 - values[0]) / values[0],
                    abs(result.classical_expectation - dense_expectation),
                    abs(result.ground_energy - h_min),
                )
        return CheckResult(name="spectral_consistency", passed=worst < 1e-8, detail=f"max deviation {worst:.2e}")

    # --- Cadeia

    def check_detailed_balance(self) -> CheckResult:
        op = TransferOperator(instance=self._instance(0, 2), omega=1.0)
        gap = detailed_balance_gap(op, 3)
        return CheckResult(name="detailed_balance", passed=gap < 1e-12, detail=f"max gap {gap:.2e}")

    def check_marginal_decay(self) -> CheckResult:
        op = TransferOperator(instance=self._instance(0, 2), omega=1.0)
        deviations, expected = marginal_deviations(op, [4, 6, 8, 10])
        monotone = all(b <= a + 1e-15 for a, b in zip(deviations, deviations[1:]))
        ratio = deviations[3] / deviations[2]
        passed = monotone and abs(ratio - expected) <= 0.2 * expected
        return CheckResult(name="marginal_decay", passed=passed,
                           detail=f"ratio {ratio:.4f} vs (theta2/theta1)^2 {expected:.4f}")

    def check_cache_consistency(self) -> CheckResult:
        inst = self._instance(0, 8)
        chain = init_chain(inst, SpinConfiguration.random(inst.n_spins, self.rng), 16)
        run_block(chain, inst, np.linspace(2.0, 0.0, 500), self.rng)
        same = bool(np.array_equal(chain.energies, chain.recompute_energies(inst)))
        return CheckResult(name="cache_consistency", passed=same, detail="500 steps, L=16")

    def checks(self) -> list[Callable[[], CheckResult]]:
        return [
            self.check_parity,
            self.check_z2,
            self.check_flip_delta,
            self.check_transfer_validity,
            self.check_detailed_balance,
            self.check_spectral_consistency,
            self.check_marginal_decay,
            self.check_cache_consistency,
        ]

    def run(self) -> list[CheckResult]:
        results = []
        for check in self.checks():
            try:
                result = check()
            except Exception as e:
                logger.exception(f"Check {check.__name__} raised")
                result = CheckResult(name=check.__name__.removeprefix("check_"), passed=False, detail=str(e))
            logger.debug(f"{result.name}: {'ok' if result.passed else 'FAILED'} ({result.detail})")
            results.append(result)
        return results
