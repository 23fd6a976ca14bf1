import math

import numpy as np
import pytest

from tmqmc.core.chain import (
    MoveProposal,
    PlacketChain,
    acceptance_ratio,
    chain_log_weight,
    init_chain,
    is_allowed,
    mc_step,
    measure,
    placket_marginal,
    run_block,
    sample_states,
)
from tmqmc.core.instance import SpinConfiguration, classical_energy, ferromagnet
from tmqmc.core.transfer import TransferOperator
from tmqmc.errors import CapExceededError, ChainWeightError, IndexRangeError, InvalidSizeError
from tmqmc.services.oracle import OracleService
from tmqmc.services.validation import detailed_balance_gap


def _chain(inst, configs):
    plackets = np.array([c.bits for c in configs], dtype=np.int64)
    energies = np.array([classical_energy(inst, c).raw for c in configs], dtype=np.int64)
    return PlacketChain(inst.n_spins, plackets, energies)


# --- init_chain

def test_init_chain_is_uniform(glass8):
    c0 = SpinConfiguration.all_up(8)
    chain = init_chain(glass8, c0, 600)
    assert chain.length == 600
    assert np.all(chain.plackets == c0.bits)
    assert np.all(chain.energies == classical_energy(glass8, c0).raw)


def test_minimal_ring(pair):
    chain = init_chain(pair, SpinConfiguration.all_down(2), 2)
    assert chain.length == 2
    with pytest.raises(InvalidSizeError):
        init_chain(pair, SpinConfiguration.all_down(2), 1)


def test_state_code_roundtrip(glass8, rng):
    chain = _chain(glass8, [SpinConfiguration.random(8, rng) for _ in range(3)])
    again = PlacketChain.from_code(glass8, chain.state_code(), 3)
    assert np.array_equal(again.plackets, chain.plackets)
    assert np.array_equal(again.energies, chain.energies)


# --- is_allowed

def test_uniform_chain_allows_every_move(glass8):
    chain = init_chain(glass8, SpinConfiguration.all_up(8), 5)
    assert all(is_allowed(chain, MoveProposal(placket=lam, spin=i)) for lam in range(5) for i in range(8))


def test_neighbor_differing_elsewhere_forbids(glass8):
    up = SpinConfiguration.all_up(8)
    chain = _chain(glass8, [up.flip(2), up, up])
    assert not is_allowed(chain, MoveProposal(placket=1, spin=5))
    assert is_allowed(chain, MoveProposal(placket=1, spin=2))


def test_move_indices_checked(pair):
    chain = init_chain(pair, SpinConfiguration.all_up(2), 3)
    with pytest.raises(IndexRangeError):
        is_allowed(chain, MoveProposal(placket=3, spin=0))
    with pytest.raises(IndexRangeError):
        is_allowed(chain, MoveProposal(placket=0, spin=2))


# --- acceptance_ratio

def test_ratio_on_uniform_aligned_pair(pair):
    op = TransferOperator(instance=pair, omega=0.5)
    chain = init_chain(pair, SpinConfiguration.all_up(2), 4)
    assert acceptance_ratio(chain, op, MoveProposal(placket=2, spin=0)) == pytest.approx(0.0625)


def test_ratio_vanishes_without_field(glass8):
    op = TransferOperator(instance=glass8, omega=0.0)
    chain = init_chain(glass8, SpinConfiguration.all_up(8), 4)
    assert acceptance_ratio(chain, op, MoveProposal(placket=1, spin=3)) == 0.0


def test_ratio_when_both_neighbors_differ_at_spin(glass8):
    op = TransferOperator(instance=glass8, omega=0.8)
    up = SpinConfiguration.all_up(8)
    flipped = up.flip(4)
    chain = _chain(glass8, [flipped, up, flipped])
    e_new = classical_energy(glass8, flipped).raw
    expected = (op.shift - e_new) ** 2 / 0.8 ** 2
    assert acceptance_ratio(chain, op, MoveProposal(placket=1, spin=4)) == pytest.approx(expected)


def test_forbidden_move_has_no_ratio(glass8):
    op = TransferOperator(instance=glass8, omega=1.0)
    up = SpinConfiguration.all_up(8)
    chain = _chain(glass8, [up.flip(2), up, up])
    with pytest.raises(ChainWeightError):
        acceptance_ratio(chain, op, MoveProposal(placket=1, spin=5))


# --- chain_log_weight

def test_uniform_log_weight(glass8):
    op = TransferOperator(instance=glass8, omega=1.0)
    c0 = SpinConfiguration(n=8, bits=0b11001010)
    chain = init_chain(glass8, c0, 7)
    assert chain_log_weight(chain, op) == pytest.approx(7 * math.log(op.shift - classical_energy(glass8, c0).raw))


def test_distance_two_bond_has_zero_weight(glass8):
    op = TransferOperator(instance=glass8, omega=1.0)
    up = SpinConfiguration.all_up(8)
    chain = _chain(glass8, [up, up.flip(0).flip(1), up.flip(0)])
    assert chain_log_weight(chain, op) == -math.inf


def test_weight_ratio_equals_acceptance_ratio(glass8, rng):
    op = TransferOperator(instance=glass8, omega=0.6)
    chain = init_chain(glass8, SpinConfiguration.random(8, rng), 6)
    run_block(chain, glass8, np.full(50, 0.6), rng)
    checked = 0
    for lam in range(6):
        for i in range(8):
            mv = MoveProposal(placket=lam, spin=i)
            if not is_allowed(chain, mv):
                continue
            moved = chain.copy()
            moved.plackets[lam] ^= 1 << i
            moved.energies = moved.recompute_energies(glass8)
            expected = math.exp(chain_log_weight(moved, op) - chain_log_weight(chain, op))
            assert acceptance_ratio(chain, op, mv) == pytest.approx(expected, rel=1e-10)
            checked += 1
    assert checked > 0


def test_detailed_balance_on_three_plackets(pair):
    for omega in (0.5, 1.0, 2.0):
        assert detailed_balance_gap(TransferOperator(instance=pair, omega=omega), 3) < 1e-12


# --- mc_step / run_block

def test_zero_field_freezes_uniform_chain(rng):
    inst = ferromagnet(3)
    op = TransferOperator(instance=inst, omega=0.0)
    chain = init_chain(inst, SpinConfiguration.all_up(3), 8)
    for _ in range(20):
        assert mc_step(chain, op, rng).accepted == 0
    assert np.all(chain.plackets == 0b111)


def test_acceptance_counts_are_ordered(glass8, rng):
    chain = init_chain(glass8, SpinConfiguration.random(8, rng), 16)
    block = run_block(chain, glass8, np.linspace(3.0, 0.5, 200), rng)
    assert block.stats.proposed == 200 * 16
    assert block.stats.accepted <= block.stats.allowed <= block.stats.proposed
    assert np.all(block.step_accepted <= 16)
    assert block.stats.accepted > 0


def test_cached_energies_survive_long_runs(glass8, rng):
    chain = init_chain(glass8, SpinConfiguration.random(8, rng), 24)
    block = run_block(chain, glass8, np.linspace(2.0, 0.0, 10_000), rng)
    assert np.array_equal(chain.energies, chain.recompute_energies(glass8))
    assert block.step_energy[-1] == pytest.approx(chain.energies.mean())


def test_measure_uniform_chain(glass8):
    c0 = SpinConfiguration(n=8, bits=0b01100110)
    record = measure(init_chain(glass8, c0, 10), step=3, omega=1.5)
    assert record.step == 3
    assert record.mean_intensive_energy == pytest.approx(classical_energy(glass8, c0).intensive)


# --- estacionariedade

def _total_variation(p, q) -> float:
    return 0.5 * float(np.abs(p - q).sum())


def test_three_placket_chain_reaches_exact_weights(pair_op, rng):
    # W(↑↓, ↑↓) = 0: a partir de (↑↑)^3 a cadeia nunca cria um ↓↓
    chain = init_chain(pair_op.instance, SpinConfiguration.all_up(2), 3)
    exact = OracleService.exact_chain_distribution(pair_op, 3, reachable_from=chain.state_code())
    full = OracleService.exact_chain_distribution(pair_op, 3)
    states = sample_states(chain, pair_op, 1_000_000, rng)
    empirical = np.bincount(states, minlength=exact.shape[0]) / states.shape[0]
    assert _total_variation(empirical, exact) < 0.01
    # a classe alcançável carrega metade do peso total (20 de 40)
    assert _total_variation(exact, full) == pytest.approx(0.5)
    assert _total_variation(empirical, full) > 0.45


def test_four_placket_marginal_matches_enumeration(pair_op, rng):
    chain = init_chain(pair_op.instance, SpinConfiguration.all_up(2), 4)
    exact = OracleService.exact_chain_distribution(pair_op, 4, reachable_from=chain.state_code())
    states = sample_states(chain, pair_op, 1_000_000, rng)
    empirical = placket_marginal(states, 2, placket=1)
    expected = OracleService.marginal_from_distribution(exact, 2, placket=1)
    assert _total_variation(empirical, expected) < 0.01


def test_six_placket_marginal_against_both_oracles(pair_op, rng):
    chain = init_chain(pair_op.instance, SpinConfiguration.all_up(2), 6)
    reachable = OracleService.marginal_from_distribution(
        OracleService.exact_chain_distribution(pair_op, 6, reachable_from=chain.state_code()), 2,
    )
    full = np.asarray(OracleService.exact_chain_marginal(pair_op, 6).probabilities)
    # classe de ↑↑ com excursões isoladas ↑↓ / ↓↑: pesos 328, 44, 44 de 416
    np.testing.assert_allclose(reachable, np.array([0, 44, 44, 328]) / 416, atol=1e-12)
    # traço de W^6 = 1216, diagonal (448, 160, 160, 448)
    np.testing.assert_allclose(full, np.array([448, 160, 160, 448]) / 1216, atol=1e-12)

    empirical = placket_marginal(sample_states(chain, pair_op, 1_000_000, rng), 2)
    assert _total_variation(empirical, reachable) < 0.01
    assert _total_variation(empirical, full) > 0.4


def test_ferromagnet_chain_splits_into_winding_sectors():
    inst = ferromagnet(4)
    op = TransferOperator(instance=inst, omega=1.0)
    start = init_chain(inst, SpinConfiguration.all_up(4), 5)
    sector = OracleService.exact_chain_distribution(op, 5, reachable_from=start.state_code())
    full = OracleService.exact_chain_distribution(op, 5)
    assert np.all(op.diagonal > 0)
    assert np.count_nonzero(sector) < np.count_nonzero(full)
    # todas as cadeias uniformes estão no setor de partida
    for bits in range(16):
        assert sector[init_chain(inst, SpinConfiguration(n=4, bits=bits), 5).state_code()] > 0

    sector_mean = float(OracleService.marginal_from_distribution(sector, 4) @ op.energies)
    full_mean = float(OracleService.marginal_from_distribution(full, 4) @ op.energies)
    assert sector_mean < full_mean - 0.02


def test_state_recording_capped(glass8, rng):
    op = TransferOperator(instance=glass8, omega=1.0)
    chain = init_chain(glass8, SpinConfiguration.all_up(8), 3)
    with pytest.raises(CapExceededError):
        sample_states(chain, op, 10, rng)
