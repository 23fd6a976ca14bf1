import numpy as np
import pytest

from tests.conftest import brute_energies
from tmqmc.core.instance import SpinConfiguration, ferromagnet, random_instance
from tmqmc.core.transfer import TransferOperator, single_flip_graph, validate, w_element
from tmqmc.errors import CapExceededError, DimensionError


def test_shift_is_pair_count():
    for n in (2, 7, 30):
        op = TransferOperator(instance=random_instance(n, 3), omega=1.0)
        assert op.shift == n * (n - 1) // 2


def test_diagonal_element_of_aligned_pair(pair):
    op = TransferOperator(instance=pair, omega=0.5)
    up = SpinConfiguration.all_up(2)
    assert w_element(op, up, up) == 2.0


def test_single_flip_element_is_omega(glass8):
    op = TransferOperator(instance=glass8, omega=0.5)
    c = SpinConfiguration(n=8, bits=0b10101010)
    assert w_element(op, c, c.flip(3)) == 0.5
    assert w_element(op, c.flip(3), c) == 0.5


def test_distance_two_element_vanishes(glass8):
    op = TransferOperator(instance=glass8, omega=0.5)
    c = SpinConfiguration.all_up(8)
    assert w_element(op, c, c.flip(0).flip(5)) == 0.0


def test_element_size_checked(pair):
    op = TransferOperator(instance=pair, omega=1.0)
    with pytest.raises(DimensionError):
        w_element(op, SpinConfiguration.all_up(2), SpinConfiguration.all_up(3))


def test_ferromagnet_all_up_diagonal_is_maximal():
    op = TransferOperator(instance=ferromagnet(6), omega=1.0)
    assert op.diagonal[(1 << 6) - 1] == 2 * op.shift
    assert op.diagonal.max() == 2 * op.shift


def test_energies_match_independent_loop(fixed4):
    op = TransferOperator(instance=fixed4, omega=1.0)
    assert np.array_equal(op.energies, brute_energies(fixed4))


def test_validity_at_positive_omega():
    for n in range(2, 9):
        report = validate(TransferOperator(instance=random_instance(n, 40 + n), omega=1.0))
        assert report.nonnegative and report.symmetric and report.irreducible
        assert report.valid
        assert report.components == 1


def test_zero_omega_is_reducible(glass8):
    report = validate(TransferOperator(instance=glass8, omega=0.0))
    assert not report.irreducible
    assert report.components == 1 << 8
    assert not report.valid


def test_single_flip_graph_is_hypercube(fixed4):
    graph = single_flip_graph(TransferOperator(instance=fixed4, omega=0.2))
    assert graph.number_of_nodes() == 16
    assert graph.number_of_edges() == 4 * 16 // 2


def test_dense_matrix_matches_elements(fixed4):
    op = TransferOperator(instance=fixed4, omega=0.7)
    matrix = op.dense_matrix()
    assert np.array_equal(matrix, matrix.T)
    for k in range(16):
        for l in range(16):
            expected = w_element(op, SpinConfiguration(n=4, bits=k), SpinConfiguration(n=4, bits=l))
            assert matrix[k, l] == expected


def test_row_action_matches_dense_product(glass8, rng):
    op = TransferOperator(instance=glass8, omega=1.3)
    vec = rng.random(op.dimension)
    np.testing.assert_allclose(op.row_action(vec), op.dense_matrix() @ vec, rtol=1e-12)
    with pytest.raises(DimensionError):
        op.row_action(np.ones(3))


def test_dense_matrix_capped():
    op = TransferOperator(instance=random_instance(13, 0), omega=1.0)
    with pytest.raises(CapExceededError):
        op.dense_matrix()
