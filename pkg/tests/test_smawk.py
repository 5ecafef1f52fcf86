import numpy as np
import pytest

from recseg.smawk import (CountingOracle, MatrixOracle, check_totally_monotone, column_argmax,
                          column_argmax_brute)

from conftest import tm_matrix


def oracle(X):
    X = np.asarray(X, dtype=float)
    return MatrixOracle(lambda i, j: X[i, j], *X.shape)


def test_small_example():
    X = [[3, 2, 1], [4, 5, 2], [1, 6, 7]]
    assert check_totally_monotone(oracle(X))
    assert column_argmax(oracle(X)) == [1, 2, 2]


def test_ties_go_to_smallest_row():
    assert column_argmax(oracle(np.zeros((5, 4)))) == [0, 0, 0, 0]


def test_single_row_and_column():
    assert column_argmax(oracle([[1.0, 2.0, 3.0]])) == [0, 0, 0]
    assert column_argmax(oracle([[1.0], [3.0], [2.0]])) == [1]


def test_empty_matrix_rejected():
    with pytest.raises(ValueError):
        column_argmax(MatrixOracle(lambda i, j: 0.0, 0, 3))


def test_not_totally_monotone_detected():
    assert not check_totally_monotone(oracle([[1, 2], [2, 1]]))
    assert check_totally_monotone(oracle([[2, 1], [1, 2]]))


def test_staircase_with_minus_inf():
    ninf = -np.inf
    X = [[1, 2, ninf, ninf], [ninf, 0, 5, ninf], [ninf, ninf, 1, 9]]
    assert column_argmax(oracle(X)) == [0, 0, 1, 2]


def test_generator_produces_totally_monotone(rng):
    for _ in range(50):
        assert check_totally_monotone(oracle(tm_matrix(rng, 20)))


def test_matches_brute_force_random(rng):
    for _ in range(150):
        X = tm_matrix(rng)
        M = CountingOracle(oracle(X))
        got = column_argmax(M)
        assert got == column_argmax_brute(oracle(X))
        assert M.calls <= 8 * (X.shape[0] + X.shape[1])


def test_linear_evaluation_count_on_large_matrix():
    n = 2000
    i = np.arange(n)
    X = -(i[:, None] - i[None, :]) ** 2.0  # maximum on the diagonal
    M = CountingOracle(oracle(X))
    assert column_argmax(M) == list(range(n))
    assert M.calls <= 8 * 2 * n


def test_diagonal_example():
    i = np.arange(8)
    X = -((i[:, None] - i[None, :]) ** 2.0)
    assert column_argmax(oracle(X)) == list(range(8))


def test_all_minus_inf_column_returns_row_zero():
    X = np.array([[-np.inf, 1.0], [-np.inf, 2.0], [-np.inf, 3.0]])
    assert column_argmax(oracle(X)) == [0, 2]
