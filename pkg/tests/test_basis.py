import numpy as np
import pytest

from gaimfit import eval_row, make_shifted_legendre

from conftest import shifted_legendre_oracle

GRID = np.linspace(-1.5, 1.5, 1000)


def test_rejects_degree_zero():
    with pytest.raises(ValueError):
        make_shifted_legendre(0)


def test_vanishes_at_zero_exactly():
    basis = make_shifted_legendre(6)
    for k in range(1, 7):
        assert basis.eval(k, 0.0) == 0.0


def test_degree_one_is_identity(basis3):
    assert basis3.eval(1, 0.5) == 0.5


def test_degree_two_at_one(basis3):
    # recurrence oracle: P_2(1) - P_2(0) = 1 - (-1/2)
    assert basis3.eval(2, 1.0) == pytest.approx(1.5, abs=1e-15)


def test_eval_row_values(basis3):
    np.testing.assert_array_equal(eval_row(basis3, 0.0), np.zeros(3))
    np.testing.assert_allclose(eval_row(basis3, 1.0), [1.0, 1.5, 1.0], atol=1e-15)
    np.testing.assert_allclose(eval_row(basis3, -1.0), [-1.0, 1.5, -1.0], atol=1e-15)


def test_matches_recurrence_oracle_on_grid():
    basis = make_shifted_legendre(5)
    for k in range(1, 6):
        np.testing.assert_allclose(basis.eval(k, GRID),
                                   shifted_legendre_oracle(k, GRID),
                                   atol=1e-12, rtol=0)


def test_derivative_matches_finite_differences(basis3):
    h = 1e-5
    for k in range(1, 4):
        fd = (basis3.eval(k, GRID + h) - basis3.eval(k, GRID - h)) / (2 * h)
        exact = basis3.deriv(k, GRID)
        rel = np.abs(fd - exact) / np.maximum(1.0, np.abs(exact))
        assert rel.max() < 1e-6


def test_eval_matrix_stacks_all_degrees(basis3):
    t = np.array([[0.3, -0.7], [1.2, 0.0]])
    values = basis3.eval_matrix(t)
    assert values.shape == (2, 2, 3)
    for k in range(1, 4):
        np.testing.assert_array_equal(values[..., k - 1], basis3.eval(k, t))


def test_bad_index_rejected(basis3):
    with pytest.raises(IndexError):
        basis3.eval(0, 0.5)
    with pytest.raises(IndexError):
        basis3.deriv(4, 0.5)


def test_coefficients_immutable(basis3):
    with pytest.raises(ValueError):
        basis3.coeffs[0][0] = 1.0
