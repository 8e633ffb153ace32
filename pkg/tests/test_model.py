import numpy as np
import pytest

from gaimfit import (DegenerateColumnError, ModelParams, batch_eta,
                     feature_matrix, grad_eta_alpha, predict_eta,
                     project_to_sphere_columns, truth_table1)
from gaimfit.model import batch_features

from conftest import random_unit_columns


def random_params(rng, d=None, m=None, n_basis=3):
    d = d or int(rng.integers(2, 7))
    m = m or int(rng.integers(1, 4))
    return ModelParams(random_unit_columns(rng, d, m),
                       rng.standard_normal((m, n_basis)))


class TestPredictEta:
    def test_zero_beta(self, basis3):
        rng = np.random.default_rng(0)
        params = ModelParams(random_unit_columns(rng, 5, 2), np.zeros((2, 3)))
        assert predict_eta(params, basis3, rng.standard_normal(5)) == 0.0

    def test_zero_x(self, basis3):
        rng = np.random.default_rng(1)
        params = random_params(rng)
        assert predict_eta(params, basis3, np.zeros(params.dim)) == 0.0

    def test_known_value_at_table1_truth(self, basis3):
        # hand evaluation with the recurrence oracle, frozen
        truth = truth_table1()
        x = np.array([0.5, 0.0, 0.0, 0.0])
        assert predict_eta(truth.params(), basis3, x) == pytest.approx(
            -0.0491617766867124, abs=1e-14)

    def test_dimension_mismatch(self, basis3):
        rng = np.random.default_rng(2)
        params = random_params(rng, d=4, m=2)
        with pytest.raises(ValueError):
            predict_eta(params, basis3, np.zeros(5))


class TestFeatureMatrix:
    def test_zero_x_gives_zero_matrix(self, basis3):
        rng = np.random.default_rng(3)
        params = random_params(rng, d=4, m=2)
        np.testing.assert_array_equal(feature_matrix(params, basis3, np.zeros(4)),
                                      np.zeros((2, 3)))

    def test_single_index_row_is_eval_row(self, basis3):
        params = ModelParams(np.array([[1.0]]), np.zeros((1, 3)))
        x = np.array([0.37])
        np.testing.assert_array_equal(feature_matrix(params, basis3, x)[0],
                                      basis3.eval_matrix(np.float64(0.37)))

    def test_inner_product_reproduces_eta(self, basis3):
        rng = np.random.default_rng(4)
        for _ in range(20):
            params = random_params(rng)
            x = rng.standard_normal(params.dim) * 0.5
            phi = feature_matrix(params, basis3, x)
            assert float(np.sum(phi * params.beta)) == pytest.approx(
                predict_eta(params, basis3, x), abs=1e-12)

    def test_is_beta_gradient(self, basis3):
        rng = np.random.default_rng(5)
        h = 1e-5
        for _ in range(10):
            params = random_params(rng)
            x = rng.standard_normal(params.dim) * 0.5
            phi = feature_matrix(params, basis3, x)
            for j in range(params.n_indices):
                for k in range(params.n_basis):
                    beta_up = params.beta.copy()
                    beta_up[j, k] += h
                    beta_dn = params.beta.copy()
                    beta_dn[j, k] -= h
                    fd = (predict_eta(ModelParams(params.alpha, beta_up), basis3, x)
                          - predict_eta(ModelParams(params.alpha, beta_dn), basis3, x)) / (2 * h)
                    assert abs(fd - phi[j, k]) / max(1.0, abs(phi[j, k])) < 1e-6


class TestGradAlpha:
    def test_zero_beta(self, basis3):
        rng = np.random.default_rng(6)
        params = ModelParams(random_unit_columns(rng, 4, 2), np.zeros((2, 3)))
        np.testing.assert_array_equal(grad_eta_alpha(params, basis3, rng.standard_normal(4)),
                                      np.zeros((4, 2)))

    def test_zero_x(self, basis3):
        rng = np.random.default_rng(7)
        params = random_params(rng, d=4, m=2)
        np.testing.assert_array_equal(grad_eta_alpha(params, basis3, np.zeros(4)),
                                      np.zeros((4, 2)))

    def test_matches_finite_differences(self, basis3):
        # both gradients, 100 random draws, step 1e-5, relative error < 1e-6
        rng = np.random.default_rng(8)
        h = 1e-5
        for _ in range(100):
            params = random_params(rng)
            x = rng.standard_normal(params.dim) * 0.6
            grad = grad_eta_alpha(params, basis3, x)
            for i in range(params.dim):
                for j in range(params.n_indices):
                    alpha_up = params.alpha.copy()
                    alpha_up[i, j] += h
                    alpha_dn = params.alpha.copy()
                    alpha_dn[i, j] -= h
                    fd = (predict_eta(ModelParams(alpha_up, params.beta), basis3, x)
                          - predict_eta(ModelParams(alpha_dn, params.beta), basis3, x)) / (2 * h)
                    assert abs(fd - grad[i, j]) / max(1.0, abs(grad[i, j])) < 1e-6


class TestProjection:
    def test_three_four_five(self):
        out = project_to_sphere_columns(np.array([[3.0], [4.0]]))
        np.testing.assert_allclose(out[:, 0], [0.6, 0.8], rtol=0, atol=1e-16)

    def test_idempotent_on_unit_input(self):
        rng = np.random.default_rng(9)
        a = random_unit_columns(rng, 6, 3)
        np.testing.assert_allclose(project_to_sphere_columns(a), a, atol=1e-15, rtol=0)

    def test_zero_column_raises(self):
        bad = np.array([[1.0, 0.0], [0.0, 0.0]])
        with pytest.raises(DegenerateColumnError) as err:
            project_to_sphere_columns(bad)
        assert err.value.column == 1


def test_eta_invariant_under_simultaneous_permutation(basis3):
    rng = np.random.default_rng(10)
    params = random_params(rng, d=5, m=3)
    x = rng.standard_normal(5) * 0.5
    perm = rng.permutation(3)
    permuted = ModelParams(params.alpha[:, perm], params.beta[perm])
    assert predict_eta(params, basis3, x) == predict_eta(permuted, basis3, x)


def test_batch_matches_single_sample(basis3):
    rng = np.random.default_rng(11)
    params = random_params(rng, d=4, m=2)
    X = rng.standard_normal((30, 4)) * 0.5
    eta = batch_eta(params, basis3, X)
    eta_b, phi, dphi = batch_features(params, basis3, X)
    np.testing.assert_array_equal(eta, eta_b)
    for i in (0, 13, 29):
        assert eta[i] == pytest.approx(predict_eta(params, basis3, X[i]), abs=1e-12)
        np.testing.assert_allclose(phi[i], feature_matrix(params, basis3, X[i]),
                                   atol=1e-15, rtol=0)


def test_params_validation():
    with pytest.raises(ValueError):
        ModelParams(np.zeros((4, 2)), np.zeros((3, 3)))
    bad = ModelParams(np.full((4, 2), 0.5), np.zeros((2, 3)))
    bad.alpha[0, 0] = 0.7
    with pytest.raises(ValueError):
        bad.check_unit_columns()
