import numpy as np
import pytest

from gaimfit import (FitConfig, PprConfig, fit, get_link, get_loss,
                     index_error, make_dataset, ppr_fit, ppr_predict,
                     sample_unit_ball, standard_init, truth_table2)
from gaimfit.synth import Dataset, Truth

from conftest import random_unit_columns


def test_config_validation():
    with pytest.raises(ValueError):
        PprConfig(m=0)
    with pytest.raises(ValueError):
        PprConfig(m=1, tol=0.0)
    with pytest.raises(ValueError):
        PprConfig(m=1, max_inner_iters=0)


def test_identity_link_enforced():
    data = Dataset(X=np.zeros((10, 2)), y=np.zeros(10), seed=0,
                   meta={"link": "log"})
    with pytest.raises(ValueError):
        ppr_fit(data, PprConfig(m=1))


def test_single_linear_component_exact_recovery(basis3):
    # noiseless y = alpha* . x: cubic OLS on a linear target is exact
    rng = np.random.default_rng(0)
    alpha_star = random_unit_columns(rng, 5, 1)
    truth = Truth(alpha_star, np.array([[1.0, 0.0, 0.0]]))   # phi_1(t) = t
    X = sample_unit_ball(400, 5, 1)
    y = X @ alpha_star[:, 0]
    estimate, trace = ppr_fit(Dataset(X=X, y=y, seed=1), PprConfig(m=1))
    assert index_error(estimate.alpha, alpha_star)[0] < 1e-6
    test_X = sample_unit_ball(2000, 5, 2)
    fn_gap = float(np.mean((estimate.predict(test_X) - test_X @ alpha_star[:, 0]) ** 2))
    assert fn_gap < 1e-10


def test_zero_response_gives_zero_fit():
    X = sample_unit_ball(100, 3, 3)
    estimate, trace = ppr_fit(Dataset(X=X, y=np.zeros(100), seed=2), PprConfig(m=2))
    np.testing.assert_array_equal(estimate.ridge_coeffs, np.zeros((2, 4)))
    assert estimate.intercept == 0.0
    np.testing.assert_array_equal(estimate.predict(X), np.zeros(100))
    assert trace.n_singular >= 1      # zero-slope Gauss-Newton designs


def test_rss_never_increases_across_ridge_steps(basis3):
    truth = truth_table2(6, 2)
    link = get_link("identity")
    data = make_dataset("gaussian", link, truth, 500, seed=4, variance=0.1,
                        basis=basis3)
    _, trace = ppr_fit(data, PprConfig(m=2))
    before = np.asarray(trace.rss_before)
    after = np.asarray(trace.rss_after)
    assert len(trace) > 0
    assert np.all(after <= before + 1e-9 * np.maximum(1.0, before))


def test_unit_norm_indices(basis3):
    truth = truth_table2(8, 2)
    link = get_link("identity")
    data = make_dataset("gaussian", link, truth, 400, seed=5, variance=0.05,
                        basis=basis3)
    estimate, _ = ppr_fit(data, PprConfig(m=2))
    norms = np.linalg.norm(estimate.alpha, axis=0)
    np.testing.assert_allclose(norms, np.ones(2), atol=1e-12)


def test_intercept_absorbs_constant_terms(basis3):
    rng = np.random.default_rng(6)
    alpha_star = random_unit_columns(rng, 4, 1)
    X = sample_unit_ball(500, 4, 7)
    y = 2.5 + X @ alpha_star[:, 0]
    estimate, _ = ppr_fit(Dataset(X=X, y=y, seed=8), PprConfig(m=1))
    assert estimate.ridge_coeffs[:, 0].sum() == 0.0
    assert estimate.intercept == pytest.approx(2.5, abs=1e-6)
    assert np.mean((ppr_predict(estimate, X) - y) ** 2) < 1e-10


def test_gd_beats_ppr_on_small_table2_setting(basis3):
    # qualitative ordering on the (4,2) experiment cell
    truth = truth_table2(4, 2)
    link = get_link("identity")
    fn_gd, fn_ppr = [], []
    test_X = sample_unit_ball(4000, 4, 9)
    eta_star = truth.eta(test_X, basis3)
    for seed in range(5):
        data = make_dataset("gaussian", link, truth, 2000, seed=40 + seed,
                            variance=0.125, basis=basis3)
        cfg = FitConfig(algorithm="gd", iterations=200, step_alpha=2.4,
                        step_beta=2.4, record_every=200)
        params, _ = fit(data, basis3, link, get_loss("gaussian"),
                        standard_init(4, 2, 3), cfg)
        eta_gd = np.einsum("imk,mk->i", basis3.eval_matrix(test_X @ params.alpha),
                           params.beta)
        fn_gd.append(float(np.mean((eta_gd - eta_star) ** 2)))
        estimate, _ = ppr_fit(data, PprConfig(m=2))
        fn_ppr.append(float(np.mean((estimate.predict(test_X) - eta_star) ** 2)))
    assert np.mean(fn_gd) < np.mean(fn_ppr)
