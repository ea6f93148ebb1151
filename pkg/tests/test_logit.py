import math

import numpy as np
import pytest

from casebound.errors import SeparationDetected, Singular, ValidationError
from casebound.fixtures import count_table
from casebound.logit import fit_logit
from casebound.model import Design
from casebound.rng import RngSpec, bernoulli


def _toy(seed=0, n=400, k=3):
    gen = RngSpec(seed).derive("logit")
    x = gen.standard_normal((n, k))
    eta = 0.4 + x @ np.array([1.0, -0.5, 0.25][:k])
    t = bernoulli(gen, 1.0 / (1.0 + np.exp(-eta)))
    return x, t


def test_intercept_only_closed_form():
    t = np.repeat([1, 0], [30, 70])
    fit = fit_logit(t, np.empty((100, 0)))
    assert fit.coef.shape == (1,)
    assert fit.coef[0] == pytest.approx(math.log(0.3 / 0.7), abs=1e-10)
    # inverse information of a Bernoulli mean on the logit scale
    assert fit.cov[0, 0] == pytest.approx(1.0 / (100 * 0.3 * 0.7), rel=1e-8)


def test_saturated_two_by_two_reproduces_log_odds_ratio():
    table = count_table("top_income_case_control")
    data = table.to_dataset(Design.CASE_CONTROL)
    fit = fit_logit(data.t, data.y.astype(float)[:, None])
    exact = math.log(table.n11 * table.n00 / (table.n01 * table.n10))
    assert fit.coef[1] == pytest.approx(exact, abs=1e-8)


def test_gradient_norm_at_optimum():
    x, t = _toy()
    fit = fit_logit(t, x)
    design = np.column_stack([np.ones(len(t)), x])
    p = 1.0 / (1.0 + np.exp(-design @ fit.coef))
    grad = design.T @ (t - p)
    assert np.max(np.abs(grad)) <= 1e-8 * len(t)
    assert fit.converged
    assert np.all((fit.predict(x) > 0) & (fit.predict(x) < 1))


def test_loglik_not_worse_than_null():
    x, t = _toy(seed=3)
    fit = fit_logit(t, x)
    pbar = t.mean()
    null_ll = len(t) * (pbar * math.log(pbar) + (1 - pbar) * math.log(1 - pbar))
    assert fit.loglik >= null_ll


def test_covariance_symmetric_nonnegative_diagonal():
    x, t = _toy(seed=5)
    fit = fit_logit(t, x)
    assert np.max(np.abs(fit.cov - fit.cov.T)) < 1e-10
    assert np.all(np.diag(fit.cov) >= 0)


def test_affine_rescaling_invariance():
    x, t = _toy(seed=7)
    fit = fit_logit(t, x)
    scaled = x.copy()
    scaled[:, 1] *= 50.0
    fit2 = fit_logit(t, scaled)
    assert fit2.coef[2] == pytest.approx(fit.coef[2] / 50.0, rel=1e-8, abs=1e-12)
    np.testing.assert_allclose(fit2.predict(scaled), fit.predict(x), atol=1e-8)


def test_stratum_fits_equal_interacted_fit():
    gen = RngSpec(11).derive("strata")
    n = 600
    x = gen.standard_normal((n, 2))
    g = bernoulli(gen, np.full(n, 0.45)).astype(float)
    eta = -0.2 + x @ np.array([0.8, -0.4]) + g * (0.7 + x @ np.array([-1.0, 0.3]))
    t = bernoulli(gen, 1.0 / (1.0 + np.exp(-eta)))
    combined = fit_logit(t, np.column_stack([g, x, x * g[:, None]]))
    fit0 = fit_logit(t[g == 0], x[g == 0])
    fit1 = fit_logit(t[g == 1], x[g == 1])
    pred_combined = combined.predict(np.column_stack([g, x, x * g[:, None]]))
    pred_strata = np.where(g == 1, fit1.predict(x), fit0.predict(x))
    np.testing.assert_allclose(pred_combined, pred_strata, atol=1e-8)


def test_frequency_weights_match_row_expansion():
    x = np.array([[0.0], [1.0], [2.0], [3.0]])
    t = np.array([0, 1, 0, 1])
    w = np.array([5.0, 3.0, 2.0, 7.0])
    expanded_x = np.repeat(x, w.astype(int), axis=0)
    expanded_t = np.repeat(t, w.astype(int))
    fw = fit_logit(t, x, weights=w)
    fe = fit_logit(expanded_t, expanded_x)
    np.testing.assert_allclose(fw.coef, fe.coef, atol=1e-9)
    np.testing.assert_allclose(fw.cov, fe.cov, atol=1e-9)


def test_separation_detected_and_optional_ridge():
    x = np.linspace(-2, 2, 40)[:, None]
    t = (x[:, 0] > 0).astype(int)
    with pytest.raises(SeparationDetected):
        fit_logit(t, x)
    fit = fit_logit(t, x, ridge_on_separation=True)
    assert fit.ridge_used
    assert fit.converged


def test_singular_design_rejected():
    x, t = _toy(seed=13, k=2)
    doubled = np.column_stack([x, x[:, 0]])
    with pytest.raises(Singular):
        fit_logit(t, doubled)


def test_input_contracts():
    x, t = _toy(seed=17)
    with pytest.raises(ValidationError):
        fit_logit(np.array([0, 2, 1]), np.zeros((3, 1)))
    with pytest.raises(ValidationError):
        fit_logit(np.ones(5), np.zeros((5, 1)))  # one response class
    with pytest.raises(ValidationError):
        fit_logit(t, x, weights=np.full(len(t), -1.0))
    with pytest.raises(ValidationError):
        fit_logit(np.array([0, 1]), np.zeros((2, 5)))  # n <= J


def test_deterministic():
    x, t = _toy(seed=19)
    f1 = fit_logit(t, x)
    f2 = fit_logit(t, x)
    assert np.array_equal(f1.coef, f2.coef)
    assert np.array_equal(f1.cov, f2.cov)
