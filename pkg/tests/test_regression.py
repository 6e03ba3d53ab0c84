import numpy as np
import pytest

from invqsar.regression import (
    FitError,
    LinearPredictor,
    SpaceMismatchError,
    cross_validate,
    kkt_residuals,
    lambda_max,
    lasso_fit,
    predict,
    predictor_from_json_text,
    predictor_to_json_text,
    r_squared,
)

from oracles import prox_grad_lasso


def test_exact_interpolation():
    x = np.array([[0.0], [1.0]])
    y = np.array([0.0, 1.0])
    fit = lasso_fit(x, y, 0.0)
    assert abs(fit.weights[0] - 1.0) < 1e-6
    assert abs(fit.bias) < 1e-6


def test_lambda_max_kills_weights():
    rng = np.random.default_rng(1)
    x = rng.random((30, 6))
    y = rng.random(30)
    lmax = lambda_max(x, y)
    fit = lasso_fit(x, y, lmax * 1.0001)
    assert np.all(fit.weights == 0.0)
    assert abs(fit.bias - y.mean()) < 1e-9
    # just below the threshold something becomes active
    fit2 = lasso_fit(x, y, lmax * 0.95)
    assert np.any(fit2.weights != 0.0)


def test_against_proximal_gradient_oracle():
    rng = np.random.default_rng(2)
    x = rng.random((20, 5))
    y = rng.random(20)
    fit = lasso_fit(x, y, 0.01)
    w_ref, b_ref = prox_grad_lasso(x, y, 0.01)
    assert np.abs(fit.weights - w_ref).max() < 1e-5
    assert abs(fit.bias - b_ref) < 1e-5


def test_kkt_at_solution():
    rng = np.random.default_rng(3)
    for lam in (0.001, 0.01, 0.1):
        x = rng.random((40, 8))
        y = rng.random(40)
        fit = lasso_fit(x, y, lam)
        assert kkt_residuals(x, y, fit.weights, fit.bias, lam).max() <= 1e-6


def test_objective_monotone_per_sweep():
    rng = np.random.default_rng(4)
    x = rng.random((25, 7))
    y = rng.random(25)
    fit = lasso_fit(x, y, 0.05)
    path = fit.objective_path
    for before, after in zip(path, path[1:]):
        assert after <= before + 1e-12


def test_zero_lambda_matches_least_squares():
    rng = np.random.default_rng(5)
    x = rng.random((30, 4))
    y = x @ np.array([1.0, -2.0, 0.5, 3.0]) + 0.7 + 0.01 * rng.random(30)
    fit = lasso_fit(x, y, 0.0, tol=1e-12)
    design = np.hstack([x, np.ones((30, 1))])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    assert np.abs(fit.weights - coef[:4]).max() < 1e-6
    assert abs(fit.bias - coef[4]) < 1e-6


def test_selection_monotone_along_lambda_path():
    rng = np.random.default_rng(6)
    x = rng.random((50, 10))
    y = x @ (rng.random(10) - 0.5) + 0.1 * rng.random(50)
    lams = np.geomspace(1e-5, lambda_max(x, y) * 1.2, 10)
    counts = []
    for lam in lams:
        fit = lasso_fit(x, y, float(lam))
        counts.append(int((fit.weights != 0).sum()))
    for a, b in zip(counts, counts[1:]):
        assert b <= a


def test_constant_column_skipped():
    # constant descriptors arrive as all-zero columns after normalization
    x = np.hstack([np.zeros((20, 1)), np.linspace(0, 1, 20).reshape(-1, 1)])
    y = np.linspace(0, 1, 20)
    fit = lasso_fit(x, y, 0.0)
    assert fit.weights[0] == 0.0
    assert abs(fit.weights[1] - 1.0) < 1e-6


def test_rejects_bad_input():
    with pytest.raises(FitError):
        lasso_fit(np.array([[1.0]]), np.array([1.0]), 0.1)
    with pytest.raises(FitError):
        lasso_fit(np.array([[1.0], [2.0]]), np.array([1.0, np.nan]), 0.1)
    with pytest.raises(FitError):
        lasso_fit(np.array([[1.0], [2.0]]), np.array([1.0, 2.0]), -1.0)


def _toy_predictor(weights, bias=0.0, k=None):
    k = k or len(weights)
    return LinearPredictor(
        weights=tuple(weights),
        bias=bias,
        lam=0.0,
        descriptor_names=tuple(f"d{i}" for i in range(k)),
        mins=tuple([0.0] * k),
        maxs=tuple([1.0] * k),
        target_min=0.0,
        target_max=1.0,
        space_hash="abc",
    )


def test_predict_trivial():
    p = _toy_predictor([0.0, 0.0], bias=0.3)
    assert predict(p, [0.9, 0.1]) == pytest.approx(0.3)
    p = _toy_predictor([1.0, 0.0])
    assert predict(p, [0.7, 0.5]) == pytest.approx(0.7)


def test_predict_space_mismatch():
    p = _toy_predictor([1.0])
    with pytest.raises(SpaceMismatchError):
        predict(p, [0.5], space_hash="other")


def test_predict_train_then_holdout():
    rng = np.random.default_rng(7)
    x = rng.random((60, 5))
    true_w = np.array([0.2, -0.1, 0.4, 0.0, 0.3])
    y = x @ true_w + 0.25
    fit = lasso_fit(x[:50], y[:50], 1e-9, tol=1e-12)
    pred = x[50:] @ fit.weights + fit.bias
    assert np.abs(pred - y[50:]).max() < 1e-6


def test_r_squared():
    assert r_squared([1, 2, 3], [1, 2, 3]) == 1.0
    assert r_squared([2, 2, 2], [1, 2, 3]) == 0.0
    assert r_squared([0, 0, 2], [0, 1, 2]) == pytest.approx(0.5)
    assert r_squared([1, 2], [5, 5]) == 0.0  # zero-variance convention


def test_cv_noiseless_linear():
    rng = np.random.default_rng(8)
    x = rng.random((80, 6))
    y = x @ (rng.random(6) + 0.1) + 0.2
    report = cross_validate(x, y, 1e-6, executions=3, seed=0)
    assert report.median_r2 >= 0.999
    assert len(report.fold_r2) == 15


def test_cv_constant_target():
    rng = np.random.default_rng(9)
    x = rng.random((40, 3))
    y = np.ones(40)
    report = cross_validate(x, y, 0.01, executions=2, seed=0)
    assert report.median_r2 == 0.0


def test_cv_pure_noise():
    rng = np.random.default_rng(10)
    x = rng.random((100, 5))
    y = rng.standard_normal(100)
    report = cross_validate(x, y, 10.0, executions=3, seed=1)
    assert report.median_r2 <= 0.05


def test_cv_reproducible():
    rng = np.random.default_rng(11)
    x = rng.random((50, 4))
    y = rng.random(50)
    r1 = cross_validate(x, y, 0.01, executions=2, seed=42)
    r2 = cross_validate(x, y, 0.01, executions=2, seed=42)
    assert r1 == r2
    r3 = cross_validate(x, y, 0.01, executions=2, seed=43)
    assert r1.fold_r2 != r3.fold_r2


def test_predictor_json_round_trip():
    p = LinearPredictor(
        weights=(0.5, -0.25),
        bias=0.1,
        lam=0.01,
        descriptor_names=("a", "b"),
        mins=(0.0, 1.0),
        maxs=(2.0, 3.0),
        target_min=-5.0,
        target_max=5.0,
        space_hash="deadbeef",
    )
    text = predictor_to_json_text(p)
    assert predictor_from_json_text(text) == p
    assert p.standardize(0.0) == 0.5
    assert p.destandardize(0.5) == 0.0
