import numpy as np
import pytest
from scipy.special import expit

from resmbs._kernels import logistic_cd
from resmbs.errors import ColumnMismatchError, ConfigError
from resmbs.lasso import (
    LassoConfig,
    LassoFit,
    assign_folds,
    cv_select,
    fit_from_dict,
    fit_path,
    fit_to_dict,
    kkt_violation,
    lambda_max,
    metrics,
    normalize_coefs,
    penalized_objective,
    predict_label,
    predict_prob,
)


def newton_logistic(X, y, max_iter=200, tol=1e-12):
    """Independent unpenalized oracle: plain Newton-Raphson on the mean NLL."""
    X1 = np.column_stack([np.ones(len(y)), X])
    w = np.zeros(X1.shape[1])
    for _ in range(max_iter):
        p = expit(X1 @ w)
        g = X1.T @ (p - y) / len(y)
        h = (X1 * np.maximum(p * (1 - p), 1e-12)[:, None]).T @ X1 / len(y)
        step = np.linalg.solve(h, g)
        w -= step
        if np.max(np.abs(step)) < tol:
            break
    return w[0], w[1:]


def random_instance(seed, n=100, p=10, signal=1.0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    beta = signal * rng.normal(size=p) * (rng.random(p) < 0.6)
    y = (rng.random(n) < expit(X @ beta + 0.2)).astype(float)
    if y.min() == y.max():  # keep instances non-degenerate
        y[0] = 1 - y[0]
    return X, y


def test_lambda_max_zero_for_orthogonal_column():
    y = np.array([0.0, 1.0, 0.0, 1.0])
    X = np.array([[1.0], [1.0], [-1.0], [-1.0]])
    assert lambda_max(X, y) <= 1e-12


def test_lambda_max_constant_y_rejected():
    with pytest.raises(ValueError):
        lambda_max(np.ones((4, 1)), np.ones(4))


def test_fit_above_lambda_max_is_exactly_zero():
    X, y = random_instance(1)
    lmax = lambda_max(X, y)
    fits = fit_path(X, y, LassoConfig(lambda_grid=[1.01 * lmax]))
    assert fits[0].coefficients == {}


def test_fit_below_lambda_max_activates_a_coefficient():
    X, y = random_instance(1)
    lmax = lambda_max(X, y)
    fits = fit_path(X, y, LassoConfig(lambda_grid=[0.5 * lmax]))
    assert len(fits[0].coefficients) >= 1


def test_unpenalized_fit_matches_newton_oracle():
    X, y = random_instance(7, n=100, p=10)
    fits = fit_path(X, y, LassoConfig(lambda_grid=[0.0], max_iter=50000, tol=1e-12))
    fit = fits[0]
    b0, beta = newton_logistic(X, y)
    assert fit.converged
    assert np.max(np.abs(fit.dense_coefs() - beta)) < 1e-4
    assert abs(fit.intercept - b0) < 1e-4


def test_duplicated_column_splits_mass():
    X, y = random_instance(3, n=150, p=4)
    lmax = lambda_max(X, y)
    lam = 0.2 * lmax
    single = fit_path(X, y, LassoConfig(lambda_grid=[lam], max_iter=20000, tol=1e-12))[0]
    ref = single.coefficients.get("x0", 0.0)
    Xdup = np.column_stack([X, X[:, 0]])
    dup = fit_path(
        Xdup, y, LassoConfig(lambda_grid=[lam], max_iter=20000, tol=1e-12),
        columns=["x0", "x1", "x2", "x3", "x0dup"],
    )[0]
    mass = abs(dup.coefficients.get("x0", 0.0)) + abs(dup.coefficients.get("x0dup", 0.0))
    assert mass == pytest.approx(abs(ref), abs=2e-3)


def test_kkt_certificate_on_random_instances():
    for seed in range(10):
        X, y = random_instance(100 + seed, n=80, p=8)
        lmax = lambda_max(X, y)
        grid = [lmax * f for f in (0.9, 0.5, 0.25, 0.1, 0.03)]
        fits = fit_path(X, y, LassoConfig(lambda_grid=grid, max_iter=20000, tol=1e-11))
        for fit in fits:
            assert kkt_violation(fit, X, y) < 1e-6, (seed, fit.lambda_)


def test_objective_non_increasing_across_sweeps():
    # binary design -> scaler is the identity, so the public objective matches
    # the solver's internal design exactly
    rng = np.random.default_rng(11)
    n, p = 120, 6
    X = np.ascontiguousarray((rng.random((n, p)) < 0.4).astype(float))
    y = (rng.random(n) < expit(X @ rng.normal(size=p))).astype(float)
    lam = 0.02
    curv = np.maximum((X**2).sum(axis=0) / (4 * n), 1e-12)
    active = np.ones(p, dtype=np.uint8)
    beta = np.zeros(p)
    intercept = 0.0
    prev = penalized_objective(X, y, beta, intercept, lam)
    for _ in range(60):
        intercept, _, _ = logistic_cd(X, y, beta, intercept, lam, curv, active, 1, 0.0)
        obj = penalized_objective(X, y, beta, intercept, lam)
        assert obj <= prev + 1e-10
        prev = obj


def test_warm_started_path_is_deterministic():
    X, y = random_instance(4)
    cfg = LassoConfig(n_lambda=12, lambda_decades=2.0)
    a = fit_path(X, y, cfg)
    b = fit_path(X, y, cfg)
    for fa, fb in zip(a, b):
        assert fa.coefficients == fb.coefficients
        assert fa.intercept == fb.intercept


def test_assign_folds_balanced_and_grouped():
    groups = [f"p{i}" for i in range(20)]
    fold_of = assign_folds(groups, 10, seed=0)
    sizes = np.bincount(list(fold_of.values()), minlength=10)
    assert sizes.tolist() == [2] * 10


def test_assign_folds_deterministic():
    groups = [f"p{i}" for i in range(33)]
    assert assign_folds(groups, 10, seed=5) == assign_folds(groups, 10, seed=5)
    assert assign_folds(groups, 10, seed=5) != assign_folds(groups, 10, seed=6)


def test_assign_folds_too_few_groups():
    with pytest.raises(ConfigError):
        assign_folds(["a", "b"], 10, seed=0)


def cv_instance(seed=0, n_groups=24, per_group=6, p=5):
    rng = np.random.default_rng(seed)
    X, ys, groups = [], [], []
    beta = np.array([2.0, -1.5, 0.0, 0.0, 1.0])
    for g in range(n_groups):
        Xg = rng.normal(size=(per_group, p))
        X.append(Xg)
        ys.append((rng.random(per_group) < expit(Xg @ beta)).astype(float))
        groups += [f"p{g}"] * per_group
    return np.vstack(X), np.concatenate(ys), groups


def test_cv_select_no_group_spans_folds():
    X, y, groups = cv_instance()
    res = cv_select(X, y, groups, LassoConfig(n_lambda=8, lambda_decades=2.0, n_folds=6))
    by_group = {}
    for g in groups:
        by_group.setdefault(g, set()).add(res.fold_assignment[g])
    assert all(len(folds) == 1 for folds in by_group.values())


def test_cv_select_reuses_seeded_assignment():
    X, y, groups = cv_instance()
    cfg = LassoConfig(n_lambda=6, lambda_decades=2.0, n_folds=4, seed=3)
    a = cv_select(X, y, groups, cfg)
    b = cv_select(X, y, groups, cfg)
    assert a.fold_assignment == b.fold_assignment
    assert a.chosen_lambda == b.chosen_lambda
    assert np.array_equal(a.mean_loss, b.mean_loss)


def test_cv_tie_prefers_larger_lambda():
    X, y, groups = cv_instance(seed=2, n_groups=12, per_group=4)
    lmax = lambda_max(X, y)
    # every lambda above lambda_max yields the identical all-zero fit, so the
    # losses tie and the first (largest) lambda must win
    grid = [10 * lmax, 5 * lmax, 2 * lmax]
    res = cv_select(X, y, groups, LassoConfig(lambda_grid=grid, n_folds=4))
    assert res.chosen_lambda == grid[0]


def test_predict_zero_fit_is_half():
    fit = LassoFit(
        intercept=0.0, coefficients={}, lambda_=1.0, converged=True, n_iter=1,
        columns=("x0", "x1"),
    )
    p = predict_prob(fit, np.array([[5.0, -3.0], [0.0, 0.0]]))
    assert np.allclose(p, 0.5)


def test_predict_saturates_with_large_intercept():
    fit = LassoFit(
        intercept=50.0, coefficients={}, lambda_=1.0, converged=True, n_iter=1,
        columns=("x0",),
    )
    assert np.all(predict_prob(fit, np.zeros((3, 1))) > 1 - 1e-9)


def test_predict_column_mismatch_raises():
    fit = LassoFit(
        intercept=0.0, coefficients={}, lambda_=1.0, converged=True, n_iter=1,
        columns=("x0",),
    )
    with pytest.raises(ColumnMismatchError):
        predict_prob(fit, np.zeros((2, 2)))
    with pytest.raises(ColumnMismatchError):
        predict_prob(fit, np.zeros((2, 1)), columns=("other",))


def test_planted_model_recovered_at_high_signal():
    rng = np.random.default_rng(9)
    n = 4000
    x = (rng.random(n) < 0.5).astype(float)
    z = 20.0 * x - 10.0
    y = (rng.random(n) < expit(z)).astype(float)
    fits = fit_path(x[:, None], y, LassoConfig(lambda_grid=[1e-4], max_iter=5000, tol=1e-10))
    pred = predict_label(fits[0], x[:, None])
    assert (pred == y).mean() >= 0.99


def test_metrics_examples():
    m = metrics([1, 0, 1, 0], [1, 0, 1, 0])
    assert m.accuracy == 1.0 and m.f1 == 1.0
    # precision 0.5, recall 1.0 -> harmonic mean 2/3
    m = metrics([1, 0, 0, 1], [1, 1, 1, 1])
    assert m.precision == 0.5 and m.recall == 1.0
    assert m.f1 == pytest.approx(2 / 3)
    m = metrics([1, 1, 0], [0, 0, 0])
    assert m.f1 == 0.0
    with pytest.raises(ValueError):
        metrics([], [])


def test_normalize_coefs():
    fit = LassoFit(
        intercept=3.0, coefficients={"a": 2.0, "b": -4.0}, lambda_=0.1,
        converged=True, n_iter=5, columns=("a", "b"),
    )
    assert normalize_coefs(fit) == {"a": 0.5, "b": -1.0}


def test_normalize_matches_reported_model_scale():
    # reference coefficient vector: largest magnitude -4.669 (IsA), SSUP 4.413
    fit = LassoFit(
        intercept=-0.717,
        coefficients={"IsA": -4.669, "SSUP": 4.413, "OC": -3.215},
        lambda_=0.01, converged=True, n_iter=10,
        columns=("IsA", "SSUP", "OC"),
    )
    norm = normalize_coefs(fit)
    assert norm["IsA"] == pytest.approx(-1.0)
    assert norm["SSUP"] == pytest.approx(4.413 / 4.669)
    assert norm["SSUP"] == pytest.approx(0.945, abs=5e-4)


def test_normalize_single_nonzero_is_unit():
    fit = LassoFit(
        intercept=0.0, coefficients={"a": -0.25}, lambda_=0.1, converged=True,
        n_iter=1, columns=("a",),
    )
    assert normalize_coefs(fit) == {"a": -1.0}


def test_normalize_all_zero_rejected():
    fit = LassoFit(
        intercept=0.0, coefficients={}, lambda_=0.1, converged=True, n_iter=1,
        columns=("a",),
    )
    with pytest.raises(ValueError):
        normalize_coefs(fit)


def test_normalize_preserves_order_and_signs():
    rng = np.random.default_rng(2)
    vals = {f"c{i}": float(v) for i, v in enumerate(rng.normal(size=8)) if v != 0}
    fit = LassoFit(
        intercept=0.0, coefficients=vals, lambda_=0.1, converged=True, n_iter=1,
        columns=tuple(vals),
    )
    norm = normalize_coefs(fit)
    order = sorted(vals, key=lambda k: abs(vals[k]))
    norm_order = sorted(norm, key=lambda k: abs(norm[k]))
    assert order == norm_order
    assert all(np.sign(norm[k]) == np.sign(vals[k]) for k in vals)
    assert max(abs(v) for v in norm.values()) == pytest.approx(1.0)


def test_fit_dict_roundtrip():
    X, y = random_instance(5)
    fit = fit_path(X, y, LassoConfig(n_lambda=4, lambda_decades=1.0))[-1]
    back = fit_from_dict(fit_to_dict(fit))
    assert back.coefficients == fit.coefficients
    assert back.intercept == fit.intercept
    assert back.columns == fit.columns
    assert np.array_equal(back.scaler.mean, fit.scaler.mean)
