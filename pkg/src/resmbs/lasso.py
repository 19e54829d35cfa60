"""L1-penalized logistic regression by cyclic coordinate descent.

Objective: mean Bernoulli negative log-likelihood plus ``lam * ||beta||_1``
with an unpenalized intercept. Coordinate updates minimize a quadratic
majorizer (curvature bound ``||x_j||^2 / 4n``), so the penalized objective is
non-increasing across sweeps. Continuous columns are centered and scaled
internally (training data only); reported coefficients are on the original
scale. Cross-validation folds partition prospectuses, never securities.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from ._kernels import logistic_cd
from .errors import ColumnMismatchError, ConfigError, NumericFailureError

_CURV_FLOOR = 1e-12


@dataclass
class LassoConfig:
    lambda_grid: list[float] | None = None  # descending; auto when None
    n_lambda: int = 100
    lambda_decades: float = 4.0
    n_folds: int = 10
    max_iter: int = 1000  # coordinate sweeps per lambda
    tol: float = 1e-8  # max coefficient change declaring convergence
    seed: int = 0

    def __post_init__(self):
        if self.n_folds < 2:
            raise ConfigError("n_folds must be >= 2")
        if self.lambda_grid is not None:
            grid = list(self.lambda_grid)
            if any(l < 0 for l in grid):
                raise ConfigError("lambda values must be >= 0")
            if any(a <= b for a, b in zip(grid, grid[1:])):
                raise ConfigError("lambda_grid must be strictly descending")


@dataclass
class Scaler:
    """Per-column centering/scaling for the continuous columns only."""

    continuous: np.ndarray  # bool mask over columns
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray, continuous=None) -> "Scaler":
        if continuous is None:
            # unscaled unless the column leaves [0, 1]
            mins, maxs = X.min(axis=0), X.max(axis=0)
            continuous = (mins < 0.0) | (maxs > 1.0)
        continuous = np.asarray(continuous, dtype=bool)
        mean = np.where(continuous, X.mean(axis=0), 0.0)
        std = np.where(continuous, X.std(axis=0), 1.0)
        std = np.where(std > 0, std, 1.0)
        return cls(continuous=continuous, mean=mean, std=std)

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.std


@dataclass
class LassoFit:
    intercept: float
    coefficients: dict[str, float]  # absent name == exactly zero
    lambda_: float
    converged: bool
    n_iter: int
    columns: tuple[str, ...]
    scaler: Scaler | None = None

    def dense_coefs(self) -> np.ndarray:
        out = np.zeros(len(self.columns))
        for name, val in self.coefficients.items():
            out[self.columns.index(name)] = val
        return out


@dataclass
class Metrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    tn: int
    fn: int


@dataclass
class CvResult:
    fold_assignment: dict[str, int]
    lambda_grid: list[float]
    mean_loss: np.ndarray
    chosen_lambda: float
    chosen_index: int
    oof_prob: np.ndarray | None = field(default=None, repr=False)


def _check_y(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    classes = np.unique(y)
    if not np.all(np.isin(classes, (0.0, 1.0))):
        raise ValueError("y must be binary 0/1")
    if classes.size < 2:
        raise ValueError("y is constant; nothing to fit")
    return y


def _default_columns(p: int) -> tuple[str, ...]:
    return tuple(f"x{j}" for j in range(p))


def lambda_max(X, y, continuous=None) -> float:
    """Smallest penalty at which the all-zero coefficient vector (intercept at
    the logit of the base rate) is stationary; computed on the standardized
    design."""
    X = np.asarray(X, dtype=float)
    y = _check_y(y)
    scaler = Scaler.fit(X, continuous)
    Xs = scaler.transform(X)
    resid = y - y.mean()
    return float(np.max(np.abs(Xs.T @ resid)) / len(y))


def _auto_grid(lmax: float, config: LassoConfig) -> list[float]:
    if lmax <= 0:
        return [0.0]
    lo = math.log10(lmax) - config.lambda_decades
    return [float(l) for l in np.logspace(math.log10(lmax), lo, config.n_lambda)]


def fit_path(X, y, config: LassoConfig | None = None, columns=None, continuous=None) -> list[LassoFit]:
    """Warm-started coordinate-descent fits along a descending lambda grid."""
    config = config or LassoConfig()
    X = np.ascontiguousarray(np.asarray(X, dtype=float))
    y = _check_y(y)
    if X.ndim != 2 or X.shape[0] != len(y):
        raise ValueError("X must be (n, p) with one row per outcome")
    if np.isnan(X).any():
        raise ValueError("X has missing cells")
    n, p = X.shape
    columns = tuple(columns) if columns is not None else _default_columns(p)
    if len(columns) != p:
        raise ValueError("column names do not match X width")

    scaler = Scaler.fit(X, continuous)
    Xs = np.ascontiguousarray(scaler.transform(X))
    colsq = (Xs**2).sum(axis=0)
    usable = colsq > 0
    curv = np.maximum(colsq / (4 * n), _CURV_FLOOR)

    if config.lambda_grid is not None:
        grid = [float(l) for l in config.lambda_grid]
    else:
        resid = y - y.mean()
        lmax = float(np.max(np.abs(Xs.T @ resid)) / n)
        grid = _auto_grid(lmax, config)

    ybar = y.mean()
    beta = np.zeros(p)
    intercept = float(np.log(ybar / (1 - ybar)))
    fits: list[LassoFit] = []
    all_active = np.ascontiguousarray(usable, dtype=np.uint8)
    for lam in grid:
        total_sweeps = 0
        converged = False
        while total_sweeps < config.max_iter:
            intercept, s, step = logistic_cd(
                Xs, y, beta, intercept, lam, curv, all_active, 1, 0.0
            )
            total_sweeps += s
            if step < config.tol:
                converged = True
                break
            active = np.ascontiguousarray((beta != 0.0) & usable, dtype=np.uint8)
            if active.any():
                budget = config.max_iter - total_sweeps
                if budget <= 0:
                    break
                intercept, s, _ = logistic_cd(
                    Xs, y, beta, intercept, lam, curv, active, budget, config.tol
                )
                total_sweeps += s
        fits.append(
            _make_fit(beta, intercept, lam, converged, total_sweeps, columns, scaler)
        )
    return fits


def _make_fit(beta_std, intercept_std, lam, converged, n_iter, columns, scaler) -> LassoFit:
    beta_orig = beta_std / scaler.std
    intercept_orig = float(intercept_std - np.dot(beta_std, scaler.mean / scaler.std))
    coefs = {columns[j]: float(beta_orig[j]) for j in np.flatnonzero(beta_std)}
    return LassoFit(
        intercept=intercept_orig,
        coefficients=coefs,
        lambda_=float(lam),
        converged=converged,
        n_iter=int(n_iter),
        columns=tuple(columns),
        scaler=scaler,
    )


def penalized_objective(X, y, beta, intercept, lam) -> float:
    """Mean Bernoulli NLL + lam * ||beta||_1 (diagnostic; matches the solver)."""
    z = X @ beta + intercept
    # log(1 + exp(-|z|)) + max(-yz + ...) stable form
    nll = np.mean(np.logaddexp(0.0, z) - y * z)
    return float(nll + lam * np.abs(beta).sum())


def kkt_violation(fit: LassoFit, X, y) -> float:
    """Max stationarity violation of the fit on its own standardized design.

    Zero coordinates must satisfy |score_j| <= lambda, nonzero coordinates
    score_j = -lambda * sign(beta_j); the intercept score must vanish.
    """
    X = np.asarray(X, dtype=float)
    y = _check_y(y)
    Xs = fit.scaler.transform(X)
    beta_std = fit.dense_coefs() * fit.scaler.std
    intercept_std = fit.intercept + float(
        np.dot(fit.dense_coefs(), fit.scaler.mean)
    )
    p_hat = expit(Xs @ beta_std + intercept_std)
    score = Xs.T @ (p_hat - y) / len(y)
    lam = fit.lambda_
    viol = abs(float(np.mean(p_hat - y)))
    usable = (Xs**2).sum(axis=0) > 0
    for j in range(len(beta_std)):
        if not usable[j]:
            continue
        if beta_std[j] == 0.0:
            viol = max(viol, max(0.0, abs(score[j]) - lam))
        else:
            viol = max(viol, abs(score[j] + lam * np.sign(beta_std[j])))
    return viol


def predict_prob(fit: LassoFit, X, columns=None) -> np.ndarray:
    """Logistic probabilities; ``columns`` (when given) must match the fit."""
    if columns is not None and tuple(columns) != fit.columns:
        raise ColumnMismatchError(
            f"feature columns do not match fit (got {len(tuple(columns))}, "
            f"fit has {len(fit.columns)})"
        )
    X = np.asarray(X, dtype=float)
    if X.shape[1] != len(fit.columns):
        raise ColumnMismatchError(
            f"X has {X.shape[1]} columns, fit expects {len(fit.columns)}"
        )
    return expit(X @ fit.dense_coefs() + fit.intercept)


def predict_label(fit: LassoFit, X, columns=None, threshold: float = 0.5) -> np.ndarray:
    return (predict_prob(fit, X, columns) >= threshold).astype(int)


def assign_folds(groups, n_folds: int, seed: int) -> dict[str, int]:
    """Shuffled round-robin assignment of groups to folds (sizes differ <= 1)."""
    unique = sorted({str(g) for g in groups})
    if len(unique) < n_folds:
        raise ConfigError(
            f"need at least n_folds={n_folds} distinct groups, got {len(unique)}"
        )
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(unique))
    return {unique[idx]: i % n_folds for i, idx in enumerate(order)}


def cv_select(X, y, groups, config: LassoConfig | None = None, columns=None, continuous=None) -> CvResult:
    """Grouped cross-validation over the lambda grid.

    The loss is the squared error between held-out predicted probabilities
    and outcomes, averaged over all held-out rows. Losses within 1e-12 of
    the minimum count as ties and resolve to the larger (sparser) lambda.
    """
    config = config or LassoConfig()
    X = np.asarray(X, dtype=float)
    y = _check_y(y)
    groups = [str(g) for g in groups]
    if len(groups) != len(y):
        raise ValueError("groups must align with rows")
    fold_of = assign_folds(groups, config.n_folds, config.seed)
    row_fold = np.array([fold_of[g] for g in groups])

    if config.lambda_grid is not None:
        grid = [float(l) for l in config.lambda_grid]
    else:
        grid = _auto_grid(lambda_max(X, y, continuous), config)
    fixed = LassoConfig(
        lambda_grid=grid,
        n_folds=config.n_folds,
        max_iter=config.max_iter,
        tol=config.tol,
        seed=config.seed,
    )

    oof = np.full((len(y), len(grid)), np.nan)
    for fold in range(config.n_folds):
        test = row_fold == fold
        train = ~test
        fits = fit_path(X[train], y[train], fixed, columns=columns, continuous=continuous)
        for li, fit in enumerate(fits):
            oof[test, li] = predict_prob(fit, X[test])
    if np.isnan(oof).any():
        raise NumericFailureError("cross-validation left unpredicted rows")
    mean_loss = ((oof - y[:, None]) ** 2).mean(axis=0)
    # losses within 1e-12 of the minimum count as ties; the grid is
    # descending, so the first qualifying index is the largest lambda
    best = mean_loss.min()
    chosen = int(np.flatnonzero(mean_loss <= best + 1e-12 * max(1.0, abs(best)))[0])
    return CvResult(
        fold_assignment=fold_of,
        lambda_grid=grid,
        mean_loss=mean_loss,
        chosen_lambda=grid[chosen],
        chosen_index=chosen,
        oof_prob=oof,
    )


def metrics(y_true, y_pred) -> Metrics:
    y_true = np.asarray(y_true, dtype=int)
    y_pred = np.asarray(y_pred, dtype=int)
    if y_true.size == 0:
        raise ValueError("cannot compute metrics on empty input")
    if y_true.shape != y_pred.shape:
        raise ValueError("y_true and y_pred must have equal length")
    tp = int(np.sum((y_true == 1) & (y_pred == 1)))
    fp = int(np.sum((y_true == 0) & (y_pred == 1)))
    tn = int(np.sum((y_true == 0) & (y_pred == 0)))
    fn = int(np.sum((y_true == 1) & (y_pred == 0)))
    accuracy = (tp + tn) / y_true.size
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return Metrics(accuracy, precision, recall, f1, tp, fp, tn, fn)


def normalize_coefs(fit: LassoFit) -> dict[str, float]:
    """Coefficients divided by the largest magnitude (intercept excluded)."""
    if not fit.coefficients:
        raise ValueError("cannot normalize an all-zero coefficient vector")
    scale = max(abs(v) for v in fit.coefficients.values())
    return {name: val / scale for name, val in fit.coefficients.items()}


# -- persistence ---------------------------------------------------------------

def fit_to_dict(fit: LassoFit) -> dict:
    return {
        "intercept": fit.intercept,
        "coefficients": dict(sorted(fit.coefficients.items())),
        "lambda": fit.lambda_,
        "converged": fit.converged,
        "n_iter": fit.n_iter,
        "columns": list(fit.columns),
        "scaler": None
        if fit.scaler is None
        else {
            "continuous": [int(i) for i in np.flatnonzero(fit.scaler.continuous)],
            "mean": [float(v) for v in fit.scaler.mean],
            "std": [float(v) for v in fit.scaler.std],
        },
    }


def fit_from_dict(payload: dict) -> LassoFit:
    scaler = None
    if payload.get("scaler") is not None:
        s = payload["scaler"]
        p = len(payload["columns"])
        continuous = np.zeros(p, dtype=bool)
        continuous[s["continuous"]] = True
        scaler = Scaler(
            continuous=continuous,
            mean=np.array(s["mean"], dtype=float),
            std=np.array(s["std"], dtype=float),
        )
    return LassoFit(
        intercept=float(payload["intercept"]),
        coefficients={k: float(v) for k, v in payload["coefficients"].items()},
        lambda_=float(payload["lambda"]),
        converged=bool(payload["converged"]),
        n_iter=int(payload["n_iter"]),
        columns=tuple(payload["columns"]),
        scaler=scaler,
    )


def save_fits(fits: dict[str, LassoFit], path) -> None:
    payload = {"version": 1, "fits": {name: fit_to_dict(f) for name, f in sorted(fits.items())}}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_fits(path) -> dict[str, LassoFit]:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    return {name: fit_from_dict(d) for name, d in payload["fits"].items()}
