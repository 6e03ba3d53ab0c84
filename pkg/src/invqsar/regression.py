"""Lasso linear regression on normalized descriptors.

The fit minimizes (1/2N)*RSS + lambda*l1(w) with an unpenalized intercept,
by cyclic coordinate descent with soft thresholding.  Cross-validation
follows the five-fold protocol with a configurable number of executions and
reports the median test R-squared across all trials.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np


class FitError(ValueError):
    pass


def soft_threshold(z: float, t: float) -> float:
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


def lasso_objective(x: np.ndarray, y: np.ndarray, w: np.ndarray, b: float,
                    lam: float) -> float:
    r = y - x @ w - b
    return float(r @ r) / (2 * len(y)) + lam * float(np.abs(w).sum())


@dataclass
class LassoResult:
    weights: np.ndarray
    bias: float
    lam: float
    n_sweeps: int
    objective_path: list[float] = field(default_factory=list)


def lasso_fit(
    x: np.ndarray,
    y: np.ndarray,
    lam: float,
    tol: float = 1e-7,
    max_sweeps: int = 100_000,
) -> LassoResult:
    """Coordinate-descent Lasso on an already normalized design matrix."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
        raise FitError("design matrix and targets have incompatible shapes")
    if x.shape[0] < 2:
        raise FitError("need at least two samples")
    if lam < 0:
        raise FitError("penalty must be non-negative")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise FitError("NaN or Inf in the training data")

    n, k = x.shape
    col_sq = (x * x).sum(axis=0) / n
    w = np.zeros(k)
    b = float(y.mean())
    r = y - b  # residual y - Xw - b
    objective_path = [lasso_objective(x, y, w, b, lam)]

    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        max_delta = 0.0
        for j in range(k):
            if col_sq[j] == 0.0:
                continue
            wj = w[j]
            if wj != 0.0:
                r += wj * x[:, j]
            rho = float(x[:, j] @ r) / n
            w[j] = soft_threshold(rho, lam) / col_sq[j]
            if w[j] != 0.0:
                r -= w[j] * x[:, j]
            max_delta = max(max_delta, abs(w[j] - wj))
        b_new = b + float(r.mean())
        r -= b_new - b
        max_delta = max(max_delta, abs(b_new - b))
        b = b_new
        objective_path.append(lasso_objective(x, y, w, b, lam))
        if max_delta < tol:
            break
    return LassoResult(w, b, lam, sweeps, objective_path)


def lambda_max(x: np.ndarray, y: np.ndarray) -> float:
    """Smallest penalty for which the all-zero weight vector is optimal."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    centered = y - y.mean()
    return float(np.abs(x.T @ centered).max()) / len(y)


def kkt_residuals(x: np.ndarray, y: np.ndarray, w: np.ndarray, b: float,
                  lam: float) -> np.ndarray:
    """Per-coordinate violation of the subgradient optimality conditions."""
    n = len(y)
    r = y - x @ w - b
    grad = -(x.T @ r) / n
    out = np.zeros_like(w)
    for j in range(len(w)):
        if w[j] == 0.0:
            out[j] = max(0.0, abs(grad[j]) - lam)
        else:
            out[j] = abs(grad[j] + math.copysign(lam, w[j]))
    return out


def r_squared(pred, truth) -> float:
    """1 - RSS/TSS; zero-variance truth yields 0 by convention."""
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    tss = float(((truth - truth.mean()) ** 2).sum())
    if tss == 0.0:
        return 0.0
    rss = float(((truth - pred) ** 2).sum())
    return 1.0 - rss / tss


@dataclass(frozen=True)
class LinearPredictor:
    """Serialized form of the fitted prediction function."""

    weights: tuple[float, ...]
    bias: float
    lam: float
    descriptor_names: tuple[str, ...]
    mins: tuple[float, ...]
    maxs: tuple[float, ...]
    target_min: float
    target_max: float
    space_hash: str

    def __post_init__(self) -> None:
        k = len(self.weights)
        if not (len(self.mins) == len(self.maxs) == len(self.descriptor_names) == k):
            raise ValueError("predictor field lengths disagree")

    def normalize_row(self, raw: list[float]) -> list[float]:
        if len(raw) != len(self.weights):
            raise ValueError("feature vector length does not match predictor")
        out = []
        for v, lo, hi in zip(raw, self.mins, self.maxs):
            out.append(0.0 if hi == lo else (v - lo) / (hi - lo))
        return out

    def predict_normalized(self, raw: list[float]) -> float:
        """Prediction in standardized target units."""
        xhat = self.normalize_row(raw)
        return float(sum(w * v for w, v in zip(self.weights, xhat)) + self.bias)

    def predict_value(self, raw: list[float]) -> float:
        """Prediction mapped back to original property units."""
        return self.destandardize(self.predict_normalized(raw))

    def standardize(self, y: float) -> float:
        if self.target_max == self.target_min:
            return 0.0
        return (y - self.target_min) / (self.target_max - self.target_min)

    def destandardize(self, y_std: float) -> float:
        return self.target_min + y_std * (self.target_max - self.target_min)

    def n_selected(self) -> int:
        return sum(1 for w in self.weights if w != 0.0)


class SpaceMismatchError(ValueError):
    """Predictor and descriptor space fingerprints disagree."""


def predict(p: LinearPredictor, raw: list[float], space_hash: str | None = None) -> float:
    if space_hash is not None and space_hash != p.space_hash:
        raise SpaceMismatchError(
            "feature vector comes from a different descriptor space"
        )
    return p.predict_normalized(raw)


def predictor_to_json(p: LinearPredictor) -> dict:
    return {
        "lambda": p.lam,
        "bias": p.bias,
        "weights": list(p.weights),
        "descriptor_names": list(p.descriptor_names),
        "min": list(p.mins),
        "max": list(p.maxs),
        "target_min": p.target_min,
        "target_max": p.target_max,
        "space_hash": p.space_hash,
    }


def predictor_from_json(doc: dict) -> LinearPredictor:
    return LinearPredictor(
        weights=tuple(float(v) for v in doc["weights"]),
        bias=float(doc["bias"]),
        lam=float(doc["lambda"]),
        descriptor_names=tuple(doc["descriptor_names"]),
        mins=tuple(float(v) for v in doc["min"]),
        maxs=tuple(float(v) for v in doc["max"]),
        target_min=float(doc["target_min"]),
        target_max=float(doc["target_max"]),
        space_hash=doc["space_hash"],
    )


def predictor_to_json_text(p: LinearPredictor) -> str:
    return json.dumps(predictor_to_json(p), indent=2, sort_keys=True)


def predictor_from_json_text(text: str) -> LinearPredictor:
    return predictor_from_json(json.loads(text))


@dataclass(frozen=True)
class CvReport:
    lam: float
    fold_r2: tuple[float, ...]
    median_r2: float
    mean_selected: float


def cross_validate(
    x: np.ndarray,
    y: np.ndarray,
    lam: float,
    executions: int = 10,
    folds: int = 5,
    seed: int = 0,
) -> CvReport:
    """Repeated random k-fold evaluation with a seeded generator."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(y)
    if n < 2 * folds:
        raise FitError(f"need at least {2 * folds} samples for {folds}-fold CV")
    rng = np.random.default_rng(seed)
    scores: list[float] = []
    selected: list[int] = []
    for _ in range(executions):
        perm = rng.permutation(n)
        parts = np.array_split(perm, folds)
        for k in range(folds):
            test_idx = parts[k]
            train_idx = np.concatenate([parts[j] for j in range(folds) if j != k])
            fit = lasso_fit(x[train_idx], y[train_idx], lam)
            pred = x[test_idx] @ fit.weights + fit.bias
            scores.append(r_squared(pred, y[test_idx]))
            selected.append(int((fit.weights != 0.0).sum()))
    return CvReport(
        lam=lam,
        fold_r2=tuple(scores),
        median_r2=float(np.median(scores)),
        mean_selected=float(np.mean(selected)),
    )
