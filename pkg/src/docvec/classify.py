"""Binary linear SVM trained by Pegasos-style SGD, with Platt-calibrated
probabilities for soft voting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .ensemble import PROB_EPS
from .errors import ConfigError, DataError, LayoutError

DEFAULT_LAMBDA = 1e-4
DEFAULT_EPOCHS = 10


@dataclass
class LinearModel:
    weights: np.ndarray
    bias: float
    lam: float
    calibration: tuple[float, float] | None = None  # (a, b): p = sigmoid(a*m + b)
    classes: tuple = (-1, 1)                        # (negative, positive)


def _as_matrix(X):
    if sp.issparse(X):
        return X.tocsr().astype(np.float64)
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    return X


def _check_finite(X) -> None:
    data = X.data if sp.issparse(X) else X
    if not np.isfinite(data).all():
        raise DataError("feature matrix contains non-finite values")


def _sigmoid(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def hinge_objective(w: np.ndarray, b: float, lam: float, X, y_signs: np.ndarray) -> float:
    """lam/2 * ||w||^2 + mean_i max(0, 1 - y_i (w.x_i + b)); bias unregularized."""
    margins = np.asarray(X @ w).ravel() + b
    hinge = np.maximum(0.0, 1.0 - y_signs * margins)
    return 0.5 * lam * float(w @ w) + float(hinge.mean())


def hinge_subgradient(w: np.ndarray, b: float, lam: float, X, y_signs: np.ndarray):
    """Full-batch subgradient of hinge_objective wrt (w, b)."""
    X = _as_matrix(X)
    margins = np.asarray(X @ w).ravel() + b
    active = (y_signs * margins < 1.0).astype(np.float64)
    coef = -(active * y_signs) / X.shape[0]
    gw = lam * w + np.asarray(X.T @ coef).ravel()
    return gw, float(coef.sum())


def platt_calibrate(margins: np.ndarray, y01: np.ndarray,
                    max_iter: int = 100, tol: float = 1e-10) -> tuple[float, float]:
    """Fit p(y=1|m) = sigmoid(a*m + b) by Newton's method on the smoothed
    cross-entropy (targets (N+ + 1)/(N+ + 2) and 1/(N- + 2), which keep the
    optimum finite even for perfectly separated margins)."""
    margins = np.asarray(margins, dtype=np.float64)
    n_pos = int(y01.sum())
    n_neg = y01.shape[0] - n_pos
    t = np.where(y01 == 1, (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))
    a, b = 0.0, float(np.log((n_neg + 1.0) / (n_pos + 1.0)))
    for _ in range(max_iter):
        p = _sigmoid(a * margins + b)
        err = p - t
        ga = float(err @ margins)
        gb = float(err.sum())
        if max(abs(ga), abs(gb)) < tol:
            break
        w = p * (1.0 - p)
        haa = float(w @ (margins ** 2)) + 1e-12
        hab = float(w @ margins)
        hbb = float(w.sum()) + 1e-12
        det = haa * hbb - hab * hab
        if det <= 0:
            break
        a -= (hbb * ga - hab * gb) / det
        b -= (haa * gb - hab * ga) / det
    return a, b


def svm_train(X, y, lam: float = DEFAULT_LAMBDA, epochs: int = DEFAULT_EPOCHS,
              seed: int = 1, return_history: bool = False):
    """Pegasos SGD on lam/2*||w||^2 + mean hinge, step 1/(lam*t), bias
    unregularized. Deterministic for fixed inputs and seed.

    The weight vector is kept as scale * direction so the per-step decay
    (1 - 1/t) costs O(1) and margin-violation updates cost O(nnz(x)).
    """
    if lam <= 0:
        raise ConfigError("lambda must be > 0")
    if epochs < 1:
        raise ConfigError("epochs must be >= 1")
    X = _as_matrix(X)
    _check_finite(X)
    y = np.asarray(y)
    N, D = X.shape
    if y.shape[0] != N:
        raise DataError(f"{N} rows but {y.shape[0]} labels")
    classes = sorted(set(y.tolist()))
    if len(classes) != 2:
        raise DataError(f"need exactly 2 classes, got {classes!r}")
    if N < 2:
        raise DataError("need at least 2 training rows")
    signs = np.where(y == classes[1], 1.0, -1.0)

    sparse = sp.issparse(X)
    v = np.zeros(D, dtype=np.float64)
    scale = 1.0
    bias = 0.0
    t = 0
    rng = np.random.default_rng(seed)
    history: list[float] = []
    for _ in range(epochs):
        for i in rng.permutation(N):
            t += 1
            eta = 1.0 / (lam * t)
            if sparse:
                sl = slice(X.indptr[i], X.indptr[i + 1])
                idx, vals = X.indices[sl], X.data[sl]
                margin = scale * float(v[idx] @ vals) + bias
            else:
                margin = scale * float(v @ X[i]) + bias
            violated = signs[i] * margin < 1.0
            decay = 1.0 - 1.0 / t
            if decay == 0.0:
                v[:] = 0.0
                scale = 1.0
            else:
                scale *= decay
                if scale < 1e-9:
                    v *= scale
                    scale = 1.0
            if violated:
                coef = eta * signs[i] / scale
                if sparse:
                    v[idx] += coef * vals
                else:
                    v += coef * X[i]
                bias += eta * signs[i]
        if return_history:
            history.append(hinge_objective(scale * v, bias, lam, X, signs))

    w = scale * v
    margins = np.asarray(X @ w).ravel() + bias
    a, b = platt_calibrate(margins, (signs > 0).astype(np.int64))
    model = LinearModel(weights=w, bias=bias, lam=lam, calibration=(a, b),
                        classes=tuple(classes))
    return (model, history) if return_history else model


def svm_margin(model: LinearModel, x):
    """w.x + b; scalar for one row, array for a matrix."""
    single = not sp.issparse(x) and np.asarray(x).ndim == 1
    X = _as_matrix(x)
    if X.shape[1] != model.weights.shape[0]:
        raise LayoutError(
            f"input has {X.shape[1]} features; model was trained on {model.weights.shape[0]}")
    m = np.asarray(X @ model.weights).ravel() + model.bias
    return float(m[0]) if single and m.shape[0] == 1 else m


def svm_predict(model: LinearModel, x):
    """Class by margin sign; a margin of exactly 0 goes to the positive class."""
    m = svm_margin(model, x)
    if np.isscalar(m):
        return model.classes[1] if m >= 0 else model.classes[0]
    return np.where(m >= 0, model.classes[1], model.classes[0])


def svm_proba(model: LinearModel, x):
    """Calibrated probability of the positive class, in (0, 1)."""
    if model.calibration is None:
        raise ConfigError("model has no calibration; train with svm_train")
    a, b = model.calibration
    m = svm_margin(model, x)
    p = _sigmoid(a * np.asarray(m, dtype=np.float64) + b)
    p = np.clip(p, PROB_EPS, 1.0 - PROB_EPS)
    return float(p) if np.isscalar(m) else p


def save_svm_model(model: LinearModel, path) -> None:
    """Text format: header `D lambda a b bias`, then one weight per line."""
    if model.calibration is None:
        raise ConfigError("refusing to save an uncalibrated model")
    a, b = model.calibration
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{model.weights.shape[0]} {model.lam:.9g} {a:.9g} {b:.9g} "
                 f"{model.bias:.9g}\n")
        for wj in model.weights:
            fh.write(f"{wj:.9g}\n")


def load_svm_model(path, classes: tuple = (-1, 1)) -> LinearModel:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 5:
            raise DataError(f"{path}: expected header `D lambda a b bias`")
        D = int(header[0])
        lam, a, b, bias = (float(x) for x in header[1:])
        weights = np.array([float(line) for line in fh], dtype=np.float64)
    if weights.shape[0] != D:
        raise DataError(f"{path}: header declares {D} weights, found {weights.shape[0]}")
    return LinearModel(weights=weights, bias=bias, lam=lam, calibration=(a, b),
                       classes=classes)
