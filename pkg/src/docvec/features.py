"""Feature selection (one-way ANOVA F) and PCA over document matrices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, DataError, LayoutError

DEFAULT_ANOVA_K = 4000
DEFAULT_PCA_N = 50


class DegreesOfFreedomError(DataError):
    """A class has too few samples for a variance estimate."""


@dataclass
class SelectionModel:
    kind: str                                  # "anova-f" | "pca"
    input_dim: int
    keep: np.ndarray | None = None             # anova-f: indices, score-descending
    projection: np.ndarray | None = None       # pca: D x n
    means: np.ndarray | None = None            # pca: column means
    explained_variance: np.ndarray | None = None  # pca: fractions, non-increasing


def _group_stats(X, y: np.ndarray):
    """Per-class sums and sums of squares without densifying sparse input."""
    classes = np.unique(y)
    if classes.shape[0] < 2:
        raise DataError("ANOVA needs at least 2 classes")
    sums, sqsums, counts = [], [], []
    for c in classes:
        idx = np.flatnonzero(y == c)
        if idx.shape[0] < 2:
            raise DegreesOfFreedomError(
                f"class {c!r} has {idx.shape[0]} sample(s); need >= 2")
        Xc = X[idx]
        if sp.issparse(Xc):
            sums.append(np.asarray(Xc.sum(axis=0)).ravel())
            sqsums.append(np.asarray(Xc.multiply(Xc).sum(axis=0)).ravel())
        else:
            Xc = np.asarray(Xc, dtype=np.float64)
            sums.append(Xc.sum(axis=0))
            sqsums.append((Xc ** 2).sum(axis=0))
        counts.append(idx.shape[0])
    return np.array(sums), np.array(sqsums), np.array(counts, dtype=np.float64)


def anova_f_scores(X, y) -> np.ndarray:
    """One-way ANOVA F statistic per feature: between-group mean square over
    within-group mean square. Zero within-group variance gives +inf when the
    groups differ, and 0 for a feature with no variance at all."""
    y = np.asarray(y)
    if X.shape[0] != y.shape[0]:
        raise DataError(f"{X.shape[0]} rows but {y.shape[0]} labels")
    sums, sqsums, counts = _group_stats(X, y)
    n_classes = counts.shape[0]
    n_total = counts.sum()
    grand = sums.sum(axis=0)
    ss_between = (sums ** 2 / counts[:, None]).sum(axis=0) - grand ** 2 / n_total
    ss_within = sqsums.sum(axis=0) - (sums ** 2 / counts[:, None]).sum(axis=0)
    msb = ss_between / (n_classes - 1)
    msw = ss_within / (n_total - n_classes)
    # float round-off can leave tiny negative sums of squares
    msb = np.maximum(msb, 0.0)
    msw = np.maximum(msw, 0.0)
    scores = np.full(X.shape[1], np.inf)
    nz = msw > 0
    scores[nz] = msb[nz] / msw[nz]
    scores[(msw == 0) & (msb == 0)] = 0.0
    return scores


def select_top_k(scores: np.ndarray, k: int = DEFAULT_ANOVA_K) -> SelectionModel:
    """Indices of the k largest scores, descending; ties by ascending index."""
    scores = np.asarray(scores, dtype=np.float64)
    D = scores.shape[0]
    if not 1 <= k <= D:
        raise ConfigError(f"k={k} out of range [1, {D}]")
    order = np.lexsort((np.arange(D), -scores))
    return SelectionModel(kind="anova-f", input_dim=D, keep=order[:k].copy())


def pca_fit(X, n: int = DEFAULT_PCA_N) -> SelectionModel:
    """Top-n principal directions of mean-centered X via SVD.

    n may not exceed min(N, D): with fewer samples than dimensions there are
    only N meaningful directions to estimate."""
    if sp.issparse(X):
        X = X.toarray()
    X = np.asarray(X, dtype=np.float64)
    N, D = X.shape
    if not 1 <= n <= min(N, D):
        raise ConfigError(f"n={n} out of range [1, min(N={N}, D={D})]")
    means = X.mean(axis=0)
    _, s, vt = np.linalg.svd(X - means, full_matrices=False)
    var = s ** 2
    total = var.sum()
    explained = var[:n] / total if total > 0 else np.zeros(n)
    return SelectionModel(kind="pca", input_dim=D, projection=vt[:n].T.copy(),
                          means=means, explained_variance=explained)


def apply(model: SelectionModel, X):
    """anova-f: column subset in selection order; pca: (X - means) @ projection."""
    if X.shape[1] != model.input_dim:
        raise LayoutError(
            f"matrix has {X.shape[1]} columns; model was fitted on {model.input_dim}")
    if model.kind == "anova-f":
        result = X[:, model.keep]
        return result.tocsr() if sp.issparse(result) else result
    if sp.issparse(X):
        X = X.toarray()
    return (np.asarray(X, dtype=np.float64) - model.means) @ model.projection
