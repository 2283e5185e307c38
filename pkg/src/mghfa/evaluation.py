"""Clustering and imputation quality metrics plus model selection criteria."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .data import DataMatrix

__all__ = [
    "SelectionScore",
    "n_free_params",
    "bic",
    "awe",
    "entropy",
    "ari",
    "err",
    "imputation_mse",
    "selection_score",
]


@dataclass(frozen=True)
class SelectionScore:
    loglik: float
    n_params: int
    bic: float
    awe: float
    entropy: float


def n_free_params(G: int, p: int, q: int) -> int:
    """Free parameter count: G-1 mixing weights plus, per component, p for the
    location, p for the skewness, one index, one concentration, p*q loadings
    and p error variances."""
    if G < 1 or p < 1 or q < 1:
        raise ValueError("need G >= 1, p >= 1, q >= 1")
    return (G - 1) + G * (2 * p + 2 + p * q + p)


def bic(loglik: float, n_params: int, n: int) -> float:
    """2 * loglik - n_params * log(n)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return 2.0 * loglik - n_params * np.log(n)


def entropy(posterior: np.ndarray) -> float:
    """Classification entropy -sum z log z with 0 log 0 = 0."""
    z = np.asarray(posterior, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(z > 0.0, z * np.log(z), 0.0)
    return float(-terms.sum())


def awe(bic_value: float, posterior: np.ndarray, n_params: int, n: int) -> float:
    """bic - 2 * entropy(posterior) - n_params * (3 + log n)."""
    return bic_value - 2.0 * entropy(posterior) - n_params * (3.0 + np.log(n))


def selection_score(loglik: float, posterior: np.ndarray, G: int, p: int, q: int, n: int) -> SelectionScore:
    rho = n_free_params(G, p, q)
    b = bic(loglik, rho, n)
    return SelectionScore(
        loglik=float(loglik),
        n_params=rho,
        bic=b,
        awe=awe(b, posterior, rho, n),
        entropy=entropy(posterior),
    )


def _contingency(labels_a, labels_b):
    a = np.asarray(labels_a)
    b = np.asarray(labels_b)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("label vectors must be 1-D with equal lengths")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)
    return table


def ari(labels_a, labels_b) -> float:
    """Adjusted Rand index (Hubert-Arabie) from the contingency table."""
    table = _contingency(labels_a, labels_b)
    n = table.sum()

    def comb2(x):
        return x * (x - 1.0) / 2.0

    sum_ij = comb2(table).sum()
    sum_a = comb2(table.sum(axis=1)).sum()
    sum_b = comb2(table.sum(axis=0)).sum()
    expected = sum_a * sum_b / comb2(n)
    max_index = 0.5 * (sum_a + sum_b)
    if max_index == expected:
        return 1.0 if sum_ij == expected else 0.0
    return float((sum_ij - expected) / (max_index - expected))


def err(labels_pred, labels_true) -> float:
    """Misclassification rate minimized over assignments of predicted clusters
    to true classes (optimal assignment on the confusion matrix)."""
    table = _contingency(labels_pred, labels_true)
    if max(table.shape) > 20:
        raise ValueError("err supports at most 20 distinct labels per argument")
    rows, cols = linear_sum_assignment(table, maximize=True)
    matched = table[rows, cols].sum()
    return float(1.0 - matched / table.sum())


def imputation_mse(truth: DataMatrix, imputed: DataMatrix, mask) -> float:
    """Mean squared imputation error over the cells flagged by `mask`
    (True = cell was removed and imputed)."""
    removed = np.asarray(mask, dtype=bool)
    if truth.values.shape != imputed.values.shape or removed.shape != truth.values.shape:
        raise ValueError("truth, imputed and mask shapes must agree")
    n_star = int(removed.sum())
    if n_star == 0:
        raise ValueError("mask flags no removed cells")
    diff = truth.values[removed] - imputed.values[removed]
    return float(diff @ diff / n_star)
