"""Starting values for the AECM fit: column-mean imputation, restarted
Lloyd k-means on the completed data, moment estimates per cluster, and
eigen-decomposition factor loadings."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import DataError, DataMatrix
from .model import MghfaModel

__all__ = ["InitConfig", "mean_impute", "kmeans", "init_params"]

_PSI_FLOOR = 1e-10


@dataclass(frozen=True)
class InitConfig:
    kmeans_restarts: int = 10
    kmeans_max_iter: int = 100
    beta0_scale: float = 1e-3
    lambda0: float = 1.0
    omega0: float = 1.0
    seed: int | None = None

    def __post_init__(self):
        if self.omega0 <= 0.0:
            raise ValueError("omega0 must be positive")


def mean_impute(d: DataMatrix) -> DataMatrix:
    """Replace each missing cell by its column's observed mean."""
    counts = d.mask.sum(axis=0)
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        raise DataError(f"column '{d.column_names[empty[0]]}' has no observed values")
    filled = np.where(d.mask, d.values, 0.0)
    col_means = filled.sum(axis=0) / counts
    values = np.where(d.mask, d.values, col_means)
    return DataMatrix(values, np.ones_like(d.mask), d.column_names)


def _lloyd(x: np.ndarray, centroids: np.ndarray, max_iter: int) -> tuple[np.ndarray, float]:
    """One Lloyd run from given centroids; empty clusters are re-seeded at the
    currently worst-fit point."""
    n, _ = x.shape
    G = centroids.shape[0]
    labels = np.full(n, -1)
    for _ in range(max_iter):
        d2 = ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_labels = d2.argmin(axis=1)
        assigned = d2[np.arange(n), new_labels]
        for g in range(G):
            if not np.any(new_labels == g):
                far = int(np.argmax(assigned))
                centroids[g] = x[far]
                new_labels[far] = g
                assigned[far] = 0.0
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for g in range(G):
            members = labels == g
            if members.any():
                centroids[g] = x[members].mean(axis=0)
    d2 = ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    labels = d2.argmin(axis=1)
    wcss = float(d2[np.arange(n), labels].sum())
    return labels, wcss


def kmeans(d: DataMatrix, G: int, cfg: InitConfig, rng: np.random.Generator) -> np.ndarray:
    """Euclidean k-means labels; best of `kmeans_restarts` random starts by
    within-cluster sum of squares, ties broken by restart index."""
    if not d.complete:
        raise DataError("kmeans requires complete data (impute first)")
    if G < 1 or d.n < G:
        raise ValueError(f"need 1 <= G <= n, got G={G}, n={d.n}")
    x = d.values
    best = None
    for r, child in enumerate(rng.spawn(cfg.kmeans_restarts)):
        start = x[child.choice(d.n, size=G, replace=False)].copy()
        labels, wcss = _lloyd(x, start, cfg.kmeans_max_iter)
        if best is None or wcss < best[0]:
            best = (wcss, r, labels)
    return best[2]


def _cluster_sigma(xc: np.ndarray) -> np.ndarray:
    centered = xc - xc.mean(axis=0)
    return centered.T @ centered / xc.shape[0]


def init_params(d: DataMatrix, G: int, q: int, cfg: InitConfig, rng: np.random.Generator) -> MghfaModel:
    """Moment-based starting model from k-means clusters of the mean-imputed data.

    Loadings take the top-q scaled eigenvectors of each cluster scatter,
    psi the residual diagonal (floored), skewness a small constant vector,
    and the GIG parameters the configured constants.
    """
    p = d.p
    if not 1 <= q < p:
        raise ValueError(f"need 1 <= q < p, got q={q}, p={p}")
    completed = mean_impute(d)
    labels = kmeans(completed, G, cfg, rng)
    x = completed.values

    pi = np.empty(G)
    mu = np.empty((G, p))
    loadings = np.empty((G, p, q))
    psi = np.empty((G, p))
    for g in range(G):
        members = np.flatnonzero(labels == g)
        if members.size < 2:
            raise DataError(f"initial cluster {g} has fewer than 2 observations")
        xc = x[members]
        pi[g] = members.size / d.n
        mu[g] = xc.mean(axis=0)
        sigma = _cluster_sigma(xc)
        eigvals, eigvecs = np.linalg.eigh(sigma)
        if eigvals[-q] <= 0.0:
            ridge = 1e-6 * max(np.trace(sigma) / p, 1e-12)
            sigma = sigma + ridge * np.eye(p)
            eigvals, eigvecs = np.linalg.eigh(sigma)
        for j in range(q):
            val = eigvals[-1 - j]
            vec = eigvecs[:, -1 - j]
            if vec[np.argmax(np.abs(vec))] < 0.0:
                vec = -vec
            loadings[g, :, j] = np.sqrt(val) * vec
        psi[g] = np.maximum(np.diag(sigma - loadings[g] @ loadings[g].T), _PSI_FLOOR)

    beta = np.full((G, p), cfg.beta0_scale)
    lam = np.full(G, cfg.lambda0)
    omega = np.full(G, cfg.omega0)
    pi = pi / pi.sum()
    return MghfaModel(pi, lam, omega, mu, beta, loadings, psi).validate()
