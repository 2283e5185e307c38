"""Multivariate generalized hyperbolic distribution.

Density evaluation in log scale and sampling through the normal
mean-variance mixture representation X = mu + W*beta + sqrt(W)*U with a
GIG mixing variable W (unit scale, concentration omega) and Gaussian U.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .bessel import log_bessel_k
from .gig import GigParams, gig_sample

__all__ = ["GhdParams", "mahalanobis_sq", "ghd_logpdf", "ghd_sample"]

_LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class GhdParams:
    """Parameters (lam, omega, mu, sigma, beta) of a p-dimensional GHD.

    `sigma` must be symmetric positive definite; validated by attempting a
    Cholesky factorization at construction.
    """

    lam: float
    omega: float
    mu: np.ndarray
    sigma: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mu", np.atleast_1d(np.asarray(self.mu, dtype=float)))
        object.__setattr__(self, "sigma", np.atleast_2d(np.asarray(self.sigma, dtype=float)))
        object.__setattr__(self, "beta", np.atleast_1d(np.asarray(self.beta, dtype=float)))
        p = self.mu.shape[0]
        if self.sigma.shape != (p, p) or self.beta.shape != (p,):
            raise ValueError("inconsistent GHD parameter dimensions")
        if self.omega <= 0.0 or not np.isfinite(self.omega) or not np.isfinite(self.lam):
            raise ValueError("omega must be positive and lam finite")
        if not np.allclose(self.sigma, self.sigma.T, atol=1e-10):
            raise ValueError("sigma must be symmetric")
        try:
            np.linalg.cholesky(self.sigma)
        except np.linalg.LinAlgError as exc:
            raise ValueError("sigma must be positive definite") from exc

    @property
    def p(self) -> int:
        return self.mu.shape[0]


def mahalanobis_sq(x, mu, sigma):
    """Squared Mahalanobis distance (x-mu)' sigma^{-1} (x-mu) via Cholesky.

    `x` may be one vector or an (m, p) matrix of row vectors.
    """
    x = np.asarray(x, dtype=float)
    mu = np.asarray(mu, dtype=float)
    d = np.atleast_2d(x - mu)
    factor = cho_factor(np.asarray(sigma, dtype=float), lower=True)
    solved = cho_solve(factor, d.T)
    out = np.einsum("ij,ji->i", d, solved)
    return float(out[0]) if x.ndim == 1 else out


def ghd_logpdf_terms(delta, beta_quad, lin, lam, omega, p, logdet_sigma):
    """Log GHD density from precomputed quadratic forms.

    Parameters
    ----------
    delta : ndarray
        Squared Mahalanobis distances (x-mu)' sigma^{-1} (x-mu).
    beta_quad : float
        beta' sigma^{-1} beta.
    lin : ndarray
        Linear terms (x-mu)' sigma^{-1} beta, same shape as `delta`.
    lam, omega : float
        Index and concentration.
    p : int
        Dimension of the (sub)vector.
    logdet_sigma : float
        log |sigma|.
    """
    nu = lam - 0.5 * p
    ca = omega + delta
    cb = omega + beta_quad
    arg = np.sqrt(ca * cb)
    return (
        0.5 * nu * (np.log(ca) - np.log(cb))
        + log_bessel_k(nu, arg)
        - 0.5 * p * _LOG_2PI
        - 0.5 * logdet_sigma
        - log_bessel_k(lam, omega)
        + lin
    )


def ghd_logpdf(x, params: GhdParams):
    """Log density of the GHD at x (one p-vector or an (m, p) matrix of rows)."""
    x = np.asarray(x, dtype=float)
    d = np.atleast_2d(x) - params.mu
    factor = cho_factor(params.sigma, lower=True)
    solved = cho_solve(factor, d.T)  # (p, m)
    delta = np.einsum("ij,ji->i", d, solved)
    gamma = cho_solve(factor, params.beta)
    beta_quad = float(params.beta @ gamma)
    lin = d @ gamma
    logdet = 2.0 * np.sum(np.log(np.diag(factor[0])))
    out = ghd_logpdf_terms(delta, beta_quad, lin, params.lam, params.omega, params.p, logdet)
    if not np.all(np.isfinite(out)):
        bad = int(np.flatnonzero(~np.isfinite(out))[0])
        raise FloatingPointError(
            f"non-finite GHD log-density at row {bad} "
            f"(lam={params.lam}, omega={params.omega}, delta={delta[bad]:.3e})"
        )
    return float(out[0]) if x.ndim == 1 else out


def ghd_sample(params: GhdParams, rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw n rows X = mu + W*beta + sqrt(W)*U, with W ~ GIG(lam, omega, omega)
    (unit scale) independent of U ~ N(0, sigma)."""
    w = gig_sample(GigParams(params.lam, params.omega, params.omega), rng, n)
    chol = np.linalg.cholesky(params.sigma)
    u = rng.standard_normal((n, params.p)) @ chol.T
    return params.mu + np.outer(w, params.beta) + np.sqrt(w)[:, None] * u
