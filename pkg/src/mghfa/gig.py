"""Generalized inverse Gaussian distribution.

Density, the three conditional expectations consumed by the fitting
algorithm's E-step (E[W], E[1/W], E[log W]), and a seeded sampler.  All
Bessel arithmetic goes through :mod:`mghfa.bessel` in log scale; ratios of
Bessel functions are formed as exponentials of log differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import geninvgauss

from .bessel import dlogk_dorder, log_bessel_k

__all__ = [
    "GigParams",
    "GigAltParams",
    "GigMoments",
    "gig_logpdf",
    "gig_moments",
    "gig_moments_arrays",
    "gig_sample",
]


@dataclass(frozen=True)
class GigParams:
    """Index/rate parameterization (lambda, chi, psi), chi > 0 and psi > 0."""

    lam: float
    chi: float
    psi: float

    def __post_init__(self):
        if not (np.isfinite(self.lam) and self.chi > 0.0 and self.psi > 0.0):
            raise ValueError(f"invalid GIG parameters (lam={self.lam}, chi={self.chi}, psi={self.psi})")


@dataclass(frozen=True)
class GigAltParams:
    """Scale/concentration parameterization: omega = sqrt(psi*chi), eta = sqrt(chi/psi)."""

    lam: float
    eta: float
    omega: float

    def __post_init__(self):
        if not (np.isfinite(self.lam) and self.eta > 0.0 and self.omega > 0.0):
            raise ValueError(f"invalid GIG parameters (lam={self.lam}, eta={self.eta}, omega={self.omega})")

    def to_chi_psi(self) -> GigParams:
        return GigParams(self.lam, self.omega * self.eta, self.omega / self.eta)


@dataclass(frozen=True)
class GigMoments:
    e_w: float
    e_inv_w: float
    e_log_w: float


def gig_logpdf(w, p: GigParams):
    """Log density of the GIG law at w > 0 (scalar or array)."""
    w = np.asarray(w, dtype=float)
    if np.any(w <= 0.0) or not np.all(np.isfinite(w)):
        raise ValueError("gig_logpdf requires w > 0")
    omega = np.sqrt(p.psi * p.chi)
    out = (
        0.5 * p.lam * (np.log(p.psi) - np.log(p.chi))
        + (p.lam - 1.0) * np.log(w)
        - np.log(2.0)
        - log_bessel_k(p.lam, omega)
        - 0.5 * (p.psi * w + p.chi / w)
    )
    return float(out) if out.ndim == 0 else out


def gig_moments_arrays(lam, chi, psi):
    """E[W], E[1/W], E[log W] for GIG(lam, chi, psi); arguments broadcast.

    E[1/W] is formed with the order-recurrence-equivalent ratio
    K_{lam-1}/K_lam, which is algebraically identical to the
    K_{lam+1}/K_lam form minus 2*lam/chi but cannot lose precision to
    cancellation.
    """
    lam = np.asarray(lam, dtype=float)
    chi = np.asarray(chi, dtype=float)
    psi = np.asarray(psi, dtype=float)
    omega = np.sqrt(psi * chi)
    half_log_scale = 0.5 * (np.log(chi) - np.log(psi))
    log_k = log_bessel_k(lam, omega)
    e_w = np.exp(half_log_scale + log_bessel_k(lam + 1.0, omega) - log_k)
    e_inv_w = np.exp(-half_log_scale + log_bessel_k(lam - 1.0, omega) - log_k)
    e_log_w = half_log_scale + dlogk_dorder(lam, omega)
    return e_w, e_inv_w, e_log_w


def gig_moments(p: GigParams) -> GigMoments:
    """The three expectations E[W], E[1/W], E[log W] of GIG(lam, chi, psi)."""
    e_w, e_inv_w, e_log_w = gig_moments_arrays(p.lam, p.chi, p.psi)
    return GigMoments(float(e_w), float(e_inv_w), float(e_log_w))


def gig_sample(p: GigParams, rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw n i.i.d. variates from GIG(lam, chi, psi), deterministic given `rng`.

    Delegates to scipy's generalized inverse Gaussian generator (a
    ratio-of-uniforms scheme valid over the whole parameter range) on the
    standardized law, then rescales: if Y ~ GIG(lam, omega, omega) then
    eta * Y ~ GIG(lam, chi, psi).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    eta = np.sqrt(p.chi / p.psi)
    omega = np.sqrt(p.chi * p.psi)
    return np.asarray(geninvgauss.rvs(p.lam, omega, size=n, random_state=rng)) * eta
