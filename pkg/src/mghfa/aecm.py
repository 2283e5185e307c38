"""Alternating expectation conditional maximization for mixtures of
generalized hyperbolic factor analyzers on incomplete data.

One iteration runs two cycles.  The first cycle refreshes responsibilities,
the latent-scale posterior moments (a, b, c) and the conditional moments
E1-E3 of the data vector, then updates the mixing proportions, locations,
skewness and the two GIG parameters per component.  The second cycle
refreshes the expectations with the new parameters, adds the factor-score
moments E4-E7, and updates the loadings and error variances.

Missing coordinates never enter any formula: all solves act on observed
subvectors through per-pattern gathers, with the inverse of each observed
dispersion block formed by the Woodbury identity on the low-rank-plus-
diagonal structure.  Rows are grouped by missingness pattern so the
per-pattern factorizations are shared.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import logsumexp

from .bessel import dlogk_dorder, log_bessel_k
from .data import DataMatrix
from .evaluation import awe, bic, n_free_params
from .ghd import ghd_logpdf_terms
from .initialization import InitConfig, init_params
from .model import MghfaModel

__all__ = [
    "FitError",
    "NumericError",
    "DegenerateComponentError",
    "SingularUpdateError",
    "EStepCache",
    "FitConfig",
    "FitResult",
    "observed_loglik",
    "estep_cycle1",
    "estep_cycle2",
    "cmstep_cycle1",
    "cmstep_cycle2",
    "aitken_stop",
    "gig_objective",
    "fit",
    "classify",
    "impute",
]

_LOG_2PI = np.log(2.0 * np.pi)

LAMBDA_BOUNDS = (-50.0, 50.0)
OMEGA_BOUNDS = (1e-6, 500.0)


class FitError(RuntimeError):
    """Base class for estimation failures."""


class NumericError(FitError):
    pass


class DegenerateComponentError(FitError):
    pass


class SingularUpdateError(FitError):
    pass


class _LowRankDiag:
    """Woodbury solve and log-determinant for L L' + diag(psi)."""

    def __init__(self, lam: np.ndarray, psi: np.ndarray):
        q = lam.shape[1]
        self.w = lam / psi[:, None]
        c = np.eye(q) + lam.T @ self.w
        self.cf = cho_factor(c, lower=True)
        self.psi = psi
        self.lam = lam
        self.logdet = float(np.log(psi).sum() + 2.0 * np.log(np.diag(self.cf[0])).sum())

    def solve_rows(self, v: np.ndarray) -> np.ndarray:
        """Rows of v @ (L L' + diag(psi))^{-1}; v has shape (..., p_o)."""
        t = v / self.psi
        u = t @ self.lam
        return t - cho_solve(self.cf, u.T).T @ self.w.T


@dataclass
class EStepCache:
    """Per-(row, component) conditional expectations of one E-step.

    Responsibilities `zhat`, latent-scale moments `a` (E[W|.]), `b`
    (E[1/W|.]), `c` (E[log W|.]), the data moments E1-E3 and, after the
    second-cycle E-step, the factor moments E4-E7.  `log_mix` holds the
    per-row observed-data log mixture density of the model the E-step was
    run under.
    """

    zhat: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    e3: np.ndarray
    e4: np.ndarray | None = None
    e5: np.ndarray | None = None
    e6: np.ndarray | None = None
    e7: np.ndarray | None = None
    log_mix: np.ndarray | None = None

    @property
    def loglik(self) -> float:
        return float(self.log_mix.sum())


@dataclass(frozen=True)
class FitConfig:
    G: int
    q: int
    epsilon: float = 1e-5
    max_iter: int = 1000
    min_psi: float = 1e-10
    min_component_mass: float = 2.0
    seed: int | None = None
    init: InitConfig = field(default_factory=InitConfig)
    aitken: str = "newest"

    def __post_init__(self):
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")
        if self.aitken not in ("newest", "paper"):
            raise ValueError("aitken must be 'newest' or 'paper'")


@dataclass
class FitResult:
    model: MghfaModel
    posterior: np.ndarray
    labels: np.ndarray
    imputed: DataMatrix
    loglik_trace: list
    converged: bool
    iterations: int
    bic: float
    awe: float


def _component_pattern_terms(m: MghfaModel, g: int, pat, sigma_g: np.ndarray):
    """Per-(component, pattern) solver and projection pieces."""
    obs = np.asarray(pat.observed_idx, dtype=np.intp)
    lam_o = m.loadings[g][obs]
    psi_o = m.psi[g][obs]
    solver = _LowRankDiag(lam_o, psi_o)
    mu_o = m.mu[g][obs]
    beta_o = m.beta[g][obs]
    gamma = solver.solve_rows(beta_o)
    beta_quad = float(beta_o @ gamma)
    sigma_fo = sigma_g[:, obs]
    return obs, solver, mu_o, beta_o, gamma, beta_quad, sigma_fo


def _gig_posterior(nu, chi, psi_star):
    """(log K_nu(arg), a, b, c) of GIG(nu, chi, psi_star); chi may be a vector."""
    arg = np.sqrt(chi * psi_star)
    half_log = 0.5 * (np.log(chi) - np.log(psi_star))
    k0 = log_bessel_k(nu, arg)
    a = np.exp(half_log + log_bessel_k(nu + 1.0, arg) - k0)
    b = np.exp(-half_log + log_bessel_k(nu - 1.0, arg) - k0)
    c = half_log + dlogk_dorder(nu, arg)
    return k0, a, b, c


def _estep(d: DataMatrix, m: MghfaModel, with_factors: bool) -> EStepCache:
    n, p, G, q = d.n, d.p, m.G, m.q
    logf = np.empty((n, G))
    a = np.empty((n, G))
    b = np.empty((n, G))
    c = np.empty((n, G))
    e1 = np.empty((n, G, p))
    e2 = np.empty((n, G, p))
    e3 = np.empty((n, G, p, p))
    if with_factors:
        e4 = np.empty((n, G, q))
        e5 = np.empty((n, G, q))
        e6 = np.empty((n, G, q, q))
        e7 = np.empty((n, G, q, p))

    sigmas = [m.sigma(g) for g in range(G)]
    log_k_omega = log_bessel_k(m.lam, m.omega)
    eye_q = np.eye(q)

    for pat, rows in d.pattern_groups():
        obs = np.asarray(pat.observed_idx, dtype=np.intp)
        mis = np.asarray(pat.missing_idx, dtype=np.intp)
        po = obs.size
        x_o = d.values[np.ix_(rows, obs)]
        full = pat.fully_observed
        for g in range(G):
            _, solver, mu_o, beta_o, gamma, beta_quad, sigma_fo = _component_pattern_terms(
                m, g, pat, sigmas[g]
            )
            dm = x_o - mu_o
            sd = solver.solve_rows(dm)
            delta = np.einsum("ij,ij->i", dm, sd)
            lin = dm @ gamma

            nu = m.lam[g] - 0.5 * po
            chi = m.omega[g] + delta
            psi_star = m.omega[g] + beta_quad
            k0, a_r, b_r, c_r = _gig_posterior(nu, chi, psi_star)
            logf[rows, g] = (
                0.5 * nu * (np.log(chi) - np.log(psi_star))
                + k0
                - 0.5 * po * _LOG_2PI
                - 0.5 * solver.logdet
                - log_k_omega[g]
                + lin
            )
            a[rows, g] = a_r
            b[rows, g] = b_r
            c[rows, g] = c_r

            mu_g, beta_g = m.mu[g], m.beta[g]
            if full:
                e1[rows, g] = x_o
                e2[rows, g] = b_r[:, None] * x_o
                e3[rows, g] = np.einsum("i,ij,ik->ijk", b_r, x_o, x_o)
            else:
                tm = sd - a_r[:, None] * gamma
                e1[rows, g] = mu_g + a_r[:, None] * beta_g + tm @ sigma_fo.T
                u2 = b_r[:, None] * sd - gamma
                e2[rows, g] = b_r[:, None] * mu_g + beta_g + u2 @ sigma_fo.T
                m0 = mu_g + sd @ sigma_fo.T
                m1 = beta_g - sigma_fo @ gamma
                q_sigma = sigmas[g] - solver.solve_rows(sigma_fo) @ sigma_fo.T
                e3[rows, g] = (
                    np.einsum("i,ij,ik->ijk", b_r, m0, m0)
                    + m0[:, :, None] * m1[None, None, :]
                    + m1[None, :, None] * m0[:, None, :]
                    + np.einsum("i,j,k->ijk", a_r, m1, m1)
                    + q_sigma
                )

            if with_factors:
                lam_o = solver.lam
                alpha = solver.solve_rows(lam_o.T)  # (q, p_o)
                u0 = dm @ alpha.T
                u1 = alpha @ beta_o
                e4_loc = u0 - a_r[:, None] * u1
                e5_loc = b_r[:, None] * u0 - u1
                e6_loc = (
                    eye_q
                    - alpha @ lam_o
                    + np.einsum("i,ij,ik->ijk", b_r, u0, u0)
                    + np.einsum("i,j,k->ijk", a_r, u1, u1)
                    - u0[:, :, None] * u1[None, None, :]
                    - u1[None, :, None] * u0[:, None, :]
                )
                e7_loc = np.empty((rows.size, q, p))
                e7_loc[:, :, obs] = e5_loc[:, :, None] * x_o[:, None, :]
                if mis.size:
                    e7_loc[:, :, mis] = (
                        e5_loc[:, :, None] * mu_g[mis][None, None, :]
                        + e4_loc[:, :, None] * beta_g[mis][None, None, :]
                        + np.einsum("iab,mb->iam", e6_loc, m.loadings[g][mis])
                    )
                e4[rows, g] = e4_loc
                e5[rows, g] = e5_loc
                e6[rows, g] = e6_loc
                e7[rows, g] = e7_loc

    if not np.all(np.isfinite(logf)):
        i, g = np.argwhere(~np.isfinite(logf))[0]
        raise NumericError(f"non-finite component log-density at row {i}, component {g}")

    log_weighted = logf + np.log(m.pi)
    log_mix = logsumexp(log_weighted, axis=1)
    zhat = np.exp(log_weighted - log_mix[:, None])

    cache = EStepCache(zhat=zhat, a=a, b=b, c=c, e1=e1, e2=e2, e3=e3, log_mix=log_mix)
    if with_factors:
        cache.e4, cache.e5, cache.e6, cache.e7 = e4, e5, e6, e7
    return cache


def estep_cycle1(d: DataMatrix, m: MghfaModel) -> EStepCache:
    """First-cycle E-step: responsibilities, (a, b, c) and E1-E3."""
    return _estep(d, m, with_factors=False)


def estep_cycle2(d: DataMatrix, m: MghfaModel) -> EStepCache:
    """Second-cycle E-step: everything from cycle 1 plus E4-E7."""
    return _estep(d, m, with_factors=True)


def observed_loglik(d: DataMatrix, m: MghfaModel) -> float:
    """Observed-data log-likelihood: sum_i log sum_g pi_g f(x_i^obs | component g)."""
    return _estep(d, m, with_factors=False).loglik


def gig_objective(lam, omega, abar, bbar, cbar):
    """Component objective for the index/concentration update:
    -log K_lam(omega) + (lam - 1) cbar - omega (abar + bbar) / 2."""
    return -log_bessel_k(lam, omega) + (lam - 1.0) * cbar - 0.5 * omega * (abar + bbar)


def _dq_domega(lam, omega, abar, bbar):
    k0 = log_bessel_k(lam, omega)
    dk = -0.5 * (
        np.exp(log_bessel_k(lam - 1.0, omega) - k0)
        + np.exp(log_bessel_k(lam + 1.0, omega) - k0)
    )
    return -dk - 0.5 * (abar + bbar)


def _golden_max(fn, lo, hi, iters=120):
    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - inv_phi * (hi - lo)
    x2 = lo + inv_phi * (hi - lo)
    f1, f2 = fn(x1), fn(x2)
    for _ in range(iters):
        if f1 >= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - inv_phi * (hi - lo)
            f1 = fn(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + inv_phi * (hi - lo)
            f2 = fn(x2)
        if hi - lo < 1e-12 * (1.0 + hi):
            break
    return x1 if f1 >= f2 else x2


def _update_lambda_omega(lam_prev, omega_prev, abar, bbar, cbar):
    """Fixed-point step for the index, guarded Newton step for the
    concentration; neither is allowed to decrease the component objective."""

    def q_of(lam, om):
        return gig_objective(lam, om, abar, bbar, cbar)

    q0 = q_of(lam_prev, omega_prev)
    denom = dlogk_dorder(lam_prev, omega_prev)
    lam_new = lam_prev
    if abs(denom) > 1e-12:
        cand = float(np.clip(cbar * lam_prev / denom, *LAMBDA_BOUNDS))
        if np.isfinite(cand) and q_of(cand, omega_prev) >= q0 - 1e-10 * (1.0 + abs(q0)):
            lam_new = cand

    q1 = q_of(lam_new, omega_prev)
    h = 1e-5 * max(1.0, omega_prev)
    d1 = _dq_domega(lam_new, omega_prev, abar, bbar)
    d2 = (
        _dq_domega(lam_new, omega_prev + h, abar, bbar)
        - _dq_domega(lam_new, omega_prev - h, abar, bbar)
    ) / (2.0 * h)
    omega_new = omega_prev
    ok = False
    if np.isfinite(d1) and np.isfinite(d2) and d2 < 0.0:
        cand = omega_prev - d1 / d2
        if OMEGA_BOUNDS[0] <= cand <= OMEGA_BOUNDS[1] and q_of(lam_new, cand) >= q1 - 1e-10 * (
            1.0 + abs(q1)
        ):
            omega_new = float(cand)
            ok = True
    if not ok:
        cand = _golden_max(lambda w: q_of(lam_new, w), *OMEGA_BOUNDS)
        if q_of(lam_new, cand) >= q1:
            omega_new = float(cand)
    return lam_new, float(np.clip(omega_new, *OMEGA_BOUNDS))


def cmstep_cycle1(d: DataMatrix, cache: EStepCache, m: MghfaModel,
                  min_component_mass: float = 2.0) -> MghfaModel:
    """First-cycle CM updates: mixing proportions, locations, skewness and
    the per-component GIG parameters.  Loadings and psi carry over."""
    n, G = cache.zhat.shape
    out = m.copy()
    n_g = cache.zhat.sum(axis=0)
    low = np.flatnonzero(n_g < min_component_mass)
    if low.size:
        raise DegenerateComponentError(
            f"component {low[0]} mass {n_g[low[0]]:.4f} below {min_component_mass}"
        )
    out.pi = n_g / n

    for g in range(G):
        z = cache.zhat[:, g]
        abar = float(z @ cache.a[:, g] / n_g[g])
        bbar = float(z @ cache.b[:, g] / n_g[g])
        cbar = float(z @ cache.c[:, g] / n_g[g])
        den = float(z @ (cache.b[:, g] * abar - 1.0))
        if abs(den) < 1e-12:
            raise SingularUpdateError(f"singular location/skewness update for component {g}")
        out.mu[g] = z @ (abar * cache.e2[:, g] - cache.e1[:, g]) / den
        out.beta[g] = z @ (bbar * cache.e1[:, g] - cache.e2[:, g]) / den
        out.lam[g], out.omega[g] = _update_lambda_omega(
            m.lam[g], m.omega[g], abar, bbar, cbar
        )
    return out


def cmstep_cycle2(d: DataMatrix, cache: EStepCache, m: MghfaModel,
                  min_psi: float = 1e-10) -> MghfaModel:
    """Second-cycle CM updates: factor loadings and error variances."""
    if cache.e6 is None:
        raise ValueError("cmstep_cycle2 requires a cache from estep_cycle2")
    G, q = m.G, m.q
    out = m.copy()
    n_g = cache.zhat.sum(axis=0)
    for g in range(G):
        z = cache.zhat[:, g]
        a_num = np.einsum(
            "i,iqp->pq", z, cache.e7[:, g]
        ) - np.outer(m.mu[g], z @ cache.e5[:, g]) - np.outer(m.beta[g], z @ cache.e4[:, g])
        b_mat = np.einsum("i,ijk->jk", z, cache.e6[:, g])
        try:
            lam_new = np.linalg.solve(b_mat, a_num.T).T
        except np.linalg.LinAlgError:
            ridge = 1e-8 * np.trace(b_mat) / q
            try:
                lam_new = np.linalg.solve(b_mat + ridge * np.eye(q), a_num.T).T
            except np.linalg.LinAlgError as exc:
                raise SingularUpdateError(f"singular factor-moment matrix for component {g}") from exc

        mu_g, beta_g = m.mu[g], m.beta[g]
        diag_e3 = np.einsum("ijj->ij", cache.e3[:, g])
        bracket = (
            diag_e3
            - 2.0 * cache.e2[:, g] * mu_g
            + cache.b[:, g][:, None] * mu_g**2
            - 2.0 * beta_g * (cache.e1[:, g] - mu_g)
            + cache.a[:, g][:, None] * beta_g**2
            - 2.0 * np.einsum("jk,ikj->ij", lam_new, cache.e7[:, g])
            + 2.0 * (cache.e5[:, g] @ lam_new.T) * mu_g
            + 2.0 * (cache.e4[:, g] @ lam_new.T) * beta_g
            + np.einsum("jk,ikl,jl->ij", lam_new, cache.e6[:, g], lam_new)
        )
        out.loadings[g] = lam_new
        out.psi[g] = np.maximum(z @ bracket / n_g[g], min_psi)
    return out


def aitken_stop(trace3, epsilon: float, variant: str = "newest") -> bool:
    """Aitken-accelerated stopping decision from the last three log-likelihoods.

    The asymptotic likelihood estimate is compared against the newest value
    (or, for variant='paper', the middle value); the rule fires when the gap
    is nonnegative and below epsilon.
    """
    l0, l1, l2 = (float(v) for v in trace3)
    denom = l1 - l0
    if denom == 0.0:
        return l2 - l1 < epsilon
    ratio = (l2 - l1) / denom
    if ratio == 1.0:
        return l2 - l1 < epsilon
    l_inf = l1 + (l2 - l1) / (1.0 - ratio)
    ref = l2 if variant == "newest" else l1
    return 0.0 <= l_inf - ref < epsilon


def fit(d: DataMatrix, cfg: FitConfig, initial_model: MghfaModel | None = None) -> FitResult:
    """Fit the mixture by AECM and return the converged model along with the
    posterior, MAP labels, conditional-mean imputation and selection scores."""
    G, q, p = cfg.G, cfg.q, d.p
    if d.n <= G:
        raise ValueError(f"need n > G, got n={d.n}, G={G}")
    if not 1 <= q < p or (p - q) ** 2 <= p + q:
        raise ValueError(
            f"number of factors q={q} invalid for p={p}: need 1 <= q < p and (p-q)^2 > p+q"
        )

    if initial_model is None:
        seed = cfg.init.seed if cfg.init.seed is not None else cfg.seed
        rng = np.random.default_rng(seed)
        m = init_params(d, G, q, cfg.init, rng)
    else:
        m = initial_model.validate().copy()
        if (m.G, m.p, m.q) != (G, p, q):
            raise ValueError("initial model dimensions do not match the fit configuration")

    trace: list[float] = []
    converged = False
    cache1 = None
    iterations = 0
    for k in range(cfg.max_iter + 1):
        cache1 = estep_cycle1(d, m)
        ll = cache1.loglik
        if not np.isfinite(ll):
            raise NumericError(f"non-finite log-likelihood at iteration {k}")
        trace.append(ll)
        if len(trace) >= 3 and aitken_stop(trace[-3:], cfg.epsilon, cfg.aitken):
            converged = True
            break
        if k == cfg.max_iter:
            break
        try:
            m1 = cmstep_cycle1(d, cache1, m, cfg.min_component_mass)
            cache2 = estep_cycle2(d, m1)
            m = cmstep_cycle2(d, cache2, m1, cfg.min_psi)
        except FitError as exc:
            raise type(exc)(f"iteration {k}: {exc}") from exc
        iterations = k + 1

    posterior = cache1.zhat
    labels = posterior.argmax(axis=1)
    imputed = impute(d, m, posterior, cache1)
    rho = n_free_params(G, p, q)
    bic_val = bic(trace[-1], rho, d.n)
    awe_val = awe(bic_val, posterior, rho, d.n)
    return FitResult(
        model=m,
        posterior=posterior,
        labels=labels,
        imputed=imputed,
        loglik_trace=trace,
        converged=converged,
        iterations=iterations,
        bic=bic_val,
        awe=awe_val,
    )


def classify(d: DataMatrix, m: MghfaModel):
    """Posterior membership probabilities and MAP labels under `m`.

    Ties in the posterior break toward the lowest component index.
    """
    cache = _estep(d, m, with_factors=False)
    return cache.zhat, cache.zhat.argmax(axis=1)


def impute(d: DataMatrix, m: MghfaModel, posterior: np.ndarray, cache: EStepCache) -> DataMatrix:
    """Conditional-mean imputation: each missing cell is filled with the
    posterior-weighted conditional expectation of the data vector; observed
    cells are untouched."""
    pred = np.einsum("ig,igj->ij", posterior, cache.e1)
    values = np.where(d.mask, d.values, pred)
    return DataMatrix(values, np.ones_like(d.mask), d.column_names)
