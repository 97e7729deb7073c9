"""Full-information maximum likelihood estimation of the bivariate growth model.

Rows are grouped by missingness pattern; each pattern contributes through
its sufficient statistics (count, mean, scatter), so one likelihood
evaluation costs O(patterns x k^3) regardless of sample size.  For pattern
``p`` with observed index set ``o`` the contribution is

    -0.5 * [ n_p k_p log 2pi + n_p log|S_o| + n_p d' S_o^-1 d + tr(S_o^-1 W_p) ]

with ``d = xbar_p - mu_o`` and ``W_p`` the scatter about the pattern mean.
This equals the row-wise sum of observed-subset normal log-densities.

The 38 free parameters sit on a raw (unconstrained) scale so Heywood cases
show up as negative variance estimates instead of being hidden by a
transform; covariance matrices that lose positive definiteness during the
search are handled by a large finite penalty.  The optimizer is L-BFGS-B
with the analytic gradient (chain rule through the implied moments), with
up to three jittered restarts before a fit is declared non-converged.
Non-convergence is a recorded outcome, not an exception.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import linalg as sla
from scipy import optimize

from .errors import InadmissibleForParam, NonConverged, RowWithoutData
from .lgm import (
    N_COLUMNS,
    N_CONSTRUCTS,
    N_INDICATORS,
    N_WAVES,
    DataMatrix,
    PopulationParams,
    column_index,
    implied_moments_raw,
    loading_matrix,
    time_matrix,
)

__all__ = [
    "N_FREE",
    "ModelSpec",
    "pack_params",
    "unpack_params",
    "population_theta",
    "theta_moments",
    "PatternData",
    "build_patterns",
    "mvn_pattern_loglik",
    "pattern_loglik",
    "loglik_and_grad",
    "data_driven_start",
    "is_admissible",
    "FitResult",
    "fit",
    "extract_param",
    "available_params",
    "population_value",
]

# Parameter vector layout (fixed, documented order):
#   [0:4]   growth factor means (I_1, S_1, I_2, S_2)
#   [4:14]  growth covariance, lower triangle row-major
#   [14:24] wave residual variances (c1w1..c1w5, c2w1..c2w5)
#   [24:28] free loadings (c1y2, c1y3, c2y2, c2y3)
#   [28:32] free indicator intercepts (same order)
#   [32:38] indicator residual variances (c1y1..c1y3, c2y1..c2y3)
N_FREE = 38
_ALPHA = slice(0, 4)
_PSI = slice(4, 14)
_ZETA = slice(14, 24)
_LAMBDA = slice(24, 28)
_NU = slice(28, 32)
_EPS = slice(32, 38)

_TRIL_R, _TRIL_C = np.tril_indices(4)
_FREE_INDICATORS = ((0, 1), (0, 2), (1, 1), (1, 2))
_ALL_INDICATORS = tuple((c, k) for c in range(N_CONSTRUCTS) for k in range(N_INDICATORS))

# Penalty returned when an implied covariance (or a pattern subset of it)
# has no Cholesky factor: large, finite, and far below any real data loglik.
_PENALTY = 1e12

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class ModelSpec:
    """Structural constants of the fitted model (everything not estimated)."""

    time_scores: tuple[float, ...] = (0.0, 1.0, 2.0, 3.0, 4.0)

    def __post_init__(self) -> None:
        ts = tuple(float(t) for t in self.time_scores)
        if len(ts) != N_WAVES:
            raise ValueError(f"time_scores must have length {N_WAVES}")
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("time_scores must be strictly increasing")
        object.__setattr__(self, "time_scores", ts)

    @property
    def n_free(self) -> int:
        return N_FREE


def pack_params(
    growth_means: np.ndarray,
    growth_cov: np.ndarray,
    wave_residual_var: np.ndarray,
    loadings: np.ndarray,
    indicator_intercepts: np.ndarray,
    indicator_residual_var: np.ndarray,
) -> np.ndarray:
    """Pack model arrays into the 38-vector (marker entries are dropped)."""
    theta = np.empty(N_FREE)
    theta[_ALPHA] = np.asarray(growth_means, dtype=float)
    theta[_PSI] = np.asarray(growth_cov, dtype=float)[_TRIL_R, _TRIL_C]
    theta[_ZETA] = np.asarray(wave_residual_var, dtype=float).ravel()
    lam = np.asarray(loadings, dtype=float)
    nu = np.asarray(indicator_intercepts, dtype=float)
    theta[_LAMBDA] = [lam[c, k] for c, k in _FREE_INDICATORS]
    theta[_NU] = [nu[c, k] for c, k in _FREE_INDICATORS]
    theta[_EPS] = np.asarray(indicator_residual_var, dtype=float).ravel()
    return theta


def unpack_params(
    theta: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Expand the 38-vector back into model arrays, restoring marker entries."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (N_FREE,):
        raise ValueError(f"theta must have shape ({N_FREE},), got {theta.shape}")
    alpha = theta[_ALPHA].copy()
    psi = np.zeros((4, 4))
    psi[_TRIL_R, _TRIL_C] = theta[_PSI]
    psi = psi + psi.T - np.diag(np.diag(psi))
    zeta = theta[_ZETA].reshape(N_CONSTRUCTS, N_WAVES).copy()
    lam = np.ones((N_CONSTRUCTS, N_INDICATORS))
    nu = np.zeros((N_CONSTRUCTS, N_INDICATORS))
    for i, (c, k) in enumerate(_FREE_INDICATORS):
        lam[c, k] = theta[_LAMBDA][i]
        nu[c, k] = theta[_NU][i]
    eps = theta[_EPS].reshape(N_CONSTRUCTS, N_INDICATORS).copy()
    return alpha, psi, zeta, lam, nu, eps


def population_theta(params: PopulationParams) -> np.ndarray:
    """The 38-vector corresponding to a population (the truth for recovery tests)."""
    return pack_params(
        params.growth_means,
        params.growth_cov,
        params.wave_residual_var,
        params.loadings,
        params.indicator_intercepts,
        params.indicator_residual_var,
    )


def theta_moments(
    theta: np.ndarray, spec: ModelSpec
) -> tuple[np.ndarray, np.ndarray]:
    """Implied (mu, sigma) for a free-parameter vector, no validity checks."""
    alpha, psi, zeta, lam, nu, eps = unpack_params(theta)
    return implied_moments_raw(
        alpha, psi, np.asarray(spec.time_scores), zeta, lam, nu, eps
    )


# ---------------------------------------------------------------------------
# Pattern grouping and the generic pattern-wise normal likelihood.
# The engine is width-agnostic; the model-specific entry points below bind
# it to the 30-column growth structure.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PatternData:
    """Sufficient statistics of one missingness pattern."""

    indices: np.ndarray  # observed column indices, sorted
    n: int  # rows sharing the pattern
    mean: np.ndarray  # (k,) sample mean over those rows
    scatter: np.ndarray  # (k, k) scatter about the pattern mean

    @property
    def n_observed(self) -> int:
        return int(self.indices.size)


def build_patterns(values: np.ndarray, mask: np.ndarray) -> list[PatternData]:
    """Group rows by identical mask rows and reduce to sufficient statistics.

    Raises
    ------
    RowWithoutData
        If any row has no observed cells at all.
    """
    values = np.asarray(values, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    if values.ndim != 2 or mask.shape != values.shape:
        raise ValueError("values and mask must be matching 2-d arrays")
    empty = np.flatnonzero(~mask.any(axis=1))
    if empty.size:
        raise RowWithoutData(f"row {empty[0]} has no observed cells")
    unique_rows, inverse = np.unique(mask, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)
    patterns = []
    for p in range(unique_rows.shape[0]):
        obs = np.flatnonzero(unique_rows[p])
        rows = np.flatnonzero(inverse == p)
        x = values[np.ix_(rows, obs)]
        mean = x.mean(axis=0)
        centered = x - mean
        patterns.append(
            PatternData(
                indices=obs,
                n=int(rows.size),
                mean=mean,
                scatter=centered.T @ centered,
            )
        )
    return patterns


def _pattern_terms(
    mu: np.ndarray, sigma: np.ndarray, pattern: PatternData
) -> tuple[float, np.ndarray, np.ndarray] | None:
    """Loglik contribution and moment-space gradients for one pattern.

    Returns None when the subset covariance has no Cholesky factor.
    """
    idx = pattern.indices
    sub_sigma = sigma[np.ix_(idx, idx)]
    try:
        cf = sla.cho_factor(sub_sigma, lower=True, check_finite=False)
    except (sla.LinAlgError, ValueError):
        return None
    logdet = 2.0 * np.sum(np.log(np.diag(cf[0])))
    d = pattern.mean - mu[idx]
    sinv_d = sla.cho_solve(cf, d, check_finite=False)
    sinv_w = sla.cho_solve(cf, pattern.scatter, check_finite=False)
    n = pattern.n
    ll = -0.5 * (
        n * pattern.n_observed * _LOG_2PI
        + n * logdet
        + n * float(d @ sinv_d)
        + float(np.trace(sinv_w))
    )
    sinv = sla.cho_solve(cf, np.eye(idx.size), check_finite=False)
    g_mu = n * sinv_d
    # d loglik / d sigma_o = 0.5 * Sinv (n d d' + W - n Sigma_o) Sinv
    g_sigma = 0.5 * (
        n * np.outer(sinv_d, sinv_d)
        + sla.cho_solve(cf, sinv_w.T, check_finite=False)
        - n * sinv
    )
    return ll, g_mu, g_sigma


def mvn_pattern_loglik(
    mu: np.ndarray, sigma: np.ndarray, patterns: Sequence[PatternData]
) -> float:
    """Pattern-wise normal log-likelihood for arbitrary (mu, sigma).

    Returns the penalty value ``-1e12`` when any observed-subset covariance
    is not positive definite.
    """
    total = 0.0
    for pattern in patterns:
        terms = _pattern_terms(np.asarray(mu, float), np.asarray(sigma, float), pattern)
        if terms is None:
            return -_PENALTY
        total += terms[0]
    return total


def _moment_grads(
    mu: np.ndarray, sigma: np.ndarray, patterns: Sequence[PatternData], dim: int
) -> tuple[float, np.ndarray, np.ndarray] | None:
    total = 0.0
    g_mu = np.zeros(dim)
    g_sigma = np.zeros((dim, dim))
    for pattern in patterns:
        terms = _pattern_terms(mu, sigma, pattern)
        if terms is None:
            return None
        ll, gm, gs = terms
        total += ll
        idx = pattern.indices
        g_mu[idx] += gm
        g_sigma[np.ix_(idx, idx)] += gs
    return total, g_mu, g_sigma


def pattern_loglik(theta: np.ndarray, data: DataMatrix, spec: ModelSpec | None = None) -> float:
    """Log-likelihood of the growth model at ``theta`` on possibly-masked data."""
    spec = spec or ModelSpec()
    mu, sigma = theta_moments(theta, spec)
    return mvn_pattern_loglik(mu, sigma, build_patterns(data.values, data.mask))


def loglik_and_grad(
    theta: np.ndarray, patterns: Sequence[PatternData], spec: ModelSpec
) -> tuple[float, np.ndarray]:
    """Log-likelihood and its analytic gradient over the 38 free parameters.

    At penalty points (non-PD implied covariance) the gradient is zero; the
    optimizer treats the point as a plateau wall and backtracks.
    """
    alpha, psi, zeta, lam, nu, eps = unpack_params(theta)
    ts = np.asarray(spec.time_scores)
    mu, sigma = implied_moments_raw(alpha, psi, ts, zeta, lam, nu, eps)
    acc = _moment_grads(mu, sigma, patterns, N_COLUMNS)
    if acc is None:
        return -_PENALTY, np.zeros(N_FREE)
    ll, g_mu, g_sigma = acc

    lam_mat = loading_matrix(lam)  # (30, 10)
    tm = time_matrix(ts)  # (10, 4)
    a_mat = lam_mat @ tm  # (30, 4)
    grad = np.empty(N_FREE)

    grad[_ALPHA] = a_mat.T @ g_mu
    b_mat = a_mat.T @ g_sigma @ a_mat  # (4, 4), symmetric
    tri = b_mat[_TRIL_R, _TRIL_C].copy()
    tri[_TRIL_R != _TRIL_C] *= 2.0  # off-diagonal entries parameterize two cells
    grad[_PSI] = tri
    g_omega = lam_mat.T @ g_sigma @ lam_mat  # (10, 10)
    grad[_ZETA] = np.diag(g_omega)

    omega = tm @ psi @ tm.T + np.diag(zeta.ravel())
    eta_mean = tm @ alpha
    gl = g_sigma @ lam_mat @ omega  # (30, 10)
    for i, (c, k) in enumerate(_FREE_INDICATORS):
        rows = [column_index(c, t, k) for t in range(N_WAVES)]
        etas = [c * N_WAVES + t for t in range(N_WAVES)]
        grad[_LAMBDA.start + i] = sum(
            2.0 * gl[r, m] + g_mu[r] * eta_mean[m] for r, m in zip(rows, etas)
        )
        grad[_NU.start + i] = sum(g_mu[r] for r in rows)
    for i, (c, k) in enumerate(_ALL_INDICATORS):
        rows = [column_index(c, t, k) for t in range(N_WAVES)]
        grad[_EPS.start + i] = sum(g_sigma[r, r] for r in rows)
    return ll, grad


# ---------------------------------------------------------------------------
# Starting values, admissibility, and the fit driver.
# ---------------------------------------------------------------------------


def _masked_column_stats(
    values: np.ndarray, mask: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    counts = mask.sum(axis=0)
    safe = np.maximum(counts, 1)
    means = np.where(mask, values, 0.0).sum(axis=0) / safe
    centered = np.where(mask, values - means, 0.0)
    variances = (centered**2).sum(axis=0) / np.maximum(counts - 1, 1)
    variances = np.where(counts >= 2, variances, 1.0)
    return means, variances


def data_driven_start(data: DataMatrix, spec: ModelSpec | None = None) -> np.ndarray:
    """Heuristic starting values from observed column moments.

    Marker-column means are regressed on the time scores for the growth
    means; marker variances are partitioned by a default reliability split
    (60% intercept factor, 20% wave residual, 20% indicator residual);
    loadings start at observed-SD ratios against the marker and growth
    covariances start at zero.
    """
    spec = spec or ModelSpec()
    col_mean, col_var = _masked_column_stats(data.values, data.mask)
    ts = np.asarray(spec.time_scores)
    design = np.column_stack([np.ones(N_WAVES), ts])

    alpha = np.zeros(4)
    psi = np.zeros((4, 4))
    zeta = np.zeros((N_CONSTRUCTS, N_WAVES))
    lam = np.ones((N_CONSTRUCTS, N_INDICATORS))
    nu = np.zeros((N_CONSTRUCTS, N_INDICATORS))
    eps = np.zeros((N_CONSTRUCTS, N_INDICATORS))

    for c in range(N_CONSTRUCTS):
        marker_cols = [column_index(c, t, 0) for t in range(N_WAVES)]
        marker_means = col_mean[marker_cols]
        marker_vars = col_var[marker_cols]
        coef, *_ = np.linalg.lstsq(design, marker_means, rcond=None)
        alpha[2 * c], alpha[2 * c + 1] = coef
        v0 = max(float(marker_vars[0]), 1e-3)
        psi[2 * c, 2 * c] = 0.6 * v0
        spread = (float(marker_vars[-1]) - v0) / max(float(ts[-1]) ** 2, 1.0)
        psi[2 * c + 1, 2 * c + 1] = max(spread, 0.05 * v0)
        zeta[c] = 0.2 * np.maximum(marker_vars, 1e-3)
        for k in range(N_INDICATORS):
            cols = [column_index(c, t, k) for t in range(N_WAVES)]
            mean_var = max(float(col_var[cols].mean()), 1e-3)
            eps[c, k] = 0.2 * mean_var
            if k > 0:
                lam[c, k] = math.sqrt(mean_var / max(float(marker_vars.mean()), 1e-3))
                nu[c, k] = float(
                    np.mean(col_mean[cols] - lam[c, k] * marker_means)
                )
    return pack_params(alpha, psi, zeta, lam, nu, eps)


def is_admissible(theta: np.ndarray, spec: ModelSpec | None = None) -> bool:
    """Admissibility: variances >= 0, growth correlations in [-1, 1], sigma PD."""
    spec = spec or ModelSpec()
    _, psi, zeta, _, _, eps = unpack_params(theta)
    diag = np.diag(psi)
    if np.any(diag < 0.0) or np.any(zeta < 0.0) or np.any(eps < 0.0):
        return False
    for j in range(4):
        for k in range(j):
            bound = diag[j] * diag[k]
            if psi[j, k] ** 2 > bound * (1.0 + 1e-12):
                return False
    _, sigma = theta_moments(theta, spec)
    try:
        np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        return False
    return True


@dataclass(frozen=True)
class FitResult:
    """Outcome of one FIML fit; non-convergence is data, not an error."""

    theta_hat: np.ndarray
    loglik: float
    converged: bool
    admissible: bool
    n_iterations: int
    n_restarts: int
    gradient_norm: float


def _jitter_start(theta: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Perturb a start: shrink covariances, scale variances, nudge the rest."""
    out = theta.copy()
    out[_ALPHA] += rng.normal(0.0, 0.1, 4) * (1.0 + np.abs(out[_ALPHA]))
    off = _TRIL_R != _TRIL_C
    psi_part = out[_PSI]
    psi_part[off] *= rng.uniform(0.3, 0.9, off.sum())
    psi_part[~off] *= rng.uniform(0.6, 1.6, (~off).sum())
    out[_PSI] = psi_part
    for sl in (_ZETA, _EPS):
        out[sl] = np.abs(out[sl]) * rng.uniform(0.5, 1.5, sl.stop - sl.start) + 1e-3
    out[_LAMBDA] += rng.normal(0.0, 0.1, 4)
    out[_NU] += rng.normal(0.0, 0.1, 4)
    return out


def _restart_point(
    theta0: np.ndarray,
    incumbent: np.ndarray | None,
    attempt: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Escalating restart schedule.

    The first restart barely perturbs the best point found so far: on badly
    conditioned surfaces L-BFGS often stalls against its iteration budget
    with the optimum essentially reached, and a fresh Hessian memory from
    the incumbent finishes the job.  Later restarts jitter harder to escape
    a genuinely wrong basin, falling back to the original start last.
    """
    if incumbent is not None and attempt == 1:
        # Multiplicative so the nudge stays proportionate even for variance
        # components orders of magnitude smaller than the rest.
        return incumbent * np.exp(rng.normal(0.0, 0.005, incumbent.shape))
    if incumbent is not None and attempt == 2:
        return _jitter_start(incumbent, rng)
    return _jitter_start(theta0, rng)


def fit(
    data: DataMatrix,
    spec: ModelSpec | None = None,
    start: np.ndarray | None = None,
    rng: np.random.Generator | None = None,
    max_restarts: int = 3,
) -> FitResult:
    """Maximize the pattern-wise log-likelihood; never raises on failure.

    Convergence follows the optimizer: projected-gradient max-norm below
    1e-5 or relative loglik change below 1e-9 within 500 iterations.  On
    failure the start is jittered (seeded by ``rng``) up to ``max_restarts``
    times; the best attempt is reported with ``converged=False`` if none
    succeeds.  Admissibility is always evaluated on the returned theta_hat.
    """
    spec = spec or ModelSpec()
    rng = rng if rng is not None else np.random.default_rng(0)
    if data.n_rows < N_FREE:
        warnings.warn(
            f"n={data.n_rows} is below the {N_FREE} free parameters; "
            "the information matrix may be rank deficient",
            stacklevel=2,
        )
    patterns = build_patterns(data.values, data.mask)
    theta0 = (
        np.asarray(start, dtype=float) if start is not None else data_driven_start(data, spec)
    )
    if theta0.shape != (N_FREE,) or not np.all(np.isfinite(theta0)):
        raise ValueError(f"start must be a finite ({N_FREE},) vector")

    def objective(theta: np.ndarray) -> tuple[float, np.ndarray]:
        ll, grad = loglik_and_grad(theta, patterns, spec)
        return -ll, -grad

    best: optimize.OptimizeResult | None = None
    restarts_used = 0
    for attempt in range(max_restarts + 1):
        restarts_used = attempt
        if attempt == 0:
            x0 = theta0
        else:
            incumbent = best.x if best is not None and best.fun < 0.5 * _PENALTY else None
            x0 = _restart_point(theta0, incumbent, attempt, rng)
        res = optimize.minimize(
            objective,
            x0,
            method="L-BFGS-B",
            jac=True,
            options={"maxiter": 500, "ftol": 1e-9, "gtol": 1e-5},
        )
        res_ok = bool(res.success) and np.isfinite(res.fun) and res.fun < 0.5 * _PENALTY
        if res_ok:
            best = res
            break
        if best is None or res.fun < best.fun:
            best = res
    assert best is not None
    converged = bool(best.success) and np.isfinite(best.fun) and best.fun < 0.5 * _PENALTY
    theta_hat = np.asarray(best.x, dtype=float)
    return FitResult(
        theta_hat=theta_hat,
        loglik=float(-best.fun),
        converged=converged,
        admissible=is_admissible(theta_hat, spec),
        n_iterations=int(best.nit),
        n_restarts=restarts_used,
        gradient_norm=float(np.max(np.abs(best.jac))),
    )


def _slope_slope_corr(theta: np.ndarray) -> float:
    _, psi, *_ = unpack_params(theta)
    v1, v2 = psi[1, 1], psi[3, 3]
    if v1 <= 0.0 or v2 <= 0.0:
        raise InadmissibleForParam(
            f"slope variances must be positive, got {v1:g} and {v2:g}"
        )
    return float(psi[1, 3] / math.sqrt(v1 * v2))


_EXTRACTORS: dict[str, Callable[[np.ndarray], float]] = {
    "slope_slope_corr": _slope_slope_corr,
    "slope_slope_cov": lambda theta: float(unpack_params(theta)[1][1, 3]),
    "intercept_mean_c1": lambda theta: float(theta[0]),
    "slope_mean_c1": lambda theta: float(theta[1]),
    "intercept_mean_c2": lambda theta: float(theta[2]),
    "slope_mean_c2": lambda theta: float(theta[3]),
}


def available_params() -> tuple[str, ...]:
    """Names accepted by extract_param and population_value."""
    return tuple(sorted(_EXTRACTORS))


def population_value(params: PopulationParams, name: str) -> float:
    """True value of an extractable parameter under a population."""
    if name not in _EXTRACTORS:
        raise ValueError(
            f"unknown parameter {name!r}; available: {sorted(_EXTRACTORS)}"
        )
    return _EXTRACTORS[name](population_theta(params))


def extract_param(fit_result: FitResult, name: str) -> float:
    """Pull a derived scalar out of a converged fit.

    Raises
    ------
    NonConverged
        If the fit did not converge (its theta_hat is not an estimate).
    InadmissibleForParam
        For "slope_slope_corr" when either slope variance is <= 0.
    """
    if name not in _EXTRACTORS:
        raise ValueError(
            f"unknown parameter {name!r}; available: {sorted(_EXTRACTORS)}"
        )
    if not fit_result.converged:
        raise NonConverged("cannot extract a parameter from a non-converged fit")
    return _EXTRACTORS[name](fit_result.theta_hat)
