"""Bivariate second-order latent growth model: implied moments and data generation.

The model has two constructs, each measured by three indicators at five
waves (30 observed columns total).  Per construct ``c`` the wave-level
latent state is a linear trajectory

    eta[c, t] = I_c + time_scores[t] * S_c + zeta[c, t]

driven by an intercept factor ``I_c`` and a slope factor ``S_c``; the four
growth factors (I_1, S_1, I_2, S_2) share a full mean vector and covariance
matrix, whose (S_1, S_2) entry carries the slope-slope correlation that the
simulation study tracks.  Indicators are

    y[c, t, k] = intercept[c, k] + loading[c, k] * eta[c, t] + eps[c, t, k]

with loadings, intercepts, and residual variances constant across waves.
Identification uses marker-variable scaling: the first loading per construct
is fixed at 1 and the first indicator intercept at 0.

Column ordering contract (shared by masks, estimates, and CSV output):
construct-major, wave-minor, indicator-innermost, i.e. column
``c * 15 + t * 3 + k`` holds indicator ``k`` of construct ``c`` at wave
``t`` and is named ``c{c+1}_w{t+1}_y{k+1}``.

Default population values are artifact-chosen placeholders, not taken from
any published study; every one of them can be overridden through the run
configuration.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NotPositiveDefinite

__all__ = [
    "N_CONSTRUCTS",
    "N_WAVES",
    "N_INDICATORS",
    "N_COLUMNS",
    "column_index",
    "column_names",
    "wave_columns",
    "PopulationParams",
    "default_population",
    "ModelMoments",
    "build_moments",
    "DataMatrix",
    "generate_dataset",
]

N_CONSTRUCTS = 2
N_WAVES = 5
N_INDICATORS = 3
N_COLUMNS = N_CONSTRUCTS * N_WAVES * N_INDICATORS  # 30

# Growth factor order everywhere: (I_1, S_1, I_2, S_2).
SLOPE_INDICES = (1, 3)

_PSD_TOL = 1e-8


def column_index(construct: int, wave: int, indicator: int) -> int:
    """Flat column index for (construct, wave, indicator), all 0-based."""
    return construct * N_WAVES * N_INDICATORS + wave * N_INDICATORS + indicator


def column_names() -> tuple[str, ...]:
    return tuple(
        f"c{c + 1}_w{t + 1}_y{k + 1}"
        for c in range(N_CONSTRUCTS)
        for t in range(N_WAVES)
        for k in range(N_INDICATORS)
    )


def wave_columns(wave: int) -> tuple[int, ...]:
    """All columns (both constructs, all indicators) measured at one wave."""
    return tuple(
        column_index(c, wave, k)
        for c in range(N_CONSTRUCTS)
        for k in range(N_INDICATORS)
    )


@dataclass(frozen=True)
class PopulationParams:
    """Complete generating parameters for the bivariate growth model.

    Attributes
    ----------
    growth_means : (4,) means of (I_1, S_1, I_2, S_2).
    growth_cov : (4, 4) covariance of the growth factors; must be symmetric
        and positive definite.
    time_scores : (5,) strictly increasing slope loadings, default 0..4.
    wave_residual_var : (2, 5) latent disturbance variance per construct-wave.
    loadings : (2, 3) indicator loadings; column 0 fixed at 1.
    indicator_intercepts : (2, 3) indicator intercepts; column 0 fixed at 0.
    indicator_residual_var : (2, 3) indicator residual variances.
    """

    growth_means: np.ndarray
    growth_cov: np.ndarray
    time_scores: np.ndarray
    wave_residual_var: np.ndarray
    loadings: np.ndarray
    indicator_intercepts: np.ndarray
    indicator_residual_var: np.ndarray

    def __post_init__(self) -> None:
        conv = {
            "growth_means": (np.asarray(self.growth_means, dtype=float), (4,)),
            "growth_cov": (np.asarray(self.growth_cov, dtype=float), (4, 4)),
            "time_scores": (np.asarray(self.time_scores, dtype=float), (N_WAVES,)),
            "wave_residual_var": (
                np.asarray(self.wave_residual_var, dtype=float),
                (N_CONSTRUCTS, N_WAVES),
            ),
            "loadings": (
                np.asarray(self.loadings, dtype=float),
                (N_CONSTRUCTS, N_INDICATORS),
            ),
            "indicator_intercepts": (
                np.asarray(self.indicator_intercepts, dtype=float),
                (N_CONSTRUCTS, N_INDICATORS),
            ),
            "indicator_residual_var": (
                np.asarray(self.indicator_residual_var, dtype=float),
                (N_CONSTRUCTS, N_INDICATORS),
            ),
        }
        for name, (arr, shape) in conv.items():
            if arr.shape != shape:
                raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")
            object.__setattr__(self, name, arr)
        cov = self.growth_cov
        if not np.allclose(cov, cov.T, atol=1e-12):
            raise ValueError("growth_cov must be symmetric")
        if np.min(np.linalg.eigvalsh(cov)) < -_PSD_TOL:
            raise NotPositiveDefinite("growth_cov is not positive semidefinite")
        if np.any(np.diff(self.time_scores) <= 0):
            raise ValueError("time_scores must be strictly increasing")
        if np.any(self.wave_residual_var < 0) or np.any(self.indicator_residual_var < 0):
            raise ValueError("residual variances must be non-negative")
        if not np.allclose(self.loadings[:, 0], 1.0):
            raise ValueError("first loading per construct must be fixed at 1")
        if not np.allclose(self.indicator_intercepts[:, 0], 0.0):
            raise ValueError("first indicator intercept per construct must be fixed at 0")

    @property
    def slope_slope_corr(self) -> float:
        i, j = SLOPE_INDICES
        denom = np.sqrt(self.growth_cov[i, i] * self.growth_cov[j, j])
        return float(self.growth_cov[i, j] / denom)


def default_population(
    slope_slope_corr: float = 0.3,
    *,
    intercept_mean: float = 1.0,
    slope_mean: float = 0.2,
    intercept_var: float = 1.0,
    slope_var: float = 0.25,
    intercept_slope_corr: float = 0.2,
    cross_intercept_corr: float = 0.3,
    cross_intercept_slope_corr: float = 0.2,
    wave_residual_var: float = 0.25,
    loadings: Sequence[float] = (1.0, 0.9, 0.8),
    indicator_intercepts: Sequence[float] = (0.0, 0.15, -0.1),
    indicator_reliability: float = 0.8,
    indicator_residual_var: Sequence[float] | None = None,
    time_scores: Sequence[float] = (0.0, 1.0, 2.0, 3.0, 4.0),
) -> PopulationParams:
    """Build a population with the requested slope-slope correlation.

    The scalar knobs apply symmetrically to both constructs.  When
    ``indicator_residual_var`` is omitted, residual variances are chosen so
    each indicator has roughly ``indicator_reliability`` at the first wave
    (reliability drifts upward at later waves as the latent variance grows).
    """
    if not -1.0 < slope_slope_corr < 1.0:
        raise ValueError(f"slope_slope_corr must be in (-1, 1), got {slope_slope_corr}")
    corr = np.array(
        [
            [1.0, intercept_slope_corr, cross_intercept_corr, cross_intercept_slope_corr],
            [intercept_slope_corr, 1.0, cross_intercept_slope_corr, slope_slope_corr],
            [cross_intercept_corr, cross_intercept_slope_corr, 1.0, intercept_slope_corr],
            [cross_intercept_slope_corr, slope_slope_corr, intercept_slope_corr, 1.0],
        ]
    )
    sd = np.sqrt(np.array([intercept_var, slope_var, intercept_var, slope_var]))
    growth_cov = corr * np.outer(sd, sd)

    lam = np.asarray(loadings, dtype=float)
    if indicator_residual_var is None:
        t0 = float(time_scores[0])
        eta_var_w1 = (
            intercept_var
            + t0 * t0 * slope_var
            + 2.0 * t0 * intercept_slope_corr * sd[0] * sd[1]
            + wave_residual_var
        )
        noise_ratio = (1.0 - indicator_reliability) / indicator_reliability
        resid = lam * lam * eta_var_w1 * noise_ratio
    else:
        resid = np.asarray(indicator_residual_var, dtype=float)

    return PopulationParams(
        growth_means=np.array([intercept_mean, slope_mean, intercept_mean, slope_mean]),
        growth_cov=growth_cov,
        time_scores=np.asarray(time_scores, dtype=float),
        wave_residual_var=np.full((N_CONSTRUCTS, N_WAVES), wave_residual_var, dtype=float),
        loadings=np.tile(lam, (N_CONSTRUCTS, 1)),
        indicator_intercepts=np.tile(
            np.asarray(indicator_intercepts, dtype=float), (N_CONSTRUCTS, 1)
        ),
        indicator_residual_var=np.tile(resid, (N_CONSTRUCTS, 1)),
    )


# ---------------------------------------------------------------------------
# Implied moments.  The matrix builders below are shared with the estimator,
# which re-parameterizes the same structure over raw free parameters.
# ---------------------------------------------------------------------------


def loading_matrix(loadings: np.ndarray) -> np.ndarray:
    """(30, 10) indicator-on-wave-factor loading matrix."""
    lam = np.zeros((N_COLUMNS, N_CONSTRUCTS * N_WAVES))
    for c in range(N_CONSTRUCTS):
        for t in range(N_WAVES):
            eta = c * N_WAVES + t
            for k in range(N_INDICATORS):
                lam[column_index(c, t, k), eta] = loadings[c, k]
    return lam


def time_matrix(time_scores: np.ndarray) -> np.ndarray:
    """(10, 4) wave-factor-on-growth-factor design matrix."""
    tm = np.zeros((N_CONSTRUCTS * N_WAVES, 4))
    for c in range(N_CONSTRUCTS):
        for t in range(N_WAVES):
            tm[c * N_WAVES + t, 2 * c] = 1.0
            tm[c * N_WAVES + t, 2 * c + 1] = time_scores[t]
    return tm


def tiled_intercepts(intercepts: np.ndarray) -> np.ndarray:
    """(30,) indicator intercepts repeated across waves."""
    out = np.empty(N_COLUMNS)
    for c in range(N_CONSTRUCTS):
        for t in range(N_WAVES):
            for k in range(N_INDICATORS):
                out[column_index(c, t, k)] = intercepts[c, k]
    return out


def tiled_indicator_resid(resid: np.ndarray) -> np.ndarray:
    """(30,) indicator residual variances repeated across waves."""
    out = np.empty(N_COLUMNS)
    for c in range(N_CONSTRUCTS):
        for t in range(N_WAVES):
            for k in range(N_INDICATORS):
                out[column_index(c, t, k)] = resid[c, k]
    return out


def implied_moments_raw(
    growth_means: np.ndarray,
    growth_cov: np.ndarray,
    time_scores: np.ndarray,
    wave_residual_var: np.ndarray,
    loadings: np.ndarray,
    indicator_intercepts: np.ndarray,
    indicator_residual_var: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Model-implied (mu, sigma) with no validity checks.

    Used both for population moments and inside the estimator, where
    intermediate parameter values may be inadmissible on purpose.
    """
    lam = loading_matrix(loadings)
    tm = time_matrix(time_scores)
    eta_mean = tm @ growth_means
    mu = tiled_intercepts(indicator_intercepts) + lam @ eta_mean
    omega = tm @ growth_cov @ tm.T + np.diag(wave_residual_var.ravel())
    sigma = lam @ omega @ lam.T + np.diag(tiled_indicator_resid(indicator_residual_var))
    return mu, 0.5 * (sigma + sigma.T)


@dataclass(frozen=True)
class ModelMoments:
    """Implied mean vector (30,) and covariance (30, 30) of the observed columns."""

    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self) -> None:
        mu = np.asarray(self.mu, dtype=float)
        sigma = np.asarray(self.sigma, dtype=float)
        if mu.shape != (N_COLUMNS,) or sigma.shape != (N_COLUMNS, N_COLUMNS):
            raise ValueError(
                f"expected shapes ({N_COLUMNS},)/({N_COLUMNS},{N_COLUMNS}), "
                f"got {mu.shape}/{sigma.shape}"
            )
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(sigma))):
            raise ValueError("moments contain non-finite values")
        if not np.allclose(sigma, sigma.T, atol=1e-10):
            raise ValueError("sigma must be symmetric")
        scale = max(1.0, float(np.max(np.abs(np.diag(sigma)))))
        if np.min(np.linalg.eigvalsh(sigma)) < -_PSD_TOL * scale:
            raise NotPositiveDefinite("implied sigma is not positive semidefinite")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)


def build_moments(params: PopulationParams) -> ModelMoments:
    """Implied moments of the 30 observed columns under ``params``.

    Degenerate-but-valid populations (zero residual variances, zero slope
    variance) produce a positive *semi*definite sigma and are accepted here;
    :func:`generate_dataset` additionally requires strict definiteness.

    Raises
    ------
    NotPositiveDefinite
        If the implied covariance is indefinite.
    """
    mu, sigma = implied_moments_raw(
        params.growth_means,
        params.growth_cov,
        params.time_scores,
        params.wave_residual_var,
        params.loadings,
        params.indicator_intercepts,
        params.indicator_residual_var,
    )
    return ModelMoments(mu, sigma)


@dataclass(frozen=True)
class DataMatrix:
    """n x 30 observations plus a boolean observed-cell mask.

    ``mask[i, j]`` is True when cell (i, j) was observed.  Masked cells keep
    their generated values but must never be read; consumers subset by mask.
    """

    values: np.ndarray
    mask: np.ndarray
    column_names: tuple[str, ...]

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        mask = np.asarray(self.mask, dtype=bool)
        if values.ndim != 2 or values.shape[1] != N_COLUMNS:
            raise ValueError(f"values must be (n, {N_COLUMNS}), got {values.shape}")
        if mask.shape != values.shape:
            raise ValueError("mask shape must match values shape")
        if len(self.column_names) != N_COLUMNS:
            raise ValueError(f"need {N_COLUMNS} column names")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "column_names", tuple(self.column_names))

    @property
    def n_rows(self) -> int:
        return int(self.values.shape[0])

    def with_mask(self, mask: np.ndarray) -> "DataMatrix":
        return DataMatrix(self.values, mask, self.column_names)


def generate_dataset(
    moments: ModelMoments, n: int, rng: np.random.Generator
) -> DataMatrix:
    """Draw ``n`` iid rows from N(mu, sigma) via the Cholesky transform.

    Bit-reproducible for a given generator state; the mask starts all-True.

    Raises
    ------
    NotPositiveDefinite
        If sigma has no Cholesky factor (singular or indefinite).
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    try:
        chol = np.linalg.cholesky(moments.sigma)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(
            "sigma has no Cholesky factor; cannot generate data"
        ) from exc
    z = rng.standard_normal((n, N_COLUMNS))
    values = moments.mu + z @ chol.T
    return DataMatrix(values, np.ones((n, N_COLUMNS), dtype=bool), column_names())
