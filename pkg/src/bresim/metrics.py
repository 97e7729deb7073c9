"""Estimator-efficiency metrics built on quartiles, IQR overlap, and relative bias.

Two efficiency measures are provided for judging a *comparison* estimator
against a *reference* estimator over Monte Carlo replications:

* Traditional relative efficiency (RE): the ratio of estimate variances,
  reference over comparison, times 100.  RE exceeds 100% whenever the
  comparison arm happens to land on a smaller variance (variance inversion),
  so on small or outlier-contaminated samples it can rank an information-poor
  estimator above the reference.
* Bhirkuti's relative efficiency (BRE): the interquartile-range overlap of
  the two estimate distributions (precision component) times
  ``1 - |median relative bias|`` of the comparison arm (accuracy component).
  BRE is robust to tail outliers because both components are quantile-based.

IQR overlap has two regimes.  When neither IQR strictly contains the other,
the overlap is the Dice-style ratio ``2 * intersection / (IQR_c + IQR_r)``,
which lives in [0, 1].  When the comparison IQR is a strict subset of the
reference IQR, the default ``PAPER`` mode returns ``IQR_r / IQR_c`` instead,
which exceeds 1 and is how values of BRE above 1 arise.  ``SYMMETRIC`` mode
applies the bounded Dice formula unconditionally for callers who want an
overlap that never leaves [0, 1].

Everything here is pure, stateless, and permutation-invariant: outputs
depend on sample values only through order statistics and moments.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence, Union

import numpy as np

from .errors import (
    DegenerateDistribution,
    EmptySample,
    InsufficientSample,
    InvalidEstimate,
    ZeroTrueParameter,
)

__all__ = [
    "EstimateSample",
    "Quartiles",
    "OverlapCase",
    "OverlapMode",
    "MetricReport",
    "quartiles",
    "iqr_overlap",
    "median_relative_bias",
    "traditional_re",
    "bre",
    "compute_report",
]


class OverlapMode(Enum):
    """How to score the strict-containment regime of the IQR overlap."""

    PAPER = "paper"          # containment scored as IQR_ref / IQR_comp (unbounded)
    SYMMETRIC = "symmetric"  # Dice-style formula everywhere (bounded in [0, 1])


class OverlapCase(Enum):
    """Geometric relationship between the two interquartile ranges."""

    PARTIAL = "PARTIAL"
    CONTAINMENT = "CONTAINMENT"
    DISJOINT = "DISJOINT"


@dataclass(frozen=True)
class EstimateSample:
    """A set of parameter estimates pooled across usable replications.

    Values must be finite and non-empty; their order never affects any
    metric computed from them.
    """

    values: np.ndarray
    label: str = ""

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=float).ravel()
        if arr.size == 0:
            raise EmptySample(f"sample {self.label!r} has no values")
        if not np.all(np.isfinite(arr)):
            raise InvalidEstimate(f"sample {self.label!r} contains non-finite values")
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return int(self.values.size)


SampleLike = Union[EstimateSample, Sequence[float], np.ndarray]


def _as_sample(x: SampleLike, label: str = "") -> EstimateSample:
    if isinstance(x, EstimateSample):
        return x
    return EstimateSample(np.asarray(x, dtype=float), label=label)


@dataclass(frozen=True)
class Quartiles:
    """First quartile, median, and third quartile of a sample."""

    q1: float
    median: float
    q3: float

    def __post_init__(self) -> None:
        vals = (self.q1, self.median, self.q3)
        if not all(np.isfinite(v) for v in vals):
            raise InvalidEstimate(f"non-finite quartiles {vals}")
        if not (self.q1 <= self.median <= self.q3):
            raise ValueError(f"quartiles out of order: {vals}")

    @property
    def iqr(self) -> float:
        return self.q3 - self.q1


@dataclass(frozen=True)
class MetricReport:
    """Per-condition, per-parameter efficiency summary for one arm pair.

    Identities guaranteed by construction: ``amrb == abs(median_rb)`` and
    ``bre == iqr_overlap * (1 - amrb)``; ``overlap_case`` is ``DISJOINT``
    exactly when ``iqr_overlap`` is zero.
    """

    re_percent: float
    iqr_overlap: float
    overlap_case: OverlapCase
    median_rb: float
    amrb: float
    bre: float
    n_reference: int
    n_comparison: int


def quartiles(sample: SampleLike) -> Quartiles:
    """Compute (Q1, median, Q3) of a sample by linear interpolation.

    Quantiles use the plotting position ``h = (n - 1) * p + 1`` on the
    sorted sample (1-indexed) with linear interpolation between the two
    bracketing order statistics, i.e. numpy's default ``linear`` method.
    Every data point participates; nothing is trimmed.

    Raises
    ------
    EmptySample
        If the sample has no values.
    InvalidEstimate
        If any value is NaN or infinite.
    """
    s = _as_sample(sample)
    q1, med, q3 = np.quantile(s.values, (0.25, 0.5, 0.75), method="linear")
    return Quartiles(float(q1), float(med), float(q3))


def iqr_overlap(
    comparison: Quartiles,
    reference: Quartiles,
    mode: OverlapMode = OverlapMode.PAPER,
) -> tuple[float, OverlapCase]:
    """Score the overlap of two interquartile ranges.

    In ``PAPER`` mode, strict containment of the comparison IQR inside the
    reference IQR (``Q1_c >= Q1_r``, ``Q3_c <= Q3_r``, ``IQR_c < IQR_r``)
    returns ``IQR_r / IQR_c`` with case ``CONTAINMENT``; this ratio exceeds 1.
    Every other configuration (and all of ``SYMMETRIC`` mode) is scored as
    ``2 * intersection / (IQR_c + IQR_r)`` with the intersection clamped at
    zero; a clamped (or exactly empty) intersection yields case ``DISJOINT``
    and ratio 0, otherwise ``PARTIAL``.

    Two zero-width IQRs at the same median are treated as perfectly
    overlapping (ratio 1, ``PARTIAL``).

    Raises
    ------
    DegenerateDistribution
        If the containment branch would divide by a zero comparison IQR, or
        both IQRs are zero-width at different medians.
    """
    iqr_c = comparison.iqr
    iqr_r = reference.iqr

    if mode is OverlapMode.PAPER:
        contained = (
            comparison.q1 >= reference.q1
            and comparison.q3 <= reference.q3
            and iqr_c < iqr_r
        )
        if contained:
            if iqr_c == 0.0:
                raise DegenerateDistribution(
                    "comparison IQR is zero inside a wider reference IQR; "
                    "containment ratio undefined"
                )
            return iqr_r / iqr_c, OverlapCase.CONTAINMENT

    denom = iqr_c + iqr_r
    if denom == 0.0:
        if comparison.median == reference.median:
            return 1.0, OverlapCase.PARTIAL
        raise DegenerateDistribution(
            "both IQRs are zero-width at different medians; overlap undefined"
        )
    intersection = min(comparison.q3, reference.q3) - max(comparison.q1, reference.q1)
    if intersection <= 0.0:
        return 0.0, OverlapCase.DISJOINT
    return 2.0 * intersection / denom, OverlapCase.PARTIAL


def median_relative_bias(estimates: SampleLike, theta_true: float) -> float:
    """Median of ``(estimate - theta_true) / theta_true`` over the sample.

    Uses the same median convention as :func:`quartiles`.

    Raises
    ------
    ZeroTrueParameter
        If ``theta_true`` is zero (relative bias is undefined; pick a
        different parameterization).
    """
    if not np.isfinite(theta_true):
        raise InvalidEstimate(f"non-finite true parameter {theta_true!r}")
    if theta_true == 0.0:
        raise ZeroTrueParameter("relative bias is undefined for a true value of 0")
    s = _as_sample(estimates)
    rb = (s.values - theta_true) / theta_true
    return float(np.quantile(rb, 0.5, method="linear"))


def traditional_re(reference: SampleLike, comparison: SampleLike) -> float:
    """Variance-ratio relative efficiency in percent.

    ``100 * var(reference) / var(comparison)`` with the unbiased (n-1)
    sample variance.  Values above 100 mean the comparison arm produced
    the smaller variance (variance inversion).

    Raises
    ------
    InsufficientSample
        If either sample has fewer than two values.
    DegenerateDistribution
        If the comparison variance is exactly zero.
    """
    ref = _as_sample(reference, "reference")
    comp = _as_sample(comparison, "comparison")
    if len(ref) < 2 or len(comp) < 2:
        raise InsufficientSample(
            f"variance needs >= 2 values per arm (got {len(ref)} and {len(comp)})"
        )
    var_comp = float(np.var(comp.values, ddof=1))
    if var_comp == 0.0:
        raise DegenerateDistribution("comparison sample has zero variance")
    var_ref = float(np.var(ref.values, ddof=1))
    return 100.0 * var_ref / var_comp


def bre(iqr_overlap: float, median_rb: float) -> float:
    """Bhirkuti's relative efficiency: ``overlap * (1 - |median_rb|)``.

    The product is deliberately not clamped: values above 1 (containment
    overlap with low bias) and below 0 (absolute median relative bias above
    1) are meaningful diagnostics, not errors.
    """
    if not (np.isfinite(iqr_overlap) and np.isfinite(median_rb)):
        raise InvalidEstimate(
            f"non-finite inputs to bre: overlap={iqr_overlap!r}, median_rb={median_rb!r}"
        )
    return iqr_overlap * (1.0 - abs(median_rb))


def compute_report(
    reference: SampleLike,
    comparison: SampleLike,
    theta_true: float,
    mode: OverlapMode = OverlapMode.PAPER,
) -> MetricReport:
    """Compute the full efficiency report for one reference/comparison pair.

    The bias component uses the comparison sample only; the reference arm
    is treated as the gold standard whose own bias is not corrected for.
    The two samples may have different lengths (usable replication counts
    typically differ between arms); no pairing is assumed.
    """
    ref = _as_sample(reference, "reference")
    comp = _as_sample(comparison, "comparison")
    re_pct = traditional_re(ref, comp)
    overlap, case = iqr_overlap(quartiles(comp), quartiles(ref), mode)
    med_rb = median_relative_bias(comp, theta_true)
    amrb = abs(med_rb)
    return MetricReport(
        re_percent=re_pct,
        iqr_overlap=overlap,
        overlap_case=case,
        median_rb=med_rb,
        amrb=amrb,
        bre=bre(overlap, med_rb),
        n_reference=len(ref),
        n_comparison=len(comp),
    )
