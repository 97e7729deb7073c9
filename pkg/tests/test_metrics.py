"""Unit and property tests for the efficiency metrics core."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from bresim.errors import (
    DegenerateDistribution,
    EmptySample,
    InsufficientSample,
    InvalidEstimate,
    ZeroTrueParameter,
)
from bresim.metrics import (
    EstimateSample,
    MetricReport,
    OverlapCase,
    OverlapMode,
    Quartiles,
    bre,
    compute_report,
    iqr_overlap,
    median_relative_bias,
    quartiles,
    traditional_re,
)

# ---------------------------------------------------------------------------
# Independent brute-force oracles.  These deliberately avoid numpy's quantile
# and variance routines: quantiles follow the 1-indexed plotting position
# h = (n - 1) * p + 1 on a sorted copy, variance is an fsum of squared
# deviations over (n - 1).
# ---------------------------------------------------------------------------


def oracle_quantile(values, p: float) -> float:
    s = sorted(float(v) for v in values)
    n = len(s)
    h = (n - 1) * p + 1.0
    i = math.floor(h)
    frac = h - i
    if i >= n:
        return s[-1]
    return s[i - 1] + frac * (s[i] - s[i - 1])


def oracle_variance(values) -> float:
    xs = [float(v) for v in values]
    n = len(xs)
    mean = math.fsum(xs) / n
    return math.fsum((x - mean) ** 2 for x in xs) / (n - 1)


def oracle_median(values) -> float:
    return oracle_quantile(values, 0.5)


finite_floats = st.floats(
    min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False
)
samples = st.lists(finite_floats, min_size=1, max_size=50)


# ---------------------------------------------------------------------------
# quartiles
# ---------------------------------------------------------------------------


class TestQuartiles:
    def test_four_point_interpolation(self):
        q = quartiles([1.0, 2.0, 3.0, 4.0])
        assert q.q1 == pytest.approx(1.75, abs=0.0)
        assert q.median == pytest.approx(2.5, abs=0.0)
        assert q.q3 == pytest.approx(3.25, abs=0.0)

    def test_constant_sample(self):
        q = quartiles([5.0, 5.0, 5.0, 5.0])
        assert (q.q1, q.median, q.q3) == (5.0, 5.0, 5.0)
        assert q.iqr == 0.0

    def test_singleton(self):
        q = quartiles([2.5])
        assert (q.q1, q.median, q.q3) == (2.5, 2.5, 2.5)

    def test_empty_raises(self):
        with pytest.raises(EmptySample):
            quartiles([])

    def test_nonfinite_raises(self):
        with pytest.raises(InvalidEstimate):
            quartiles([1.0, np.nan])
        with pytest.raises(InvalidEstimate):
            quartiles([1.0, np.inf])

    @given(samples)
    def test_permutation_invariance(self, xs):
        rng = np.random.default_rng(0)
        q_orig = quartiles(xs)
        q_perm = quartiles(rng.permutation(xs))
        assert (q_orig.q1, q_orig.median, q_orig.q3) == (
            q_perm.q1,
            q_perm.median,
            q_perm.q3,
        )

    @given(samples)
    def test_matches_oracle(self, xs):
        q = quartiles(xs)
        assert q.q1 == pytest.approx(oracle_quantile(xs, 0.25), rel=1e-12, abs=1e-12)
        assert q.median == pytest.approx(oracle_quantile(xs, 0.5), rel=1e-12, abs=1e-12)
        assert q.q3 == pytest.approx(oracle_quantile(xs, 0.75), rel=1e-12, abs=1e-12)

    @given(samples)
    def test_ordering_invariant(self, xs):
        q = quartiles(xs)
        assert q.q1 <= q.median <= q.q3


# ---------------------------------------------------------------------------
# iqr_overlap
# ---------------------------------------------------------------------------


def quart(q1: float, q3: float, median: float | None = None) -> Quartiles:
    if median is None:
        median = 0.5 * (q1 + q3)
    return Quartiles(q1, median, q3)


class TestIqrOverlap:
    def test_identical_quartiles_is_partial_one(self):
        q = Quartiles(1.0, 2.0, 3.0)
        for mode in OverlapMode:
            ratio, case = iqr_overlap(q, q, mode)
            assert ratio == 1.0
            assert case is OverlapCase.PARTIAL

    def test_disjoint(self):
        ratio, case = iqr_overlap(quart(0.0, 1.0), quart(2.0, 3.0))
        assert ratio == 0.0
        assert case is OverlapCase.DISJOINT

    def test_touching_iqrs_are_disjoint(self):
        ratio, case = iqr_overlap(quart(0.0, 1.0), quart(1.0, 2.0))
        assert ratio == 0.0
        assert case is OverlapCase.DISJOINT

    def test_containment_paper_mode(self):
        ratio, case = iqr_overlap(quart(1.0, 2.0), quart(0.0, 4.0), OverlapMode.PAPER)
        assert ratio == 4.0
        assert case is OverlapCase.CONTAINMENT

    def test_containment_symmetric_mode(self):
        ratio, case = iqr_overlap(
            quart(1.0, 2.0), quart(0.0, 4.0), OverlapMode.SYMMETRIC
        )
        assert ratio == pytest.approx(0.4, rel=1e-15)
        assert case is OverlapCase.PARTIAL

    def test_reference_inside_comparison_is_not_containment(self):
        # Containment triggers only when the comparison IQR nests inside the
        # reference IQR, not the other way around.
        ratio, case = iqr_overlap(quart(0.0, 4.0), quart(1.0, 2.0), OverlapMode.PAPER)
        assert case is OverlapCase.PARTIAL
        assert ratio == pytest.approx(2.0 * 1.0 / 5.0, rel=1e-15)

    def test_zero_width_comparison_inside_reference_raises(self):
        with pytest.raises(DegenerateDistribution):
            iqr_overlap(quart(2.0, 2.0), quart(1.0, 3.0), OverlapMode.PAPER)

    def test_both_zero_width_same_median(self):
        ratio, case = iqr_overlap(quart(2.0, 2.0), quart(2.0, 2.0))
        assert (ratio, case) == (1.0, OverlapCase.PARTIAL)

    def test_both_zero_width_different_medians_raise(self):
        with pytest.raises(DegenerateDistribution):
            iqr_overlap(quart(2.0, 2.0), quart(3.0, 3.0))

    @given(
        st.tuples(finite_floats, finite_floats),
        st.tuples(finite_floats, finite_floats),
    )
    def test_symmetric_mode_bounds_and_swap_symmetry(self, a, b):
        qa = quart(min(a), max(a))
        qb = quart(min(b), max(b))
        assume(qa.iqr + qb.iqr > 0.0)
        r_ab, _ = iqr_overlap(qa, qb, OverlapMode.SYMMETRIC)
        r_ba, _ = iqr_overlap(qb, qa, OverlapMode.SYMMETRIC)
        assert 0.0 <= r_ab <= 1.0
        assert r_ab == r_ba

    @given(
        st.tuples(finite_floats, finite_floats),
        st.tuples(finite_floats, finite_floats),
    )
    def test_paper_mode_above_one_only_under_containment(self, a, b):
        qa = quart(min(a), max(a))
        qb = quart(min(b), max(b))
        assume(qa.iqr + qb.iqr > 0.0)
        assume(not (qa.iqr == 0.0 and qa.q1 >= qb.q1 and qa.q3 <= qb.q3 and qb.iqr > 0))
        ratio, case = iqr_overlap(qa, qb, OverlapMode.PAPER)
        assert ratio >= 0.0
        if ratio > 1.0:
            assert case is OverlapCase.CONTAINMENT
        assert (case is OverlapCase.DISJOINT) == (ratio == 0.0)


# ---------------------------------------------------------------------------
# median_relative_bias
# ---------------------------------------------------------------------------


class TestMedianRelativeBias:
    def test_zero_bias(self):
        assert median_relative_bias([2.0, 2.0, 2.0], 2.0) == 0.0

    def test_three_point_example(self):
        assert median_relative_bias([1.1, 0.9, 1.2], 1.0) == pytest.approx(
            0.1, rel=1e-12
        )

    @given(samples, st.floats(min_value=0.1, max_value=10.0))
    def test_constant_scaling(self, xs, c):
        theta = 2.0
        scaled = [c * theta for _ in xs]
        assert median_relative_bias(scaled, theta) == pytest.approx(c - 1.0, abs=1e-12)

    def test_zero_truth_raises(self):
        with pytest.raises(ZeroTrueParameter):
            median_relative_bias([1.0, 2.0], 0.0)

    @given(samples, st.floats(min_value=0.5, max_value=3.0))
    def test_matches_oracle(self, xs, theta):
        got = median_relative_bias(xs, theta)
        want = oracle_median([(x - theta) / theta for x in xs])
        assert got == pytest.approx(want, rel=1e-12, abs=1e-12)


# ---------------------------------------------------------------------------
# traditional_re
# ---------------------------------------------------------------------------


class TestTraditionalRE:
    def test_identical_samples(self):
        xs = [0.1, 0.4, 0.2, 0.35]
        assert traditional_re(xs, xs) == 100.0

    def test_variance_inversion_paradox(self):
        ref = np.array([-1.0, 0.0, 1.0]) * math.sqrt(2.0)  # variance 2
        comp = np.array([-1.0, 0.0, 1.0])  # variance 1
        assert traditional_re(ref, comp) == pytest.approx(200.0, rel=1e-12)

    def test_eighty_percent(self):
        ref = np.array([-1.0, 0.0, 1.0]) * math.sqrt(0.8)
        comp = np.array([-1.0, 0.0, 1.0])
        assert traditional_re(ref, comp) == pytest.approx(80.0, rel=1e-12)

    def test_insufficient_sample(self):
        with pytest.raises(InsufficientSample):
            traditional_re([1.0], [1.0, 2.0])
        with pytest.raises(InsufficientSample):
            traditional_re([1.0, 2.0], [1.0])

    def test_zero_comparison_variance(self):
        with pytest.raises(DegenerateDistribution):
            traditional_re([1.0, 2.0], [3.0, 3.0])

    @given(
        st.lists(st.floats(min_value=-1e3, max_value=1e3), min_size=2, max_size=30),
        st.lists(st.floats(min_value=-1e3, max_value=1e3), min_size=2, max_size=30),
        st.floats(min_value=-100.0, max_value=100.0),
    )
    def test_shift_invariance(self, ref, comp, shift):
        assume(oracle_variance(comp) > 1e-8)
        base = traditional_re(ref, comp)
        shifted = traditional_re(
            [x + shift for x in ref], [x + shift for x in comp]
        )
        assert shifted == pytest.approx(base, rel=1e-6)

    @given(
        st.lists(finite_floats, min_size=2, max_size=30),
        st.floats(min_value=0.1, max_value=10.0),
    )
    def test_scaling_one_arm(self, xs, c):
        assume(oracle_variance(xs) > 1e-8)
        base = traditional_re(xs, xs)
        scaled_ref = traditional_re([c * x for x in xs], xs)
        assert scaled_ref == pytest.approx(base * c * c, rel=1e-9)

    @given(st.lists(finite_floats, min_size=2, max_size=30))
    def test_matches_oracle(self, xs):
        assume(oracle_variance(xs) > 1e-10)
        got = traditional_re(xs, xs)
        assert got == pytest.approx(100.0, rel=1e-12)
        got2 = traditional_re([2 * x for x in xs], xs)
        want = 100.0 * oracle_variance([2 * x for x in xs]) / oracle_variance(xs)
        assert got2 == pytest.approx(want, rel=1e-12)


# ---------------------------------------------------------------------------
# bre
# ---------------------------------------------------------------------------


class TestBre:
    def test_direct_arithmetic(self):
        assert bre(0.8, 0.05) == pytest.approx(0.76, rel=1e-15)

    @given(st.floats(min_value=0.0, max_value=5.0, allow_nan=False))
    def test_zero_bias_identity(self, overlap):
        assert bre(overlap, 0.0) == overlap

    def test_negative_when_amrb_exceeds_one(self):
        assert bre(0.5, 1.2) == pytest.approx(-0.1, rel=1e-12)

    def test_nonfinite_raises(self):
        with pytest.raises(InvalidEstimate):
            bre(np.nan, 0.0)
        with pytest.raises(InvalidEstimate):
            bre(1.0, np.inf)

    @given(
        st.floats(min_value=0.0, max_value=5.0, allow_nan=False),
        st.floats(min_value=-3.0, max_value=3.0, allow_nan=False),
    )
    def test_bounded_by_overlap_and_sign(self, overlap, rb):
        value = bre(overlap, rb)
        assert value <= overlap
        if abs(rb) > 1.0 and overlap > 0.0:
            assert value < 0.0


# ---------------------------------------------------------------------------
# compute_report
# ---------------------------------------------------------------------------


class TestComputeReport:
    def test_full_identity(self):
        # Sample whose median equals the true value exactly.
        xs = np.array([0.1, 0.2, 0.3, 0.4, 0.5])
        report = compute_report(xs, xs, theta_true=0.3)
        assert report.re_percent == 100.0
        assert report.iqr_overlap == 1.0
        assert report.overlap_case is OverlapCase.PARTIAL
        assert report.median_rb == 0.0
        assert report.amrb == 0.0
        assert report.bre == 1.0
        assert report.n_reference == report.n_comparison == 5

    def test_paradox_fixture(self, paradox_samples):
        ref, comp, theta = paradox_samples
        report = compute_report(ref, comp, theta)
        assert report.re_percent > 100.0
        assert report.bre <= 1.0
        # Independent check of both sides.
        assert report.re_percent == pytest.approx(
            100.0 * oracle_variance(ref) / oracle_variance(comp), rel=1e-12
        )

    def test_disjoint_distributions_give_zero_bre(self):
        ref = np.linspace(0.0, 1.0, 21)
        comp = np.linspace(10.0, 11.0, 21)
        report = compute_report(ref, comp, theta_true=0.5)
        assert report.iqr_overlap == 0.0
        assert report.overlap_case is OverlapCase.DISJOINT
        assert report.bre == 0.0

    def test_identities_hold(self, paradox_samples):
        ref, comp, theta = paradox_samples
        for mode in OverlapMode:
            report = compute_report(ref, comp, theta, mode)
            assert report.amrb == abs(report.median_rb)
            assert report.bre == report.iqr_overlap * (1.0 - report.amrb)
            assert (report.overlap_case is OverlapCase.DISJOINT) == (
                report.iqr_overlap == 0.0
            )

    def test_bias_component_uses_comparison_only(self):
        ref = np.array([5.0, 6.0, 7.0])  # wildly biased reference
        comp = np.array([0.9, 1.0, 1.1])
        report = compute_report(ref, comp, theta_true=1.0)
        assert report.median_rb == 0.0

    def test_unequal_sample_sizes_allowed(self):
        ref = np.linspace(0.0, 1.0, 31)
        comp = np.linspace(0.1, 1.1, 17)
        report = compute_report(ref, comp, theta_true=0.5)
        assert report.n_reference == 31
        assert report.n_comparison == 17
        assert isinstance(report, MetricReport)


# ---------------------------------------------------------------------------
# EstimateSample validation
# ---------------------------------------------------------------------------


class TestEstimateSample:
    def test_empty_raises(self):
        with pytest.raises(EmptySample):
            EstimateSample(np.array([]))

    def test_nonfinite_raises(self):
        with pytest.raises(InvalidEstimate):
            EstimateSample(np.array([1.0, np.inf]))

    def test_label_preserved(self):
        s = EstimateSample(np.array([1.0]), label="reference")
        assert s.label == "reference"
        assert len(s) == 1
