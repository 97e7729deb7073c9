"""Tests for planned missingness designs."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bresim.design import apply_design, assign_groups, complete_design, swmd6
from bresim.errors import InsufficientSample, InvalidGroup
from bresim.lgm import (
    N_COLUMNS,
    N_WAVES,
    DataMatrix,
    column_index,
    column_names,
    wave_columns,
)


def make_data(n: int, seed: int = 0) -> DataMatrix:
    rng = np.random.default_rng(seed)
    values = rng.standard_normal((n, N_COLUMNS))
    return DataMatrix(values, np.ones((n, N_COLUMNS), dtype=bool), column_names())


class TestSwmd6:
    def test_grid_matches_published_pattern(self):
        # + = observed, - = missing; group 1 complete, group g misses wave 7-g.
        expected = np.array(
            [
                [1, 1, 1, 1, 1],
                [1, 1, 1, 1, 0],
                [1, 1, 1, 0, 1],
                [1, 1, 0, 1, 1],
                [1, 0, 1, 1, 1],
                [0, 1, 1, 1, 1],
            ],
            dtype=bool,
        )
        design = swmd6()
        assert design.name == "swmd6"
        np.testing.assert_array_equal(design.group_wave_mask, expected)

    def test_each_wave_observed_by_five_groups(self):
        design = swmd6()
        np.testing.assert_array_equal(
            design.group_wave_mask.sum(axis=0), np.full(N_WAVES, 5)
        )

    def test_incomplete_groups_miss_exactly_one_wave(self):
        design = swmd6()
        per_group = design.group_wave_mask.sum(axis=1)
        assert per_group[0] == N_WAVES
        np.testing.assert_array_equal(per_group[1:], np.full(5, N_WAVES - 1))

    def test_equal_allocation(self):
        design = swmd6()
        np.testing.assert_allclose(design.group_allocation, np.full(6, 1 / 6))


class TestAssignGroups:
    def test_exact_split_when_divisible(self):
        labels = assign_groups(60, swmd6(), np.random.default_rng(1))
        counts = np.bincount(labels, minlength=6)
        np.testing.assert_array_equal(counts, np.full(6, 10))

    def test_remainder_goes_to_lowest_groups(self):
        labels = assign_groups(40, swmd6(), np.random.default_rng(1))
        counts = np.bincount(labels, minlength=6)
        np.testing.assert_array_equal(counts, [7, 7, 7, 7, 6, 6])

    def test_deterministic_given_seed(self):
        a = assign_groups(97, swmd6(), np.random.default_rng(42))
        b = assign_groups(97, swmd6(), np.random.default_rng(42))
        np.testing.assert_array_equal(a, b)

    def test_rejects_fewer_rows_than_groups(self):
        with pytest.raises(InsufficientSample):
            assign_groups(5, swmd6(), np.random.default_rng(0))

    def test_boundary_one_row_per_group(self):
        labels = assign_groups(6, swmd6(), np.random.default_rng(3))
        np.testing.assert_array_equal(np.sort(labels), np.arange(6))

    @given(n=st.integers(min_value=6, max_value=500), seed=st.integers(0, 2**16))
    @settings(max_examples=40, deadline=None)
    def test_counts_never_differ_by_more_than_one(self, n, seed):
        labels = assign_groups(n, swmd6(), np.random.default_rng(seed))
        counts = np.bincount(labels, minlength=6)
        assert counts.sum() == n
        assert counts.max() - counts.min() <= 1
        # remainder lands on the lowest-indexed groups
        assert np.all(np.diff(counts) <= 0)


class TestApplyDesign:
    def test_masks_all_six_indicators_of_missing_wave(self):
        data = make_data(12)
        design = swmd6()
        labels = np.repeat(np.arange(6), 2)
        out = apply_design(data, labels, design)
        for row, g in enumerate(labels):
            for t in range(N_WAVES):
                expected = design.group_wave_mask[g, t]
                cols = list(wave_columns(t))
                assert np.all(out.mask[row, cols] == expected)

    def test_values_are_untouched_and_shared(self):
        data = make_data(18, seed=5)
        labels = assign_groups(18, swmd6(), np.random.default_rng(7))
        out = apply_design(data, labels, swmd6())
        assert out.values is data.values
        np.testing.assert_array_equal(out.values, data.values)

    def test_complete_design_is_identity_on_mask(self):
        data = make_data(9)
        out = apply_design(data, np.zeros(9, dtype=int), complete_design())
        np.testing.assert_array_equal(out.mask, data.mask)

    def test_idempotent(self):
        data = make_data(24, seed=2)
        labels = assign_groups(24, swmd6(), np.random.default_rng(9))
        once = apply_design(data, labels, swmd6())
        twice = apply_design(once, labels, swmd6())
        np.testing.assert_array_equal(once.mask, twice.mask)

    def test_rejects_out_of_range_labels(self):
        data = make_data(6)
        with pytest.raises(InvalidGroup):
            apply_design(data, np.array([0, 1, 2, 3, 4, 6]), swmd6())
        with pytest.raises(InvalidGroup):
            apply_design(data, np.array([0, 1, 2, 3, 4, -1]), swmd6())

    def test_rejects_wrong_label_length(self):
        data = make_data(6)
        with pytest.raises(ValueError):
            apply_design(data, np.arange(5), swmd6())

    def test_missing_fraction_per_wave_is_one_sixth(self):
        n = 600
        data = make_data(n, seed=11)
        labels = assign_groups(n, swmd6(), np.random.default_rng(13))
        out = apply_design(data, labels, swmd6())
        for t in range(N_WAVES):
            cols = list(wave_columns(t))
            frac_missing = 1.0 - out.mask[:, cols].mean()
            assert frac_missing == pytest.approx(1 / 6, abs=1e-12)

    def test_every_row_keeps_at_least_four_waves(self):
        n = 66
        data = make_data(n, seed=4)
        labels = assign_groups(n, swmd6(), np.random.default_rng(8))
        out = apply_design(data, labels, swmd6())
        per_row_observed = out.mask.sum(axis=1)
        assert per_row_observed.min() >= (N_WAVES - 1) * 6

    def test_mcar_group_assignment_ignores_values(self):
        # Same rng seed must give the same labels regardless of the data,
        # so masking cannot depend on values (missing completely at random).
        a = assign_groups(120, swmd6(), np.random.default_rng(21))
        b = assign_groups(120, swmd6(), np.random.default_rng(21))
        np.testing.assert_array_equal(a, b)
        data_lo = make_data(120, seed=1)
        data_hi = DataMatrix(
            data_lo.values + 100.0, data_lo.mask, data_lo.column_names
        )
        out_lo = apply_design(data_lo, a, swmd6())
        out_hi = apply_design(data_hi, a, swmd6())
        np.testing.assert_array_equal(out_lo.mask, out_hi.mask)

    def test_specific_cell_membership(self):
        # Row in group 2 (misses wave 5): construct 2, wave 5, indicator 3
        # must be masked while wave 4 stays observed.
        data = make_data(6)
        labels = np.array([0, 1, 2, 3, 4, 5])
        out = apply_design(data, labels, swmd6())
        assert not out.mask[1, column_index(1, 4, 2)]
        assert out.mask[1, column_index(1, 3, 2)]
