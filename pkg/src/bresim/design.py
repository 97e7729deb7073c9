"""Planned missingness designs: group-wise wave masks applied to generated data.

A design is a G x T boolean grid (True = observed) plus group allocation
proportions.  The shipped six-group wave design gives group 1 complete data
and lets each of groups 2..6 skip exactly one of the five waves, so every
wave is still observed by five of the six groups:

    group 1:  + + + + +
    group 2:  + + + + -
    group 3:  + + + - +
    group 4:  + + - + +
    group 5:  + - + + +
    group 6:  - + + + +

Skipping a wave removes all six indicators measured at that wave (both
constructs); a participant absent from a wave answers nothing at it.
Masking is missing-completely-at-random by construction: group membership
is assigned by a random permutation that never looks at data values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientSample, InvalidGroup
from .lgm import N_WAVES, DataMatrix, wave_columns

__all__ = [
    "MissingDesign",
    "swmd6",
    "complete_design",
    "assign_groups",
    "apply_design",
]


@dataclass(frozen=True)
class MissingDesign:
    """Named G x T wave-observation grid with group allocation proportions."""

    name: str
    group_wave_mask: np.ndarray  # (G, T) bool, True = observed
    group_allocation: np.ndarray  # (G,) proportions summing to 1

    def __post_init__(self) -> None:
        mask = np.asarray(self.group_wave_mask, dtype=bool)
        alloc = np.asarray(self.group_allocation, dtype=float)
        if mask.ndim != 2:
            raise ValueError("group_wave_mask must be 2-dimensional")
        if alloc.shape != (mask.shape[0],):
            raise ValueError("group_allocation length must match group count")
        if np.any(alloc < 0) or not np.isclose(alloc.sum(), 1.0, atol=1e-12):
            raise ValueError("group_allocation must be non-negative and sum to 1")
        object.__setattr__(self, "group_wave_mask", mask)
        object.__setattr__(self, "group_allocation", alloc)

    @property
    def n_groups(self) -> int:
        return int(self.group_wave_mask.shape[0])

    @property
    def n_waves(self) -> int:
        return int(self.group_wave_mask.shape[1])


def swmd6() -> MissingDesign:
    """Six-group simple wave missing design over five waves.

    Group 1 observes every wave; group g in 2..6 misses exactly wave
    ``7 - g`` (group 2 misses wave 5, ..., group 6 misses wave 1).
    """
    mask = np.ones((6, N_WAVES), dtype=bool)
    for g in range(1, 6):
        mask[g, 6 - g - 1] = False  # group g+1 misses wave 7-(g+1), 0-based
    return MissingDesign("swmd6", mask, np.full(6, 1.0 / 6.0))


def complete_design() -> MissingDesign:
    """Single all-observed group; masking leaves data untouched."""
    return MissingDesign("complete", np.ones((1, N_WAVES), dtype=bool), np.ones(1))


def assign_groups(
    n: int, design: MissingDesign, rng: np.random.Generator
) -> np.ndarray:
    """Assign each of n rows a 0-based group label.

    Allocation is balanced: group g receives ``floor(n * proportion_g)``
    rows and the leftover rows go one each to the lowest-indexed groups,
    so equal proportions give ``floor(n / G)`` per group with the remainder
    on groups 1, 2, ....  Labels are then randomly permuted across rows.

    Raises
    ------
    InsufficientSample
        If n is smaller than the number of groups.
    """
    g = design.n_groups
    if n < g:
        raise InsufficientSample(f"need at least {g} rows for {g} groups, got {n}")
    counts = np.floor(n * design.group_allocation).astype(int)
    for i in range(n - counts.sum()):
        counts[i % g] += 1
    labels = np.repeat(np.arange(g), counts)
    return rng.permutation(labels)


def apply_design(
    data: DataMatrix, labels: np.ndarray, design: MissingDesign
) -> DataMatrix:
    """Mask out each row's unobserved waves according to its group label.

    Only the mask changes: values are shared with the input bit-for-bit,
    and cells already masked stay masked (the operation is idempotent).

    Raises
    ------
    InvalidGroup
        If any label falls outside ``[0, n_groups)``.
    """
    labels = np.asarray(labels)
    if labels.shape != (data.n_rows,):
        raise ValueError(
            f"labels must have shape ({data.n_rows},), got {labels.shape}"
        )
    if labels.size and (labels.min() < 0 or labels.max() >= design.n_groups):
        raise InvalidGroup(
            f"labels must lie in [0, {design.n_groups}), "
            f"got range [{labels.min()}, {labels.max()}]"
        )
    mask = data.mask.copy()
    for g in range(design.n_groups):
        missing_waves = np.flatnonzero(~design.group_wave_mask[g])
        if missing_waves.size == 0:
            continue
        rows = labels == g
        for t in missing_waves:
            mask[np.ix_(rows, wave_columns(int(t)))] = False
    return data.with_mask(mask)
