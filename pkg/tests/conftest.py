"""Shared fixtures for the test suite."""

from __future__ import annotations

import os
import time

import numpy as np
import pytest

DESK_CONFIG_TEXT = """
master_seed = 20240817
rho_levels = 0.3
n_levels = 100, 500
replications = 200
design = swmd6
overlap_mode = paper
track_params = slope_slope_corr
"""


def desk_workers() -> int:
    return min(4, os.cpu_count() or 1)


def make_paradox_samples() -> tuple[np.ndarray, np.ndarray, float]:
    """Seeded variance-inversion fixture.

    The reference arm is a tight core contaminated by a handful of large
    outliers, so its (n-1) variance is inflated well past the comparison
    arm's even though its central 50% is narrower.  Traditional RE therefore
    lands above 100% while the quantile-based BRE stays at or below 1.

    Returns (reference, comparison, theta_true).
    """
    rng = np.random.default_rng(20240817)
    reference = 0.3 + 0.012 * rng.standard_normal(400)
    outlier_rows = rng.choice(400, size=8, replace=False)
    reference[outlier_rows] += rng.choice([-0.45, 0.45], size=8)
    comparison = 0.3 + 0.02 * rng.standard_normal(400)
    return reference, comparison, 0.3


@pytest.fixture(scope="session")
def paradox_samples() -> tuple[np.ndarray, np.ndarray, float]:
    return make_paradox_samples()


@pytest.fixture(scope="session")
def desk_grid():
    """The desk-scale simulation run: rho 0.3, n in {100, 500}, 200 reps.

    Runs once per session and is shared by the harness calibration tests
    and the acceptance gate.  Returns (results, elapsed_seconds, config).
    """
    from bresim.config import build_condition_specs, parse_config_text
    from bresim.harness import run_grid_conditions

    config = parse_config_text(DESK_CONFIG_TEXT)
    specs = build_condition_specs(config)
    start = time.perf_counter()
    results = run_grid_conditions(specs, workers=desk_workers())
    elapsed = time.perf_counter() - start
    return results, elapsed, config
