"""Condition-grid execution: generate, mask, fit both arms, pool, report.

Each replication draws ONE dataset.  The complete data are fitted for the
reference arm; the same draw is then masked by the planned-missingness
design and refitted for the comparison arm, so the two arms always share
the generating randomness within a replication.

Reproducibility is counter-based: replication ``r`` of condition ``c``
derives its streams from ``SeedSequence(master_seed, spawn_key=(c, r))``
and splits them into four independent Philox generators (data draw, group
assignment, reference-fit restarts, comparison-fit restarts).  Results are
merged in (condition, replication) order, never arrival order, so output
is a pure function of (config, master seed) regardless of worker count or
scheduling.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .design import MissingDesign, apply_design, assign_groups
from .errors import ConditionDegenerate, InadmissibleForParam, NonConverged
from .fiml import (
    ModelSpec,
    extract_param,
    fit,
    population_value,
)
from .fiml import available_params as _available_params
from .lgm import DataMatrix, PopulationParams, build_moments, generate_dataset
from .metrics import MetricReport, OverlapMode, compute_report

__all__ = [
    "MIN_USABLE",
    "ConditionSpec",
    "ArmRecord",
    "RepRecord",
    "ExclusionCounts",
    "ConditionResult",
    "condition_id_for",
    "replication_rngs",
    "run_replication",
    "run_condition",
    "run_grid_conditions",
]

# Minimum usable (converged and admissible) estimates per arm before a
# metric report is emitted; below this the condition is flagged degenerate.
MIN_USABLE = 10


def condition_id_for(rho: float, n: int) -> str:
    return f"r{rho:g}_n{n}"


@dataclass(frozen=True)
class ConditionSpec:
    """One cell of the simulation grid plus the seeding coordinates."""

    rho: float
    n: int
    replications: int
    design: MissingDesign
    population: PopulationParams
    overlap_mode: OverlapMode = OverlapMode.PAPER
    track_params: tuple[str, ...] = ("slope_slope_corr",)
    master_seed: int = 0
    condition_index: int = 0

    def __post_init__(self) -> None:
        if not -1.0 < self.rho < 1.0:
            raise ValueError(f"rho must be in (-1, 1), got {self.rho}")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.replications < 1:
            raise ValueError(f"replications must be >= 1, got {self.replications}")
        if abs(self.population.slope_slope_corr - self.rho) > 1e-9:
            raise ValueError(
                f"population slope-slope correlation "
                f"{self.population.slope_slope_corr:g} does not match rho {self.rho:g}"
            )
        if not self.track_params:
            raise ValueError("track_params must not be empty")
        known = set(_available_params())
        unknown = [p for p in self.track_params if p not in known]
        if unknown:
            raise ValueError(f"unknown tracked parameter(s): {unknown}")
        if self.master_seed < 0 or self.condition_index < 0:
            raise ValueError("master_seed and condition_index must be non-negative")
        object.__setattr__(self, "track_params", tuple(self.track_params))

    @property
    def condition_id(self) -> str:
        return condition_id_for(self.rho, self.n)

    def model_spec(self) -> ModelSpec:
        return ModelSpec(time_scores=tuple(self.population.time_scores))

    def true_value(self, param: str) -> float:
        return population_value(self.population, param)


@dataclass(frozen=True)
class ArmRecord:
    """One fit's outcome; estimates align with the spec's track_params."""

    converged: bool
    admissible: bool
    estimates: tuple[float, ...]  # nan where extraction was impossible


@dataclass(frozen=True)
class RepRecord:
    rep: int
    reference: ArmRecord
    comparison: ArmRecord


@dataclass(frozen=True)
class ExclusionCounts:
    nonconverged_ref: int
    nonconverged_comp: int
    inadmissible_ref: int
    inadmissible_comp: int


@dataclass(frozen=True)
class ConditionResult:
    """Pooled outcome of one condition; reports suppressed when degenerate."""

    spec: ConditionSpec
    records: tuple[RepRecord, ...]
    exclusions: ExclusionCounts
    usable_reference: dict[str, np.ndarray]
    usable_comparison: dict[str, np.ndarray]
    reports: dict[str, MetricReport] = field(default_factory=dict)
    degenerate: bool = False

    @property
    def condition_id(self) -> str:
        return self.spec.condition_id

    def report_for(self, param: str) -> MetricReport:
        if param not in self.spec.track_params:
            raise KeyError(f"parameter {param!r} was not tracked")
        if self.degenerate or param not in self.reports:
            ref = self.usable_reference.get(param, np.empty(0))
            comp = self.usable_comparison.get(param, np.empty(0))
            raise ConditionDegenerate(
                f"condition {self.condition_id} has too few usable estimates "
                f"for {param!r} ({ref.size} reference, {comp.size} comparison; "
                f"need {MIN_USABLE} each)"
            )
        return self.reports[param]


def replication_rngs(
    spec: ConditionSpec, rep_index: int
) -> tuple[np.random.Generator, ...]:
    """Four independent streams for one replication: data, assign, ref, comp.

    Counter-based: built from spawn_key=(condition_index, rep_index) on the
    master seed, so any replication can be reproduced in isolation.
    """
    root = np.random.SeedSequence(
        spec.master_seed, spawn_key=(spec.condition_index, rep_index)
    )
    return tuple(np.random.Generator(np.random.Philox(s)) for s in root.spawn(4))


def _fit_arm(
    data: DataMatrix,
    model_spec: ModelSpec,
    rng: np.random.Generator,
    track_params: tuple[str, ...],
) -> ArmRecord:
    result = fit(data, spec=model_spec, rng=rng)
    estimates = []
    for name in track_params:
        try:
            estimates.append(extract_param(result, name))
        except (NonConverged, InadmissibleForParam):
            estimates.append(math.nan)
    return ArmRecord(
        converged=result.converged,
        admissible=result.admissible,
        estimates=tuple(estimates),
    )


def run_replication(spec: ConditionSpec, rep_index: int) -> RepRecord:
    """Generate one dataset, fit the complete and the masked arms.

    Fit failures are recorded in the ArmRecord, never raised; the only
    exceptions that can escape are structural (invalid population, n below
    the group count of the design).
    """
    rng_data, rng_assign, rng_ref, rng_comp = replication_rngs(spec, rep_index)
    moments = build_moments(spec.population)
    data = generate_dataset(moments, spec.n, rng_data)
    model_spec = spec.model_spec()

    reference = _fit_arm(data, model_spec, rng_ref, spec.track_params)
    labels = assign_groups(spec.n, spec.design, rng_assign)
    masked = apply_design(data, labels, spec.design)
    comparison = _fit_arm(masked, model_spec, rng_comp, spec.track_params)
    return RepRecord(rep=rep_index, reference=reference, comparison=comparison)


def _replication_range(spec: ConditionSpec, start: int, stop: int) -> list[RepRecord]:
    """Worker task: run a contiguous block of replications."""
    return [run_replication(spec, r) for r in range(start, stop)]


def _collect_records(spec: ConditionSpec, workers: int) -> tuple[RepRecord, ...]:
    reps = spec.replications
    if workers <= 1 or reps == 1:
        return tuple(_replication_range(spec, 0, reps))
    # About four chunks per worker keeps the pool busy without drowning in
    # pickling overhead; chunk boundaries never affect results because each
    # replication derives its streams from its own (condition, rep) key.
    chunk = max(1, math.ceil(reps / (4 * workers)))
    bounds = [(s, min(s + chunk, reps)) for s in range(0, reps, chunk)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_replication_range, spec, a, b) for a, b in bounds]
        blocks = [f.result() for f in futures]  # submission order, not arrival
    return tuple(rec for block in blocks for rec in block)


def _pool_usable(
    records: tuple[RepRecord, ...], track_params: tuple[str, ...], arm: str
) -> dict[str, np.ndarray]:
    out: dict[str, np.ndarray] = {}
    for j, name in enumerate(track_params):
        vals = [
            getattr(rec, arm).estimates[j]
            for rec in records
            if getattr(rec, arm).converged
            and getattr(rec, arm).admissible
            and math.isfinite(getattr(rec, arm).estimates[j])
        ]
        out[name] = np.asarray(vals, dtype=float)
    return out


def run_condition(spec: ConditionSpec, workers: int = 1) -> ConditionResult:
    """Run all replications of one condition and pool the metric inputs.

    Estimates enter the metric pool only from fits that both converged and
    were admissible.  If either arm ends up with fewer than ``MIN_USABLE``
    usable estimates for any tracked parameter, the condition is flagged
    degenerate and its reports are suppressed (not raised); exclusion
    counts are reported either way.
    """
    records = _collect_records(spec, workers)

    def count(arm: str, pred) -> int:
        return sum(1 for rec in records if pred(getattr(rec, arm)))

    exclusions = ExclusionCounts(
        nonconverged_ref=count("reference", lambda a: not a.converged),
        nonconverged_comp=count("comparison", lambda a: not a.converged),
        inadmissible_ref=count("reference", lambda a: a.converged and not a.admissible),
        inadmissible_comp=count(
            "comparison", lambda a: a.converged and not a.admissible
        ),
    )
    usable_ref = _pool_usable(records, spec.track_params, "reference")
    usable_comp = _pool_usable(records, spec.track_params, "comparison")

    degenerate = any(
        usable_ref[p].size < MIN_USABLE or usable_comp[p].size < MIN_USABLE
        for p in spec.track_params
    )
    reports: dict[str, MetricReport] = {}
    if not degenerate:
        for name in spec.track_params:
            reports[name] = compute_report(
                usable_ref[name],
                usable_comp[name],
                spec.true_value(name),
                mode=spec.overlap_mode,
            )
    return ConditionResult(
        spec=spec,
        records=records,
        exclusions=exclusions,
        usable_reference=usable_ref,
        usable_comparison=usable_comp,
        reports=reports,
        degenerate=degenerate,
    )


def run_grid_conditions(
    specs: list[ConditionSpec], workers: int = 1
) -> list[ConditionResult]:
    """Run a prepared list of conditions sequentially (reps parallelize)."""
    return [run_condition(spec, workers=workers) for spec in specs]
