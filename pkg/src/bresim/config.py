"""Run configuration: plain key=value files with a strict, documented schema.

Example::

    master_seed = 20240817
    rho_levels = 0.1, 0.3, 0.55
    n_levels = 100, 500
    replications = 200
    design = swmd6
    overlap_mode = paper
    track_params = slope_slope_corr
    output_dir = results
    workers = 2
    population.slope_var = 0.25

Blank lines and lines starting with ``#`` are ignored.  Unknown keys are
hard errors: a typo in a simulation config must never be silently ignored.
``master_seed`` has no default on purpose (reproducibility requires an
explicit seed); it may be supplied here or by the command line.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .design import MissingDesign, complete_design, swmd6
from .errors import ConfigError
from .fiml import available_params
from .harness import ConditionSpec
from .lgm import N_WAVES, default_population
from .metrics import OverlapMode

__all__ = [
    "RunConfig",
    "parse_config_text",
    "load_config",
    "build_condition_specs",
]

# Keys that map one-to-one onto default_population keyword arguments.
_POPULATION_SCALARS = (
    "intercept_mean",
    "slope_mean",
    "intercept_var",
    "slope_var",
    "intercept_slope_corr",
    "cross_intercept_corr",
    "cross_intercept_slope_corr",
    "wave_residual_var",
    "indicator_reliability",
)
_POPULATION_LISTS = (
    "loadings",
    "indicator_intercepts",
    "indicator_residual_var",
    "time_scores",
)

_DESIGNS = ("swmd6", "complete", "custom")


@dataclass(frozen=True)
class RunConfig:
    """Validated simulation run settings."""

    master_seed: int | None = None
    rho_levels: tuple[float, ...] = (0.1, 0.3, 0.55)
    n_levels: tuple[int, ...] = (40, 60, 80, 100, 300, 500, 800, 1000)
    replications: int = 200
    design_name: str = "swmd6"
    custom_design_rows: tuple[str, ...] | None = None
    overlap_mode: OverlapMode = OverlapMode.PAPER
    track_params: tuple[str, ...] = ("slope_slope_corr",)
    output_dir: str = "results"
    workers: int = 1
    population_overrides: tuple[tuple[str, object], ...] = ()

    def design(self) -> MissingDesign:
        if self.design_name == "swmd6":
            return swmd6()
        if self.design_name == "complete":
            return complete_design()
        rows = self.custom_design_rows or ()
        mask = np.array([[ch == "1" for ch in row] for row in rows], dtype=bool)
        return MissingDesign(
            "custom", mask, np.full(mask.shape[0], 1.0 / mask.shape[0])
        )


def _fail(key: str, message: str) -> ConfigError:
    return ConfigError(f"config key {key!r}: {message}")


def _parse_int(key: str, raw: str, minimum: int | None = None) -> int:
    try:
        value = int(raw)
    except ValueError:
        raise _fail(key, f"expected an integer, got {raw!r}") from None
    if minimum is not None and value < minimum:
        raise _fail(key, f"must be >= {minimum}, got {value}")
    return value


def _parse_float(key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise _fail(key, f"expected a number, got {raw!r}") from None


def _parse_float_list(key: str, raw: str) -> tuple[float, ...]:
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    if not parts:
        raise _fail(key, "expected a non-empty comma-separated list")
    return tuple(_parse_float(key, p) for p in parts)


def _validate_rho(key: str, value: float) -> float:
    if not -1.0 < value < 1.0:
        raise _fail(key, f"rho must lie strictly between -1 and 1, got {value:g}")
    if value == 0.0:
        raise _fail(
            key,
            "rho 0 is not allowed: median relative bias is undefined at a "
            "zero true value (ZeroTrueParameter)",
        )
    return value


def parse_config_text(text: str) -> RunConfig:
    """Parse config text; unknown or duplicate keys raise ConfigError."""
    seen: set[str] = set()
    values: dict[str, object] = {}
    pop_overrides: list[tuple[str, object]] = []

    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {line!r}")
        key, _, raw = line.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        seen.add(key)

        if key == "master_seed":
            values["master_seed"] = _parse_int(key, raw, minimum=0)
        elif key == "rho_levels":
            values["rho_levels"] = tuple(
                _validate_rho(key, v) for v in _parse_float_list(key, raw)
            )
        elif key == "n_levels":
            values["n_levels"] = tuple(
                _parse_int(key, p.strip(), minimum=1)
                for p in raw.split(",")
                if p.strip()
            )
        elif key == "replications":
            values["replications"] = _parse_int(key, raw, minimum=1)
        elif key == "design":
            if raw not in _DESIGNS:
                raise _fail(key, f"expected one of {_DESIGNS}, got {raw!r}")
            values["design_name"] = raw
        elif key == "design.rows":
            rows = tuple(r.strip() for r in raw.split(";") if r.strip())
            for row in rows:
                if len(row) != N_WAVES or any(ch not in "01" for ch in row):
                    raise _fail(
                        key, f"each row must be {N_WAVES} characters of 0/1, got {row!r}"
                    )
            values["custom_design_rows"] = rows
        elif key == "overlap_mode":
            try:
                values["overlap_mode"] = OverlapMode(raw.lower())
            except ValueError:
                raise _fail(key, f"expected paper or symmetric, got {raw!r}") from None
        elif key == "track_params":
            names = tuple(p.strip() for p in raw.split(",") if p.strip())
            unknown = [n for n in names if n not in available_params()]
            if unknown:
                raise _fail(
                    key, f"unknown parameter(s) {unknown}; available: "
                    f"{list(available_params())}"
                )
            values["track_params"] = names
        elif key == "output_dir":
            values["output_dir"] = raw
        elif key == "workers":
            values["workers"] = _parse_int(key, raw, minimum=1)
        elif key.startswith("population."):
            field_name = key[len("population."):]
            if field_name in _POPULATION_SCALARS:
                pop_overrides.append((field_name, _parse_float(key, raw)))
            elif field_name in _POPULATION_LISTS:
                pop_overrides.append((field_name, _parse_float_list(key, raw)))
            else:
                raise ConfigError(
                    f"unknown configuration key {key!r}; population overrides "
                    f"accept {sorted(_POPULATION_SCALARS + _POPULATION_LISTS)}"
                )
        else:
            raise ConfigError(f"unknown configuration key {key!r}")

    config = RunConfig(population_overrides=tuple(pop_overrides), **values)
    _validate_config(config)
    return config


def _validate_config(config: RunConfig) -> None:
    if not config.rho_levels:
        raise ConfigError("rho_levels must not be empty")
    if not config.n_levels:
        raise ConfigError("n_levels must not be empty")
    if config.design_name == "custom" and not config.custom_design_rows:
        raise ConfigError("design = custom requires design.rows")
    design = config.design()
    if min(config.n_levels) < design.n_groups:
        raise ConfigError(
            f"smallest n level {min(config.n_levels)} is below the "
            f"{design.n_groups} groups of design {design.name!r}"
        )
    # Probe one population build so bad overrides fail at config time.
    try:
        default_population(
            config.rho_levels[0], **dict(config.population_overrides)
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid population overrides: {exc}") from None


def load_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from None
    return parse_config_text(text)


def with_overrides(
    config: RunConfig,
    *,
    master_seed: int | None = None,
    replications: int | None = None,
    output_dir: str | None = None,
    workers: int | None = None,
) -> RunConfig:
    """Apply command-line overrides on top of a parsed config."""
    updates: dict[str, object] = {}
    if master_seed is not None:
        if master_seed < 0:
            raise ConfigError("master_seed must be non-negative")
        updates["master_seed"] = master_seed
    if replications is not None:
        if replications < 1:
            raise ConfigError("replications must be >= 1")
        updates["replications"] = replications
    if output_dir is not None:
        updates["output_dir"] = output_dir
    if workers is not None:
        if workers < 1:
            raise ConfigError("workers must be >= 1")
        updates["workers"] = workers
    return replace(config, **updates) if updates else config


def build_condition_specs(config: RunConfig) -> list[ConditionSpec]:
    """Cartesian rho x n grid, rho-major, with stable condition indices."""
    if config.master_seed is None:
        raise ConfigError(
            "master_seed is required (set it in the config file or pass --seed)"
        )
    design = config.design()
    overrides = dict(config.population_overrides)
    specs = []
    index = 0
    for rho in config.rho_levels:
        population = default_population(rho, **overrides)
        for n in config.n_levels:
            specs.append(
                ConditionSpec(
                    rho=rho,
                    n=n,
                    replications=config.replications,
                    design=design,
                    population=population,
                    overlap_mode=config.overlap_mode,
                    track_params=config.track_params,
                    master_seed=config.master_seed,
                    condition_index=index,
                )
            )
            index += 1
    return specs
