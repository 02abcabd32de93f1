"""Run configuration: flat TOML keys, validated at parse time.

Every key is optional; an empty file yields the numerical-study defaults.
Power values are given in dB against unit noise power and converted once
here, so downstream code only ever sees linear powers.
"""

from __future__ import annotations

import dataclasses
import math
import sys
from dataclasses import dataclass

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .errors import ConfigError, DomainError
from .params import POWER_UNITS, EstimatorKind, SystemParams, db_to_lin

FORMATS = ("csv", "json")
COMPARE_AXES = ("p_avg", "pd")


@dataclass(frozen=True)
class RunConfig:
    # physical parameters
    T: float = 0.1
    N: float = 0.01
    B: float = 1000.0
    sigma_h2: float = 1.0
    sigma_n2: float = 1.0
    sigma_s2: float = 1.0
    theta: float = 0.1
    a: float = 0.9
    b: float = 0.1
    power_unit: str = "symbol"
    # operating point
    eta: float = 0.1
    p_avg_db: tuple = (0.0,)
    p_peak_db: float = 10.0
    estimator: str = "mismatched"
    pd: float = 0.92
    pf: float = math.nan
    # fixed policy for capacity / simulate
    r1: float = 200.0
    r2: float = 800.0
    p1_db: float = 0.0
    p2_db: float = 0.0
    # sweeps
    pd_min: float = 0.05
    pd_max: float = 0.99
    pd_points: int = 95
    eta_min: float = 0.05
    eta_max: float = 0.30
    eta_points: int = 26
    compare_axis: str = "p_avg"
    compare_p_avg_db_min: float = 0.0
    compare_p_avg_db_max: float = 10.0
    compare_p_avg_db_points: int = 11
    # optimizer resolution
    power_points: int = 17
    rate_points: int = 40
    # simulation
    n_frames: int = 200_000
    block_len: int = 100
    mean_gain: float = 1.0
    trace: bool = False
    validate_theta: float = 0.002
    prepass_samples: int = 1_000_000
    # run
    seed: int = 0
    out: str = "results.csv"
    format: str = "csv"

    def __post_init__(self):
        try:
            self.system_params()
        except ConfigError:
            raise
        for key in ("pd_points", "eta_points", "compare_p_avg_db_points"):
            if getattr(self, key) < 1:
                raise ConfigError(f"{key} must be at least 1", key=key)
        for key in ("power_points", "rate_points"):
            if getattr(self, key) < 8:
                raise ConfigError(f"{key} must be at least 8", key=key)
        for lo, hi in (("pd_min", "pd_max"), ("eta_min", "eta_max")):
            if not 0 < getattr(self, lo) <= getattr(self, hi) < 1:
                raise ConfigError(f"need 0 < {lo} <= {hi} < 1", key=lo)
        if not 0 < self.pd < 1:
            raise ConfigError("pd must lie in (0, 1)", key="pd")
        if not (math.isnan(self.pf) or 0 <= self.pf <= 1):
            raise ConfigError("pf must lie in [0, 1]", key="pf")
        if not 0 < self.eta < 1:
            raise ConfigError("eta must lie in (0, 1)", key="eta")
        if not math.isfinite(self.p_peak_db):
            raise ConfigError("p_peak_db must be finite", key="p_peak_db")
        if not self.p_avg_db or any(not math.isfinite(v) for v in self.p_avg_db):
            raise ConfigError("p_avg_db must be finite", key="p_avg_db")
        try:
            EstimatorKind.parse(self.estimator)
        except ValueError as exc:
            raise ConfigError(str(exc), key="estimator") from None
        if self.r1 < 0 or self.r2 < 0:
            raise ConfigError("rates must be non-negative", key="r1" if self.r1 < 0 else "r2")
        if self.n_frames < 1:
            raise ConfigError("n_frames must be at least 1", key="n_frames")
        if self.block_len < 1:
            raise ConfigError("block_len must be at least 1", key="block_len")
        if not self.mean_gain > 0:
            raise ConfigError("mean_gain must be positive", key="mean_gain")
        if not self.validate_theta > 0:
            raise ConfigError("validate_theta must be positive", key="validate_theta")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative", key="seed")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}", key="format")
        if self.compare_axis not in COMPARE_AXES:
            raise ConfigError(f"compare_axis must be one of {COMPARE_AXES}", key="compare_axis")

    def system_params(self) -> SystemParams:
        return SystemParams(**{f.name: getattr(self, f.name) for f in dataclasses.fields(SystemParams)})

    @property
    def kind(self) -> EstimatorKind:
        return EstimatorKind.parse(self.estimator)

    @property
    def p_avg_lin(self):
        return tuple(db_to_lin(v) for v in self.p_avg_db)

    @property
    def p_peak_lin(self):
        return db_to_lin(self.p_peak_db)

    def to_mapping(self):
        d = dataclasses.asdict(self)
        d["p_avg_db"] = list(self.p_avg_db)
        return d


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}
_INT_KEYS = {name for name, f in _FIELDS.items() if f.type == "int"}
_BOOL_KEYS = {name for name, f in _FIELDS.items() if f.type == "bool"}
_STR_KEYS = {name for name, f in _FIELDS.items() if f.type == "str"}


def _coerce(key, value):
    if key == "p_avg_db":
        items = value if isinstance(value, list) else [value]
        if any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in items):
            raise ConfigError("p_avg_db must be a number or a list of numbers", key=key)
        return tuple(float(v) for v in items)
    if key in _BOOL_KEYS:
        if not isinstance(value, bool):
            raise ConfigError(f"{key} must be a boolean", key=key)
        return value
    if key in _STR_KEYS:
        if not isinstance(value, str):
            raise ConfigError(f"{key} must be a string", key=key)
        return value
    if isinstance(value, bool):
        raise ConfigError(f"{key} must be a number", key=key)
    if key in _INT_KEYS:
        if not isinstance(value, int):
            raise ConfigError(f"{key} must be an integer", key=key)
        return value
    if not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number", key=key)
    return float(value)


def config_from_mapping(data, **overrides) -> RunConfig:
    """Build a RunConfig from a flat mapping; unknown keys are rejected."""
    values = {}
    for key, value in {**data, **overrides}.items():
        if key not in _FIELDS:
            raise ConfigError(f"unknown configuration key {key!r}", key=key)
        if isinstance(value, dict):
            raise ConfigError(f"{key}: nested tables are not supported", key=key)
        values[key] = _coerce(key, value)
    try:
        return RunConfig(**values)
    except ConfigError:
        raise
    except DomainError as exc:
        raise ConfigError(str(exc)) from None


def parse_config(text, **overrides) -> RunConfig:
    """Parse flat TOML text into a validated RunConfig."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed configuration: {exc}") from None
    return config_from_mapping(data, **overrides)


__all__ = ["RunConfig", "parse_config", "config_from_mapping", "POWER_UNITS", "FORMATS"]
