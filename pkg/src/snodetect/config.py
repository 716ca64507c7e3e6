"""Configuration loading and merging.

Precedence: CLI flag > environment (SNO_*) > user config file > shipped
defaults. The shipped defaults file also carries the fixed filter
coefficients (band-pass sections and per-factor decimation FIR taps).
"""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .detector import DetectorConfig
from .errors import ConfigurationError, UnsupportedRateError
from .floor import FloorConfig
from .ingest import BandpassSpec

log = logging.getLogger(__name__)


@functools.lru_cache(maxsize=1)
def default_config() -> dict:
    text = resources.files("snodetect").joinpath("data/default_config.yaml").read_text()
    return yaml.safe_load(text)


def load_config(path=None) -> dict:
    """Shipped defaults, deep-merged with an optional user YAML file."""
    merged = _deep_copy(default_config())
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigurationError(f"config file not found: {p}")
        try:
            user = yaml.safe_load(p.read_text())
        except yaml.YAMLError as exc:
            raise ConfigurationError(f"config file {p} is not valid YAML: {exc}") from exc
        if user is None:
            user = {}
        if not isinstance(user, dict):
            raise ConfigurationError(f"config file {p} must contain a mapping")
        _deep_merge(merged, user, source=str(p))
    return merged


def _deep_copy(obj):
    if isinstance(obj, dict):
        return {k: _deep_copy(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_deep_copy(v) for v in obj]
    return obj


def _deep_merge(base: dict, override: dict, source: str, prefix: str = "") -> None:
    for key, value in override.items():
        label = f"{prefix}{key}"
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            _deep_merge(base[key], value, source, prefix=f"{label}.")
        else:
            if key in base and base[key] != value:
                log.info("config: %s = %r (from %s)", label, value, source)
            base[key] = value


def apply_overrides(cfg: dict, overrides: dict[str, object]) -> dict:
    """Apply dotted-key overrides (e.g. from CLI flags); None values are skipped."""
    for dotted, value in overrides.items():
        if value is None:
            continue
        node = cfg
        parts = dotted.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        if node.get(parts[-1]) != value:
            log.info("config: %s = %r (cli)", dotted, value)
        node[parts[-1]] = value
    return cfg


def floor_config(cfg: dict) -> FloorConfig:
    f = cfg.get("floor", {})
    try:
        return FloorConfig(
            timeframe_s=float(f.get("timeframe_s", 60.0)),
            alpha_f_db=float(f.get("alpha_f_db", 6.0)),
            n_std=float(f.get("n_std", 3.0)),
            mode=str(f.get("mode", "erosion")),
            dilation_divisor_db=float(f.get("dilation_divisor_db", 6.0)),
            power_epsilon=float(f.get("power_epsilon", 1e-12)),
        )
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from exc


def detector_config(cfg: dict) -> DetectorConfig:
    d = cfg.get("detector", {})
    try:
        return DetectorConfig(
            frame_samples=int(d.get("frame_samples", 256)),
            superblock_frames=int(d.get("superblock_frames", 5)),
            min_event_s=float(d.get("min_event_s", 0.25)),
            merge_gap_s=float(d.get("merge_gap_s", 0.3)),
            floor=floor_config(cfg),
            sliding_superblocks=bool(d.get("sliding_superblocks", True)),
            frame_power_test=bool(d.get("frame_power_test", False)),
        )
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from exc


def bandpass_spec(cfg: dict | None = None) -> BandpassSpec:
    cfg = cfg if cfg is not None else default_config()
    b = cfg["bandpass"]
    return BandpassSpec(
        low_cut=float(b["low_cut"]),
        high_cut=float(b["high_cut"]),
        design_rate=int(b["design_rate"]),
        sections=np.asarray(b["sections"], dtype=np.float64),
    )


def decimation_taps(factor: int, cfg: dict | None = None) -> np.ndarray:
    cfg = cfg if cfg is not None else default_config()
    table = cfg["decimation_fir"]
    if factor not in table:
        raise UnsupportedRateError(
            f"no shipped anti-alias filter for decimation factor {factor}; "
            f"available factors: {sorted(table)}"
        )
    return np.asarray(table[factor], dtype=np.float64)


@dataclass(frozen=True)
class IngestConfig:
    target_rate: int = 8000
    bandpass_enabled: bool = True


def ingest_config(cfg: dict) -> IngestConfig:
    i = cfg.get("ingest", {})
    target = int(i.get("target_rate", 8000))
    if target <= 0:
        raise ConfigurationError(f"target_rate must be > 0, got {target}")
    return IngestConfig(
        target_rate=target,
        bandpass_enabled=bool(i.get("bandpass_enabled", True)),
    )


@dataclass(frozen=True)
class EvalConfig:
    ramp_s: float = 0.0
    grid_min: float = 0.0
    grid_max: float = 12.0
    grid_points: int = 25


def eval_config(cfg: dict) -> EvalConfig:
    e = cfg.get("eval", {})
    ec = EvalConfig(
        ramp_s=float(e.get("ramp_s", 0.0)),
        grid_min=float(e.get("grid_min", 0.0)),
        grid_max=float(e.get("grid_max", 12.0)),
        grid_points=int(e.get("grid_points", 25)),
    )
    if ec.ramp_s < 0:
        raise ConfigurationError(f"ramp_s must be >= 0, got {ec.ramp_s}")
    if ec.grid_points < 1 or ec.grid_max < ec.grid_min:
        raise ConfigurationError("sweep grid must be non-empty and ascending")
    return ec


@dataclass(frozen=True)
class RunConfig:
    """Merged view of everything a CLI run needs."""

    ingest: IngestConfig
    detector: DetectorConfig
    eval: EvalConfig
    output_format: str = "csv"
    jobs: int = 1


def run_config(cfg: dict) -> RunConfig:
    out = cfg.get("output", {})
    fmt = str(out.get("format", "csv"))
    if fmt not in ("csv", "json", "raven"):
        raise ConfigurationError(f"output format must be csv, json or raven, got {fmt!r}")
    jobs = int(cfg.get("jobs", 1))
    if jobs < 1:
        raise ConfigurationError(f"jobs must be >= 1, got {jobs}")
    return RunConfig(
        ingest=ingest_config(cfg),
        detector=detector_config(cfg),
        eval=eval_config(cfg),
        output_format=fmt,
        jobs=jobs,
    )
