"""Segmentation scoring: fuzzy interval intersection, precision/recall, sweeps.

Each interval set is lifted to a membership envelope over time. With a ramp
width of zero the envelope is the crisp indicator and all measures reduce to
exact interval-overlap arithmetic. With a positive ramp every boundary gets a
linear ramp of that width centered on it (a trapezoid per interval, upper
envelope per set). Precision is the intersection measure over the detected
measure; recall over the reference measure.

Integrals are computed exactly: envelopes are piecewise linear, so after
refining the breakpoint grid with pairwise crossings of active pieces the
pointwise minimum is linear on every cell and the trapezoid rule is exact.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .detector import DetectorConfig, StreamingDetector, frame_powers
from .errors import ConfigurationError
from .ingest import AudioStream

Interval = tuple[float, float]


@dataclass(frozen=True)
class FuzzyConfig:
    """Boundary ramp width in seconds; 0 means crisp intervals."""

    ramp_s: float = 0.0

    def __post_init__(self) -> None:
        if self.ramp_s < 0:
            raise ValueError(f"ramp_s must be >= 0, got {self.ramp_s}")


@dataclass(frozen=True)
class EvalPoint:
    n_std: float
    precision: float
    recall: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.precision <= 1.0 and 0.0 <= self.recall <= 1.0):
            raise ValueError(f"precision/recall out of [0,1]: {self}")


@dataclass
class Annotation:
    """Normalized ground-truth intervals: sorted, overlaps merged."""

    segments: list[Interval]
    source: str = ""

    def __post_init__(self) -> None:
        self.segments = normalize_intervals(self.segments)


def normalize_intervals(intervals) -> list[Interval]:
    """Sort intervals, drop empty ones, merge any that overlap or touch."""
    items = []
    for start, end in intervals:
        start, end = float(start), float(end)
        if not (math.isfinite(start) and math.isfinite(end)):
            raise ValueError(f"non-finite interval ({start}, {end})")
        if end > start:
            items.append((start, end))
    items.sort()
    merged: list[Interval] = []
    for start, end in items:
        if merged and start <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], end))
        else:
            merged.append((start, end))
    return merged


def _crisp_intersection(a: list[Interval], b: list[Interval]) -> float:
    total = 0.0
    i = j = 0
    while i < len(a) and j < len(b):
        lo = max(a[i][0], b[j][0])
        hi = min(a[i][1], b[j][1])
        if hi > lo:
            total += hi - lo
        if a[i][1] <= b[j][1]:
            i += 1
        else:
            j += 1
    return total


def _piece(interval: Interval, ramp: float, t0: float, t1: float) -> tuple[float, float] | None:
    """Membership of one trapezoid as endpoint values on [t0, t1], or None if zero."""
    s, e = interval
    half = ramp / 2.0

    def mu(t: float) -> float:
        up = (t - (s - half)) / ramp
        down = ((e + half) - t) / ramp
        return max(0.0, min(up, down, 1.0))

    v0, v1 = mu(t0), mu(t1)
    if v0 <= 0.0 and v1 <= 0.0:
        return None
    return v0, v1


def _envelope_nodes(intervals: list[Interval], ramp: float) -> list[float]:
    half = ramp / 2.0
    nodes = []
    for s, e in intervals:
        nodes.extend((s - half, s + half, e - half, e + half, 0.5 * (s + e)))
    return nodes


def _fuzzy_measure(set_a: list[Interval], set_b: list[Interval], ramp: float) -> float:
    """Integral of min(envelope(A), envelope(B)) for trapezoid memberships."""
    if not set_a or not set_b:
        return 0.0
    grid = sorted(set(_envelope_nodes(set_a, ramp) + _envelope_nodes(set_b, ramp)))
    total = 0.0
    for t0, t1 in zip(grid, grid[1:]):
        if t1 <= t0:
            continue
        pieces_a = [p for iv in set_a if (p := _piece(iv, ramp, t0, t1)) is not None]
        pieces_b = [p for iv in set_b if (p := _piece(iv, ramp, t0, t1)) is not None]
        if not pieces_a or not pieces_b:
            continue
        # refine with crossings so every sub-cell has a constant max/min ordering
        cuts = {t0, t1}
        pieces = pieces_a + pieces_b
        width = t1 - t0
        for i in range(len(pieces)):
            for j in range(i + 1, len(pieces)):
                d0 = pieces[i][0] - pieces[j][0]
                d1 = pieces[i][1] - pieces[j][1]
                if d0 * d1 < 0:
                    cuts.add(t0 + width * d0 / (d0 - d1))
        local = sorted(cuts)
        for u0, u1 in zip(local, local[1:]):
            f0 = (u0 - t0) / width
            f1 = (u1 - t0) / width
            env_a0 = max(v0 + (v1 - v0) * f0 for v0, v1 in pieces_a)
            env_a1 = max(v0 + (v1 - v0) * f1 for v0, v1 in pieces_a)
            env_b0 = max(v0 + (v1 - v0) * f0 for v0, v1 in pieces_b)
            env_b1 = max(v0 + (v1 - v0) * f1 for v0, v1 in pieces_b)
            m0 = min(env_a0, env_b0)
            m1 = min(env_a1, env_b1)
            total += 0.5 * (m0 + m1) * (u1 - u0)
    return total


def fuzzy_intersection(detected, truth, config: FuzzyConfig = FuzzyConfig()) -> float:
    """Measure of the overlap between two interval sets, in seconds."""
    a = normalize_intervals(detected)
    b = normalize_intervals(truth)
    if config.ramp_s == 0.0:
        return _crisp_intersection(a, b)
    return _fuzzy_measure(a, b, config.ramp_s)


def set_measure(intervals, config: FuzzyConfig = FuzzyConfig()) -> float:
    """Membership integral of one interval set alone."""
    norm = normalize_intervals(intervals)
    if config.ramp_s == 0.0:
        return float(sum(e - s for s, e in norm))
    return _fuzzy_measure(norm, norm, config.ramp_s)


def precision_recall(detected, truth, config: FuzzyConfig = FuzzyConfig()) -> tuple[float, float]:
    """(precision, recall) of detected intervals against reference intervals.

    Empty-set conventions: with nothing detected, precision is 1 when the
    reference is also empty, else 0; symmetrically for recall.
    """
    measure_s = set_measure(detected, config)
    measure_c = set_measure(truth, config)
    if measure_s == 0.0 and measure_c == 0.0:
        return 1.0, 1.0
    inter = fuzzy_intersection(detected, truth, config)
    precision = inter / measure_s if measure_s > 0 else (1.0 if measure_c == 0 else 0.0)
    recall = inter / measure_c if measure_c > 0 else (1.0 if measure_s == 0 else 0.0)
    return min(precision, 1.0), min(recall, 1.0)


def sweep(
    stream: AudioStream,
    truth: Annotation,
    config: DetectorConfig,
    n_std_grid,
    fuzzy: FuzzyConfig = FuzzyConfig(),
) -> list[EvalPoint]:
    """Precision/recall across a threshold grid, reusing one power pass."""
    grid = [float(v) for v in n_std_grid]
    if not grid or any(b < a for a, b in zip(grid, grid[1:])):
        raise ConfigurationError("n_std grid must be non-empty and ascending")
    powers = frame_powers(stream.samples, config.frame_samples)
    points = []
    for n_std in grid:
        cfg = dataclasses.replace(
            config, floor=dataclasses.replace(config.floor, n_std=n_std)
        )
        det = StreamingDetector(cfg, stream.sample_rate)
        det.feed_powers(powers)
        segments = det.finish()
        intervals = [(s.start_s, s.end_s) for s in segments]
        p, r = precision_recall(intervals, truth.segments, fuzzy)
        points.append(EvalPoint(n_std=n_std, precision=p, recall=r))
    return points


def default_grid(grid_min: float = 0.0, grid_max: float = 12.0, points: int = 25) -> list[float]:
    return list(np.linspace(grid_min, grid_max, points))


# annotation readers

def read_annotation_csv(path) -> Annotation:
    """CSV with a header containing start_s and end_s columns."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"start_s", "end_s"} <= set(reader.fieldnames):
            raise ConfigurationError(
                f"{path}: annotation CSV needs 'start_s' and 'end_s' columns, "
                f"got {reader.fieldnames}"
            )
        try:
            segs = [(float(row["start_s"]), float(row["end_s"])) for row in reader]
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"{path}: bad annotation row: {exc}") from exc
    return Annotation(segments=segs, source=str(path))


def read_selection_table(path) -> Annotation:
    """Tab-separated selection table with 'Begin Time (s)' / 'End Time (s)' columns."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh, delimiter="\t")
        fields = reader.fieldnames or []
        if "Begin Time (s)" not in fields or "End Time (s)" not in fields:
            raise ConfigurationError(
                f"{path}: selection table needs 'Begin Time (s)' and 'End Time (s)' "
                f"columns, got {fields}"
            )
        try:
            segs = [
                (float(row["Begin Time (s)"]), float(row["End Time (s)"])) for row in reader
            ]
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"{path}: bad selection row: {exc}") from exc
    return Annotation(segments=segs, source=str(path))


def load_annotation(path) -> Annotation:
    """Dispatch on content: selection tables are tab-separated, else CSV."""
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"annotation file not found: {path}")
    head = path.open().readline()
    if "Begin Time (s)" in head:
        return read_selection_table(path)
    return read_annotation_csv(path)
