"""Streaming event detector for stationary Gaussian background noise.

The sample stream is cut into non-overlapping frames of N samples, each
yielding one power estimate. Superblocks of K power estimates give a local
power mean and an unbiased power variance. A frame is background (H0) only if
both statistics fall strictly below thresholds derived from the tracked noise
floor; otherwise it is part of an event (H1). Runs of H1 frames become
segments, nearby segments merge, and segments shorter than a minimum duration
are discarded as impulses.

The pipeline is single-pass with state bounded by the floor timeframe and the
superblock length, independent of stream length, so multi-hour files process
in one sweep.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .floor import (
    EROSION,
    FloorConfig,
    SlidingExtremumTracker,
    floor_window_frames,
    Thresholds,
)
from .ingest import AudioStream
from .stats import RunningMoments


class Hypothesis(enum.IntEnum):
    H0 = 0  # background noise only
    H1 = 1  # transient event present


@dataclass(frozen=True)
class DetectorConfig:
    frame_samples: int = 256
    superblock_frames: int = 5
    min_event_s: float = 0.25
    merge_gap_s: float = 0.3
    floor: FloorConfig = field(default_factory=FloorConfig)
    sliding_superblocks: bool = True
    # Use the raw frame power instead of the superblock mean for the P test.
    frame_power_test: bool = False

    def __post_init__(self) -> None:
        if self.frame_samples < 2:
            raise ValueError(f"frame_samples must be >= 2, got {self.frame_samples}")
        if self.superblock_frames < 2:
            raise ValueError(
                f"superblock_frames must be >= 2, got {self.superblock_frames}"
            )
        if self.min_event_s < 0:
            raise ValueError(f"min_event_s must be >= 0, got {self.min_event_s}")
        if self.merge_gap_s < 0:
            raise ValueError(f"merge_gap_s must be >= 0, got {self.merge_gap_s}")


@dataclass(frozen=True)
class SuperblockStats:
    """Mean and unbiased variance of the frame powers in one superblock."""

    p_k: float
    q_k: float
    start_frame: int


@dataclass(frozen=True)
class Segment:
    start_s: float
    end_s: float
    label: str
    peak_power: float
    mean_power: float
    # True when the segment started before one full floor window existed, so
    # its thresholds came from a partially filled window.
    provisional: bool = False

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s


def frame_powers(samples, frame_samples: int) -> np.ndarray:
    """Mean squared amplitude per non-overlapping frame; trailing partial frame dropped."""
    if frame_samples < 2:
        raise ValueError(f"frame_samples must be >= 2, got {frame_samples}")
    x = np.asarray(samples, dtype=np.float64)
    n_frames = x.size // frame_samples
    if n_frames == 0:
        return np.empty(0, dtype=np.float64)
    trimmed = x[: n_frames * frame_samples].reshape(n_frames, frame_samples)
    return np.mean(np.square(trimmed), axis=1)


def _window_moments(values) -> tuple[float, float]:
    est = RunningMoments()
    for v in values:
        est.update(float(v))
    return est.mean, est.variance


def superblock_stats(powers, superblock_frames: int, sliding: bool = True) -> list[SuperblockStats]:
    """Superblock statistics over a power sequence.

    Sliding mode yields one record per frame from the K-th frame onward, over
    the window of the K most recent powers; block mode yields one record per
    group of K consecutive frames. Fewer than K powers yields an empty list.
    """
    if superblock_frames < 2:
        raise ValueError(f"superblock_frames must be >= 2, got {superblock_frames}")
    arr = np.asarray(powers, dtype=np.float64)
    k = superblock_frames
    out: list[SuperblockStats] = []
    if arr.size < k:
        return out
    if sliding:
        for i in range(k - 1, arr.size):
            mean, var = _window_moments(arr[i - k + 1 : i + 1])
            out.append(SuperblockStats(p_k=mean, q_k=var, start_frame=i - k + 1))
    else:
        for b in range(arr.size // k):
            mean, var = _window_moments(arr[b * k : (b + 1) * k])
            out.append(SuperblockStats(p_k=mean, q_k=var, start_frame=b * k))
    return out


def classify(stats: SuperblockStats, thr: Thresholds) -> Hypothesis:
    """H0 only when both statistics are strictly below threshold; ties are H1."""
    if stats.p_k < thr.p_thr and stats.q_k < thr.q_thr:
        return Hypothesis.H0
    return Hypothesis.H1


class _SegmentAssembler:
    """Turns a stream of per-frame labels into merged, impulse-filtered segments.

    State is O(1): one open run plus accumulators for the silence gap after
    it. A closed run is only emitted once the gap behind it grows past the
    merge limit (or at finish), so runs separated by small gaps fuse.
    """

    __slots__ = (
        "_fd", "_merge_gap_frames", "_keep_min_frames", "_provisional_before",
        "_start", "_end", "_sum", "_peak",
        "_gap_count", "_gap_sum", "_gap_peak", "_out",
    )

    def __init__(self, config: DetectorConfig, frame_duration_s: float,
                 provisional_before_frame: int = 0) -> None:
        self._fd = frame_duration_s
        self._merge_gap_frames = int(math.floor(config.merge_gap_s / frame_duration_s + 1e-9))
        self._keep_min_frames = max(1, int(math.ceil(config.min_event_s / frame_duration_s - 1e-9)))
        self._provisional_before = provisional_before_frame
        self._start = -1
        self._end = -1
        self._sum = 0.0
        self._peak = 0.0
        self._gap_count = 0
        self._gap_sum = 0.0
        self._gap_peak = 0.0
        self._out: list[Segment] = []

    def push(self, frame_idx: int, is_event: bool, power: float) -> None:
        if is_event:
            if self._start < 0:
                self._start = frame_idx
                self._sum = 0.0
                self._peak = 0.0
            elif self._gap_count > 0:
                # gap small enough to merge (a larger one would have flushed)
                self._sum += self._gap_sum
                self._peak = max(self._peak, self._gap_peak)
            self._gap_count = 0
            self._gap_sum = 0.0
            self._gap_peak = 0.0
            self._end = frame_idx + 1
            self._sum += power
            self._peak = max(self._peak, power)
        elif self._start >= 0:
            self._gap_count += 1
            self._gap_sum += power
            self._gap_peak = max(self._gap_peak, power)
            if self._gap_count > self._merge_gap_frames:
                self._flush()

    def _flush(self) -> None:
        frames = self._end - self._start
        if frames >= self._keep_min_frames:
            self._out.append(
                Segment(
                    start_s=self._start * self._fd,
                    end_s=self._end * self._fd,
                    label="detection",
                    peak_power=self._peak,
                    mean_power=self._sum / frames,
                    provisional=self._start < self._provisional_before,
                )
            )
        self._start = -1
        self._end = -1
        self._gap_count = 0
        self._gap_sum = 0.0
        self._gap_peak = 0.0

    def finish(self) -> list[Segment]:
        if self._start >= 0:
            self._flush()
        return self._out

    def state_size(self) -> int:
        return (1 if self._start >= 0 else 0) + (1 if self._gap_count else 0)


def assemble_segments(labels, config: DetectorConfig, frame_duration_s: float,
                      powers=None) -> list[Segment]:
    """Merge H1 runs into segments, fuse near gaps, drop sub-minimum events.

    ``labels`` is a per-frame sequence (truthy = H1). ``powers`` optionally
    supplies per-frame powers for the segments' peak/mean fields.
    """
    asm = _SegmentAssembler(config, frame_duration_s)
    for i, lab in enumerate(labels):
        p = float(powers[i]) if powers is not None else 0.0
        asm.push(i, bool(lab), p)
    return asm.finish()


class StreamingDetector:
    """Single-pass detector over a sample (or frame-power) stream.

    Feed samples in arbitrary chunks, then call :meth:`finish`. Decisions for
    a frame wait until the centered floor window around it has been observed,
    so output lags input by roughly half the floor timeframe; ``finish``
    resolves the tail with truncated windows, matching the batch erosion
    semantics exactly.

    In sliding-superblock mode the statistics of the window ending at frame
    ``i`` are attributed to the window's center frame, keeping detected
    boundaries aligned with the event rather than trailing it.
    """

    def __init__(self, config: DetectorConfig, sample_rate: float,
                 record_labels: bool = False) -> None:
        if sample_rate <= 0:
            raise ValueError(f"sample_rate must be > 0, got {sample_rate}")
        self._config = config
        n = config.frame_samples
        k = config.superblock_frames
        self._n = n
        self._k = k
        self._fd = n / float(sample_rate)
        self._window = floor_window_frames(config.floor.timeframe_s, sample_rate, n)
        self._half = (self._window - 1) // 2
        self._lag = (k - 1) // 2 if config.sliding_superblocks else 0

        fl = config.floor
        self._erosion = fl.mode == EROSION
        if self._erosion:
            self._floor_scale = 10.0 ** (fl.alpha_f_db / 10.0)
        else:
            self._floor_scale = 10.0 ** (-fl.dilation_divisor_db / 10.0)
        self._floor_eps = fl.power_epsilon
        # thresholds are linear/quadratic in the floor estimate
        self._cp = 1.0 + fl.n_std * math.sqrt(2.0 / n)
        self._cq = 2.0 / n + fl.n_std * math.sqrt(8.0 * (n + 6.0) / (float(n) ** 3 * k))

        self._carry = np.empty(0, dtype=np.float64)
        self._frames_done = 0
        self._recent: deque[float] = deque(maxlen=k)
        self._raw: deque[float] = deque(maxlen=self._lag + 1)
        self._block: list[float] = []
        self._block_start = 0
        self._pending: deque[tuple[int, float, float | None, float | None]] = deque()
        self._to_floor: deque[tuple[int, float]] = deque()
        self._tracker = SlidingExtremumTracker(self._window, take_min=self._erosion)
        self._assembler = _SegmentAssembler(
            config, self._fd, provisional_before_frame=self._window
        )
        self._labels: list[bool] | None = [] if record_labels else None
        self._finished = False

    @property
    def frame_duration_s(self) -> float:
        return self._fd

    @property
    def labels(self) -> np.ndarray:
        if self._labels is None:
            raise ValueError("detector was not created with record_labels=True")
        return np.asarray(self._labels, dtype=bool)

    def feed(self, samples) -> None:
        """Ingest a chunk of samples (any length, any chunking)."""
        if self._finished:
            raise ValueError("detector already finished")
        x = np.asarray(samples, dtype=np.float64).ravel()
        if self._carry.size:
            x = np.concatenate([self._carry, x])
        n_frames = x.size // self._n
        if n_frames:
            powers = np.mean(
                np.square(x[: n_frames * self._n].reshape(n_frames, self._n)), axis=1
            )
            for p in powers:
                self._ingest_power(float(p))
        self._carry = x[n_frames * self._n :].copy()

    def feed_powers(self, powers) -> None:
        """Ingest precomputed frame powers directly (bypasses framing)."""
        if self._finished:
            raise ValueError("detector already finished")
        for p in np.asarray(powers, dtype=np.float64):
            self._ingest_power(float(p))

    def finish(self) -> list[Segment]:
        """Resolve the tail (truncated windows) and return segments in time order."""
        if self._finished:
            raise ValueError("detector already finished")
        self._finished = True
        # trailing partial frame is discarded; remaining decisions see a floor
        # window truncated at the final frame
        while self._to_floor:
            idx, p = self._to_floor.popleft()
            self._tracker.push(idx, p)
        while self._pending:
            self._decide(*self._pending.popleft())
        return self._assembler.finish()

    def state_size(self) -> int:
        """Total buffered elements; bounded by window lengths, not stream length."""
        return (
            self._carry.size
            + len(self._recent)
            + len(self._raw)
            + len(self._block)
            + len(self._pending)
            + len(self._to_floor)
            + self._tracker.state_size()
            + self._assembler.state_size()
        )

    # internal

    def _ingest_power(self, p: float) -> None:
        idx = self._frames_done
        self._frames_done += 1
        self._to_floor.append((idx, p))
        self._raw.append(p)

        if self._config.sliding_superblocks:
            self._recent.append(p)
            center = idx - self._lag
            if center >= 0:
                if idx >= self._k - 1:
                    mean, var = _window_moments(self._recent)
                    self._pending.append((center, self._raw[0], mean, var))
                else:
                    self._pending.append((center, self._raw[0], None, None))
        else:
            self._block.append(p)
            if len(self._block) == self._k:
                mean, var = _window_moments(self._block)
                for off, raw in enumerate(self._block):
                    self._pending.append((self._block_start + off, raw, mean, var))
                self._block = []
                self._block_start = idx + 1

        ready = self._frames_done - 1 - self._half
        while self._pending and self._pending[0][0] <= ready:
            self._decide(*self._pending.popleft())

    def _decide(self, idx: int, raw: float, p_k: float | None, q_k: float | None) -> None:
        hi = idx + self._half
        while self._to_floor and self._to_floor[0][0] <= hi:
            j, v = self._to_floor.popleft()
            self._tracker.push(j, v)
        floor_est = max(self._tracker.value_for(idx) * self._floor_scale, self._floor_eps)
        p_thr = self._cp * floor_est
        q_thr = self._cq * floor_est * floor_est

        if p_k is None:
            is_event = False
        else:
            p_stat = raw if self._config.frame_power_test else p_k
            is_event = not (p_stat < p_thr and q_k < q_thr)
        if self._labels is not None:
            self._labels.append(is_event)
        self._assembler.push(idx, is_event, raw)


def detect(stream: AudioStream, config: DetectorConfig,
           record_labels: bool = False) -> list[Segment]:
    """Run the full detection pipeline over an in-memory stream."""
    det = StreamingDetector(config, stream.sample_rate, record_labels=record_labels)
    det.feed(stream.samples)
    return det.finish()


def detect_powers(powers, config: DetectorConfig, sample_rate: float) -> list[Segment]:
    """Detect from precomputed frame powers (used by threshold sweeps)."""
    det = StreamingDetector(config, sample_rate)
    det.feed_powers(powers)
    return det.finish()


def detect_labels(powers, config: DetectorConfig, sample_rate: float) -> np.ndarray:
    """Per-frame H1 labels from precomputed frame powers."""
    det = StreamingDetector(config, sample_rate, record_labels=True)
    det.feed_powers(powers)
    det.finish()
    return det.labels
