"""Noise-floor tracking via sliding-window morphology of frame powers.

The background level is taken from the local minimum (erosion) of the frame
power sequence over a timeframe window, modulated upward by a dB coefficient
to approximate the mean noise power; thresholds are then the closed-form
noise statistics evaluated at that estimate, plus a configurable number of
standard deviations.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .stats import NoiseParams, power_stats, var_stats

log = logging.getLogger(__name__)

EROSION = "erosion"
DILATION = "dilation"


@dataclass(frozen=True)
class FloorConfig:
    """How the noise floor is tracked and turned into thresholds."""

    timeframe_s: float = 60.0
    alpha_f_db: float = 6.0           # floor modulation, applied to the local minimum
    n_std: float = 3.0                # threshold margin in standard deviations
    mode: str = EROSION
    dilation_divisor_db: float = 6.0  # only used in dilation mode
    power_epsilon: float = 1e-12      # lower clamp for the floor estimate

    def __post_init__(self) -> None:
        if not self.timeframe_s > 0:
            raise ValueError(f"timeframe_s must be > 0, got {self.timeframe_s}")
        if self.n_std < 0:
            raise ValueError(f"n_std must be >= 0, got {self.n_std}")
        if self.mode not in (EROSION, DILATION):
            raise ValueError(f"mode must be '{EROSION}' or '{DILATION}', got {self.mode!r}")
        if self.power_epsilon <= 0:
            raise ValueError("power_epsilon must be > 0")
        if not 1.0 <= self.alpha_f_db <= 10.0:
            log.warning(
                "alpha_f_db=%.3g outside the recommended 1-10 dB range", self.alpha_f_db
            )


@dataclass(frozen=True)
class Thresholds:
    """Power and power-variance decision thresholds for one floor estimate."""

    p_thr: float
    q_thr: float
    p_est_mean: float


def floor_window_frames(timeframe_s: float, sample_rate: float, frame_samples: int) -> int:
    """Timeframe expressed in frames, forced odd so the window centers cleanly."""
    w = max(1, round(timeframe_s * sample_rate / frame_samples))
    return w if w % 2 == 1 else w + 1


def _sliding_extremum(values: np.ndarray, window: int, take_min: bool) -> np.ndarray:
    """Centered sliding min/max with replicated edges, via a monotonic deque.

    Amortized O(1) per element. Edge replication is equivalent to truncating
    the window at the sequence boundaries, which is how it is implemented.
    """
    n = len(values)
    half = (window - 1) // 2
    out = np.empty(n, dtype=np.float64)
    q: deque[int] = deque()  # indices, values[q] monotone (increasing for min)
    right = 0
    for i in range(n):
        hi = min(n - 1, i + half)
        while right <= hi:
            v = values[right]
            if take_min:
                while q and values[q[-1]] >= v:
                    q.pop()
            else:
                while q and values[q[-1]] <= v:
                    q.pop()
            q.append(right)
            right += 1
        lo = i - half
        while q[0] < lo:
            q.popleft()
        out[i] = values[q[0]]
    return out


def _check_window(values, window: int) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("input sequence is empty")
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be odd and >= 1, got {window}")
    return arr


def erode(powers, window_frames: int) -> np.ndarray:
    """Sliding local minimum over a centered window of odd length."""
    arr = _check_window(powers, window_frames)
    return _sliding_extremum(arr, window_frames, take_min=True)


def dilate(powers, window_frames: int) -> np.ndarray:
    """Sliding local maximum over a centered window of odd length."""
    arr = _check_window(powers, window_frames)
    return _sliding_extremum(arr, window_frames, take_min=False)


def estimate_floor(local_extrema, config: FloorConfig) -> np.ndarray:
    """Mean-power estimate from local extrema.

    Erosion mode scales the local minimum up by alpha_f_db; dilation mode
    scales the local maximum down by dilation_divisor_db. Clamped below by
    config.power_epsilon so downstream thresholds stay positive.
    """
    arr = np.asarray(local_extrema, dtype=np.float64)
    if config.mode == EROSION:
        est = arr * 10.0 ** (config.alpha_f_db / 10.0)
    else:
        est = arr / 10.0 ** (config.dilation_divisor_db / 10.0)
    return np.maximum(est, config.power_epsilon)


def thresholds_from_floor(
    p_est_mean: float, params: NoiseParams, config: FloorConfig
) -> Thresholds:
    """Decision thresholds with the noise statistics evaluated at the floor.

    p_thr = p_est + n_std * sqrt(2 * p_est**2 / N)
    q_thr = 2 * p_est**2 / N + n_std * sqrt(8 * (N + 6) * p_est**4 / (N**3 * K))
    """
    if not p_est_mean > 0:
        raise ValueError(f"p_est_mean must be > 0, got {p_est_mean}")
    at_floor = dataclasses.replace(params, sigma_x2=p_est_mean)
    ps = power_stats(at_floor)
    vs = var_stats(at_floor)
    return Thresholds(
        p_thr=ps.p_mean + config.n_std * math.sqrt(ps.p_var),
        q_thr=vs.q_mean + config.n_std * math.sqrt(vs.q_var),
        p_est_mean=p_est_mean,
    )


class SlidingExtremumTracker:
    """Streaming counterpart of erode/dilate over a growing index sequence.

    Values are pushed in index order; ``value_for(center)`` returns the
    extremum over indices [center - half, center + half], truncated to what
    has been pushed so far. Callers must query centers in nondecreasing order.
    """

    __slots__ = ("_half", "_take_min", "_q")

    def __init__(self, window_frames: int, take_min: bool = True) -> None:
        if window_frames < 1 or window_frames % 2 == 0:
            raise ValueError(f"window must be odd and >= 1, got {window_frames}")
        self._half = (window_frames - 1) // 2
        self._take_min = take_min
        self._q: deque[tuple[int, float]] = deque()

    def push(self, index: int, value: float) -> None:
        if self._take_min:
            while self._q and self._q[-1][1] >= value:
                self._q.pop()
        else:
            while self._q and self._q[-1][1] <= value:
                self._q.pop()
        self._q.append((index, value))

    def value_for(self, center: int) -> float:
        lo = center - self._half
        while self._q and self._q[0][0] < lo:
            self._q.popleft()
        if not self._q:
            raise ValueError("no values in window; push before querying")
        return self._q[0][1]

    def state_size(self) -> int:
        return len(self._q)
