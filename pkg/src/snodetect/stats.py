"""Statistics of frame power under a stationary Gaussian noise model.

For zero-mean Gaussian samples with variance ``sigma_x2``, the mean power of
an ``N``-sample frame, ``P = (1/N) * sum(x_i**2)``, is Gamma distributed with
shape ``N/2`` and rate ``N / (2*sigma_x2)``. From that follow closed forms
for the mean and variance of ``P`` and for the mean and variance of ``Q``,
the variance of ``K`` independent power estimates. Those four numbers are
what the detector's thresholds are built from.

Also provides the single-pass recursive mean/variance estimator (with
optional prior "phantom" observations) used to compute superblock statistics
on line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln


@dataclass(frozen=True)
class NoiseParams:
    """Noise model parameters: amplitude variance plus frame/superblock sizes."""

    sigma_x2: float
    frame_samples: int        # N, samples per power estimate
    superblock_frames: int    # K, power estimates per variance estimate

    def __post_init__(self) -> None:
        if not (self.sigma_x2 > 0 and math.isfinite(self.sigma_x2)):
            raise ValueError(f"sigma_x2 must be finite and > 0, got {self.sigma_x2}")
        if self.frame_samples < 2:
            raise ValueError(f"frame_samples must be >= 2, got {self.frame_samples}")
        if self.superblock_frames < 2:
            raise ValueError(f"superblock_frames must be >= 2, got {self.superblock_frames}")


@dataclass(frozen=True)
class GammaPowerModel:
    """Gamma distribution of the frame power: shape b = N/2, rate a = N/(2*sigma_x2)."""

    shape: float
    rate: float

    def __post_init__(self) -> None:
        if not (self.shape > 0 and self.rate > 0):
            raise ValueError("Gamma shape and rate must both be > 0")

    @property
    def mean(self) -> float:
        return self.shape / self.rate

    @property
    def variance(self) -> float:
        return self.shape / self.rate**2

    @property
    def mode(self) -> float:
        return max(self.shape - 1.0, 0.0) / self.rate


@dataclass(frozen=True)
class PowerStats:
    """Mean and variance of the frame power estimate."""

    p_mean: float
    p_var: float


@dataclass(frozen=True)
class VarStats:
    """Mean and variance of the power-variance estimate over a superblock."""

    q_mean: float
    q_var: float


def frame_power(frame) -> float:
    """Mean squared amplitude of one frame of samples."""
    x = np.asarray(frame, dtype=np.float64)
    if x.size == 0:
        raise ValueError("frame must contain at least one sample")
    if not np.all(np.isfinite(x)):
        raise ValueError("frame contains non-finite samples")
    return float(np.mean(np.square(x)))


def gamma_power_model(params: NoiseParams) -> GammaPowerModel:
    n = params.frame_samples
    return GammaPowerModel(shape=n / 2.0, rate=n / (2.0 * params.sigma_x2))


def power_stats(params: NoiseParams) -> PowerStats:
    """Mean sigma_x2 and variance 2*sigma_x2**2 / N of the frame power."""
    s2 = params.sigma_x2
    return PowerStats(p_mean=s2, p_var=2.0 * s2 * s2 / params.frame_samples)


def var_stats(params: NoiseParams) -> VarStats:
    """Mean and variance of the superblock power variance.

    q_mean = 2*sigma_x2**2 / N
    q_var  = 8*(N + 6)*sigma_x2**4 / (N**3 * K)
    """
    s2 = params.sigma_x2
    n = params.frame_samples
    k = params.superblock_frames
    q_mean = 2.0 * s2 * s2 / n
    q_var = 8.0 * (n + 6.0) * s2**4 / (n**3 * k)
    return VarStats(q_mean=q_mean, q_var=q_var)


def gamma_power_pdf(model: GammaPowerModel, p):
    """Gamma density of the frame power, zero outside p > 0.

    Accepts a scalar or an array; evaluated in the log domain so large shapes
    (long frames) do not overflow.
    """
    p_arr = np.asarray(p, dtype=np.float64)
    b, a = model.shape, model.rate
    out = np.zeros_like(p_arr, dtype=np.float64)
    pos = p_arr > 0
    if np.any(pos):
        pp = p_arr[pos]
        log_pdf = b * math.log(a) + (b - 1.0) * np.log(pp) - a * pp - gammaln(b)
        out[pos] = np.exp(log_pdf)
    if np.isscalar(p) or p_arr.ndim == 0:
        return float(out)
    return out


class RunningMoments:
    """Single-pass mean and unbiased variance via varying-coefficient recursions.

    Per observation the mean is updated first::

        m_n = m_{n-1} + (x_n - m_{n-1}) / n

    and the variance then uses the updated mean::

        s2_n = (n-2)/(n-1) * s2_{n-1} + n/(n-1)**2 * (x_n - m_n)**2

    with m_1 = x_1 and s2_1 = 0. After n observations the state equals the
    batch mean and the unbiased batch variance of everything seen.

    A prior can be folded in as phantom observations: the recursion then
    behaves as if ``prior_count_mean`` samples with mean ``prior_mean`` (and
    ``prior_count_var`` with variance ``prior_var``) preceded the stream. The
    two counts may differ, giving mean and variance different learning rates.
    """

    __slots__ = ("_mean", "_var", "_n_obs", "_prior_count_mean", "_prior_count_var")

    def __init__(self) -> None:
        self._mean = 0.0
        self._var = 0.0
        self._n_obs = 0
        self._prior_count_mean = 0
        self._prior_count_var = 0

    @classmethod
    def with_prior(
        cls,
        prior_mean: float,
        prior_var: float,
        prior_count_mean: int,
        prior_count_var: int | None = None,
    ) -> "RunningMoments":
        if prior_count_var is None:
            prior_count_var = prior_count_mean
        if prior_count_mean < 1 or prior_count_var < 1:
            raise ValueError("prior counts must be >= 1")
        if prior_var < 0:
            raise ValueError(f"prior variance must be >= 0, got {prior_var}")
        est = cls()
        est._mean = float(prior_mean)
        est._var = float(prior_var)
        est._prior_count_mean = int(prior_count_mean)
        est._prior_count_var = int(prior_count_var)
        return est

    def update(self, x: float) -> None:
        if not math.isfinite(x):
            raise ValueError(f"observation must be finite, got {x}")
        self._n_obs += 1
        nm = self._prior_count_mean + self._n_obs
        mean = self._mean + (x - self._mean) / nm
        ns = self._prior_count_var + self._n_obs
        if ns >= 2:
            d = x - mean
            self._var = (ns - 2.0) / (ns - 1.0) * self._var + ns / ((ns - 1.0) ** 2) * d * d
        else:
            self._var = 0.0
        self._mean = mean

    def extend(self, xs) -> None:
        for x in xs:
            self.update(float(x))

    @property
    def count(self) -> int:
        """Number of real (non-phantom) observations."""
        return self._n_obs

    @property
    def mean(self) -> float:
        if self._n_obs + self._prior_count_mean < 1:
            raise ValueError("no observations yet")
        return self._mean

    @property
    def variance(self) -> float:
        if self._n_obs + self._prior_count_var < 1:
            raise ValueError("no observations yet")
        return self._var
