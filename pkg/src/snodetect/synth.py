"""Synthetic labeled soundscapes: Gaussian noise, tonal calls, snap bursts.

Everything is deterministic given the scenario seed. Noise and event
waveforms draw from independent child streams of a PCG64 generator (spawned
from one seed sequence), so adding events never perturbs the noise bed.

SNR convention: an event's signal power is compared against the noise power
that falls inside the analysis band (100-700 Hz by default). Tone and chirp
events live entirely inside that band, so this is the ratio a band-limited
detector actually sees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError
from .ingest import AudioStream

TONE = "tone"
CHIRP = "chirp"
SNAP = "snap"

DEFAULT_ANALYSIS_BAND = (100.0, 700.0)


@dataclass(frozen=True)
class SynthEvent:
    start_s: float
    duration_s: float
    kind: str                      # tone | chirp | snap
    band_hz: tuple[float, float]
    snr_db: float

    def __post_init__(self) -> None:
        if self.kind not in (TONE, CHIRP, SNAP):
            raise ConfigurationError(f"unknown event kind {self.kind!r}")
        if self.duration_s <= 0:
            raise ConfigurationError(f"event duration must be > 0, got {self.duration_s}")
        if not math.isfinite(self.snr_db):
            raise ConfigurationError("event snr_db must be finite")
        lo, hi = self.band_hz
        if not 0 < lo < hi:
            raise ConfigurationError(f"bad event band {self.band_hz}")

    @property
    def end_s(self) -> float:
        return self.start_s + self.duration_s


@dataclass(frozen=True)
class Scenario:
    duration_s: float
    sample_rate: int = 8000
    noise_sigma2: float = 0.01
    # optional piecewise noise schedule [(start_s, sigma2), ...]; overrides noise_sigma2
    noise_steps: tuple[tuple[float, float], ...] | None = None
    events: tuple[SynthEvent, ...] = field(default_factory=tuple)
    seed: int = 0
    analysis_band_hz: tuple[float, float] = DEFAULT_ANALYSIS_BAND

    def __post_init__(self) -> None:
        if self.duration_s <= 0:
            raise ConfigurationError(f"duration_s must be > 0, got {self.duration_s}")
        if self.sample_rate <= 0:
            raise ConfigurationError(f"sample_rate must be > 0, got {self.sample_rate}")
        if self.noise_steps is not None:
            steps = tuple((float(t), float(s2)) for t, s2 in self.noise_steps)
            if not steps or steps[0][0] != 0.0:
                raise ConfigurationError("noise schedule must start at t=0")
            if any(s2 <= 0 for _, s2 in steps):
                raise ConfigurationError("noise schedule variances must be > 0")
            if list(t for t, _ in steps) != sorted(set(t for t, _ in steps)):
                raise ConfigurationError("noise schedule times must be strictly increasing")
            object.__setattr__(self, "noise_steps", steps)
        elif self.noise_sigma2 <= 0:
            raise ConfigurationError(f"noise_sigma2 must be > 0, got {self.noise_sigma2}")
        events = tuple(sorted(self.events, key=lambda e: e.start_s))
        for ev in events:
            if ev.start_s < 0 or ev.end_s > self.duration_s:
                raise ConfigurationError(f"event {ev} outside scenario duration")
        for a, b in zip(events, events[1:]):
            if b.start_s < a.end_s:
                raise ConfigurationError(f"events overlap: {a} and {b}")
        object.__setattr__(self, "events", events)


def band_power(samples, sample_rate: float, low_hz: float, high_hz: float) -> float:
    """Average signal power contributed by frequencies in [low_hz, high_hz].

    Periodogram-based: summing over all bands recovers the mean squared
    amplitude (Parseval), so for white noise of variance v the band carries
    v * (high - low) / (rate / 2).
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.size == 0:
        raise ValueError("empty sample array")
    spec = np.fft.rfft(x)
    freqs = np.fft.rfftfreq(x.size, d=1.0 / sample_rate)
    weights = np.full(spec.size, 2.0)
    weights[0] = 1.0
    if x.size % 2 == 0:
        weights[-1] = 1.0
    mask = (freqs >= low_hz) & (freqs <= high_hz)
    return float(np.sum(weights[mask] * np.abs(spec[mask]) ** 2) / x.size**2)


def _noise_sigma2_at(scenario: Scenario, t: float) -> float:
    if scenario.noise_steps is None:
        return scenario.noise_sigma2
    current = scenario.noise_steps[0][1]
    for start, s2 in scenario.noise_steps:
        if t >= start:
            current = s2
    return current


def _band_fraction(scenario: Scenario) -> float:
    lo, hi = scenario.analysis_band_hz
    return (hi - lo) / (scenario.sample_rate / 2.0)


def _event_waveform(ev: SynthEvent, scenario: Scenario, rng: np.random.Generator) -> np.ndarray:
    fs = scenario.sample_rate
    n = int(round(ev.duration_s * fs))
    t = np.arange(n) / fs
    lo, hi = ev.band_hz
    snr_lin = 10.0 ** (ev.snr_db / 10.0)
    sigma2 = _noise_sigma2_at(scenario, ev.start_s)
    noise_band_power = sigma2 * _band_fraction(scenario)

    if ev.kind == TONE:
        amp = math.sqrt(2.0 * snr_lin * noise_band_power)
        x = amp * np.sin(2.0 * math.pi * 0.5 * (lo + hi) * t)
    elif ev.kind == CHIRP:
        amp = math.sqrt(2.0 * snr_lin * noise_band_power)
        phase = 2.0 * math.pi * (lo * t + 0.5 * (hi - lo) / ev.duration_s * t * t)
        x = amp * np.sin(phase)
    else:  # snap: wideband noise burst; in-band density ratio equals broadband ratio
        burst_var = snr_lin * sigma2
        x = math.sqrt(burst_var) * rng.standard_normal(n)

    # short cosine ramps remove onset/offset clicks
    ramp = min(int(0.01 * fs), n // 4)
    if ramp > 0:
        env = 0.5 * (1.0 - np.cos(np.pi * np.arange(ramp) / ramp))
        x[:ramp] *= env
        x[-ramp:] *= env[::-1]
    return x


def generate(scenario: Scenario) -> tuple[AudioStream, list[tuple[float, float]]]:
    """Render a scenario to (stream, annotation).

    The annotation lists (start_s, end_s) for tone and chirp events only;
    snaps are unlabeled distractors. Bit-identical for a fixed seed.
    """
    fs = scenario.sample_rate
    n_total = int(round(scenario.duration_s * fs))
    noise_ss, event_ss = np.random.SeedSequence(scenario.seed).spawn(2)
    noise_rng = np.random.Generator(np.random.PCG64(noise_ss))
    event_rng = np.random.Generator(np.random.PCG64(event_ss))

    samples = noise_rng.standard_normal(n_total)
    if scenario.noise_steps is None:
        samples *= math.sqrt(scenario.noise_sigma2)
    else:
        bounds = [int(round(t * fs)) for t, _ in scenario.noise_steps] + [n_total]
        for i, (_, s2) in enumerate(scenario.noise_steps):
            samples[bounds[i] : bounds[i + 1]] *= math.sqrt(s2)

    annotation: list[tuple[float, float]] = []
    for ev in scenario.events:
        start = int(round(ev.start_s * fs))
        wave = _event_waveform(ev, scenario, event_rng)
        stop = min(start + wave.size, n_total)
        samples[start:stop] += wave[: stop - start]
        if ev.kind in (TONE, CHIRP):
            annotation.append((ev.start_s, ev.end_s))

    return AudioStream(sample_rate=fs, samples=samples), annotation


def measure_snr_db(
    stream: AudioStream,
    annotation: list[tuple[float, float]],
    band_hz: tuple[float, float] = DEFAULT_ANALYSIS_BAND,
) -> float:
    """In-band (event power - background power) / background power, in dB."""
    if not annotation:
        raise ValueError("annotation must contain at least one interval")
    mask = np.zeros(stream.samples.size, dtype=bool)
    for start_s, end_s in annotation:
        a = int(round(start_s * stream.sample_rate))
        b = int(round(end_s * stream.sample_rate))
        mask[a:b] = True
    p_evt = band_power(stream.samples[mask], stream.sample_rate, *band_hz)
    p_bg = band_power(stream.samples[~mask], stream.sample_rate, *band_hz)
    sig = p_evt - p_bg
    if sig <= 0:
        raise ValueError("no measurable signal power above background in the band")
    return 10.0 * math.log10(sig / p_bg)


def add_noise(
    stream: AudioStream,
    target_snr_db: float,
    annotation: list[tuple[float, float]],
    band_hz: tuple[float, float] = DEFAULT_ANALYSIS_BAND,
    seed: int = 0,
) -> AudioStream:
    """Add white Gaussian noise so the annotated-segment SNR drops to the target.

    Solving (P_evt - P_bg) / (P_bg + v*rho) = snr for the added broadband
    variance v, with rho the band's fraction of the Nyquist range. Raising the
    SNR is impossible by adding noise and is rejected.
    """
    if not annotation:
        raise ValueError("annotation must contain at least one interval")
    mask = np.zeros(stream.samples.size, dtype=bool)
    for start_s, end_s in annotation:
        a = int(round(start_s * stream.sample_rate))
        b = int(round(end_s * stream.sample_rate))
        mask[a:b] = True
    p_evt = band_power(stream.samples[mask], stream.sample_rate, *band_hz)
    p_bg = band_power(stream.samples[~mask], stream.sample_rate, *band_hz)
    sig = p_evt - p_bg
    if sig <= 0:
        raise ValueError("stream has no measurable signal power in the band")
    rho = (band_hz[1] - band_hz[0]) / (stream.sample_rate / 2.0)
    snr_target = 10.0 ** (target_snr_db / 10.0)
    v = (sig / snr_target - p_bg) / rho
    if v < 0:
        current_db = 10.0 * math.log10(sig / p_bg)
        raise ValueError(
            f"target SNR {target_snr_db:.2f} dB exceeds current {current_db:.2f} dB; "
            "adding noise can only lower it"
        )
    if v == 0.0:
        return AudioStream(stream.sample_rate, stream.samples.copy(), stream.channel_count)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    noisy = stream.samples + math.sqrt(v) * rng.standard_normal(stream.samples.size)
    return AudioStream(stream.sample_rate, noisy, stream.channel_count)


def make_scenario(
    duration_s: float = 600.0,
    n_events: int = 12,
    snr_db: float = 20.0,
    seed: int = 0,
    sample_rate: int = 8000,
    noise_sigma2: float = 0.01,
    event_duration_range_s: tuple[float, float] = (1.5, 2.5),
    event_band_limits_hz: tuple[float, float] = (150.0, 650.0),
    snap_rate_hz: float = 0.2,
    snap_snr_range_db: tuple[float, float] = (25.0, 35.0),
    gap_s: float = 2.0,
) -> Scenario:
    """Build a randomized scenario: spaced tone/chirp calls plus Poisson snaps.

    Calls alternate between tones and chirps, each on a random sub-band of
    ``event_band_limits_hz``, placed with at least ``gap_s`` clearance. Snap
    distractors (2-10 ms wideband bursts) arrive as a Poisson process and are
    dropped where they would collide with a call.
    """
    rng = np.random.default_rng(seed)
    events: list[SynthEvent] = []

    if n_events > 0:
        slot = duration_s / n_events
        if slot < event_duration_range_s[1] + 2 * gap_s:
            raise ConfigurationError(
                f"{n_events} events of up to {event_duration_range_s[1]} s plus "
                f"{gap_s} s gaps do not fit in {duration_s} s"
            )
        for i in range(n_events):
            dur = rng.uniform(*event_duration_range_s)
            lo_slot = i * slot + gap_s
            hi_slot = (i + 1) * slot - gap_s - dur
            start = rng.uniform(lo_slot, hi_slot)
            f_lo = rng.uniform(event_band_limits_hz[0], event_band_limits_hz[1] - 50.0)
            f_hi = rng.uniform(f_lo + 30.0, min(f_lo + 250.0, event_band_limits_hz[1]))
            kind = TONE if i % 2 == 0 else CHIRP
            events.append(
                SynthEvent(start_s=start, duration_s=dur, kind=kind,
                           band_hz=(f_lo, f_hi), snr_db=snr_db)
            )

    if snap_rate_hz > 0:
        t = 0.0
        while True:
            t += rng.exponential(1.0 / snap_rate_hz)
            dur = rng.uniform(0.002, 0.010)
            if t + dur >= duration_s:
                break
            if any(t < ev.end_s + 0.05 and t + dur > ev.start_s - 0.05 for ev in events):
                continue
            events.append(
                SynthEvent(
                    start_s=t, duration_s=dur, kind=SNAP,
                    band_hz=(event_band_limits_hz[0], sample_rate / 2.0 - 1.0),
                    snr_db=rng.uniform(*snap_snr_range_db),
                )
            )

    return Scenario(
        duration_s=duration_s,
        sample_rate=sample_rate,
        noise_sigma2=noise_sigma2,
        events=tuple(events),
        seed=seed,
    )


def scenario_from_mapping(data: dict) -> Scenario:
    """Build a Scenario from a parsed YAML/JSON mapping (the scenario file format)."""
    try:
        events = tuple(
            SynthEvent(
                start_s=float(ev["start_s"]),
                duration_s=float(ev["duration_s"]),
                kind=str(ev["kind"]),
                band_hz=(float(ev["band_hz"][0]), float(ev["band_hz"][1])),
                snr_db=float(ev["snr_db"]),
            )
            for ev in data.get("events", [])
        )
        noise = data.get("noise", {})
        steps = noise.get("steps")
        return Scenario(
            duration_s=float(data["duration_s"]),
            sample_rate=int(data.get("sample_rate", 8000)),
            noise_sigma2=float(noise.get("sigma2", data.get("noise_sigma2", 0.01))),
            noise_steps=tuple((float(t), float(s2)) for t, s2 in steps) if steps else None,
            events=events,
            seed=int(data.get("seed", 0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"bad scenario description: {exc}") from exc


def with_seed(scenario: Scenario, seed: int) -> Scenario:
    return replace(scenario, seed=seed)
