"""Audio ingest: WAV decode, integer-ratio decimation, band-pass filtering.

Decoding is a deliberately small RIFF/WAVE parser covering PCM16 and float32,
mono or stereo, so malformed files fail with precise errors instead of
whatever a general-purpose loader happens to do. Rate conversion and band
limiting apply fixed, shipped coefficient sets; no filter design happens at
runtime.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import signal

from .errors import AudioFormatError, ConfigurationError, CorruptFileError, UnsupportedRateError

_PCM = 1
_IEEE_FLOAT = 3


@dataclass
class AudioStream:
    """Mono sample stream; samples are float64 in [-1, 1] after ingest."""

    sample_rate: int
    samples: np.ndarray
    channel_count: int = 1

    def __post_init__(self) -> None:
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be > 0, got {self.sample_rate}")
        self.samples = np.asarray(self.samples, dtype=np.float64)

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class BandpassSpec:
    """Fixed cascade of second-order sections defining the analysis band."""

    low_cut: float
    high_cut: float
    design_rate: int
    sections: np.ndarray = field(repr=False)  # shape (n, 6): b0 b1 b2 a0 a1 a2

    def __post_init__(self) -> None:
        sec = np.asarray(self.sections, dtype=np.float64)
        if sec.ndim != 2 or sec.shape[1] != 6:
            raise ConfigurationError("bandpass sections must be an (n, 6) array")
        if not 0 < self.low_cut < self.high_cut < self.design_rate / 2:
            raise ConfigurationError(
                f"need 0 < low_cut < high_cut < rate/2, got "
                f"({self.low_cut}, {self.high_cut}) at {self.design_rate} Hz"
            )
        sec = sec / sec[:, 3:4]  # normalize a0 = 1
        for row in sec:
            roots = np.roots([1.0, row[4], row[5]])
            if np.any(np.abs(roots) >= 1.0):
                raise ConfigurationError(
                    f"unstable bandpass section {row.tolist()}: pole outside unit circle"
                )
        object.__setattr__(self, "sections", sec)


def _read_exact(data: bytes, offset: int, count: int, what: str) -> bytes:
    if offset + count > len(data):
        raise CorruptFileError(f"file truncated while reading {what}")
    return data[offset : offset + count]


def read_wav(path) -> AudioStream:
    """Decode a PCM16 or float32 RIFF/WAVE file to a normalized mono stream.

    Stereo files are averaged to mono; PCM16 samples are scaled by 1/32768.
    """
    data = Path(path).read_bytes()
    if len(data) < 12 or data[0:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise AudioFormatError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    payload = None
    offset = 12
    while offset + 8 <= len(data):
        chunk_id = data[offset : offset + 4]
        (chunk_size,) = struct.unpack_from("<I", data, offset + 4)
        body_offset = offset + 8
        if chunk_id == b"fmt ":
            body = _read_exact(data, body_offset, min(chunk_size, 16), "fmt chunk")
            if chunk_size < 16:
                raise CorruptFileError(f"{path}: fmt chunk too short")
            fmt = struct.unpack("<HHIIHH", body[:16])
        elif chunk_id == b"data":
            payload = _read_exact(data, body_offset, chunk_size, "data chunk")
        offset = body_offset + chunk_size + (chunk_size & 1)

    if fmt is None:
        raise CorruptFileError(f"{path}: missing fmt chunk")
    if payload is None:
        raise CorruptFileError(f"{path}: missing data chunk")

    audio_format, channels, sample_rate, _byte_rate, _block_align, bits = fmt
    if channels not in (1, 2):
        raise AudioFormatError(f"{path}: {channels} channels unsupported (need 1 or 2)")
    if audio_format == _PCM and bits == 16:
        raw = np.frombuffer(payload[: len(payload) - len(payload) % (2 * channels)], dtype="<i2")
        samples = raw.astype(np.float64) / 32768.0
    elif audio_format == _IEEE_FLOAT and bits == 32:
        raw = np.frombuffer(payload[: len(payload) - len(payload) % (4 * channels)], dtype="<f4")
        samples = np.clip(raw.astype(np.float64), -1.0, 1.0)
    else:
        raise AudioFormatError(
            f"{path}: unsupported codec (format tag {audio_format}, {bits}-bit)"
        )
    if not np.all(np.isfinite(samples)):
        raise CorruptFileError(f"{path}: non-finite samples in data chunk")
    if channels == 2:
        samples = samples.reshape(-1, 2).mean(axis=1)
    return AudioStream(sample_rate=int(sample_rate), samples=samples, channel_count=1)


def write_wav(path, stream: AudioStream, sample_format: str = "pcm16") -> None:
    """Write a mono WAV file (PCM16 by default, or float32)."""
    x = np.asarray(stream.samples, dtype=np.float64)
    if sample_format == "pcm16":
        scaled = np.clip(np.rint(x * 32768.0), -32768, 32767).astype("<i2")
        payload = scaled.tobytes()
        fmt_tag, bits = _PCM, 16
    elif sample_format == "float32":
        payload = x.astype("<f4").tobytes()
        fmt_tag, bits = _IEEE_FLOAT, 32
    else:
        raise ValueError(f"sample_format must be 'pcm16' or 'float32', got {sample_format!r}")
    block_align = bits // 8
    header = b"RIFF" + struct.pack("<I", 36 + len(payload)) + b"WAVE"
    header += b"fmt " + struct.pack(
        "<IHHIIHH", 16, fmt_tag, 1, stream.sample_rate,
        stream.sample_rate * block_align, block_align, bits,
    )
    header += b"data" + struct.pack("<I", len(payload))
    Path(path).write_bytes(header + payload)


def decimate(stream: AudioStream, target_rate: int, taps=None) -> AudioStream:
    """Reduce the rate by an integer factor: anti-alias lowpass, keep every M-th sample.

    The lowpass is a shipped 63-tap linear-phase FIR (cutoff 0.45x the target
    rate) applied causally with zero initial state. Output length is
    floor(input_length / M).
    """
    if target_rate <= 0:
        raise UnsupportedRateError(f"target rate must be > 0, got {target_rate}")
    if stream.sample_rate == target_rate:
        return AudioStream(target_rate, stream.samples.copy(), stream.channel_count)
    if stream.sample_rate % target_rate != 0:
        raise UnsupportedRateError(
            f"{stream.sample_rate} Hz is not an integer multiple of {target_rate} Hz"
        )
    factor = stream.sample_rate // target_rate
    if taps is None:
        from .config import decimation_taps

        taps = decimation_taps(factor)
    taps = np.asarray(taps, dtype=np.float64)
    filtered = signal.lfilter(taps, [1.0], stream.samples)
    out = filtered[::factor][: stream.samples.size // factor]
    return AudioStream(target_rate, out, stream.channel_count)


def bandpass(stream: AudioStream, spec: BandpassSpec) -> AudioStream:
    """Apply the band-pass cascade sample by sample with zero initial state."""
    if stream.sample_rate != spec.design_rate:
        raise ConfigurationError(
            f"stream rate {stream.sample_rate} Hz does not match the "
            f"bandpass design rate {spec.design_rate} Hz"
        )
    out = signal.sosfilt(spec.sections, stream.samples)
    return AudioStream(stream.sample_rate, out, stream.channel_count)
