#!/usr/bin/env python3
"""Regenerate src/snodetect/data/default_config.yaml.

The runtime never designs filters; it loads fixed coefficient sets from the
default config. This script is the single place those coefficients come from,
so they can be audited or swapped by rerunning it with different design
choices.

Designs:
  * band-pass: 8th-order elliptic (four second-order sections), 100-700 Hz
    at the 8 kHz working rate, 0.5 dB passband ripple, 60 dB stopband.
  * anti-alias FIRs: 63-tap Hamming-window lowpass per integer decimation
    factor, cutoff 0.45x the target rate, unity DC gain.
"""

from pathlib import Path

from scipy import signal

WORKING_RATE = 8000
BAND = (100.0, 700.0)
ELLIP_ORDER = 4          # -> 8th-order bandpass
PASSBAND_RIPPLE_DB = 0.5
STOPBAND_DB = 60.0
FIR_TAPS = 63
FIR_CUTOFF_FRACTION = 0.45   # of the target rate
DECIMATION_FACTORS = range(2, 17)

OUT = Path(__file__).resolve().parent.parent / "src" / "snodetect" / "data" / "default_config.yaml"

HEADER = """\
# Default configuration and shipped filter coefficients.
#
# Regenerate with scripts/gen_filter_coefficients.py. The band-pass is a fixed
# 8th-order elliptic design (100-700 Hz at 8 kHz, 0.5 dB ripple, 60 dB stop);
# the decimation FIRs are 63-tap Hamming-window lowpasses, one per integer
# decimation factor, cutoff at 0.45x the target rate. The band-pass design is
# a pragmatic stand-in: any stable cascade of second-order sections with the
# same passband can be swapped in here.

ingest:
  target_rate: 8000
  bandpass_enabled: true

detector:
  frame_samples: 256
  superblock_frames: 5
  min_event_s: 0.25
  merge_gap_s: 0.3
  sliding_superblocks: true
  frame_power_test: false

floor:
  timeframe_s: 60.0
  alpha_f_db: 6.0
  n_std: 3.0
  mode: erosion
  dilation_divisor_db: 6.0
  power_epsilon: 1.0e-12

eval:
  ramp_s: 0.0
  grid_min: 0.0
  grid_max: 12.0
  grid_points: 25

output:
  format: csv

jobs: 1
"""


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def main() -> None:
    lines = [HEADER]

    sos = signal.ellip(
        ELLIP_ORDER,
        PASSBAND_RIPPLE_DB,
        STOPBAND_DB,
        list(BAND),
        btype="bandpass",
        fs=WORKING_RATE,
        output="sos",
    )
    lines.append("bandpass:")
    lines.append(f"  low_cut: {fmt(BAND[0])}")
    lines.append(f"  high_cut: {fmt(BAND[1])}")
    lines.append(f"  design_rate: {WORKING_RATE}")
    lines.append("  # each section: [b0, b1, b2, a0, a1, a2]")
    lines.append("  sections:")
    for sec in sos:
        lines.append("    - [" + ", ".join(fmt(c) for c in sec) + "]")

    lines.append("")
    lines.append("# 63-tap linear-phase anti-alias lowpass per decimation factor.")
    lines.append("decimation_fir:")
    for m in DECIMATION_FACTORS:
        taps = signal.firwin(FIR_TAPS, 2.0 * FIR_CUTOFF_FRACTION / m, window="hamming")
        lines.append(f"  {m}:")
        for t in taps:
            lines.append(f"    - {fmt(t)}")

    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text("\n".join(lines) + "\n")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
