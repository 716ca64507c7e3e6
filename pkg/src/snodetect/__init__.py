"""Acoustic event detection against a stationary Gaussian noise floor.

The package splits into ingest (WAV decode, decimation, band-pass), the noise
statistics and recursive estimators, noise-floor tracking, the streaming
detector itself, synthetic scenario generation, segmentation scoring, and
score calibration. The ``sno`` command line wires them together.
"""

from .calibration import OddsSpec, lr_odds_product, posterior_from_llr, recalibrate
from .detector import (
    DetectorConfig,
    Hypothesis,
    Segment,
    StreamingDetector,
    SuperblockStats,
    assemble_segments,
    classify,
    detect,
    detect_powers,
    frame_powers,
    superblock_stats,
)
from .errors import (
    AudioFormatError,
    ConfigurationError,
    CorruptFileError,
    SnodetectError,
    UnsupportedRateError,
)
from .evaluate import (
    Annotation,
    EvalPoint,
    FuzzyConfig,
    fuzzy_intersection,
    load_annotation,
    precision_recall,
    sweep,
)
from .floor import (
    FloorConfig,
    Thresholds,
    dilate,
    erode,
    estimate_floor,
    floor_window_frames,
    thresholds_from_floor,
)
from .ingest import AudioStream, BandpassSpec, bandpass, decimate, read_wav, write_wav
from .stats import (
    GammaPowerModel,
    NoiseParams,
    PowerStats,
    RunningMoments,
    VarStats,
    frame_power,
    gamma_power_model,
    gamma_power_pdf,
    power_stats,
    var_stats,
)
from .synth import Scenario, SynthEvent, add_noise, band_power, generate, make_scenario

__version__ = "0.1.0"
