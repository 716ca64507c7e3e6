"""Command-line interface: detect, evaluate, sweep, synth, calibrate, bench.

Exit codes: 0 on success, 1 for runtime failures (unreadable audio, bad
data), 2 for usage or configuration problems. Every option can also be set
via an SNO_-prefixed environment variable (e.g. SNO_DETECT_N_STD).
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import functools
import json
import logging
import math
import sys
import time
from pathlib import Path

import click
import numpy as np
import yaml

from . import calibration as cal
from . import config as cfgmod
from . import evaluate as ev
from . import io as iomod
from . import synth as synthmod
from .detector import StreamingDetector, detect
from .errors import ConfigurationError, SnodetectError, UnsupportedRateError
from .ingest import bandpass, decimate, read_wav, write_wav

log = logging.getLogger(__name__)


def _setup_logging() -> None:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    # config-precedence messages are asked for at startup; keep them visible
    logging.getLogger("snodetect.config").setLevel(logging.INFO)


def _fail(message: str, code: int) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ConfigurationError, UnsupportedRateError) as exc:
            _fail(str(exc), 2)
        except (SnodetectError, ValueError, OSError) as exc:
            _fail(str(exc), 1)

    return wrapper


def _parse_odds(_ctx, _param, value: str) -> float:
    """Odds may be a plain float or a ratio like 1/19."""
    if value is None:
        return None
    try:
        if "/" in value:
            num, den = value.split("/", 1)
            odds = float(num) / float(den)
        else:
            odds = float(value)
    except (ValueError, ZeroDivisionError) as exc:
        raise click.BadParameter(f"cannot parse odds {value!r}") from exc
    if not (odds > 0 and math.isfinite(odds)):
        raise click.BadParameter(f"odds must be finite and > 0, got {value!r}")
    return odds


_detector_options = [
    click.option("--frame-samples", type=int, default=None, help="Samples per power frame (N)."),
    click.option("--superblock-frames", type=int, default=None, help="Frames per superblock (K)."),
    click.option("--min-event-s", type=float, default=None, help="Impulse filter: drop shorter events."),
    click.option("--merge-gap-s", type=float, default=None, help="Merge detections closer than this."),
    click.option("--n-std", type=float, default=None, help="Threshold margin in standard deviations."),
    click.option("--timeframe-s", type=float, default=None, help="Noise floor tracking window (s)."),
    click.option("--alpha-f-db", type=float, default=None, help="Floor modulation coefficient (dB)."),
    click.option("--floor-mode", type=click.Choice(["erosion", "dilation"]), default=None),
    click.option("--sliding-superblocks/--block-superblocks", "sliding_superblocks", default=None),
    click.option("--frame-power-test/--no-frame-power-test", "frame_power_test", default=None),
    click.option("--target-rate", type=int, default=None, help="Working sample rate (Hz)."),
    click.option("--bandpass/--no-bandpass", "bandpass_enabled", default=None,
                 help="Band-limit to the analysis band before detection."),
]


def detector_options(fn):
    for opt in reversed(_detector_options):
        fn = opt(fn)
    return fn


def _merged_config(config_path, **overrides) -> dict:
    cfg = cfgmod.load_config(config_path)
    cfgmod.apply_overrides(
        cfg,
        {
            "detector.frame_samples": overrides.get("frame_samples"),
            "detector.superblock_frames": overrides.get("superblock_frames"),
            "detector.min_event_s": overrides.get("min_event_s"),
            "detector.merge_gap_s": overrides.get("merge_gap_s"),
            "detector.sliding_superblocks": overrides.get("sliding_superblocks"),
            "detector.frame_power_test": overrides.get("frame_power_test"),
            "floor.n_std": overrides.get("n_std"),
            "floor.timeframe_s": overrides.get("timeframe_s"),
            "floor.alpha_f_db": overrides.get("alpha_f_db"),
            "floor.mode": overrides.get("floor_mode"),
            "ingest.target_rate": overrides.get("target_rate"),
            "ingest.bandpass_enabled": overrides.get("bandpass_enabled"),
            "output.format": overrides.get("output_format"),
            "jobs": overrides.get("jobs"),
        },
    )
    return cfg


def _preprocess(stream, run_cfg: cfgmod.RunConfig, cfg: dict):
    stream = decimate(stream, run_cfg.ingest.target_rate)
    if run_cfg.ingest.bandpass_enabled:
        stream = bandpass(stream, cfgmod.bandpass_spec(cfg))
    return stream


def _detect_one(path_str: str, cfg: dict, out_path_str: str) -> tuple[str, int, float, float]:
    run_cfg = cfgmod.run_config(cfg)
    stream = read_wav(path_str)
    stream = _preprocess(stream, run_cfg, cfg)
    start = time.perf_counter()
    segments = detect(stream, run_cfg.detector)
    wall = time.perf_counter() - start
    iomod.write_segments(out_path_str, segments, run_cfg.output_format)
    return out_path_str, len(segments), stream.duration_s, wall


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(package_name="snodetect")
def cli() -> None:
    """Acoustic event detection against a stationary Gaussian noise floor."""
    _setup_logging()


@cli.command("detect")
@click.argument("inputs", nargs=-1, required=True, type=click.Path())
@click.option("--output-dir", "-o", type=click.Path(file_okay=False), default=None,
              help="Directory for segment tables (default: next to each input).")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--output-format", type=click.Choice(["csv", "json", "raven"]), default=None)
@click.option("--jobs", type=int, default=None, help="Process this many files in parallel.")
@detector_options
@_handle_errors
def cmd_detect(inputs, output_dir, config_path, **overrides) -> None:
    """Detect events in WAV files and write one segment table per input."""
    paths = [Path(p) for p in inputs]
    for p in paths:
        if not p.exists():
            raise ConfigurationError(f"input file not found: {p}")
    cfg = _merged_config(config_path, **overrides)
    run_cfg = cfgmod.run_config(cfg)
    if output_dir is not None:
        Path(output_dir).mkdir(parents=True, exist_ok=True)

    suffix = iomod.segment_file_suffix(run_cfg.output_format)
    jobs = min(run_cfg.jobs, len(paths))
    tasks = []
    for p in paths:
        out_dir = Path(output_dir) if output_dir is not None else p.parent
        tasks.append((str(p), cfg, str(out_dir / (p.stem + suffix))))

    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_detect_one, *zip(*tasks)))
    else:
        results = [_detect_one(*t) for t in tasks]

    for (in_path, _, _), (out_path, count, audio_s, wall) in zip(tasks, results):
        rate = audio_s / wall if wall > 0 else float("inf")
        click.echo(
            f"{in_path}: {count} segments -> {out_path} "
            f"({audio_s:.1f} s audio in {wall:.3f} s, {rate:.0f}x realtime)"
        )


@cli.command("evaluate")
@click.option("--detected", required=True, type=click.Path())
@click.option("--truth", required=True, type=click.Path())
@click.option("--ramp-s", type=float, default=None, help="Fuzzy boundary ramp width (s).")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--output", type=click.Path(), default=None, help="Also write a JSON report.")
@_handle_errors
def cmd_evaluate(detected, truth, ramp_s, config_path, output) -> None:
    """Score a detected segmentation against a reference annotation."""
    cfg = cfgmod.load_config(config_path)
    cfgmod.apply_overrides(cfg, {"eval.ramp_s": ramp_s})
    eval_cfg = cfgmod.eval_config(cfg)
    det = ev.load_annotation(detected)
    ref = ev.load_annotation(truth)
    fuzzy = ev.FuzzyConfig(ramp_s=eval_cfg.ramp_s)
    precision, recall = ev.precision_recall(det.segments, ref.segments, fuzzy)
    click.echo(f"precision={precision:.6f} recall={recall:.6f}")
    if output:
        Path(output).write_text(
            json.dumps({"precision": precision, "recall": recall, "ramp_s": eval_cfg.ramp_s})
            + "\n"
        )


@cli.command("sweep")
@click.option("--input", "input_path", type=click.Path(), default=None, help="WAV to sweep.")
@click.option("--truth", type=click.Path(), default=None, help="Reference annotation.")
@click.option("--demo", is_flag=True, help="Use the built-in synthetic demo scenario.")
@click.option("--snr-db", type=float, default=20.0, show_default=True, help="Demo scenario SNR.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--ramp-s", type=float, default=None)
@click.option("--grid-min", type=float, default=None)
@click.option("--grid-max", type=float, default=None)
@click.option("--grid-points", type=int, default=None)
@click.option("--output", type=click.Path(), default=None, help="Write the PR curve here.")
@click.option("--output-format", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@click.option("--config", "config_path", type=click.Path(), default=None)
@detector_options
@_handle_errors
def cmd_sweep(input_path, truth, demo, snr_db, seed, ramp_s, grid_min, grid_max,
              grid_points, output, config_path, **overrides) -> None:
    """Precision/recall curve over a grid of threshold margins."""
    output_format = overrides.pop("output_format", None) or "csv"
    cfg = _merged_config(config_path, **overrides)
    cfgmod.apply_overrides(
        cfg,
        {"eval.ramp_s": ramp_s, "eval.grid_min": grid_min,
         "eval.grid_max": grid_max, "eval.grid_points": grid_points},
    )
    run_cfg = cfgmod.run_config(cfg)

    if demo:
        scenario = synthmod.make_scenario(seed=seed, snr_db=snr_db)
        stream, intervals = synthmod.generate(scenario)
        annotation = ev.Annotation(segments=intervals, source="demo")
        stream = _preprocess(stream, run_cfg, cfg)
    else:
        if input_path is None or truth is None:
            raise ConfigurationError("sweep needs --input and --truth (or --demo)")
        if not Path(input_path).exists():
            raise ConfigurationError(f"input file not found: {input_path}")
        stream = _preprocess(read_wav(input_path), run_cfg, cfg)
        annotation = ev.load_annotation(truth)

    grid = ev.default_grid(run_cfg.eval.grid_min, run_cfg.eval.grid_max, run_cfg.eval.grid_points)
    points = ev.sweep(stream, annotation, run_cfg.detector, grid,
                      fuzzy=ev.FuzzyConfig(ramp_s=run_cfg.eval.ramp_s))
    for pt in points:
        click.echo(f"n_std={pt.n_std:.3f} precision={pt.precision:.4f} recall={pt.recall:.4f}")
    if output:
        if output_format == "csv":
            iomod.write_pr_csv(output, points)
        else:
            iomod.write_pr_json(output, points)
        click.echo(f"wrote {output}")


@cli.command("synth")
@click.option("--out-dir", "-o", required=True, type=click.Path(file_okay=False))
@click.option("--name", default="scenario", show_default=True)
@click.option("--scenario", "scenario_path", type=click.Path(), default=None,
              help="YAML scenario description; overrides the builder flags.")
@click.option("--duration-s", type=float, default=600.0, show_default=True)
@click.option("--events", "n_events", type=int, default=12, show_default=True)
@click.option("--snr-db", type=float, default=20.0, show_default=True)
@click.option("--noise-sigma2", type=float, default=0.01, show_default=True)
@click.option("--snap-rate-hz", type=float, default=0.2, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--sample-format", type=click.Choice(["pcm16", "float32"]), default="pcm16",
              show_default=True)
@_handle_errors
def cmd_synth(out_dir, name, scenario_path, duration_s, n_events, snr_db,
              noise_sigma2, snap_rate_hz, seed, sample_format) -> None:
    """Generate a labeled synthetic soundscape: WAV plus annotation CSV."""
    if scenario_path is not None:
        if not Path(scenario_path).exists():
            raise ConfigurationError(f"scenario file not found: {scenario_path}")
        data = yaml.safe_load(Path(scenario_path).read_text())
        if not isinstance(data, dict):
            raise ConfigurationError(f"{scenario_path}: scenario must be a mapping")
        scenario = synthmod.scenario_from_mapping(data)
    else:
        scenario = synthmod.make_scenario(
            duration_s=duration_s, n_events=n_events, snr_db=snr_db, seed=seed,
            noise_sigma2=noise_sigma2, snap_rate_hz=snap_rate_hz,
        )
    stream, annotation = synthmod.generate(scenario)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    wav_path = out / f"{name}.wav"
    csv_path = out / f"{name}.csv"
    write_wav(wav_path, stream, sample_format=sample_format)
    iomod.write_annotation_csv(csv_path, annotation)
    click.echo(f"wrote {wav_path} ({stream.duration_s:.1f} s, {len(annotation)} events)")
    click.echo(f"wrote {csv_path}")


@cli.command("calibrate")
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--output", required=True, type=click.Path())
@click.option("--train-odds", required=True, callback=_parse_odds,
              help="Prior odds the scores were produced under (float or a/b).")
@click.option("--deploy-odds", required=True, callback=_parse_odds,
              help="Prior odds to rescore for (float or a/b).")
@click.option("--clamp/--no-clamp", default=False, show_default=True,
              help="Clamp posteriors of exactly 0/1 to within 1e-12 instead of failing.")
@_handle_errors
def cmd_calibrate(input_path, output, train_odds, deploy_odds, clamp) -> None:
    """Rescore a posterior CSV (columns id,posterior) for different prior odds."""
    if not Path(input_path).exists():
        raise ConfigurationError(f"input file not found: {input_path}")
    odds = cal.OddsSpec(train_odds=train_odds, deploy_odds=deploy_odds)
    scores = iomod.read_scores_csv(input_path)
    rescored = [(ident, cal.recalibrate(p, odds, clamp=clamp)) for ident, p in scores]
    iomod.write_scores_csv(output, rescored)
    click.echo(f"recalibrated {len(rescored)} scores -> {output}")


@cli.command("bench")
@click.option("--duration-s", type=float, required=True, help="Audio duration to synthesize.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--noise-sigma2", type=float, default=0.01, show_default=True)
@click.option("--chunk-s", type=float, default=10.0, show_default=True)
@click.option("--json", "json_path", type=click.Path(), default=None)
@click.option("--config", "config_path", type=click.Path(), default=None)
@detector_options
@_handle_errors
def cmd_bench(duration_s, seed, noise_sigma2, chunk_s, json_path, config_path, **overrides) -> None:
    """Throughput benchmark on in-memory synthetic noise (generation excluded)."""
    if duration_s < 0:
        raise ConfigurationError(f"duration must be >= 0, got {duration_s}")
    cfg = _merged_config(config_path, **overrides)
    run_cfg = cfgmod.run_config(cfg)
    rate = run_cfg.ingest.target_rate

    wall = 0.0
    if duration_s > 0:
        rng = np.random.default_rng(seed)
        det = StreamingDetector(run_cfg.detector, rate)
        remaining = int(round(duration_s * rate))
        chunk = max(1, int(chunk_s * rate))
        sigma = math.sqrt(noise_sigma2)
        while remaining > 0:
            block = sigma * rng.standard_normal(min(chunk, remaining))
            remaining -= block.size
            start = time.perf_counter()
            det.feed(block)
            wall += time.perf_counter() - start
        start = time.perf_counter()
        segments = det.finish()
        wall += time.perf_counter() - start
    else:
        segments = []

    factor = duration_s / wall if wall > 0 else float("inf")
    report = {
        "audio_s": duration_s,
        "detect_wall_s": wall,
        "realtime_factor": factor,
        "segments": len(segments),
        "sample_rate": rate,
    }
    click.echo(
        f"{duration_s:.0f} s audio detected in {wall:.3f} s "
        f"({factor:.0f}x realtime, {len(segments)} segments)"
    )
    if json_path:
        Path(json_path).write_text(json.dumps(report, indent=2) + "\n")


def main() -> None:
    cli(auto_envvar_prefix="SNO")


if __name__ == "__main__":
    main()
