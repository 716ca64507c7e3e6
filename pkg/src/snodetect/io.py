"""Writers for segments, annotations, sweep reports and score tables."""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .detector import Segment
from .errors import ConfigurationError
from .evaluate import EvalPoint

SEGMENT_COLUMNS = ("start_s", "end_s", "label", "peak_power", "mean_power")


def write_segments_csv(path, segments: list[Segment]) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SEGMENT_COLUMNS)
        for s in segments:
            writer.writerow(
                [
                    f"{s.start_s:.6f}",
                    f"{s.end_s:.6f}",
                    s.label,
                    f"{s.peak_power:.6f}",
                    f"{s.mean_power:.6f}",
                ]
            )


def write_segments_json(path, segments: list[Segment]) -> None:
    records = [
        {
            "start_s": s.start_s,
            "end_s": s.end_s,
            "label": s.label,
            "peak_power": s.peak_power,
            "mean_power": s.mean_power,
            "provisional": s.provisional,
        }
        for s in segments
    ]
    Path(path).write_text(json.dumps(records, indent=2) + "\n")


def write_selection_table(path, segments: list[Segment]) -> None:
    """Tab-separated selection table readable by common annotation tools."""
    lines = ["Selection\tBegin Time (s)\tEnd Time (s)"]
    for i, s in enumerate(segments, start=1):
        lines.append(f"{i}\t{s.start_s:.6f}\t{s.end_s:.6f}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_segments(path, segments: list[Segment], fmt: str) -> None:
    if fmt == "csv":
        write_segments_csv(path, segments)
    elif fmt == "json":
        write_segments_json(path, segments)
    elif fmt == "raven":
        write_selection_table(path, segments)
    else:
        raise ConfigurationError(f"unknown output format {fmt!r}")


def segment_file_suffix(fmt: str) -> str:
    return {"csv": ".segments.csv", "json": ".segments.json", "raven": ".selections.txt"}[fmt]


def write_annotation_csv(path, intervals) -> None:
    """Lossless (full float precision) start_s/end_s table."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["start_s", "end_s"])
        for start, end in intervals:
            writer.writerow([repr(float(start)), repr(float(end))])


def write_pr_csv(path, points: list[EvalPoint]) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n_std", "precision", "recall"])
        for pt in points:
            writer.writerow([f"{pt.n_std:.6f}", f"{pt.precision:.6f}", f"{pt.recall:.6f}"])


def write_pr_json(path, points: list[EvalPoint]) -> None:
    records = [
        {"n_std": pt.n_std, "precision": pt.precision, "recall": pt.recall} for pt in points
    ]
    Path(path).write_text(json.dumps(records, indent=2) + "\n")


def read_scores_csv(path) -> list[tuple[str, float]]:
    """Score table with 'id' and 'posterior' columns."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"id", "posterior"} <= set(reader.fieldnames):
            raise ConfigurationError(
                f"{path}: score CSV needs 'id' and 'posterior' columns, got {reader.fieldnames}"
            )
        try:
            return [(row["id"], float(row["posterior"])) for row in reader]
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"{path}: bad score row: {exc}") from exc


def write_scores_csv(path, scores: list[tuple[str, float]]) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "posterior"])
        for ident, posterior in scores:
            writer.writerow([ident, repr(posterior)])
