"""Benchmark metrics: throughput, efficiency, accuracy, scaling.

All functions are pure and validate their inputs. Power efficiency is
defined as images per second divided by the summed TDP of the devices
used, computed with exactly one division so reports stay internally
consistent.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateFitError,
    EmptyInputError,
    EmptyPredictionError,
    LengthMismatchError,
    MetricsError,
    NonPositiveBaselineError,
    NonPositiveTdpError,
    NoSurvivingSamplesError,
    ZeroDurationError,
)


def throughput(n_images: int, wall_seconds: float) -> float:
    """Images per second over a measured wall-clock window."""
    if n_images < 0:
        raise MetricsError(f"n_images must be non-negative, got {n_images}")
    if not wall_seconds > 0:
        raise ZeroDurationError(f"wall_seconds must be positive, got {wall_seconds}")
    return n_images / wall_seconds


def throughput_per_watt(images_per_second: float, tdp_watts_total: float) -> float:
    """Power efficiency: images per second per watt of summed TDP."""
    if not tdp_watts_total > 0:
        raise NonPositiveTdpError(f"tdp_watts_total must be positive, got {tdp_watts_total}")
    return images_per_second / tdp_watts_total


def top1_error(predictions: Sequence, labels: Sequence[int]) -> float:
    """Fraction of samples whose best-scoring class is not the label.

    Ties go to the lowest class index. A label outside the prediction
    range counts as a miss.
    """
    if len(predictions) != len(labels):
        raise LengthMismatchError(
            f"{len(predictions)} predictions for {len(labels)} labels")
    if len(predictions) == 0:
        raise EmptyInputError("no samples")
    misses = 0
    for confidences, label in zip(predictions, labels):
        row = np.asarray(confidences)
        if row.size == 0:
            raise EmptyPredictionError("empty confidence vector")
        if not 0 <= label < row.size or int(np.argmax(row)) != label:
            misses += 1
    return misses / len(predictions)


def confidence_diff(reference: Sequence, test: Sequence, labels: Sequence[int]) -> float:
    """Mean |reference - test| confidence at the label, over samples both got right."""
    if not (len(reference) == len(test) == len(labels)):
        raise LengthMismatchError(
            f"got {len(reference)} reference, {len(test)} test, {len(labels)} labels")
    diffs = []
    for ref, tst, label in zip(reference, test, labels):
        ref = np.asarray(ref)
        tst = np.asarray(tst)
        if ref.size == 0 or tst.size == 0:
            raise EmptyPredictionError("empty confidence vector")
        if not (0 <= label < ref.size and 0 <= label < tst.size):
            continue
        if int(np.argmax(ref)) == label and int(np.argmax(tst)) == label:
            diffs.append(abs(float(ref[label]) - float(tst[label])))
    if not diffs:
        raise NoSurvivingSamplesError("no sample was classified correctly by both runs")
    return sum(diffs) / len(diffs)


def normalize_scaling(measurements: Sequence[tuple[int, float]], baseline: float,
                      ) -> list[tuple[int, float]]:
    """Scale (device_count, images_per_second) points by a baseline rate."""
    if not baseline > 0:
        raise NonPositiveBaselineError(f"baseline must be positive, got {baseline}")
    return [(count, rate / baseline) for count, rate in measurements]


def project_linear(measured: Sequence[tuple[int, float]], target_count: int) -> float:
    """Extrapolate throughput to target_count devices.

    Ordinary least squares over the measured (count, rate) points. A
    single point degenerates to a line through the origin. Two or more
    points all at the same count cannot be fit.
    """
    if len(measured) == 0:
        raise EmptyInputError("no measured points")
    counts = np.asarray([c for c, _ in measured], dtype=np.float64)
    rates = np.asarray([r for _, r in measured], dtype=np.float64)
    if len(measured) == 1:
        if counts[0] == 0:
            raise DegenerateFitError("cannot project from a zero-device point")
        return float(target_count * rates[0] / counts[0])
    dc = counts - counts.mean()
    if not np.any(dc):
        raise DegenerateFitError("all measured points share one device count")
    slope = float((dc * (rates - rates.mean())).sum() / (dc * dc).sum())
    intercept = float(rates.mean() - slope * counts.mean())
    return slope * target_count + intercept


def stddev(samples: Sequence[float]) -> float:
    """Population standard deviation (divide by N)."""
    if len(samples) == 0:
        raise EmptyInputError("no samples")
    return float(np.std(np.asarray(samples, dtype=np.float64)))


@dataclass(frozen=True)
class MetricsReport:
    """Aggregated run metrics. Optional fields stay None when not measured."""

    images_per_second: float
    total_tdp_watts: float
    images_per_watt: float
    images_per_second_std: float = 0.0
    images_per_watt_std: float = 0.0
    top1: float | None = None
    top1_std: float | None = None
    mean_abs_confidence_diff: float | None = None
    mean_abs_confidence_diff_std: float | None = None
    scaling_factor: float | None = None
    scaling_factor_std: float | None = None

    @classmethod
    def create(cls, images_per_second: float, total_tdp_watts: float, **extra,
               ) -> "MetricsReport":
        """Build a report with images_per_watt derived by the one division."""
        return cls(images_per_second=images_per_second,
                   total_tdp_watts=total_tdp_watts,
                   images_per_watt=throughput_per_watt(images_per_second, total_tdp_watts),
                   **extra)
