"""Pairwise distortion verification and Monte-Carlo failure-rate estimation.

A projection "succeeds" when every adjusted squared-distance quotient
(n/n') ||u'-v'||^2 / ||u-v||^2 stays inside the band [1-delta, 1+delta];
a single excursion counts as failure.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDataError, DomainError, ShapeError
from .projection import Dataset, build_operator, project

__all__ = [
    "DistortionReport",
    "FailureRateEstimate",
    "pairwise_sq_dists",
    "distortion_report",
    "estimate_failure_rate",
    "wilson_interval",
    "export_histogram",
]


@dataclass(frozen=True)
class DistortionReport:
    quotients: np.ndarray       # one entry per pair with nonzero original distance
    band: tuple[float, float]
    violations: int
    pair_count: int             # m (m-1) / 2, including excluded zero pairs
    zero_pairs: int             # pairs with coincident original points (excluded)
    success: bool


@dataclass(frozen=True)
class FailureRateEstimate:
    trials: int
    failures: int
    rate: float
    wilson_interval: tuple[float, float]


def pairwise_sq_dists(points: np.ndarray, block: int = 1024) -> np.ndarray:
    """Condensed vector of squared Euclidean distances over all pairs i < j.

    Processed in row blocks for cache friendliness; every pair is computed
    independently as ||x_i||^2 + ||x_j||^2 - 2 x_i.x_j, so the result does
    not depend on the block size.
    """
    points = np.asarray(points, dtype=np.float64)
    m = points.shape[0]
    norms = np.einsum("ij,ij->i", points, points)
    out = np.empty(m * (m - 1) // 2, dtype=np.float64)
    pos = 0
    for start in range(0, m, block):
        stop = min(start + block, m)
        dots = points[start:stop] @ points.T
        for i in range(start, stop):
            row = norms[i] + norms[i + 1 :] - 2.0 * dots[i - start, i + 1 :]
            np.maximum(row, 0.0, out=row)
            out[pos : pos + row.size] = row
            pos += row.size
    return out


def distortion_report(original: Dataset, projected: Dataset, delta: float) -> DistortionReport:
    """Check every pair against the distortion band [1-delta, 1+delta].

    Quotients are adjusted by n/n'.  Pairs whose original points coincide
    carry no information (the band is vacuous there); they are excluded
    from the quotients and counted in ``zero_pairs``.  The identity case
    n' == n is allowed as a diagnostic mode.
    """
    if original.m != projected.m:
        raise ShapeError(f"point counts differ: {original.m} vs {projected.m}")
    if original.ids != projected.ids:
        raise ShapeError("dataset ids do not match between original and projected data")
    if projected.dim > original.dim:
        raise ShapeError(f"projected dimension {projected.dim} exceeds original {original.dim}")
    if not 0.0 < delta:
        raise DomainError(f"delta must be positive, got {delta}")
    m = original.m
    sq_orig = pairwise_sq_dists(original.points)
    sq_proj = pairwise_sq_dists(projected.points)
    nonzero = sq_orig > 0.0
    zero_pairs = int(np.count_nonzero(~nonzero))
    if zero_pairs == sq_orig.size and sq_orig.size > 0:
        raise DegenerateDataError("all point pairs coincide in the original data")
    adjust = original.dim / projected.dim
    quotients = adjust * sq_proj[nonzero] / sq_orig[nonzero]
    band = (1.0 - delta, 1.0 + delta)
    violations = int(np.count_nonzero((quotients < band[0]) | (quotients > band[1])))
    return DistortionReport(
        quotients=quotients,
        band=band,
        violations=violations,
        pair_count=m * (m - 1) // 2,
        zero_pairs=zero_pairs,
        success=violations == 0,
    )


def estimate_failure_rate(
    data: Dataset, n_prime: int, delta: float, trials: int, base_seed: int
) -> FailureRateEstimate:
    """Fraction of independent projections (seeds base_seed + t) that fail the band."""
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    # The original pairwise distances are shared by every trial.
    sq_orig = pairwise_sq_dists(data.points)
    nonzero = sq_orig > 0.0
    if not np.any(nonzero) and sq_orig.size > 0:
        raise DegenerateDataError("all point pairs coincide in the original data")
    adjust = data.dim / n_prime
    lo, hi = 1.0 - delta, 1.0 + delta
    failures = 0
    for t in range(trials):
        op = build_operator(data.dim, n_prime, base_seed + t)
        sq_proj = pairwise_sq_dists(project(op, data).points)
        quotients = adjust * sq_proj[nonzero] / sq_orig[nonzero]
        if np.any((quotients < lo) | (quotients > hi)):
            failures += 1
    rate = failures / trials
    return FailureRateEstimate(
        trials=trials,
        failures=failures,
        rate=rate,
        wilson_interval=wilson_interval(failures, trials),
    )


def wilson_interval(successes: int, trials: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """95% Wilson score interval; well-behaved at small trial counts."""
    if trials < 1:
        raise DomainError("trials must be >= 1")
    if not 0 <= successes <= trials:
        raise DomainError("successes must lie in [0, trials]")
    p = successes / trials
    z2 = z * z
    centre = (p + z2 / (2 * trials)) / (1 + z2 / trials)
    half = z * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials)) / (1 + z2 / trials)
    # Clamp away the last-ulp float wobble: the interval must contain p.
    return (min(p, max(0.0, centre - half)), max(p, min(1.0, centre + half)))


def export_histogram(report: DistortionReport, path: str, bin_width: float | None = None) -> None:
    """Write the quotient histogram as CSV rows (bin_lo, bin_hi, count).

    The default bin width is delta/20 where delta is implied by the band.
    """
    delta = (report.band[1] - report.band[0]) / 2.0
    width = bin_width if bin_width is not None else delta / 20.0
    if width <= 0:
        raise DomainError(f"bin width must be positive, got {width}")
    q = report.quotients
    lo = math.floor(q.min() / width) * width if q.size else 0.0
    hi = math.ceil(q.max() / width) * width if q.size else width
    nbins = max(1, round((hi - lo) / width))
    while q.size and lo + nbins * width < q.max():  # guard the top edge
        nbins += 1
    counts, edges = np.histogram(q, bins=nbins, range=(lo, lo + nbins * width))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_lo", "bin_hi", "count"])
        for i, c in enumerate(counts):
            writer.writerow([f"{edges[i]:.10g}", f"{edges[i + 1]:.10g}", int(c)])
