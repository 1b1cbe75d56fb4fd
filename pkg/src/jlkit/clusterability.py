"""Clusterability parameters: exact measurement and projection transport.

Five notions are covered.  sigma-separatedness (OPT_k < sigma^2 OPT_{k-1}),
(c, sigma)-approximation stability, beta-centre stability, (1+beta) weak
deletion stability, and s-multiplicative perturbation robustness of the
squared-distance metric.  Measurements rely on the exact brute-force
optimum, so they are limited to small instances; the transport formulas
predict how each parameter degrades after a random projection with
squared-distance distortion delta:

    sigma' = sigma sqrt((1+d)/(1-d))          (larger is worse)
    c'     = c (1-d)/(1+d)                    (smaller is worse)
    beta'  = beta sqrt((1-d)/(1+d))           (smaller is worse)
    (1+beta)' = (1+beta)(1-d)/(1+d)           (smaller is worse)

Perturbation robustness transports in the inverted direction: to obtain
s_p in the projected space with slack nu, the original space must satisfy
s <= s_p nu (1-d)^2 / (1+d); see ``required_mult_perturb_s``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateDataError, DomainError
from .kmeans import (
    Partition,
    brute_force_optimum,
    brute_force_optimum_sq_dists,
    cluster_stats,
    same_partition,
    _square_sq_dists,
)
from .projection import Dataset

__all__ = [
    "ClusterabilityParams",
    "TransportReport",
    "TransportedParams",
    "transport",
    "required_mult_perturb_s",
    "measure_sigma_separatedness",
    "measure_centre_stability",
    "measure_weak_deletion_stability",
    "check_perturbation_robustness",
    "write_transport_csv",
]


@dataclass
class ClusterabilityParams:
    """Any subset of the five parameters; None marks 'not specified'."""

    sigma_separatedness: float | None = None          # in (0, 1)
    approx_stability: tuple[float, float] | None = None  # (c > 1, sigma)
    centre_stability_beta: float | None = None        # > 1
    weak_deletion_beta: float | None = None           # beta > 0, ratio is 1 + beta
    mult_perturb_s: float | None = None               # in (0, 1)

    def __post_init__(self):
        if self.sigma_separatedness is not None and not 0.0 < self.sigma_separatedness < 1.0:
            raise DomainError("sigma-separatedness must lie in (0, 1)")
        if self.approx_stability is not None and self.approx_stability[0] <= 1.0:
            raise DomainError("approximation-stability factor c must exceed 1")
        if self.centre_stability_beta is not None and self.centre_stability_beta <= 1.0:
            raise DomainError("centre-stability beta must exceed 1")
        if self.weak_deletion_beta is not None and self.weak_deletion_beta <= 0.0:
            raise DomainError("weak-deletion beta must be positive")
        if self.mult_perturb_s is not None and not 0.0 < self.mult_perturb_s < 1.0:
            raise DomainError("perturbation-robustness s must lie in (0, 1)")


@dataclass
class TransportReport:
    before: ClusterabilityParams
    predicted_after: "TransportedParams"
    delta: float
    epsilon: float
    measured_after: "ClusterabilityParams | None" = None


@dataclass
class TransportedParams:
    """Predicted post-projection values; fields can leave their definition domain.

    ``degraded`` flags parameters whose transported value no longer
    satisfies the defining threshold (c' <= 1, beta' <= 1, (1+beta)' <= 1):
    the property becomes vacuous rather than erroneous.
    """

    sigma_separatedness: float | None = None
    approx_stability: tuple[float, float] | None = None
    centre_stability_beta: float | None = None
    weak_deletion_beta: float | None = None
    mult_perturb_s: float | None = None
    degraded: dict = field(default_factory=dict)


def transport(before: ClusterabilityParams, delta: float) -> TransportedParams:
    """Predict every specified parameter after projection at distortion delta.

    Perturbation robustness has no forward map (the theorem states a
    precondition on the original space, see ``required_mult_perturb_s``),
    so ``mult_perturb_s`` is left unset in the prediction.
    """
    if not 0.0 <= delta < 0.5:
        raise DomainError(f"delta must lie in [0, 1/2), got {delta}")
    shrink = (1.0 - delta) / (1.0 + delta)
    out = TransportedParams()
    if before.sigma_separatedness is not None:
        out.sigma_separatedness = before.sigma_separatedness / math.sqrt(shrink)
        out.degraded["sigma_separatedness"] = out.sigma_separatedness >= 1.0
    if before.approx_stability is not None:
        c, sig = before.approx_stability
        out.approx_stability = (c * shrink, sig)
        out.degraded["approx_stability"] = out.approx_stability[0] <= 1.0
    if before.centre_stability_beta is not None:
        out.centre_stability_beta = before.centre_stability_beta * math.sqrt(shrink)
        out.degraded["centre_stability_beta"] = out.centre_stability_beta <= 1.0
    if before.weak_deletion_beta is not None:
        ratio = (1.0 + before.weak_deletion_beta) * shrink
        out.weak_deletion_beta = ratio - 1.0
        out.degraded["weak_deletion_beta"] = ratio <= 1.0
    return out


def required_mult_perturb_s(s_p: float, nu: float, delta: float) -> float:
    """Original-space s guaranteeing s_p-robustness after projection.

    Given the target squared-distance perturbation factor s_p and slack nu
    (both in (0, 1)), the original space must be sqrt(s)-multiplicative
    perturbation robust with s <= s_p * nu * (1-delta)^2 / (1+delta).
    Holds with probability at least 1 - 2 epsilon (two data sets are
    projected in the argument).
    """
    if not 0.0 < s_p < 1.0 or not 0.0 < nu < 1.0:
        raise DomainError("s_p and nu must lie in (0, 1)")
    if not 0.0 <= delta < 0.5:
        raise DomainError(f"delta must lie in [0, 1/2), got {delta}")
    return s_p * nu * (1.0 - delta) ** 2 / (1.0 + delta)


def measure_sigma_separatedness(data: Dataset, k: int) -> float:
    """sqrt(OPT_k / OPT_{k-1}); the instance is sigma-separated for any larger sigma."""
    if k < 2:
        raise DomainError(f"k must be >= 2, got {k}")
    _, stats_k = brute_force_optimum(data, k)
    _, stats_k1 = brute_force_optimum(data, k - 1)
    if stats_k1.cost <= 0.0:
        raise DegenerateDataError(
            f"optimal cost at k-1={k - 1} is zero; the data occupy at most {k - 1} locations"
        )
    return math.sqrt(stats_k.cost / stats_k1.cost)


def measure_centre_stability(data: Dataset, partition: Partition) -> float:
    """beta = min over points of (distance to nearest foreign centroid) / (own distance).

    Points coincident with their centroid contribute no constraint.
    Returns inf when every point sits on its centroid.  A value <= 1
    means the partition is not centre-stable at all.
    """
    stats = cluster_stats(data, partition)
    if partition.k < 2:
        raise DomainError("centre stability needs at least two clusters")
    diff = data.points[:, None, :] - stats.centroids[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=2))
    own = dist[np.arange(data.m), partition.assignments]
    foreign = dist.copy()
    foreign[np.arange(data.m), partition.assignments] = np.inf
    nearest_foreign = foreign.min(axis=1)
    with np.errstate(divide="ignore"):
        ratios = np.where(own > 0.0, nearest_foreign / own, np.inf)
    return float(ratios.min())


def measure_weak_deletion_stability(data: Dataset, k: int) -> float:
    """Cheapest deletion-and-merge cost divided by OPT.

    Deletes each optimal centre j in turn, reassigns all of cluster j to a
    receiving cluster j', recomputes centroids, and takes the minimum cost
    over (j, j').  The instance is (1+beta)-weak-deletion stable for any
    1 + beta below the returned ratio.
    """
    if k < 2:
        raise DomainError(f"k must be >= 2, got {k}")
    partition, stats = brute_force_optimum(data, k)
    if stats.cost <= 0.0:
        raise DegenerateDataError("optimal cost is zero; deletion ratio undefined")
    best = math.inf
    for j in range(k):
        for receiver in range(k):
            if receiver == j:
                continue
            merged = partition.assignments.copy()
            merged[merged == j] = receiver
            merged[merged > j] -= 1
            cost = cluster_stats(data, Partition(assignments=merged, k=k - 1)).cost
            best = min(best, cost)
    return best / stats.cost


def check_perturbation_robustness(
    data: Dataset, k: int, s: float, trials: int, seed: int
) -> bool:
    """One-sided falsification test of s-multiplicative perturbation robustness.

    Draws ``trials`` random symmetric factor matrices with entries uniform
    in (s, 1/s), applies them to the pairwise distances, and recomputes
    the exact optimum under each perturbed metric (using the
    distance-matrix cost, since perturbed distances need not embed in
    Euclidean space).  Returns True when every trial reproduces the
    unperturbed optimal partition up to relabeling -- evidence for
    robustness, not a proof.
    """
    if not 0.0 < s < 1.0:
        raise DomainError(f"s must lie in (0, 1), got {s}")
    if trials < 1:
        raise DomainError("trials must be >= 1")
    if data.m > 12:
        raise DomainError("perturbation check limited to m <= 12")
    sq = _square_sq_dists(data.points)
    reference, _ = brute_force_optimum_sq_dists(sq, k)
    rng = np.random.default_rng(seed)
    m = data.m
    iu = np.triu_indices(m, 1)
    for _ in range(trials):
        factors = np.ones((m, m))
        draw = rng.uniform(s, 1.0 / s, size=iu[0].size)
        factors[iu] = draw
        factors[(iu[1], iu[0])] = draw
        perturbed_sq = sq * factors**2  # factors act on distances, costs use squares
        candidate, _ = brute_force_optimum_sq_dists(perturbed_sq, k)
        if not same_partition(reference, candidate):
            return False
    return True


def write_transport_csv(report: TransportReport, path: str) -> None:
    """Serialize a transport report: (parameter, before, predicted_after, measured_after, bound_ok)."""
    rows = []

    def add(name, before, predicted, measured, better_when):
        if before is None:
            return
        ok = ""
        if measured is not None and predicted is not None:
            ok = str(measured <= predicted if better_when == "low" else measured >= predicted)
        rows.append([name, _fmt(before), _fmt(predicted), _fmt(measured), ok])

    b, p = report.before, report.predicted_after
    meas = report.measured_after or ClusterabilityParams()
    add("sigma_separatedness", b.sigma_separatedness, p.sigma_separatedness,
        meas.sigma_separatedness, "low")
    add("approx_stability_c", None if b.approx_stability is None else b.approx_stability[0],
        None if p.approx_stability is None else p.approx_stability[0],
        None if meas.approx_stability is None else meas.approx_stability[0], "high")
    add("centre_stability_beta", b.centre_stability_beta, p.centre_stability_beta,
        meas.centre_stability_beta, "high")
    add("weak_deletion_beta", b.weak_deletion_beta, p.weak_deletion_beta,
        meas.weak_deletion_beta, "high")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["parameter", "before", "predicted_after", "measured_after",
                         "theorem_bound_satisfied"])
        writer.writerows(rows)


def _fmt(value) -> str:
    return "" if value is None else f"{value:.10g}"
