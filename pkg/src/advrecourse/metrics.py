"""Evaluation suite: accuracy, minority F1, ASR curves, recourse cost
statistics, low-cost rates, manifold proximity and boundary histograms.

Conventions: cost statistics aggregate over successful counterfactuals only
while the low-cost rate counts failures as not-low-cost, so both of the
respective denominators (successes vs. all sampled negatives) are reported.
The "desired class" pool is the positively *labeled* training population.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import nn
from .attack import min_adversarial_radius_batch, pgd_config, attack_success_rate
from .data import Dataset
from .recourse import CounterfactualResult

PAIRWISE_EXACT_LIMIT = 2000


@dataclass
class MetricsConfig:
    asr_radii: list[float] = field(default_factory=lambda: [0.05, 0.1, 0.15, 0.2, 0.25])
    low_cost_threshold: float = 0.05
    knn_k: int = 5
    sphere_fraction: float = 0.2
    boundary_sample: int = 1000
    boundary_bins: int = 20
    eps_max: float = 0.5
    bisect_tol: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.low_cost_threshold <= 0 or self.knn_k < 1:
            raise ValueError("low_cost_threshold must be > 0 and knn_k >= 1")
        if not 0.0 < self.sphere_fraction < 1.0:
            raise ValueError("sphere_fraction must be in (0, 1)")


@dataclass
class Histogram:
    counts: list[int]
    edges: list[float]
    mean: float

    def __post_init__(self):
        if any(c < 0 for c in self.counts):
            raise ValueError("histogram counts must be non-negative")
        if sorted(self.edges) != list(self.edges):
            raise ValueError("histogram bin edges must be sorted")

    def to_dict(self) -> dict:
        return {"counts": self.counts, "edges": self.edges, "mean": self.mean}


@dataclass
class CostStats:
    mean: dict[str, float]
    median: dict[str, float]
    p90: dict[str, float]
    n_success: int
    n_total: int

    @property
    def failure_rate(self) -> float:
        return 1.0 - self.n_success / self.n_total


@dataclass
class MetricsReport:
    """One row of the cross-model table: a model paired with a recourse method."""

    model: str
    regime: str
    epsilon: float | None
    method: str
    accuracy: float
    f1_minority: float
    asr_curve: dict[float, float]
    cost_mean: dict[str, float]
    cost_median: dict[str, float]
    cost_p90: dict[str, float]
    low_cost_rate: float
    rho_knn: float
    rho_sphere: float
    rho_sphere_excluded: int
    recourse_failure_rate: float
    boundary_radii: Histogram | None = None
    discovered_radii: Histogram | None = None


def accuracy(model, ds_test: Dataset) -> float:
    """Mean correct-prediction indicator at the 0.5 threshold."""
    if ds_test.n == 0:
        raise ValueError("accuracy needs a non-empty test set")
    return float(np.mean(nn.predict(model, ds_test.features) == ds_test.labels))


def f1_minority(model, ds_test: Dataset) -> float:
    """F1 with the rarer test label as the positive class (label 1 on ties)."""
    labels = ds_test.labels
    counts = np.bincount(labels, minlength=2)
    if counts[0] == 0 or counts[1] == 0:
        raise ValueError("f1_minority needs both classes in the test set")
    minority = 1 if counts[1] <= counts[0] else 0
    preds = nn.predict(model, ds_test.features)
    tp = int(np.sum((preds == minority) & (labels == minority)))
    fp = int(np.sum((preds == minority) & (labels != minority)))
    fn = int(np.sum((preds != minority) & (labels == minority)))
    if 2 * tp + fp + fn == 0:
        return 0.0
    return 2.0 * tp / (2 * tp + fp + fn)


def asr_curve(model, ds_test: Dataset, radii: list[float],
              steps: int = 10, seed: int = 0) -> dict[float, float]:
    """Fresh PGD attack per radius; one success rate per epsilon."""
    return {float(eps): attack_success_rate(model, ds_test,
                                            pgd_config(eps, steps=steps, seed=seed))
            for eps in radii}


def cost_stats(results: list[CounterfactualResult]) -> CostStats:
    """Mean/median/90th-percentile cost per norm over successful results."""
    if not results:
        raise ValueError("cost_stats needs at least one result")
    successes = [r for r in results if r.success]
    if not successes:
        raise ValueError("cost_stats needs at least one successful result")
    stats = {"mean": {}, "median": {}, "p90": {}}
    for norm in ("l1", "l2", "linf"):
        vals = np.asarray([getattr(r, f"cost_{norm}") for r in successes])
        stats["mean"][norm] = float(vals.mean())
        stats["median"][norm] = float(np.median(vals))
        stats["p90"][norm] = float(np.percentile(vals, 90))
    return CostStats(stats["mean"], stats["median"], stats["p90"],
                     len(successes), len(results))


def low_cost_rate(results: list[CounterfactualResult], threshold: float) -> float:
    """Fraction with l-inf cost under the threshold; failures count against."""
    if not results:
        raise ValueError("low_cost_rate needs at least one result")
    hits = [r.success and r.cost_linf < threshold for r in results]
    return float(np.mean(hits))


def _success_cfs(results: list[CounterfactualResult]) -> np.ndarray:
    return np.asarray([r.x_cf for r in results if r.success], dtype=np.float64)


def manifold_knn(results: list[CounterfactualResult], positive_pool: np.ndarray,
                 k: int) -> float:
    """Mean over counterfactuals of the mean l2 distance to k nearest positives."""
    pool = np.atleast_2d(np.asarray(positive_pool, dtype=np.float64))
    if pool.shape[0] < k:
        raise ValueError(f"positive pool of size {pool.shape[0]} is smaller than k={k}")
    cfs = _success_cfs(results)
    if cfs.shape[0] == 0:
        raise ValueError("manifold_knn needs at least one successful result")
    dists = np.linalg.norm(cfs[:, None, :] - pool[None, :, :], axis=2)
    nearest = np.sort(dists, axis=1)[:, :k]
    return float(nearest.mean())


def mean_pairwise_distance(points: np.ndarray, seed: int = 0) -> float:
    """Mean l2 distance over all pairs; subsampled past the exact-size limit."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    n = points.shape[0]
    if n < 2:
        return 0.0
    if n > PAIRWISE_EXACT_LIMIT:
        rng = np.random.default_rng(seed)
        points = points[rng.choice(n, size=PAIRWISE_EXACT_LIMIT, replace=False)]
        n = PAIRWISE_EXACT_LIMIT
    dists = np.linalg.norm(points[:, None, :] - points[None, :, :], axis=2)
    iu = np.triu_indices(n, k=1)
    return float(dists[iu].mean())


def manifold_sphere(results: list[CounterfactualResult], positive_pool: np.ndarray,
                    fraction: float, seed: int = 0) -> tuple[float, int]:
    """Mean distance to in-ball positives; ball radius is fraction times the
    pool's mean pairwise distance. Returns (value, n_excluded) where excluded
    counterfactuals had no positive inside their ball."""
    pool = np.atleast_2d(np.asarray(positive_pool, dtype=np.float64))
    if pool.shape[0] == 0:
        raise ValueError("manifold_sphere needs a non-empty positive pool")
    cfs = _success_cfs(results)
    if cfs.shape[0] == 0:
        raise ValueError("manifold_sphere needs at least one successful result")
    radius = fraction * mean_pairwise_distance(pool, seed)
    dists = np.linalg.norm(cfs[:, None, :] - pool[None, :, :], axis=2)
    in_ball = dists <= radius
    per_cf = []
    excluded = 0
    for row, mask in zip(dists, in_ball):
        if not np.any(mask):
            excluded += 1
            continue
        per_cf.append(row[mask].mean())
    if not per_cf:
        raise ValueError("every counterfactual has an empty positive ball")
    return float(np.mean(per_cf)), excluded


def boundary_radii(model, ds_test: Dataset, sample_n: int, eps_max: float = 0.5,
                   tol: float = 1e-3, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Minimum successful PGD radius for a seeded sample of test rows.

    Returns (radii, sample_indices); rows with no flip inside eps_max carry
    the eps_max sentinel.
    """
    if sample_n < 1:
        raise ValueError("sample_n must be >= 1")
    rng = np.random.default_rng(seed)
    size = min(sample_n, ds_test.n)
    idx = np.sort(rng.choice(ds_test.n, size=size, replace=False))
    radii = min_adversarial_radius_batch(model, ds_test.features[idx],
                                         tol=tol, eps_max=eps_max)
    return radii, idx


def histogram(values: np.ndarray, bins: int, lo: float, hi: float) -> Histogram:
    counts, edges = np.histogram(np.asarray(values, dtype=np.float64),
                                 bins=bins, range=(lo, hi))
    return Histogram(counts.tolist(), edges.tolist(), float(np.mean(values)))


def boundary_histogram(model, ds_test: Dataset, sample_n: int, bins: int = 20,
                       eps_max: float = 0.5, tol: float = 1e-3,
                       seed: int = 0) -> Histogram:
    """Histogram of minimum-flip radii over a seeded sample, mean attached."""
    radii, _ = boundary_radii(model, ds_test, sample_n, eps_max, tol, seed)
    return histogram(radii, bins, 0.0, eps_max)
