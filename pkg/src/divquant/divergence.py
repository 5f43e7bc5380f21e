"""Divergence functionals for labeled-grid quantization rules."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import CellMeasure, GridSpec, locate_cells

__all__ = [
    "QuantizerRule",
    "WeightPair",
    "kl_pmf",
    "convex_conjugate_neg_log",
    "region_probabilities",
    "optimal_phi",
    "divergence_from_weights",
    "population_divergence",
    "empirical_divergence",
]


def kl_pmf(p, q) -> float:
    """Kullback-Leibler divergence ``sum p_i * log(p_i / q_i)`` of two pmfs.

    Natural logarithm; terms with ``p_i == 0`` contribute zero.  Raises if a
    cell has ``p_i > 0`` but ``q_i == 0`` (absolute continuity fails).
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape or p.ndim != 1:
        raise ValueError("p and q must be 1-D vectors of equal length")
    if np.any(p < 0.0) or np.any(q < 0.0):
        raise ValueError("pmf entries must be non-negative")
    if abs(p.sum() - 1.0) > 1e-9 or abs(q.sum() - 1.0) > 1e-9:
        raise ValueError("pmfs must sum to 1 within 1e-9")
    support = p > 0.0
    if np.any(support & (q <= 0.0)):
        raise ValueError("q vanishes on the support of p")
    ps = p[support]
    return float(np.sum(ps * np.log(ps / q[support])))


def convex_conjugate_neg_log(t_star: float) -> float:
    """Convex conjugate of ``f(t) = -log(t)``: ``-1 - log(-t*)`` for negative
    arguments and ``+inf`` otherwise."""
    if t_star >= 0.0:
        return math.inf
    return -1.0 - math.log(-t_star)


@dataclass
class WeightPair:
    """Per-level linear weights ``a_i = log(phi_i) + 1`` and ``b_i = -phi_i``."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if a.shape != b.shape or a.ndim != 1 or a.size == 0:
            raise ValueError("a and b must be 1-D vectors of equal length")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("weights must be finite")
        if np.any(b >= 0.0):
            raise ValueError("b weights must be negative")
        self.a = a
        self.b = b

    @property
    def levels(self) -> int:
        return self.a.size


@dataclass
class QuantizerRule:
    """An L-level labeling of the grid cells plus one positive value per level.

    ``phi[i]`` is the value the rule takes on region i (the union of cells
    labeled i).  Levels that no cell carries keep the neutral value 1.
    """

    grid: GridSpec
    levels: int
    labels: np.ndarray
    phi: np.ndarray
    bounds: tuple[float, float] | None = None

    def __post_init__(self):
        if self.levels < 1:
            raise ValueError("levels must be >= 1")
        labels = np.asarray(self.labels)
        if labels.ndim != 1 or labels.size != self.grid.cell_count:
            raise ValueError("labels must have one entry per grid cell")
        if labels.size and (labels.min() < 0 or labels.max() >= self.levels):
            raise ValueError("labels must lie in [0, levels)")
        phi = np.asarray(self.phi, dtype=float)
        if phi.shape != (self.levels,):
            raise ValueError("phi must have one value per level")
        populated = np.bincount(labels, minlength=self.levels) > 0
        if not np.all(np.isfinite(phi[populated]) & (phi[populated] > 0.0)):
            raise ValueError("phi must be positive and finite on populated levels")
        if self.bounds is not None:
            m, M = (float(v) for v in self.bounds)
            if not 0.0 < m <= M < math.inf:
                raise ValueError("bounds must satisfy 0 < m <= M < inf")
            if np.any(phi[populated] < m) or np.any(phi[populated] > M):
                raise ValueError("phi violates the configured bounds on populated levels")
            self.bounds = (m, M)
        self.labels = labels.astype(np.int64)
        self.phi = phi


def region_probabilities(labels, probs, levels: int) -> np.ndarray:
    """Aggregate cell probabilities into per-level region probabilities."""
    labels = np.asarray(labels)
    probs = np.asarray(probs, dtype=float)
    if labels.shape != probs.shape:
        raise ValueError("labels and probs must have equal length")
    if labels.size and (labels.min() < 0 or labels.max() >= levels):
        raise ValueError("labels must lie in [0, levels)")
    return np.bincount(labels, weights=probs, minlength=levels)


def _phi_and_weights(region_p, region_q, populated, bounds):
    phi = np.ones_like(region_p)
    zero_p = populated & (region_p <= 0.0)
    zero_q = populated & (region_q <= 0.0)
    if np.any(zero_p != zero_q):
        raise ValueError(
            "a populated region has mass under one measure only; "
            "use strictly positive cell measures (add-half preloading)"
        )
    ok = populated & (region_q > 0.0)
    phi[ok] = region_p[ok] / region_q[ok]
    if bounds is not None:
        m, M = bounds
        phi[ok] = np.clip(phi[ok], m, M)
    return phi, WeightPair(a=np.log(phi) + 1.0, b=-phi)


def optimal_phi(labels, measure_p: CellMeasure, measure_q: CellMeasure, levels: int,
                bounds: tuple[float, float] | None = None) -> tuple[np.ndarray, WeightPair]:
    """Per-level values maximizing the divergence for a fixed labeling.

    The maximizer assigns each populated region the probability ratio
    ``P(R_i) / Q(R_i)`` (clamped to ``bounds`` when given); unpopulated
    levels get the neutral value 1 so they can be re-acquired later.
    Returns the values and the corresponding linear weights.
    """
    labels = np.asarray(labels)
    region_p = region_probabilities(labels, measure_p.probs, levels)
    region_q = region_probabilities(labels, measure_q.probs, levels)
    populated = np.bincount(labels, minlength=levels) > 0
    return _phi_and_weights(region_p, region_q, populated, bounds)


def divergence_from_weights(labels, measure_p: CellMeasure, measure_q: CellMeasure,
                            weights: WeightPair) -> float:
    """Evaluate ``sum_i P(R_i) a_i + Q(R_i) b_i`` for a labeling and weights."""
    levels = weights.levels
    region_p = region_probabilities(labels, measure_p.probs, levels)
    region_q = region_probabilities(labels, measure_q.probs, levels)
    return float(region_p @ weights.a + region_q @ weights.b)


def population_divergence(rule: QuantizerRule, measure_p: CellMeasure,
                          measure_q: CellMeasure) -> float:
    """Divergence ``1 + sum_i P(R_i) log(phi_i) - phi_i Q(R_i)`` of a rule
    under known cell measures.  Unpopulated levels contribute zero."""
    if measure_p.cell_count != rule.grid.cell_count or measure_q.cell_count != rule.grid.cell_count:
        raise ValueError("measures must live on the rule's grid")
    region_p = region_probabilities(rule.labels, measure_p.probs, rule.levels)
    region_q = region_probabilities(rule.labels, measure_q.probs, rule.levels)
    populated = np.bincount(rule.labels, minlength=rule.levels) > 0
    phi = rule.phi[populated]
    if not np.all(np.isfinite(phi) & (phi > 0.0)):
        raise ValueError("phi must be positive and finite on populated levels")
    return float(1.0 + np.sum(region_p[populated] * np.log(phi) - phi * region_q[populated]))


def empirical_divergence(rule: QuantizerRule, samples_p, samples_q) -> float:
    """Sample-average divergence of a rule:
    ``1 + mean(log phi(x_p)) - mean(phi(x_q))``.

    Samples outside the grid box are discarded; each average is taken over
    its own kept count.  The value is not a KL divergence and can be
    negative.
    """
    values = []
    for samples in (samples_p, samples_q):
        indices, inside = locate_cells(rule.grid, samples)
        if not np.any(inside):
            raise ValueError("no samples inside the domain box")
        phi = rule.phi[rule.labels[indices[inside]]]
        if not np.all(np.isfinite(phi) & (phi > 0.0)):
            raise ValueError("a sample fell in a cell whose level has no positive value")
        values.append(phi)
    return float(1.0 + np.mean(np.log(values[0])) - np.mean(values[1]))
