"""Known-distribution benchmarks and the sample-size convergence harness."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .distributions import DistributionSpec, sample
from .divergence import population_divergence
from .flynn_gray import FGConfig, FGResult, run
from .grid import (
    GridSpec,
    analytic_cell_probabilities,
    bin_samples,
    kt_probabilities,
)

__all__ = [
    "best_in_class",
    "optimal_divergence_1d",
    "RateExperimentConfig",
    "RateRow",
    "run_rate_experiment",
    "rate_rows_to_csv",
    "RATE_CSV_HEADER",
]


def best_in_class(dist_p: DistributionSpec, dist_q: DistributionSpec,
                  grid: GridSpec, config: FGConfig) -> FGResult:
    """Run the alternating maximization on exact (analytic) cell measures.

    The result is the best rule the labeled grid can express, up to local
    optimality; restarts in ``config`` mitigate bad starting labelings.
    """
    measure_p = analytic_cell_probabilities(grid, dist_p)
    measure_q = analytic_cell_probabilities(grid, dist_q)
    return run(measure_p, measure_q, config, grid)


def _band_pmfs(dist_p, dist_q, lo, hi, z_p, z_q, edges, g_edges, thresholds):
    """Masses of the sets {x in box: g(x) between consecutive thresholds},
    where g is the log likelihood ratio, renormalized over the box."""

    def g_scalar(x):
        return float(dist_q.axis_logpdf(0, x) - dist_p.axis_logpdf(0, x))

    crossings = []
    for t in thresholds:
        y = g_edges - t
        hits = np.nonzero(y[:-1] * y[1:] < 0.0)[0]
        for k in hits:
            crossings.append(brentq(lambda x: g_scalar(x) - t,
                                    edges[k], edges[k + 1], xtol=1e-13))
        crossings.extend(edges[np.nonzero(y == 0.0)[0]])
    cuts = np.unique(np.concatenate([[lo, hi], np.asarray(crossings, dtype=float)]))
    cuts = cuts[(cuts >= lo) & (cuts <= hi)]
    pmf_p = np.zeros(len(thresholds) + 1)
    pmf_q = np.zeros(len(thresholds) + 1)
    for x0, x1 in zip(cuts[:-1], cuts[1:]):
        if x1 <= x0:
            continue
        band = int(np.searchsorted(thresholds, g_scalar(0.5 * (x0 + x1)), side="right"))
        pmf_p[band] += float(dist_p.axis_cdf(0, x1) - dist_p.axis_cdf(0, x0)) / z_p
        pmf_q[band] += float(dist_q.axis_cdf(0, x1) - dist_q.axis_cdf(0, x0)) / z_q
    return pmf_p, pmf_q


def _band_divergence(pmf_p, pmf_q):
    support = pmf_p > 0.0
    if np.any(support & (pmf_q <= 0.0)):
        raise ValueError("a likelihood-ratio band has p mass but no q mass")
    ps = pmf_p[support]
    return float(np.sum(ps * np.log(ps / pmf_q[support])))


def optimal_divergence_1d(dist_p: DistributionSpec, dist_q: DistributionSpec,
                          grid: GridSpec, levels: int, *,
                          micro_cells: int = 1 << 15,
                          dp_positions: int = 2048,
                          polish_passes: int = 3) -> float:
    """Divergence of the best L-level rule that thresholds the likelihood ratio.

    Brute-force oracle for the unconstrained optimum on the box: the domain
    is chopped into ``micro_cells`` slivers ordered by log likelihood ratio,
    a dynamic program picks the best split of that ordering into ``levels``
    contiguous bands, and each resulting threshold is then polished by
    bounded scalar maximization of the exact CDF-based objective.  All band
    masses are renormalized over the box.
    """
    if grid.dimension != 1 or dist_p.dimension != 1 or dist_q.dimension != 1:
        raise ValueError("the threshold oracle supports one dimension only")
    if levels < 1:
        raise ValueError("levels must be >= 1")
    if levels == 1:
        return 0.0
    lo, hi = grid.domain_lower[0], grid.domain_upper[0]
    edges = np.linspace(lo, hi, micro_cells + 1)
    cdf_p = np.asarray(dist_p.axis_cdf(0, edges), dtype=float)
    cdf_q = np.asarray(dist_q.axis_cdf(0, edges), dtype=float)
    z_p = float(cdf_p[-1] - cdf_p[0])
    z_q = float(cdf_q[-1] - cdf_q[0])
    if z_p <= 0.0 or z_q <= 0.0:
        raise ValueError("a distribution has no probability mass inside the box")
    mids = 0.5 * (edges[:-1] + edges[1:])
    g_mid = np.asarray(dist_q.axis_logpdf(0, mids) - dist_p.axis_logpdf(0, mids), dtype=float)
    g_edges = np.asarray(dist_q.axis_logpdf(0, edges) - dist_p.axis_logpdf(0, edges), dtype=float)
    g_min = float(min(g_mid.min(), g_edges.min()))
    g_max = float(max(g_mid.max(), g_edges.max()))
    if g_max - g_min <= 1e-12:
        return 0.0  # constant likelihood ratio: no rule separates the pair

    order = np.argsort(g_mid, kind="stable")
    g_sorted = g_mid[order]
    cum_p = np.concatenate([[0.0], np.cumsum(np.diff(cdf_p)[order] / z_p)])
    cum_q = np.concatenate([[0.0], np.cumsum(np.diff(cdf_q)[order] / z_q)])

    # dynamic program over a subsample of split positions (empty bands allowed)
    positions = np.unique(np.round(np.linspace(0, micro_cells, dp_positions + 1)).astype(int))
    pp = cum_p[positions]
    qq = cum_q[positions]
    npos = positions.size
    dP = np.maximum(pp[None, :] - pp[:, None], 0.0)
    dQ = np.maximum(qq[None, :] - qq[:, None], 0.0)
    scores = np.zeros_like(dP)
    ok = (dP > 0.0) & (dQ > 0.0)
    scores[ok] = dP[ok] * np.log(dP[ok] / dQ[ok])
    ii = np.arange(npos)
    scores[ii[:, None] > ii[None, :]] = -np.inf
    value = scores[0].copy()
    parents = []
    for _ in range(levels - 1):
        totals = value[:, None] + scores
        arg = np.argmax(totals, axis=0)
        value = totals[arg, ii]
        parents.append(arg)
    splits = []
    j = npos - 1
    for arg in reversed(parents):
        j = int(arg[j])
        splits.append(j)

    thresholds = []
    for s in splits:
        k = int(positions[s])
        if 0 < k < micro_cells:
            thresholds.append(0.5 * (g_sorted[k - 1] + g_sorted[k]))
    thresholds = np.unique(np.asarray(thresholds, dtype=float))

    def exact(ts):
        return _band_divergence(*_band_pmfs(dist_p, dist_q, lo, hi, z_p, z_q,
                                            edges, g_edges, ts))

    best = exact(thresholds)
    for _ in range(polish_passes):
        if thresholds.size == 0:
            break
        improved = False
        for j in range(thresholds.size):
            lo_t = g_min if j == 0 else float(thresholds[j - 1])
            hi_t = g_max if j == thresholds.size - 1 else float(thresholds[j + 1])
            if hi_t - lo_t <= 1e-10:
                continue
            res = minimize_scalar(
                lambda t: -exact(np.concatenate([thresholds[:j], [t], thresholds[j + 1:]])),
                bounds=(lo_t, hi_t), method="bounded", options={"xatol": 1e-9},
            )
            if -res.fun > best + 1e-14:
                thresholds[j] = float(res.x)
                best = float(-res.fun)
                improved = True
        if not improved:
            break
    return best


@dataclass(frozen=True)
class RateExperimentConfig:
    """One sweep of sample sizes for the estimation-loss experiment."""

    dist_p: DistributionSpec
    dist_q: DistributionSpec
    grid: GridSpec
    sample_sizes: tuple[int, ...]
    trials: int
    fg: FGConfig
    seed: int = 0

    def __post_init__(self):
        sizes = tuple(int(n) for n in self.sample_sizes)
        if not sizes or any(n < 1 for n in sizes):
            raise ValueError("sample sizes must be positive")
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ValueError("sample sizes must be strictly increasing")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        object.__setattr__(self, "sample_sizes", sizes)


@dataclass(frozen=True)
class RateRow:
    """One trial's outcome: population divergence of the learned rule vs the
    best rule the class admits."""

    n: int
    trial: int
    iterations: int
    d_hat: float
    d_best: float
    loss: float


RATE_CSV_HEADER = "n,trial,iterations,D_hat,D_best,loss"


def _trial_seed(base: int, n: int, trial: int, stream: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(base), int(n), int(trial), int(stream)])


def _rate_trial(task) -> RateRow:
    config, measure_p_an, measure_q_an, d_best, n, trial = task
    samples_p = sample(config.dist_p, n, _trial_seed(config.seed, n, trial, 0))
    samples_q = sample(config.dist_q, n, _trial_seed(config.seed, n, trial, 1))
    counts_p, kept_p = bin_samples(config.grid, samples_p)
    counts_q, kept_q = bin_samples(config.grid, samples_q)
    fg_seed = int(_trial_seed(config.seed, n, trial, 2).generate_state(1, dtype=np.uint64)[0])
    fg = replace(config.fg, seed=fg_seed)
    result = run(kt_probabilities(counts_p, kept_p), kt_probabilities(counts_q, kept_q),
                 fg, config.grid)
    d_hat = population_divergence(result.rule, measure_p_an, measure_q_an)
    return RateRow(n=n, trial=trial, iterations=result.iterations,
                   d_hat=d_hat, d_best=d_best, loss=d_best - d_hat)


def run_rate_experiment(config: RateExperimentConfig, workers: int = 1) -> list[RateRow]:
    """Loss of empirically learned rules against the best-in-class rule.

    For every sample size and trial: draw fresh training sets, bin them with
    add-half preloading, fit a rule, and score it under the analytic cell
    measures.  Each trial's randomness is derived from
    ``(config.seed, n, trial)``, so the output is identical for any
    ``workers`` count or execution order.
    """
    measure_p_an = analytic_cell_probabilities(config.grid, config.dist_p)
    measure_q_an = analytic_cell_probabilities(config.grid, config.dist_q)
    d_best = best_in_class(config.dist_p, config.dist_q, config.grid, config.fg).divergence
    tasks = [
        (config, measure_p_an, measure_q_an, d_best, n, trial)
        for n in config.sample_sizes
        for trial in range(config.trials)
    ]
    if workers <= 1:
        return [_rate_trial(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_rate_trial, tasks))


def rate_rows_to_csv(rows) -> str:
    lines = [RATE_CSV_HEADER]
    for row in rows:
        lines.append(
            f"{row.n},{row.trial},{row.iterations},{row.d_hat!r},{row.d_best!r},{row.loss!r}"
        )
    return "\n".join(lines) + "\n"
