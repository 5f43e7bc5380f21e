"""Divergence-maximizing quantizer design on uniform dyadic grids."""

from .grid import (
    GridSpec,
    CellMeasure,
    cell_of,
    locate_cells,
    bin_samples,
    kt_probabilities,
    empirical_cell_measure,
    analytic_cell_probabilities,
    read_samples_csv,
)
from .divergence import (
    QuantizerRule,
    WeightPair,
    kl_pmf,
    convex_conjugate_neg_log,
    region_probabilities,
    optimal_phi,
    divergence_from_weights,
    population_divergence,
    empirical_divergence,
)
from .flynn_gray import FGConfig, FGResult, label_sweep, run, exhaustive_max
from .rdp import (
    MalformedRdpError,
    RdpLeaf,
    RdpInternal,
    RdpTree,
    build_minimal_rdp,
    to_labeling,
    quantize,
    quantize_batch,
    serialize,
    deserialize,
    is_minimal,
    leaf_count,
)
from .distributions import GAUSSIAN, LAPLACE, DistributionSpec, sample
from .experiments import (
    RateExperimentConfig,
    RateRow,
    RATE_CSV_HEADER,
    best_in_class,
    optimal_divergence_1d,
    run_rate_experiment,
    rate_rows_to_csv,
)
from .cli import cli_main

__version__ = "0.1.0"

__all__ = [
    "GridSpec",
    "CellMeasure",
    "cell_of",
    "locate_cells",
    "bin_samples",
    "kt_probabilities",
    "empirical_cell_measure",
    "analytic_cell_probabilities",
    "read_samples_csv",
    "QuantizerRule",
    "WeightPair",
    "kl_pmf",
    "convex_conjugate_neg_log",
    "region_probabilities",
    "optimal_phi",
    "divergence_from_weights",
    "population_divergence",
    "empirical_divergence",
    "FGConfig",
    "FGResult",
    "label_sweep",
    "run",
    "exhaustive_max",
    "MalformedRdpError",
    "RdpLeaf",
    "RdpInternal",
    "RdpTree",
    "build_minimal_rdp",
    "to_labeling",
    "quantize",
    "quantize_batch",
    "serialize",
    "deserialize",
    "is_minimal",
    "leaf_count",
    "GAUSSIAN",
    "LAPLACE",
    "DistributionSpec",
    "sample",
    "RateExperimentConfig",
    "RateRow",
    "RATE_CSV_HEADER",
    "best_in_class",
    "optimal_divergence_1d",
    "run_rate_experiment",
    "rate_rows_to_csv",
    "cli_main",
]
