"""Pairwise-dependent Dirichlet process mixtures with common atoms.

A slice-sampled Gibbs sampler for m dependent random densities whose
component measures share one atom sequence (the CAPDDP variant), plus the
per-pair-atoms baseline (PDDP), weight-space distance estimation, data
generators, diagnostics, a sweep-cost benchmark, a scikit-learn style
estimator, and a CLI.
"""

from .benchmark import BenchmarkReport, benchmark_delta_t
from .config import Dataset, ModelConfig, Variant, validate_config
from .distances import (
    CompositeWeights,
    DistanceTrace,
    approximate_with_common_atoms,
    composite_weights,
    exact_l2_quadrature,
    l2_conditional,
    pairwise_l2,
    pairwise_tv,
    running_average,
    tv_distance,
)
from .estimator import PairwiseDependentMixture
from .experiments import (
    ExperimentSpec,
    RunArtifacts,
    ad_one_sample_normal,
    ad_two_sample,
    cluster_count,
    generate_example1,
    generate_example2,
    ingest_real,
    predictive_sample,
    run_experiment,
)
from .gibbs import SweepReport, allocation_probabilities, stick_counts, sweep, sweep_pddp
from .kernel import PriorP0, alpha_beta_mc, conditional_update_atom, kernel_density, sample_prior_atom
from .state import AtomTable, GibbsState, StickMatrix, init_state
from .sticks import (
    STICK_CAP,
    TruncationLimitError,
    WeightVector,
    extend_to,
    slice_set,
    truncation_index,
    weights_from_sticks,
)

__version__ = "0.1.0"

__all__ = [
    "AtomTable",
    "BenchmarkReport",
    "CompositeWeights",
    "Dataset",
    "DistanceTrace",
    "ExperimentSpec",
    "GibbsState",
    "ModelConfig",
    "PairwiseDependentMixture",
    "PriorP0",
    "RunArtifacts",
    "STICK_CAP",
    "StickMatrix",
    "SweepReport",
    "TruncationLimitError",
    "Variant",
    "WeightVector",
    "ad_one_sample_normal",
    "ad_two_sample",
    "allocation_probabilities",
    "alpha_beta_mc",
    "approximate_with_common_atoms",
    "benchmark_delta_t",
    "cluster_count",
    "composite_weights",
    "conditional_update_atom",
    "exact_l2_quadrature",
    "extend_to",
    "generate_example1",
    "generate_example2",
    "ingest_real",
    "init_state",
    "kernel_density",
    "l2_conditional",
    "pairwise_l2",
    "pairwise_tv",
    "predictive_sample",
    "run_experiment",
    "running_average",
    "sample_prior_atom",
    "slice_set",
    "stick_counts",
    "sweep",
    "sweep_pddp",
    "truncation_index",
    "tv_distance",
    "validate_config",
    "weights_from_sticks",
]
