"""Simulation and analysis toolkit for bounded-confidence averaging dynamics.

Agents hold scalar opinions and repeatedly move to the weighted mean of all
opinions strictly within one confidence unit of their own. The package
provides an O(n) simulator with a cross-checking O(n^2) reference path,
cluster and equilibrium analysis, analytic and empirical stability tests,
density-based (continuum) diagnostics, and canned experiments behind a CLI.
"""

from .clusters import (
    Cluster,
    Equilibrium,
    certify_equilibrium,
    convergence_time,
    decoupled_groups,
    detect_clusters,
    equilibrium_from_clusters,
)
from .config import (
    ConfigError,
    OutputSpec,
    RunConfig,
    initial_state,
    load_config,
    parse_config,
    seeded_generator,
)
from .continuum import (
    ContinuityReport,
    DensitySpec,
    MuMetricReport,
    RefineReport,
    RegularityBounds,
    adjacency_apply,
    continuity_probe,
    degree,
    discretize,
    distance_to_F,
    inner,
    laplacian_apply,
    lyapunov_decrement,
    potential,
    psd_check,
    refine_compare,
    regularity_bounds,
)
from .core import (
    CONFIDENCE_RADIUS,
    OpinionState,
    SimParams,
    SimResult,
    Termination,
    Trajectory,
    is_fixed_point,
    neighbor_window,
    run_to_fixed_point,
    simulate,
    step,
    step_naive,
)
from .experiments import (
    PRESET_NAMES,
    SINGLE_CLUSTER_SPAN_BOUND,
    SemiInfiniteReport,
    SingleClusterReport,
    SweepRow,
    bifurcation_sweep,
    preset,
    semi_infinite,
    single_cluster_bound_check,
)
from .stability import (
    EmpiricalStabilityReport,
    EmpiricalVerdict,
    MetastablePhase,
    PairCheck,
    PerturbationResult,
    StabilityVerdict,
    Verdict,
    center_of_mass_test,
    classify,
    empirical_stability,
    metastable_scan,
    pair_bound,
    pair_condition,
    perturb_and_measure,
)

__version__ = "0.1.0"

__all__ = [
    "CONFIDENCE_RADIUS",
    "Cluster",
    "ConfigError",
    "ContinuityReport",
    "DensitySpec",
    "EmpiricalStabilityReport",
    "EmpiricalVerdict",
    "Equilibrium",
    "MetastablePhase",
    "MuMetricReport",
    "OpinionState",
    "OutputSpec",
    "PRESET_NAMES",
    "PairCheck",
    "PerturbationResult",
    "RefineReport",
    "RegularityBounds",
    "RunConfig",
    "SINGLE_CLUSTER_SPAN_BOUND",
    "SemiInfiniteReport",
    "SimParams",
    "SimResult",
    "SingleClusterReport",
    "StabilityVerdict",
    "SweepRow",
    "Termination",
    "Trajectory",
    "Verdict",
    "adjacency_apply",
    "bifurcation_sweep",
    "center_of_mass_test",
    "certify_equilibrium",
    "classify",
    "continuity_probe",
    "convergence_time",
    "decoupled_groups",
    "degree",
    "detect_clusters",
    "discretize",
    "distance_to_F",
    "empirical_stability",
    "equilibrium_from_clusters",
    "initial_state",
    "inner",
    "is_fixed_point",
    "laplacian_apply",
    "load_config",
    "lyapunov_decrement",
    "metastable_scan",
    "neighbor_window",
    "pair_bound",
    "pair_condition",
    "parse_config",
    "perturb_and_measure",
    "potential",
    "preset",
    "psd_check",
    "refine_compare",
    "regularity_bounds",
    "run_to_fixed_point",
    "seeded_generator",
    "semi_infinite",
    "simulate",
    "single_cluster_bound_check",
    "step",
    "step_naive",
]
