"""Nonlocal electrical networks on dyadic approximations of the interval.

The package builds the stage-(i, n) electrical networks driven by a
directed index graph on the positive integers, evaluates the associated
discrete nonlocal Dirichlet forms, and ships experiment drivers that
check the convergence, equivalence, and resistance-bound behavior of
the construction at desk scale.
"""

__version__ = "0.1.0"

from .energy import (
    GridFunction,
    avg,
    discrete_energy,
    energy_stage0,
    ext,
    extended_energy_pc,
    gagliardo_seminorm,
    gd_recursion_check,
    kernel_energy,
    kernel_moment,
    restrict,
    truncated_energy,
)
from .functions import (
    ContinuumFunction,
    PiecewiseConstantFunction,
    abs_power,
    constant,
    linear,
    polynomial,
    quadratic,
    sine,
    sqrt_edge,
    step,
)
from .geometry import (
    AffineMap,
    cells_and_measure,
    locate,
    node_set,
    phi_edge,
    phi_path,
)
from .index_space import (
    Edge,
    Path,
    WeightAssignment,
    enumerate_paths,
    out_edges,
    path_count,
    path_resistance,
    tail_product,
)
from .network import (
    ConductanceNetwork,
    KernelSpec,
    Network,
    Wire,
    all_pairs_resistance,
    build_network,
    effective_resistance,
    equivalence_residual,
    graph_laplacian,
    jump_kernel,
    matching_weights,
    nash_williams_bound,
    reduce_to_pair,
    series_parallel_stage1,
    solve_matching,
    star_mesh_eliminate,
    weighted_degree,
    wire_to_path,
)
from .convergence_lab import ConvergenceReport, ExperimentConfig
