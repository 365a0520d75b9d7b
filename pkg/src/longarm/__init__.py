"""longarm: one-arm probabilities for critical branching random walk
and long-range percolation with heavy-tailed kernels.

Monte Carlo estimators with deterministic parallel seeding, exact
combinatorial and convolution oracles, and exponent arithmetic.
"""

__version__ = "0.1.0"

from .analysis import (EstimateRow, EstimateTable, ExponentSet, FitResult,
                       beta_constraints_hold, derived_scales, exponents,
                       loglog_fit, rho_exponent, wilson_ci, xi_exponent)
from .brw import (Embedding, estimate_gamma_brw, one_arm, sample_brw,
                  volume_moments)
from .exact import (TinyGraph, bk_check, brw_one_arm_oracle, connection_event,
                    enumerate_probability, green_function, mean_volume,
                    progeny_brute_force, random_increasing_event,
                    three_point_sum, truncated_second_moment)
from .gw import (OffspringDist, Tree, sample_progeny_sizes, sample_tree,
                 survival_tail, total_progeny_pmf)
from .kernel import Kernel, KernelSpec, build_kernel
from .lattice import Shell
from .lrp import (Cluster, PercolationConfig, cluster_tail_slope,
                  cluster_until_level, estimate_gamma_lrp, estimate_pc,
                  explore_cluster, one_arm_lrp, truncated_cluster)

__all__ = [
    "EstimateRow", "EstimateTable", "ExponentSet", "FitResult",
    "beta_constraints_hold", "derived_scales", "exponents", "loglog_fit",
    "rho_exponent", "wilson_ci", "xi_exponent", "Embedding",
    "estimate_gamma_brw", "one_arm", "sample_brw", "volume_moments",
    "TinyGraph", "bk_check", "brw_one_arm_oracle", "connection_event",
    "enumerate_probability", "green_function", "mean_volume",
    "progeny_brute_force", "random_increasing_event", "three_point_sum",
    "truncated_second_moment", "OffspringDist", "Tree",
    "sample_progeny_sizes", "sample_tree", "survival_tail",
    "total_progeny_pmf", "Kernel", "KernelSpec", "build_kernel", "Shell",
    "Cluster", "PercolationConfig", "cluster_tail_slope",
    "cluster_until_level", "estimate_gamma_lrp", "estimate_pc",
    "explore_cluster", "one_arm_lrp", "truncated_cluster", "__version__",
]
