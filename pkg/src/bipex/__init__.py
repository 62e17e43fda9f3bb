"""Design-based estimation and inference for bipartite experiments.

Treatments are randomized over intervention units while outcomes are measured
on a separate set of outcome units, linked by a fixed bipartite graph.  The
package provides point estimation of the all-treated versus all-control
contrast, conservative variance estimation exploiting graph sparsity, optimal
linear covariate adjustment, exact enumeration oracles, and a reproducible
Monte Carlo harness.
"""

from .design import (
    Assignment,
    Exposure,
    exposures,
    joint_prob,
    marginal_prob,
    replication_rng,
    sample,
)
from .enumeration import exact_expectation, exact_variance
from .errors import BipexError
from .estimators import (
    AdjustmentCoefficients,
    Dataset,
    PointEstimate,
    adjusted_hajek,
    build_adjustment_system,
    estimate_beta,
    hajek,
    horvitz_thompson,
    oracle_beta,
)
from .graph import (
    BipartiteGraph,
    SparsityReport,
    build,
    cluster_graph,
    generate_random,
    identity_graph,
    load_edge_csv,
    prune_isolated,
)
from .kernels import (
    ExposureKernels,
    binomial_decomposition_residual,
    build_kernels,
    min_joint_eigenvalue,
)
from .polynomial import (
    CltDiagnostic,
    MultilinearPolynomial,
    centered_bernoulli,
    clt_diagnostic,
)
from .population import (
    PotentialTable,
    VarianceDecomposition,
    efficiency_gain,
    true_estimand,
    true_variance,
)
from .sim import DGPConfig, EstimatorMetrics, Population, SimReport, generate_population, run
from .variance import (
    ConfidenceInterval,
    VarianceEstimate,
    confidence_interval,
    reject_null,
    standard_normal_quantile,
    variance_estimate,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "Assignment",
    "Exposure",
    "exposures",
    "joint_prob",
    "marginal_prob",
    "replication_rng",
    "sample",
    "exact_expectation",
    "exact_variance",
    "BipexError",
    "AdjustmentCoefficients",
    "Dataset",
    "PointEstimate",
    "adjusted_hajek",
    "build_adjustment_system",
    "estimate_beta",
    "hajek",
    "horvitz_thompson",
    "oracle_beta",
    "BipartiteGraph",
    "SparsityReport",
    "build",
    "cluster_graph",
    "generate_random",
    "identity_graph",
    "load_edge_csv",
    "prune_isolated",
    "ExposureKernels",
    "binomial_decomposition_residual",
    "build_kernels",
    "min_joint_eigenvalue",
    "CltDiagnostic",
    "MultilinearPolynomial",
    "centered_bernoulli",
    "clt_diagnostic",
    "PotentialTable",
    "VarianceDecomposition",
    "efficiency_gain",
    "true_estimand",
    "true_variance",
    "DGPConfig",
    "EstimatorMetrics",
    "Population",
    "SimReport",
    "generate_population",
    "run",
    "ConfidenceInterval",
    "VarianceEstimate",
    "confidence_interval",
    "reject_null",
    "standard_normal_quantile",
    "variance_estimate",
]
