"""Blind deconvolution of diffused signals on graphs.

Jointly recovers sparse source signals and the diffusion filter from
observations of their convolution over a known graph, by minimizing the
l1 norm of the reconstructed sources over inverse frequency responses
satisfying a linear scale constraint.  Ships recovery certificates
(exact and stable), synthetic experiment drivers, a trust-network
ratings pipeline, and a scikit-learn style estimator.
"""

__version__ = "0.1.0"

from .estimator import GraphBlindDeconvolution
from .exceptions import (
    ContractViolationError,
    DataValidationError,
    DegenerateDegreeError,
    GenerationError,
    GraphDeconvError,
    InvertibilityError,
    ParseError,
)
from .graphio import read_edgelist, write_edgelist
from .gsp import (
    Graph,
    GsoKind,
    ShiftOperator,
    SpectralDecomposition,
    apply_polynomial_filter,
    apply_spectral_filter,
    frequency_response,
    inverse_response,
    is_invertible_response,
    khatri_rao_design,
    shift_operator,
    spectral_decomposition,
    vandermonde,
)
from .guarantees import (
    CertificateParams,
    RecoveryCertificate,
    StabilityReport,
    check_exact_recovery,
    eigenvector_coherence,
    max_sparsity_level,
    mean_deficit_bound,
    min_sample_size,
    noise_tolerance,
    offsupport_filtered_noise,
    recovery_margin,
    response_offset,
    stability_coefficient,
    stable_recovery_bound,
)
from .metrics import ranking_auc, relative_error, support_accuracy, threshold_support
from .solver import (
    L1SynthesisProblem,
    Solution,
    SolverConfig,
    estimate_filter,
    reconstruct_sources,
    reweighted_l1,
    solve_l1_synthesis,
)
from .sweep import (
    CellResult,
    Experiment,
    SweepConfig,
    SweepResult,
    run_sweep,
    write_plot_script,
    write_realizations_csv,
    write_results_csv,
)
from .synth import (
    SeedStream,
    SourceMatrix,
    add_noise,
    bernoulli_gaussian_sources,
    erdos_renyi_graph,
    perturbed_filter_coeffs,
    perturbed_inverse_response,
)

__all__ = [
    "__version__",
    "GraphBlindDeconvolution",
    # exceptions
    "GraphDeconvError",
    "ContractViolationError",
    "DataValidationError",
    "DegenerateDegreeError",
    "GenerationError",
    "InvertibilityError",
    "ParseError",
    # graphs and filters
    "Graph",
    "GsoKind",
    "ShiftOperator",
    "SpectralDecomposition",
    "shift_operator",
    "spectral_decomposition",
    "vandermonde",
    "frequency_response",
    "apply_polynomial_filter",
    "apply_spectral_filter",
    "is_invertible_response",
    "inverse_response",
    "khatri_rao_design",
    "read_edgelist",
    "write_edgelist",
    # synthetic data
    "SeedStream",
    "SourceMatrix",
    "erdos_renyi_graph",
    "bernoulli_gaussian_sources",
    "perturbed_inverse_response",
    "perturbed_filter_coeffs",
    "add_noise",
    # solver
    "L1SynthesisProblem",
    "SolverConfig",
    "Solution",
    "solve_l1_synthesis",
    "reweighted_l1",
    "reconstruct_sources",
    "estimate_filter",
    # guarantees
    "CertificateParams",
    "RecoveryCertificate",
    "StabilityReport",
    "eigenvector_coherence",
    "recovery_margin",
    "response_offset",
    "check_exact_recovery",
    "stability_coefficient",
    "stable_recovery_bound",
    "offsupport_filtered_noise",
    "noise_tolerance",
    "mean_deficit_bound",
    "max_sparsity_level",
    "min_sample_size",
    # metrics
    "relative_error",
    "support_accuracy",
    "threshold_support",
    "ranking_auc",
    # sweeps
    "Experiment",
    "SweepConfig",
    "SweepResult",
    "CellResult",
    "run_sweep",
    "write_results_csv",
    "write_realizations_csv",
    "write_plot_script",
]
