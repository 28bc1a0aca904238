"""Numerical laboratory for quantum tangent kernels.

Builds Haar-random ensemble models and diagonal QNNs, computes their
empirical and expected tangent kernels, and validates every closed form
against independent Monte Carlo oracles.
"""

__version__ = "0.1.0"

from .encodings import (
    AngleConvention,
    DiagonalTable,
    PauliZProduct,
    encode,
    overlap_s,
    overlap_s_closed_form,
    phase_vector,
)
from .ensemble import (
    Dataset,
    EnsembleSpec,
    FitResult,
    empirical_kernel,
    expected_kernel,
    expected_kernel_limit,
    feature_matrix,
    feature_row,
    fit_least_squares,
    mc_expected_kernel,
    predict,
)
from .errors import (
    BoundaryError,
    ConfigError,
    ContractViolationError,
    DegenerateSpectrumError,
    DivergenceError,
    InvalidDimensionError,
    QntkError,
    ShapeMismatchError,
    UnsupportedRepresentationError,
)
from .haar_stats import (
    DensityHistogram,
    KsResult,
    ReferenceDistribution,
    SpectrumSpec,
    density_normalization,
    ks_statistic,
    mc_observable_density,
    observable_density,
    verify_coefficient_laws,
)
from .linalg import (
    Observable,
    adjoint,
    apply,
    expectation,
    expectation_batch,
    matmul,
    sample_haar_state,
    sample_haar_states,
    sample_haar_unitaries,
    sample_haar_unitary,
    substream,
)
from .ntk import (
    KernelMatrix,
    LinearizedModel,
    default_ridge,
    flow_solution,
    gram_from_jacobian,
    kernel_regression,
    simulate_gradient_descent,
)
from .qnn import (
    QnnParams,
    evaluate_Y,
    evaluate_Y_direct,
    expected_tangent_kernel,
    gradient,
    mc_expected_tangent_kernel,
    normalized_Y,
    pair_indices,
    params_from_unitaries,
    tangent_kernel,
    tangent_kernel_closed_form,
)
from .trace_estimator import (
    OverlapEstimate,
    ShotPlan,
    estimate_overlap_s,
    estimate_trace,
    hadamard_test,
    hoeffding_floor,
)
