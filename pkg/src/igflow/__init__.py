"""igflow: information-geometric distinguishability metrics, relevance
spectra for noise channels, and renormalization flows by moment matching."""

__version__ = "0.1.0"

from .infogeom import (
    DensityMatrix,
    Feature,
    Observable,
    ThermalModel,
    PositivityError,
    relative_entropy,
    omega,
    omega_inv,
    theta_op,
    bkm_inner,
    dual_inner,
    monotone_metric,
    bkm_theta,
    thermal_state,
    partition_first_order,
)
from .channels import (
    Channel,
    RelevanceSpectrum,
    build_channel,
    apply_channel,
    hs_adjoint,
    bkm_adjoint,
    relevance,
    eigenrelevance,
    first_order_equivalent,
    approx_equivalent,
)
from .particle import (
    LineGrid,
    GaussianPrior,
    QuarticModel,
    FlowResult,
    convolve,
    estar_rstar,
    hermite_observable,
    relevance_spectrum,
    kernel_spectrum,
    moment,
    stat_flow,
    qft_flow,
    qft_flow_trajectory,
)
from .field import (
    LatticeSpec,
    FieldCovariance,
    FieldChannel,
    ModeObservable,
    covariance_massive,
    smearing_eigenvalue,
    mode_relevance,
    product_relevance,
    quadratic_observable_relevance,
    h_operator,
    functional_derivative_eigencheck,
    load_field_spec,
)
from .gaussian import (
    PhaseSpace,
    GaussianState,
    GaussianChannel,
    QuadraticHamiltonianSpec,
    weyl_phase,
    char_value,
    two_point,
    evolve_covariance,
    rs_matrix,
    gen_inner,
    dual_metric_linear,
    linear_observable_relevance,
    particle_mode_relevance,
    field_mode_relevance,
    cutoff_equivalence,
    load_quantum_field_spec,
)

__all__ = [name for name in dir() if not name.startswith("_")]
