"""Random polynomial ensembles, zero densities, and toy vacuum censuses."""

from .ensembles import (
    KOSTLAN_DEGREE_CAP,
    EnsembleKind,
    EnsembleSpec,
    KernelEval,
    SampledSection,
    build_ensemble,
    conditioned_kernel,
    evaluate_section,
    kernel,
    sample_section,
)
from .errors import (
    ContractViolationError,
    DegenerateConditioningError,
    DomainError,
    InvalidDegreeError,
    QuadratureError,
    RandcritError,
    VarianceOverflowError,
)
from .geometry import (
    ChargeVector,
    FluxVector,
    ModelKind,
    PeriodModel,
    Region,
    central_charge,
    covariant_derivative,
    cubic_model,
    curvature_quantities,
    flux_length,
    hessian_matrix,
    kahler_potential,
    metric_and_volume,
    normalized_Z2,
    period_vector,
    rigid_model,
    second_covariant_derivative,
)
from .kacrice import (
    Annulus,
    DensityGrid,
    GridSpec,
    Rectangle,
    complex_zero_density,
    density_grid,
    expected_real_zeros,
    finite_difference_density,
    real_zero_density,
    region_mass,
)
from .montecarlo import (
    EmpiricalDensity,
    RootSet,
    empirical_real_zero_count,
    empirical_zero_density,
    find_roots,
)
from .vacua import (
    CountReport,
    CriticalPointRecord,
    W2Stats,
    attractor_count_prediction,
    attractor_flow,
    continuum_flux_count,
    enumerate_attractor_points,
    enumerate_flux_vacua,
    flux_index_prediction,
    rigid_vacuum_solve,
    w2_statistics,
)

__version__ = "0.1.0"
