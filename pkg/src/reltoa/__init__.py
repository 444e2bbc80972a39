"""Relativistic time-of-arrival probabilities, localization kernels and uncertainty bounds."""
from .arrival import (
    ArrivalDistribution,
    DensityMatrixGrid,
    arrival_density,
    arrival_density_amplitude,
    arrival_density_matrix,
    arrival_density_phillips,
    kijowski_density,
    restrict_positive,
)
from .bounds import (
    BoundReport,
    fundamental_bound,
    kinetic_bound,
    levy_bound_constants,
    ultrarel_bounds,
    variational_constant,
)
from .detectors import (
    Absorption,
    CovariantProfile,
    DetectorModel,
    LocalizationKernel,
    RecordSpread,
    SpreadProfile,
    detection_width,
    localization_kernel,
    maximal_detector_forms,
    record_spread,
    regularity_check,
)
from .estimators import ArrivalDensity, PositionDensity
from .moments import ArrivalMoments, classical_toa_stats, mean_arrival, moment_generating, variance_decomposition
from .numerics import MinimizeResult, QuadratureSpec, find_root, integrate, integrate2d, minimize_scalar
from .position import PositionDistribution, duality_check, newton_wigner_density, position_density
from .states import (
    MomentumState,
    WignerState,
    make_gaussian_state,
    make_inverse_gaussian_state,
    make_levy_energy_state,
    momentum_expectation,
    wigner_function,
)

__version__ = "0.1.0"
