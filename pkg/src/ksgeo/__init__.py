"""Radial geodesics, the KS map to a 4D oscillator, and its spectrum."""
from .errors import DomainError, GridTooSmallError, PreconditionError, StepFailure
from .geometry import (
    CanonicalMomenta,
    ConstantsOfMotion,
    GeodesicState,
    SpacetimeParams,
    canonical_momenta,
    constants_from_state,
    hamiltonian,
    kerr_delta,
    kerr_lagrangian_equatorial,
    radial_residual_kerr,
    radial_residual_schwarzschild,
    schwarzschild_lagrangian,
    turning_points,
    zero_constants_residual,
)
from .integrator import (
    IntegrationConfig,
    Trajectory,
    integrate_general,
    integrate_zero_constants,
    proper_time_to_center,
)
from .ks import (
    KSState,
    Vec3State,
    kepler_to_oscillator,
    ks_forward_position,
    ks_forward_velocity,
    ks_inverse_position,
    ks_inverse_velocity,
    ks_matrix,
    spherical_embedding,
)
from .oscillator import (
    GridSpec,
    OscillatorParams,
    SpectrumResult,
    classical_energy,
    fd_eigenvalues_1d,
    fd_eigenvectors_1d,
    mass_time_bound,
    richardson_eigenvalues,
    spectrum_4d,
    uncertainty_product_1d,
)

__version__ = "0.1.0"
