"""Two-species BGK mixture model: closure algebra, discrete-velocity solvers, diagnostics."""
from .config import RunConfig, parse_config
from .diagnostics import ConservationLedger, entropy, l1_distance, relative_entropy
from .discretization import (
    DiscreteDistribution,
    ReducedPair,
    VelocityGrid,
    chu_reduce,
    discrete_moments,
    project_maxwellian,
    reduced_maxwellian,
    reduced_moments,
)
from .errors import (
    ConfigError,
    DegenerateMoments,
    DomainError,
    GridMismatchError,
    GridSupportError,
    InadmissibleParameters,
    MixBGKError,
    ProjectionError,
    StabilityError,
    VacuumError,
)
from .homogeneous import HomogeneousConfig, HomogeneousState, run_homogeneous, step
from .model import (
    InteractionParams,
    Moments,
    SpeciesParams,
    closed_form_temperature_diff,
    closed_form_velocity_diff,
    collision_frequency_formula,
    exchange_terms,
    hamel_preset,
    match_boltzmann_rates,
    mixture_moments,
    relaxation_coefficients,
    validate_params,
)
from .transport import Profile, SpatialField, SpatialMesh, SpeciesProfiles, TransportConfig, imex_step, run_1d

__version__ = "0.1.0"
