"""Occupancy analysis for open semi-Markov transport networks.

The package models networks of (compartment, molecule) nodes fed by
time-dependent input streams.  Mean occupancies are computed three
independent ways (grid convolution, closed-form spectral series, event
Monte Carlo), the large-volume concentration dynamics are integrated
directly, and the flatness of occupancies far from the inputs is checked
against explicit decay bounds.
"""

from .analytic import (
    HomeostasisReport,
    LimitMeanResult,
    SpectralResponse,
    TransitionKernelGrid,
    VarianceReport,
    arrival_density,
    default_sup_window,
    homeostasis_report,
    limit_mean,
    spectral_response,
    transient_mean,
    transition_kernel,
    variance_response,
)
from .distributions import DelayDistribution, Exponential, Gamma, Uniform
from .errors import (
    AttenuationError,
    HomeostatError,
    IntegrationError,
    KernelConvergenceError,
    NonTransientNetworkError,
    ResponseSingularError,
    SpectralGapError,
)
from .grids import TimeGrid
from .kinetics import (
    ConcentrationFlatnessReport,
    EmbeddedNetwork,
    KineticsSpec,
    MarkovRates,
    ScalingTable,
    TransportEdge,
    corollary_check,
    delay_kinetics,
    embed_transit_nodes,
    exponential_transport_reduction,
    markov_mean_ode,
    markov_to_semimarkov,
    scaling_convergence,
)
from .network import (
    ClassParameters,
    Edge,
    Exit,
    NetworkSpec,
    NodeId,
    SojournMixture,
    ValidationReport,
    class_parameters,
    fundamental_matrix,
    input_distance,
    input_distances,
    mean_rates_from_signals,
    mean_sojourn,
    mean_sojourns,
    network_from_json,
    network_to_json,
    spectral_radius,
    steady_levels,
    validate,
)
from .signals import (
    AlmostPeriodicSignal,
    HarmonicTerm,
    StationaryEnvironment,
    fourier_coefficient,
    signal_from_json,
    signal_to_json,
)
from .simulate import (
    EnvironmentEnsemble,
    SimConfig,
    environment_ensemble,
    simulate,
    single_walk_kernel,
)
from .traces import OccupancyTrace, read_trace_csv, write_trace_csv

__version__ = "0.1.0"
