"""Stochastic mass-action networks: exact simulation, fluid limits,
boundary-layer laws, and piecewise Foster-Lyapunov stability verification."""

from .network import (
    Network,
    Reaction,
    NetworkSyntaxError,
    builtin_network,
    parse_network,
    parse_network_file,
    propensity,
    mass_action_rate,
    reaction_vector,
    apply_generator,
)
from .simulate import (
    StopCondition,
    Trajectory,
    HitResult,
    trajectory_rng,
    step,
    simulate,
    hitting_time,
    embedded_tube_chain,
)
from .fluid import OdePath, StepSizeUnderflow, ode_rhs, integrate, vector_field_grid
from .boundary import (
    ExitLaw,
    tube_jump_probs,
    exit_distribution,
    transience_lower_bound,
    mean_return_time_diverges,
    exit_distribution_mc,
)
from .regions import (
    RegionParams,
    ToricCoordinates,
    scale,
    toric_coordinates,
    classify_region,
    exposed_reactions,
    homogeneity_check,
)
from .lyapunov import (
    ExponentTable,
    LyapunovParams,
    TuningTargets,
    MarginReport,
    InfeasibleParameters,
    PiecewiseLyapunov,
    derive_exponents,
    gamma_star,
    select_parameters,
    assemble,
    piece_value,
    rate_h,
    phi,
    alt_piece_value,
    params_to_text,
    params_from_text,
)
from .stability import (
    DriftReport,
    CurvatureReport,
    OccupationMeasure,
    ReturnTimeSamples,
    PowerLawPhi,
    H_phi,
    H_phi_inverse,
    ClassifyConfig,
    StabilityVerdict,
    drift_at,
    verify_drift,
    interface_curvature,
    curvature_report,
    flux_terms,
    occupation_measure,
    phi_moment,
    return_time_stats,
    tv_coupling_estimate,
    classify_stability,
)

__version__ = "0.1.0"
