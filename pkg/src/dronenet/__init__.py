"""Probabilistic siting of AED-delivery drone stations.

Surrogate models propagate environmental and operational uncertainty
into per-pair coverage probabilities; a Gibbs-posterior MCMC selects
site-activation vectors; post-hoc analytics report cost-effectiveness
and robustness to station failures.
"""

from .cross_validation import BaselineMean, CVReport, kfold_cv
from .demand import (
    IncidentRecord,
    PathFeatures,
    RoadGraph,
    default_ambulance_model,
    demand_weights,
    extract_path_features,
    nearest_facility,
    sample_ambulance_time,
    shortest_time_paths,
)
from .designer import (
    ChainTrace,
    DesignConfig,
    DesignResult,
    LossInputs,
    ScenarioCache,
    SiteRecord,
    SurrogateSet,
    build_scenario_cache,
    calibrate_theta0,
    coverage_penalty,
    default_thetas,
    dispatch_weights,
    log_prior,
    mh_step,
    prior_predictive,
    run_design,
    sample_loss,
)
from .distributions import LogNormalDist, lognormal_sum, sample_lognormal
from .environment import (
    WindModel,
    WindSample,
    decompose_wind,
    default_wind_model,
    sample_wind,
    season_of_month,
)
from .flight import (
    CoverageMatrix,
    DronePhaseModels,
    FlightQuery,
    NoFlyZone,
    aggregate_coverage,
    battery_dists,
    coverage_matrix,
    coverage_prob,
    default_phase_models,
    flight_geometry,
    nfz_filter,
    total_flight_time_dist,
)
from .gp import GPSurrogate
from .kernels import (
    GaussianKernel,
    Matern52Kernel,
    PeriodicKernel,
    ProductKernel,
    SumKernel,
    kernel_eval,
)
from .linear import LogLinearRegressor, add_intercept
from .posthoc import (
    ActivationSummary,
    CostParams,
    CostReport,
    ReliabilityCurve,
    ReliabilityParams,
    cost_report,
    coverage_stats,
    expected_missions,
    qaly_gain,
    reliability_curve,
    sample_mission_times,
    select_sites,
)

__version__ = "0.1.0"
