"""Soil-moisture estimation for center-pivot fields.

Cylindrical Richards-equation twin simulation, trajectory-clustered
Petrov-Galerkin model reduction, and a performance-triggered
reduced-order extended Kalman filter, plus a config-driven scenario
runner with CSV artifacts.
"""

from .ekf import (
    EstimationTrace,
    NoiseConfig,
    ReducedEkfState,
    TriggerState,
    clamp_estimate,
    compute_error_metric,
    ekf_predict,
    ekf_update,
    initialize_filter,
    reconstruct,
    run_adaptive_estimation,
    slope_estimate,
    transfer_model,
)
from .errors import (
    BadSensorIndex,
    DegenerateReference,
    DimensionMismatch,
    JacobianFailure,
    NonFiniteState,
    ParseError,
    PivotflowError,
    SingularInnovation,
    UnstableStep,
    ValidationError,
)
from .grid import CylindricalGrid
from .reduction import (
    Clustering,
    ReducedModel,
    SnapshotMatrix,
    build_projection,
    cluster_trajectories,
    generate_snapshots,
    lift_state,
    reduce_state,
    trajectory_distance,
)
from .richards import (
    EnvironmentForcing,
    FullModel,
    RootUptake,
    StepForcing,
    SurfaceInput,
    WaterBudget,
    observe,
    rhs,
    sink_term,
    step,
)
from .runner import (
    RunArtifacts,
    TruthRun,
    export_artifacts,
    export_comparison,
    percent_mae,
    run_compare,
    run_scheme,
    run_truth,
)
from .scenario import ScenarioConfig, config_from_dict, load_config, sensor_lattice
from .soil import (
    SoilField,
    VanGenuchtenParams,
    capillary_capacity,
    effective_saturation,
    hydraulic_conductivity,
    water_content,
)

__version__ = "0.1.0"
