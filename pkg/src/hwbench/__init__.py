"""Virtual Hebb-Wagner measurement workbench.

Simulates an ion-blocking microelectrode cell with its oven and
electrometer, runs automated voltage-scan campaigns with steady-state
detection and median-filter noise rejection, and converts the resulting
I-V curves into electronic conductivity vs oxygen activity.
"""

from .core import (
    CONSTANTS,
    CellGeometry,
    DomainError,
    PhysicalConstants,
    ReferenceAtmosphere,
    conductivity_from_derivative,
    nernst_activity,
    nernst_voltage,
    spreading_resistance,
)
from .cellsim import (
    CurrentSample,
    ElectrometerModel,
    GroundTruthCell,
    HeaterModel,
    ThermalState,
    VirtualRig,
    electron_conductivity,
    fixed_heater,
    heater_disturbance,
    legacy_heater,
    steady_current,
    thermal_step,
    transient_current,
)
from .acquisition import (
    Campaign,
    CampaignError,
    CampaignState,
    InvalidParams,
    IVPoint,
    Phase,
    PlanError,
    ScanPlan,
    SteadyStateParams,
    TemperatureLoopParams,
    check_filter_condition,
    generate_sweep,
    measure_steady_current,
    pi_regulate_step,
    plan_voltages,
    steady_state_check,
    window_mean_difference,
)
from .analysis import (
    AnalysisError,
    ConductivityPoint,
    DegenerateStep,
    InsufficientData,
    SlopeFit,
    analyze_curve,
    conductivity_curve,
    differentiate_iv,
    fit_slope,
    repair_negative_points,
)
from .config import (
    PRESETS,
    CampaignConfig,
    ConfigError,
    config_from_dict,
    load_config,
    preset,
)
from .run import build_campaign, build_rig, run_headless

__version__ = "0.1.0"
