"""Simulator of USV-assisted multi-AUV data collection under extreme sea conditions.

Subsystems:
  ocean        shallow-water surface waves and Lamb-vortex currents
  usbl         phase-difference positioning chain
  fim          information-matrix geometry and USV path planning
  task         the multi-AUV data-collection MDP
  nets, rl     from-scratch actor-critic learners (DDPG and SAC)
  config       flat key-value experiment configuration
  experiments  training / evaluation / comparison commands
  cli          command line front end
"""

from .config import ExperimentConfig, load_config, parse_config_text, serialize_config
from .errors import (
    ConfigError,
    ContractError,
    InfeasibleGeometryError,
    InsufficientDataError,
    ResonanceError,
    SolverDivergenceError,
    TrainingDivergenceError,
)
from .fim import (
    FimMatrix,
    GeometrySummary,
    PlannerConfig,
    PlanResult,
    det_fim_closed,
    fim_numeric,
    geometry_summary,
    phase_jacobian,
    plan_usv_waypoint,
    step_usv,
)
from .ocean import (
    CurrentSample,
    Vortex,
    VortexSet,
    WaveConfig,
    WaveField,
    analytic_eta,
    current_velocity,
    initial_wave_field,
    sample_eta,
    step_wave,
    vorticity,
)
from .rl import DdpgAgent, ReplayBuffer, SacAgent, TrainConfig, Transition, train
from .task import Action, DataCollectionEnv, SensorNode, StepOutcome
from .usbl import (
    AuvTruth,
    PhaseMeasurement,
    UsblConfig,
    UsvState,
    estimate_position,
    slant_range,
    synthesize_measurement,
)

__version__ = "0.1.0"
