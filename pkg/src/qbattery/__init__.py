"""Inhomogeneous Dicke quantum battery charging with SAC control."""

from .dicke import BatterySpec, FREQUENCY_PRESETS, build_system, initial_state
from .env import ChargingEnv, EnvConfig, RewardSchedule
from .ergotropy import ergotropy_report, ergotropy_trajectory
from .experiment import RunConfig, evaluate_protocol, grid_oracle, sweep, train
from .sac import SACAgent, SACConfig

__all__ = [
    "BatterySpec",
    "FREQUENCY_PRESETS",
    "build_system",
    "initial_state",
    "ChargingEnv",
    "EnvConfig",
    "RewardSchedule",
    "ergotropy_report",
    "ergotropy_trajectory",
    "RunConfig",
    "evaluate_protocol",
    "grid_oracle",
    "sweep",
    "train",
    "SACAgent",
    "SACConfig",
]

__version__ = "0.1.0"
