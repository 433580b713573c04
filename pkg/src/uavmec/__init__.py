"""Multi-UAV cooperative edge computing simulator and soft actor-critic trainer."""

from .channel import ChannelParams
from .env import UavMecEnv, PenaltyTerms, penalty_factor
from .energy import EnergyBreakdown, SlotDecision, TaskSpec
from .errors import ArtifactError, ConfigError, ScenarioInfeasibleError
from .sac import ReplayBuffer, SacAgent, SacConfig, train
from .scenario import ScenarioConfig, UavState, UserState, WorldState, build_scenario

__version__ = "0.1.0"

__all__ = [
    "ArtifactError", "ChannelParams", "ConfigError", "EnergyBreakdown",
    "PenaltyTerms", "ReplayBuffer", "SacAgent", "SacConfig",
    "ScenarioConfig", "ScenarioInfeasibleError", "SlotDecision", "TaskSpec",
    "UavMecEnv", "UavState", "UserState", "WorldState", "build_scenario",
    "penalty_factor", "train",
]
