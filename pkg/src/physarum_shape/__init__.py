"""Multi-agent Physarum model for approximating the shape of point sets."""
from .params import ConfigError, GrowthShrinkParams, ModelParams
from .lattice import IlluminationMask, OccupancyGrid, StimulusNode, diffuse, project_stimuli, sense_at
from .agents import Particle, SensorConfig, attempt_move, orient, sense
from .population import CapacityError, InoculationPattern, World, annihilate_respawn, inoculate
from .scenarios import Scenario, preset, preset_catalogue, pointset, run_scenario

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "GrowthShrinkParams", "ModelParams",
    "IlluminationMask", "OccupancyGrid", "StimulusNode", "diffuse", "project_stimuli", "sense_at",
    "Particle", "SensorConfig", "attempt_move", "orient", "sense",
    "CapacityError", "InoculationPattern", "World", "annihilate_respawn", "inoculate",
    "Scenario", "preset", "preset_catalogue", "pointset", "run_scenario",
]
