"""hypermapf: a desk-scale laboratory for hypergraph-attention multi-agent
pathfinding — grid MAPF environment, communication-hypergraph generation,
an attention network with exact reverse-mode gradients, in-repo experts,
imitation training, and analysis tooling."""

from .grid import (
    ACTION_DELTAS,
    ACTION_NAMES,
    Configuration,
    GridMap,
    Instance,
    bfs_dist,
    format_instance,
    parse_instance,
)
from .moves import Conflict, validate_joint_move
from .observation import Observation, build_observation, observe_all
from .costs import SocReport, Trajectory, soc_metrics

__all__ = [
    "ACTION_DELTAS", "ACTION_NAMES", "Configuration", "GridMap", "Instance",
    "bfs_dist", "format_instance", "parse_instance", "Conflict",
    "validate_joint_move", "Observation", "build_observation", "observe_all",
    "SocReport", "Trajectory", "soc_metrics",
]

__version__ = "0.1.0"
