"""Simulated mobile robot served over the pub/sub wire protocol.

Stands in for the physical robot + navigation stack: synthesizes laser
scans against the loaded map by grid raycasting, localizes (ground truth),
plans paths with A* on an inflated grid, follows them with a simple
rotate-then-translate controller, and serves it all as WebSocket topics.
"""

from .world import (OriginOutOfBounds, SimParams, WorldModel, free_cell_near,
                    raycast, simulate_scan, step_motion)
from .planning import (GoalOccupied, PlanningError, PlanResult, StartOccupied,
                       Unreachable, inflate_mask, obstacle_mask, plan_path)
from .core import (SimCore, TOPIC_AMCL, TOPIC_GOAL, TOPIC_MAP, TOPIC_ODOM,
                   TOPIC_PLAN, TOPIC_SCAN, TOPIC_STATUS, TOPIC_TELEPORT)
from .server import BindFailed, SimServer

__all__ = [
    "BindFailed", "GoalOccupied", "OriginOutOfBounds", "PlanningError",
    "PlanResult", "SimCore", "SimParams", "SimServer", "StartOccupied",
    "TOPIC_AMCL", "TOPIC_GOAL", "TOPIC_MAP", "TOPIC_ODOM", "TOPIC_PLAN",
    "TOPIC_SCAN", "TOPIC_STATUS", "TOPIC_TELEPORT", "Unreachable",
    "WorldModel", "free_cell_near", "inflate_mask", "obstacle_mask",
    "plan_path", "raycast", "simulate_scan", "step_motion",
]
