"""Grid path planning: A* over the inflated occupancy grid.

Costs are exact: every path cost is a pair (straight steps, diagonal
steps) evaluated canonically as (a + b*sqrt(2)) * resolution, so two
planners finding equal-cost paths produce bit-identical cost values.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..msgs import OccupancyGrid
from .world import OCCUPIED_CUTOFF, cell_center, cell_of, in_bounds

SQRT2 = math.sqrt(2.0)

# (drow, dcol, straight increment, diagonal increment)
NEIGHBORS_8 = (
    (-1, 0, 1, 0), (1, 0, 1, 0), (0, -1, 1, 0), (0, 1, 1, 0),
    (-1, -1, 0, 1), (-1, 1, 0, 1), (1, -1, 0, 1), (1, 1, 0, 1),
)


class PlanningError(Exception):
    pass


class StartOccupied(PlanningError):
    pass


class GoalOccupied(PlanningError):
    pass


class Unreachable(PlanningError):
    pass


def obstacle_mask(grid: OccupancyGrid, *, unknown_blocked: bool = True) -> np.ndarray:
    """Boolean (height, width) mask of cells the planner must avoid.

    Unknown cells block planning by default (conservative navigation),
    unlike raycasting, which lets rays pass through them.
    """
    cells = grid.cells
    mask = cells >= OCCUPIED_CUTOFF
    if unknown_blocked:
        mask = mask | (cells == -1)
    return mask


def inflate_mask(mask: np.ndarray, radius_m: float, resolution: float) -> np.ndarray:
    """Dilate blocked cells by a metric radius (Euclidean distance)."""
    if radius_m <= 0 or not mask.any():
        return mask.copy()
    distance = ndimage.distance_transform_edt(~mask) * resolution
    return mask | (distance <= radius_m)


@dataclass(frozen=True)
class PlanResult:
    """Cell-center waypoint path from start to goal, with exact cost in
    meters.  Consecutive waypoints are 8-neighbors in the grid."""

    waypoints: tuple[tuple[float, float, float], ...]
    cost: float
    cells: tuple[tuple[int, int], ...]


def _cost_value(straight: int, diagonal: int, resolution: float) -> float:
    return (straight + diagonal * SQRT2) * resolution


def plan_path(grid: OccupancyGrid, start, goal, inflation_radius: float, *,
              unknown_blocked: bool = True) -> PlanResult:
    """Minimal-cost 8-connected path on the inflated grid.

    start/goal are map-frame (x, y) or (x, y, heading) tuples.  Edge cost
    is the Euclidean cell distance; the heuristic is the (admissible)
    Euclidean straight-line distance.
    """
    start_cell = cell_of(grid, start[0], start[1])
    goal_cell = cell_of(grid, goal[0], goal[1])
    if not in_bounds(grid, *start_cell):
        raise ValueError(f"start {start[:2]} outside the grid")
    if not in_bounds(grid, *goal_cell):
        raise ValueError(f"goal {goal[:2]} outside the grid")

    blocked = inflate_mask(obstacle_mask(grid, unknown_blocked=unknown_blocked),
                           inflation_radius, grid.resolution)
    if blocked[start_cell]:
        raise StartOccupied(f"start cell {start_cell} is blocked")
    if blocked[goal_cell]:
        raise GoalOccupied(f"goal cell {goal_cell} is blocked")

    goal_theta = float(goal[2]) if len(goal) > 2 else None

    if start_cell == goal_cell:
        x, y = cell_center(grid, *start_cell)
        theta = goal_theta if goal_theta is not None else (
            float(start[2]) if len(start) > 2 else 0.0)
        return PlanResult(waypoints=((x, y, theta),), cost=0.0, cells=(start_cell,))

    gr, gc = goal_cell

    def heuristic(cell) -> float:
        return math.hypot(cell[0] - gr, cell[1] - gc)

    # g-values as exact (straight, diagonal) step counts.
    g: dict[tuple[int, int], tuple[int, int]] = {start_cell: (0, 0)}
    parent: dict[tuple[int, int], tuple[int, int]] = {}
    counter = 0
    open_heap = [(heuristic(start_cell), counter, start_cell)]
    closed: set[tuple[int, int]] = set()

    while open_heap:
        _, _, cell = heapq.heappop(open_heap)
        if cell in closed:
            continue
        if cell == goal_cell:
            break
        closed.add(cell)
        a, b = g[cell]
        row, col = cell
        for drow, dcol, ds, dd in NEIGHBORS_8:
            nrow, ncol = row + drow, col + dcol
            if not (0 <= nrow < grid.height and 0 <= ncol < grid.width):
                continue
            if blocked[nrow, ncol]:
                continue
            neighbor = (nrow, ncol)
            cand = (a + ds, b + dd)
            best = g.get(neighbor)
            if best is None or cand[0] + cand[1] * SQRT2 < best[0] + best[1] * SQRT2:
                g[neighbor] = cand
                parent[neighbor] = cell
                counter += 1
                f = cand[0] + cand[1] * SQRT2 + heuristic(neighbor)
                heapq.heappush(open_heap, (f, counter, neighbor))
    else:
        raise Unreachable(f"no path from {start_cell} to {goal_cell}")

    cells = [goal_cell]
    while cells[-1] != start_cell:
        cells.append(parent[cells[-1]])
    cells.reverse()

    centers = [cell_center(grid, r, c) for r, c in cells]
    waypoints = []
    for i, (x, y) in enumerate(centers):
        if i + 1 < len(centers):
            nx, ny = centers[i + 1]
            theta = math.atan2(ny - y, nx - x)
        elif goal_theta is not None:
            theta = goal_theta
        elif len(waypoints) > 0:
            theta = waypoints[-1][2]
        else:
            theta = 0.0
        waypoints.append((x, y, theta))

    straight, diagonal = g[goal_cell]
    return PlanResult(waypoints=tuple(waypoints),
                      cost=_cost_value(straight, diagonal, grid.resolution),
                      cells=tuple(cells))
