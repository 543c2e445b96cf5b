"""World model, grid raycasting, scan synthesis, and waypoint following."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..msgs import Header, LaserScan, OccupancyGrid, stamp_from_seconds

# A cell blocks rays / motion once its value reaches this.
OCCUPIED_CUTOFF = 50

# Heading error below which the controller translates instead of turning.
HEADING_TOL = 0.1


class OriginOutOfBounds(ValueError):
    """Ray origin lies outside the grid."""


@dataclass
class SimParams:
    scan_rate: float = 10.0        # Hz
    beams: int = 360
    fov: float = 1.5 * math.pi     # 270 degree lidar
    max_range: float = 5.6         # m
    range_min: float = 0.05        # m
    noise_sigma: float = 0.0       # m, per-beam Gaussian
    v_max: float = 0.5             # m/s
    omega_max: float = 1.5         # rad/s
    inflation_radius: float = 0.15 # m
    pose_rate: float = 10.0        # Hz for odom + localization


def wrap_angle(a: float) -> float:
    return math.atan2(math.sin(a), math.cos(a))


def grid_origin_yaw(grid: OccupancyGrid) -> float:
    qx, qy, qz, qw = grid.origin.orientation
    return math.atan2(2.0 * (qw * qz + qx * qy), 1.0 - 2.0 * (qy * qy + qz * qz))


def world_to_grid(grid: OccupancyGrid, x: float, y: float) -> tuple[float, float]:
    """Map-frame point -> grid-local meters (axes along columns/rows)."""
    ox, oy, _ = grid.origin.position
    yaw = grid_origin_yaw(grid)
    dx, dy = x - ox, y - oy
    c, s = math.cos(yaw), math.sin(yaw)
    return (c * dx + s * dy, -s * dx + c * dy)


def grid_to_world(grid: OccupancyGrid, gx: float, gy: float) -> tuple[float, float]:
    ox, oy, _ = grid.origin.position
    yaw = grid_origin_yaw(grid)
    c, s = math.cos(yaw), math.sin(yaw)
    return (ox + c * gx - s * gy, oy + s * gx + c * gy)


def cell_of(grid: OccupancyGrid, x: float, y: float) -> tuple[int, int]:
    """(row, col) of a map-frame point; may be out of bounds."""
    gx, gy = world_to_grid(grid, x, y)
    return (int(math.floor(gy / grid.resolution)),
            int(math.floor(gx / grid.resolution)))


def cell_center(grid: OccupancyGrid, row: int, col: int) -> tuple[float, float]:
    res = grid.resolution
    return grid_to_world(grid, (col + 0.5) * res, (row + 0.5) * res)


def in_bounds(grid: OccupancyGrid, row: int, col: int) -> bool:
    return 0 <= row < grid.height and 0 <= col < grid.width


def free_cell_near(grid: OccupancyGrid, x: float | None = None,
                   y: float | None = None) -> tuple[float, float]:
    """Center of the free cell closest to (x, y), default the grid middle."""
    cells = grid.cells
    rows, cols = np.nonzero((cells >= 0) & (cells < OCCUPIED_CUTOFF))
    if len(rows) == 0:
        raise ValueError("grid has no free cells")
    if x is None or y is None:
        target_row, target_col = grid.height / 2.0, grid.width / 2.0
    else:
        target_row, target_col = cell_of(grid, x, y)
    d2 = (rows - target_row) ** 2 + (cols - target_col) ** 2
    i = int(np.argmin(d2))
    return cell_center(grid, int(rows[i]), int(cols[i]))


@dataclass
class WorldModel:
    """Everything the simulation owns: map, robot pose, motion state."""

    grid: OccupancyGrid
    robot: tuple[float, float, float]  # (x, y, heading)
    params: SimParams = field(default_factory=SimParams)
    active_waypoints: tuple[tuple[float, float, float], ...] = ()
    waypoint_index: int = 0
    blocked_mask: np.ndarray | None = None  # inflated obstacles for motion safety
    twist: tuple[float, float] = (0.0, 0.0)  # (v, omega) currently commanded

    def __post_init__(self):
        if self.params.scan_rate <= 0:
            raise ValueError("scan_rate must be > 0")
        if self.params.beams < 1:
            raise ValueError("beams must be >= 1")
        if self.params.beams > 1 and self.params.fov <= 0:
            raise ValueError("fov must be > 0 for multi-beam scans")
        row, col = cell_of(self.grid, self.robot[0], self.robot[1])
        if not in_bounds(self.grid, row, col):
            raise ValueError(f"robot at {self.robot[:2]} is outside the grid")
        value = self.grid.cells[row, col]
        if not (0 <= value < OCCUPIED_CUTOFF):
            raise ValueError(f"robot cell ({row}, {col}) is not free (value {value})")

    def set_plan(self, waypoints, blocked_mask=None) -> None:
        self.active_waypoints = tuple(waypoints)
        self.waypoint_index = 0
        self.blocked_mask = blocked_mask

    def clear_plan(self) -> None:
        self.active_waypoints = ()
        self.waypoint_index = 0
        self.twist = (0.0, 0.0)

    @property
    def has_plan(self) -> bool:
        return self.waypoint_index < len(self.active_waypoints)


def raycast(grid: OccupancyGrid, origin: tuple[float, float], angle: float,
            max_range: float) -> float:
    """Distance to the first occupied cell boundary along the ray.

    Amanatides-Woo traversal: walk exactly the cells the ray crosses, in
    cell units, returning the boundary-entry distance in meters.  Unknown
    cells pass light; leaving the grid or exceeding max_range yields
    max_range.
    """
    res = grid.resolution
    gx, gy = world_to_grid(grid, origin[0], origin[1])
    width_m, height_m = grid.width * res, grid.height * res
    if not (0 <= gx < width_m and 0 <= gy < height_m):
        raise OriginOutOfBounds(f"ray origin {origin} maps outside the grid")

    a = angle - grid_origin_yaw(grid)
    dx, dy = math.cos(a), math.sin(a)
    u, v = gx / res, gy / res  # continuous cell coordinates
    col, row = int(math.floor(u)), int(math.floor(v))
    cells = grid.cells
    if cells[row, col] >= OCCUPIED_CUTOFF:
        return 0.0

    max_t = max_range / res  # ray parameter in cell units (direction is unit)
    if dx > 0:
        step_col, t_max_x, t_delta_x = 1, (col + 1 - u) / dx, 1.0 / dx
    elif dx < 0:
        step_col, t_max_x, t_delta_x = -1, (col - u) / dx, -1.0 / dx
    else:
        step_col, t_max_x, t_delta_x = 0, math.inf, math.inf
    if dy > 0:
        step_row, t_max_y, t_delta_y = 1, (row + 1 - v) / dy, 1.0 / dy
    elif dy < 0:
        step_row, t_max_y, t_delta_y = -1, (row - v) / dy, -1.0 / dy
    else:
        step_row, t_max_y, t_delta_y = 0, math.inf, math.inf

    while True:
        if t_max_x <= t_max_y:
            t = t_max_x
            t_max_x += t_delta_x
            col += step_col
        else:
            t = t_max_y
            t_max_y += t_delta_y
            row += step_row
        if t > max_t:
            return max_range
        if not (0 <= row < grid.height and 0 <= col < grid.width):
            return max_range
        if cells[row, col] >= OCCUPIED_CUTOFF:
            return t * res


def simulate_scan(world: WorldModel, rng: np.random.Generator,
                  sim_time: float = 0.0, seq: int = 0) -> LaserScan:
    """One full sweep: `beams` rays spanning the fov, centered on the
    robot heading, with per-beam Gaussian noise clamped to the sensor's
    range limits."""
    p = world.params
    x, y, heading = world.robot
    n = p.beams
    angle_min = -p.fov / 2.0
    angle_max = p.fov / 2.0
    increment = p.fov / (n - 1) if n > 1 else max(p.fov, 1e-6)

    noise = rng.normal(0.0, p.noise_sigma, n) if p.noise_sigma > 0 else np.zeros(n)
    ranges = []
    for i in range(n):
        r = raycast(world.grid, (x, y), heading + angle_min + i * increment, p.max_range)
        r += noise[i]
        ranges.append(min(max(r, p.range_min), p.max_range))

    sec, nsec = stamp_from_seconds(sim_time)
    return LaserScan(
        header=Header(seq=seq, stamp_sec=sec, stamp_nsec=nsec, frame_id="laser"),
        angle_min=angle_min,
        angle_max=angle_max,
        angle_increment=increment,
        time_increment=0.0,
        scan_time=1.0 / p.scan_rate,
        range_min=p.range_min,
        range_max=p.max_range,
        ranges=tuple(ranges),
    )


def step_motion(world: WorldModel, dt: float) -> tuple[tuple[float, float, float], bool]:
    """Advance the robot dt seconds along its active waypoint list.

    Rotate-then-translate pursuit: turn in place until the heading error is
    small, then drive straight, speeds clamped to omega_max / v_max.  A
    waypoint counts as reached within half a cell.  The robot refuses to
    enter a blocked cell.  Returns the new pose and whether the final
    waypoint was reached on this step.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if not world.has_plan:
        return world.robot, False

    x, y, theta = world.robot
    p = world.params
    tol = world.grid.resolution / 2.0

    while world.waypoint_index < len(world.active_waypoints):
        wx, wy, _ = world.active_waypoints[world.waypoint_index]
        if math.hypot(wx - x, wy - y) > tol:
            break
        world.waypoint_index += 1
    if world.waypoint_index >= len(world.active_waypoints):
        world.clear_plan()
        return world.robot, True

    wx, wy, _ = world.active_waypoints[world.waypoint_index]
    dist = math.hypot(wx - x, wy - y)
    bearing = math.atan2(wy - y, wx - x)
    err = wrap_angle(bearing - theta)
    omega = max(-p.omega_max, min(p.omega_max, err / dt))
    v = 0.0

    if abs(err) > HEADING_TOL:
        theta = wrap_angle(theta + omega * dt)
    else:
        theta = wrap_angle(theta + omega * dt)
        step = min(p.v_max * dt, dist)
        nx, ny = x + math.cos(theta) * step, y + math.sin(theta) * step
        row, col = cell_of(world.grid, nx, ny)
        blocked = world.blocked_mask
        inside = in_bounds(world.grid, row, col)
        if inside and (blocked is None or not blocked[row, col]):
            x, y, v = nx, ny, step / dt
        # else: hold position; the plan said this should not happen

    world.robot = (x, y, theta)
    world.twist = (v, omega)

    reached = False
    if math.hypot(wx - x, wy - y) <= tol and \
            world.waypoint_index == len(world.active_waypoints) - 1:
        world.clear_plan()
        reached = True
    return world.robot, reached
