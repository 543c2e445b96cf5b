"""Deterministic simulation engine behind the server.

SimCore owns the world, the simulation clock, and the topic emission
schedule, with no threads or sockets: advance() steps time and returns the
messages that became due, handle_goal()/handle_teleport() process operator
commands.  The server (or a lockstep harness) drives it and moves the
messages; identical drive sequences yield identical message sequences for
a fixed seed.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .. import msgs
from ..msgs import (Header, NavPath, Odometry, OccupancyGrid, Pose,
                    PoseStamped, Twist, stamp_from_seconds)
from .planning import PlanningError, plan_path, inflate_mask, obstacle_mask
from .world import WorldModel, cell_of, in_bounds, simulate_scan, step_motion, OCCUPIED_CUTOFF

TOPIC_SCAN = "/scan"
TOPIC_MAP = "/map"
TOPIC_ODOM = "/odom"
TOPIC_AMCL = "/amcl_pose"
TOPIC_PLAN = "/global_plan"
TOPIC_GOAL = "/move_base_simple/goal"
TOPIC_TELEPORT = "/simbot/teleport"
TOPIC_STATUS = "/simbot/status"

STATUS_TYPE = "simbot/Status"

TOPIC_TYPES = {
    TOPIC_SCAN: msgs.LASER_SCAN,
    TOPIC_MAP: msgs.OCCUPANCY_GRID,
    TOPIC_ODOM: msgs.ODOMETRY,
    TOPIC_AMCL: msgs.POSE_STAMPED,
    TOPIC_PLAN: msgs.NAV_PATH,
    TOPIC_GOAL: msgs.POSE_STAMPED,
    TOPIC_TELEPORT: msgs.POSE_STAMPED,
    TOPIC_STATUS: STATUS_TYPE,
}

Outbound = tuple[str, str, object]  # (topic, msg_type, typed message or raw dict)


def yaw_of(pose: Pose) -> float:
    qx, qy, qz, qw = pose.orientation
    return math.atan2(2.0 * (qw * qz + qx * qy), 1.0 - 2.0 * (qy * qy + qz * qz))


def planar_pose(x: float, y: float, theta: float) -> Pose:
    half = 0.5 * theta
    return Pose(position=(x, y, 0.0),
                orientation=(0.0, 0.0, math.sin(half), math.cos(half)))


@dataclass
class SimCore:
    world: WorldModel
    seed: int = 0
    sim_time: float = 0.0

    def __post_init__(self):
        self.rng = np.random.default_rng(self.seed)
        self.map_revision = 1
        self._scan_count = 0
        self._pose_count = 0
        self._plan_seq = 0
        self._status_seq = 0
        self._inflated = inflate_mask(obstacle_mask(self.world.grid),
                                      self.world.params.inflation_radius,
                                      self.world.grid.resolution)
        self._map_message: OccupancyGrid | None = None

    # -- outbound builders -----------------------------------------------------

    def _header(self, seq: int, frame_id: str) -> Header:
        sec, nsec = stamp_from_seconds(self.sim_time)
        return Header(seq=seq, stamp_sec=sec, stamp_nsec=nsec, frame_id=frame_id)

    def latched_map_message(self) -> OccupancyGrid:
        """The current map revision as a message (latched topic content)."""
        if self._map_message is None or self._map_message.header.seq != self.map_revision:
            self._map_message = dataclasses.replace(
                self.world.grid, header=Header(seq=self.map_revision, frame_id="map"))
        return self._map_message

    def _robot_pose(self) -> Pose:
        x, y, theta = self.world.robot
        return planar_pose(x, y, theta)

    def _odometry(self) -> Odometry:
        v, omega = self.world.twist
        return Odometry(header=self._header(self._pose_count, "odom"),
                        child_frame_id="base_link",
                        pose=self._robot_pose(),
                        twist=Twist(linear=(v, 0.0, 0.0), angular=(0.0, 0.0, omega)))

    def _localization(self) -> PoseStamped:
        return PoseStamped(header=self._header(self._pose_count, "map"),
                           pose=self._robot_pose())

    def _status(self, level: str, text: str) -> Outbound:
        self._status_seq += 1
        return (TOPIC_STATUS, STATUS_TYPE,
                {"level": level, "text": text, "seq": self._status_seq})

    # -- driving ---------------------------------------------------------------

    def advance(self, dt: float) -> list[Outbound]:
        """Step sim time by dt and return every message that became due."""
        if dt <= 0:
            raise ValueError("dt must be > 0")
        self.sim_time += dt
        step_motion(self.world, dt)

        out: list[Outbound] = []
        p = self.world.params
        while (self._scan_count + 1) / p.scan_rate <= self.sim_time + 1e-12:
            self._scan_count += 1
            scan = simulate_scan(self.world, self.rng,
                                 sim_time=self._scan_count / p.scan_rate,
                                 seq=self._scan_count)
            out.append((TOPIC_SCAN, msgs.LASER_SCAN, scan))
        while (self._pose_count + 1) / p.pose_rate <= self.sim_time + 1e-12:
            self._pose_count += 1
            out.append((TOPIC_ODOM, msgs.ODOMETRY, self._odometry()))
            out.append((TOPIC_AMCL, msgs.POSE_STAMPED, self._localization()))
        return out

    def handle_goal(self, goal: PoseStamped) -> list[Outbound]:
        """Plan to the goal; on success activate the plan and emit it."""
        x, y, _ = goal.pose.position
        theta = yaw_of(goal.pose)
        rx, ry, _ = self.world.robot
        try:
            plan = plan_path(self.world.grid, (rx, ry), (x, y, theta),
                             self.world.params.inflation_radius)
        except (PlanningError, ValueError) as exc:
            return [self._status("error", f"goal rejected: {exc}")]
        self.world.set_plan(plan.waypoints, self._inflated)
        self._plan_seq += 1
        sec, nsec = stamp_from_seconds(self.sim_time)
        header = Header(seq=self._plan_seq, stamp_sec=sec, stamp_nsec=nsec,
                        frame_id="map")
        poses = tuple(
            PoseStamped(header=Header(seq=i, stamp_sec=sec, stamp_nsec=nsec,
                                      frame_id="map"),
                        pose=planar_pose(wx, wy, wtheta))
            for i, (wx, wy, wtheta) in enumerate(plan.waypoints))
        path = NavPath(header=header, poses=poses)
        return [(TOPIC_PLAN, msgs.NAV_PATH, path)]

    def handle_teleport(self, target: PoseStamped) -> list[Outbound]:
        """Instantly relocate the robot (experiment support)."""
        x, y, _ = target.pose.position
        theta = yaw_of(target.pose)
        row, col = cell_of(self.world.grid, x, y)
        if not in_bounds(self.world.grid, row, col) or \
                not (0 <= self.world.grid.cells[row, col] < OCCUPIED_CUTOFF):
            return [self._status("error", f"teleport rejected: cell ({row}, {col}) not free")]
        self.world.clear_plan()
        self.world.robot = (x, y, theta)
        return [self._status("info", "teleported")]

    def handle_publish(self, topic: str, raw_msg) -> list[Outbound]:
        """Route a client publish (raw JSON msg) to its command handler."""
        if topic == TOPIC_GOAL:
            try:
                goal = msgs.parse_msg(msgs.POSE_STAMPED, raw_msg)
            except (msgs.SchemaViolation, msgs.UnsupportedType) as exc:
                return [self._status("error", f"bad goal message: {exc}")]
            return self.handle_goal(goal)
        if topic == TOPIC_TELEPORT:
            try:
                target = msgs.parse_msg(msgs.POSE_STAMPED, raw_msg)
            except (msgs.SchemaViolation, msgs.UnsupportedType) as exc:
                return [self._status("error", f"bad teleport message: {exc}")]
            return self.handle_teleport(target)
        return []
