"""Inbound messages -> render-ready world-frame point sets.

Converts laser scans, occupancy grids, and planned paths into flat point
clouds expressed in the operator's world frame (via the active map anchor),
and maintains the scene across the five visualization modes:

  1 no sensor channels   2 scan   3 map   4 scan+map   5 scan+map+path

Channel colors follow the visual convention: scan green, map magenta,
path blue.  Maps are latched documents: each map revision is converted at
most once, while scans are perishable and replaced on every arrival.
"""

from __future__ import annotations

import threading
import time
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable

import numpy as np

from . import msgs
from .geom import AnchorRecord, IDENTITY_ANCHOR, Quat, RigidTransform, Vec3
from .msgs import LaserScan, NavPath, OccupancyGrid, Pose

RGB = tuple[int, int, int]


class Channel(str, Enum):
    SCAN = "scan"
    MAP = "map"
    PATH = "path"


CHANNEL_COLORS: dict[Channel, RGB] = {
    Channel.SCAN: (0, 255, 0),
    Channel.MAP: (255, 0, 255),
    Channel.PATH: (0, 0, 255),
}

MODES = (1, 2, 3, 4, 5)

MODE_CHANNELS: dict[int, frozenset[Channel]] = {
    1: frozenset(),
    2: frozenset({Channel.SCAN}),
    3: frozenset({Channel.MAP}),
    4: frozenset({Channel.SCAN, Channel.MAP}),
    5: frozenset({Channel.SCAN, Channel.MAP, Channel.PATH}),
}

DEFAULT_OCCUPIED_THRESHOLD = 50
DEFAULT_PATH_STRIDE = 10


def _rigid_from_pose(pose: Pose) -> RigidTransform:
    return RigidTransform(rotation=pose.orientation, translation=pose.position)


def _apply_transform(q: Quat, t: Vec3, xs, ys, zs):
    """Vectorized p' = R p + t, component expressions mirroring quat_rotate."""
    qx, qy, qz, qw = q
    tx = 2.0 * (qy * zs - qz * ys)
    ty = 2.0 * (qz * xs - qx * zs)
    tz = 2.0 * (qx * ys - qy * xs)
    rx = xs + qw * tx + (qy * tz - qz * ty)
    ry = ys + qw * ty + (qz * tx - qx * tz)
    rz = zs + qw * tz + (qx * ty - qy * tx)
    return rx + t[0], ry + t[1], rz + t[2]


def _world_points(local_xs, local_ys, local_zs,
                  frame_pose: RigidTransform, anchor: AnchorRecord) -> np.ndarray:
    xs, ys, zs = _apply_transform(frame_pose.rotation, frame_pose.translation,
                                  local_xs, local_ys, local_zs)
    xs, ys, zs = _apply_transform(anchor.T_holo_map.rotation,
                                  anchor.T_holo_map.translation, xs, ys, zs)
    return np.column_stack((xs, ys, zs))


@dataclass(eq=False, frozen=True)
class PointSet:
    """World-frame points of one channel, plus a monotone revision."""

    channel: Channel
    points: np.ndarray  # (N, 3) float64
    color: RGB
    revision: int = 0

    def __post_init__(self):
        pts = np.ascontiguousarray(np.asarray(self.points, dtype=np.float64))
        if pts.size == 0:
            pts = pts.reshape(0, 3)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError(f"points must be (N, 3), got {pts.shape}")
        if pts.size and not np.isfinite(pts).all():
            raise ValueError("point coordinates must be finite")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "revision", int(self.revision))

    def __len__(self) -> int:
        return self.points.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, PointSet):
            return NotImplemented
        return (self.channel == other.channel and self.color == other.color
                and self.revision == other.revision
                and np.array_equal(self.points, other.points))

    @classmethod
    def empty(cls, channel: Channel, revision: int = 0) -> "PointSet":
        return cls(channel=channel, points=np.zeros((0, 3)),
                   color=CHANNEL_COLORS[channel], revision=revision)


def scan_to_points(scan: LaserScan, sensor_pose_in_map: RigidTransform,
                   anchor: AnchorRecord = IDENTITY_ANCHOR, *,
                   revision: int = 0) -> PointSet:
    """Beams -> world points.

    Beam i sits at angle_min + i*angle_increment; non-finite readings and
    readings outside [range_min, range_max] are dropped without placeholder.
    """
    r = np.asarray(scan.ranges, dtype=np.float64)
    idx = np.arange(len(r), dtype=np.float64)
    theta = scan.angle_min + idx * scan.angle_increment
    keep = np.isfinite(r) & (r >= scan.range_min) & (r <= scan.range_max)
    r, theta = r[keep], theta[keep]
    xs = r * np.cos(theta)
    ys = r * np.sin(theta)
    zs = np.zeros_like(xs)
    return PointSet(channel=Channel.SCAN,
                    points=_world_points(xs, ys, zs, sensor_pose_in_map, anchor),
                    color=CHANNEL_COLORS[Channel.SCAN], revision=revision)


def grid_to_points(grid: OccupancyGrid,
                   occupied_threshold: int = DEFAULT_OCCUPIED_THRESHOLD,
                   anchor: AnchorRecord = IDENTITY_ANCHOR, *,
                   revision: int = 0) -> PointSet:
    """One world point per occupied cell, at the cell center.

    A cell counts as occupied when its value is >= occupied_threshold;
    unknown cells (-1) never match.
    """
    cells = grid.cells
    rows, cols = np.nonzero((cells >= occupied_threshold) & (cells >= 0))
    res = grid.resolution
    xs = (cols + 0.5) * res
    ys = (rows + 0.5) * res
    zs = np.zeros_like(xs)
    return PointSet(channel=Channel.MAP,
                    points=_world_points(xs, ys, zs, _rigid_from_pose(grid.origin), anchor),
                    color=CHANNEL_COLORS[Channel.MAP], revision=revision)


def downsample_path(path: NavPath, stride: int = DEFAULT_PATH_STRIDE) -> list[Pose]:
    """Every stride-th pose, order preserved, endpoints always kept."""
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    n = len(path.poses)
    if n == 0:
        return []
    indices = list(range(0, n, stride))
    if indices[-1] != n - 1:
        indices.append(n - 1)
    return [path.poses[i].pose for i in indices]


def path_to_points(path: NavPath, anchor: AnchorRecord = IDENTITY_ANCHOR, *,
                   stride: int = DEFAULT_PATH_STRIDE, revision: int = 0) -> PointSet:
    """Downsampled waypoint positions -> world points."""
    poses = downsample_path(path, stride)
    if poses:
        pts = np.array([p.position for p in poses], dtype=np.float64)
        xs, ys, zs = pts[:, 0], pts[:, 1], pts[:, 2]
    else:
        xs = ys = zs = np.zeros(0)
    q, t = anchor.T_holo_map.rotation, anchor.T_holo_map.translation
    xs, ys, zs = _apply_transform(q, t, xs, ys, zs)
    return PointSet(channel=Channel.PATH, points=np.column_stack((xs, ys, zs)),
                    color=CHANNEL_COLORS[Channel.PATH], revision=revision)


def decimate_points(ps: PointSet, max_points: int) -> PointSet:
    """Deterministic uniform stride selection down to at most max_points."""
    if max_points < 1:
        raise ValueError(f"max_points must be >= 1, got {max_points}")
    n = len(ps)
    if n <= max_points:
        return ps
    stride = -(-n // max_points)  # ceil
    return PointSet(channel=ps.channel, points=ps.points[::stride],
                    color=ps.color, revision=ps.revision)


@dataclass
class FrameStats:
    """What one update tick did and what it cost."""

    tick_index: int
    tick_duration: float
    points_processed: int
    channels_updated: frozenset[Channel]

    def __post_init__(self):
        if self.tick_duration <= 0:
            raise ValueError("tick_duration must be > 0")


@dataclass
class SceneState:
    mode: int = 1
    channels: dict[Channel, PointSet] = field(
        default_factory=lambda: {ch: PointSet.empty(ch) for ch in Channel})
    robot_pose: Pose = field(default_factory=Pose)
    goal: Pose | None = None
    last_path: NavPath | None = None


# Topic -> what the scene does with it.
DEFAULT_TOPIC_ROUTES: dict[str, str] = {
    "/scan": "scan",
    "/map": "map",
    "/global_plan": "path",
    "/odom": "odom",
    "/amcl_pose": "amcl",
}

ROUTE_MSG_TYPES: dict[str, str] = {
    "scan": msgs.LASER_SCAN,
    "map": msgs.OCCUPANCY_GRID,
    "path": msgs.NAV_PATH,
    "odom": msgs.ODOMETRY,
    "amcl": msgs.POSE_STAMPED,
}


class SceneUpdater:
    """Single-owner scene fed by a bounded inbound queue.

    Wire handlers call offer() from any thread; one consumer calls tick(),
    which applies all queued messages for the enabled channels and emits
    FrameStats.  On overflow the oldest scan messages are dropped first
    (scans are perishable); map and path messages are never dropped.
    """

    def __init__(self, *,
                 anchor: AnchorRecord = IDENTITY_ANCHOR,
                 occupied_threshold: int = DEFAULT_OCCUPIED_THRESHOLD,
                 path_stride: int = DEFAULT_PATH_STRIDE,
                 max_points_per_channel: int | None = None,
                 queue_capacity: int = 256,
                 topic_routes: dict[str, str] | None = None,
                 clock: Callable[[], float] = time.perf_counter):
        self._anchor = anchor
        self._occupied_threshold = occupied_threshold
        self._path_stride = path_stride
        self._max_points = max_points_per_channel
        self._capacity = queue_capacity
        self._routes = dict(DEFAULT_TOPIC_ROUTES if topic_routes is None else topic_routes)
        self._clock = clock
        self._queue: deque[tuple[str, Any]] = deque()
        self._queue_lock = threading.Lock()
        self._scene_lock = threading.Lock()
        self._scene = SceneState()
        self._tick_index = 0
        self._revisions = {ch: 0 for ch in Channel}
        self._latched_map: OccupancyGrid | None = None
        self._applied_map_seq: int | None = None
        self._localization: Pose | None = None
        self._plan_applied_at: float | None = None
        self.malformed_count = 0
        self.dropped_scans = 0

    # -- inbound -------------------------------------------------------------

    def offer(self, topic: str, msg: Any) -> None:
        """Queue one raw inbound message (thread-safe, non-blocking)."""
        is_scan = self._routes.get(topic) == "scan"
        with self._queue_lock:
            if len(self._queue) >= self._capacity:
                for i, (queued_topic, _) in enumerate(self._queue):
                    if self._routes.get(queued_topic) == "scan":
                        del self._queue[i]
                        self.dropped_scans += 1
                        break
                else:
                    if is_scan:
                        self.dropped_scans += 1
                        return
            self._queue.append((topic, msg))

    def handler_for(self, topic: str):
        """A proto-compatible handler that feeds this scene."""
        def handle(_topic: str, msg: Any) -> None:
            self.offer(topic, msg)
        return handle

    # -- configuration -------------------------------------------------------

    def set_anchor(self, anchor: AnchorRecord) -> None:
        with self._scene_lock:
            self._anchor = anchor

    @property
    def anchor(self) -> AnchorRecord:
        return self._anchor

    def set_goal(self, goal: Pose) -> None:
        """Record an outgoing navigation goal; restarts the plan watch."""
        with self._scene_lock:
            self._scene.goal = goal
            self._plan_applied_at = None

    @property
    def plan_applied_at(self) -> float | None:
        """Clock time when the most recent plan message entered the scene."""
        return self._plan_applied_at

    def set_mode(self, mode: int) -> SceneState:
        """Switch visualization mode; disabled channels are cleared, newly
        enabled map/path channels repopulate from their latched documents."""
        if mode not in MODE_CHANNELS:
            raise ValueError(f"mode must be 1..5, got {mode}")
        with self._scene_lock:
            enabled = MODE_CHANNELS[mode]
            self._scene.mode = mode
            for ch in Channel:
                if ch in enabled:
                    continue
                if len(self._scene.channels[ch]):
                    self._scene.channels[ch] = PointSet.empty(ch, self._bump(ch))
            if Channel.MAP in enabled and not len(self._scene.channels[Channel.MAP]) \
                    and self._latched_map is not None:
                self._apply_map(self._latched_map)
            if Channel.PATH in enabled and not len(self._scene.channels[Channel.PATH]) \
                    and self._scene.last_path is not None:
                self._apply_path(self._scene.last_path)
            return self._snapshot_locked()

    # -- tick ----------------------------------------------------------------

    def tick(self) -> FrameStats:
        """Apply every queued message and report what it cost."""
        with self._queue_lock:
            batch = list(self._queue)
            self._queue.clear()
        start = self._clock()
        points = 0
        updated: set[Channel] = set()
        with self._scene_lock:
            for topic, raw in batch:
                route = self._routes.get(topic)
                if route is None:
                    continue
                try:
                    message = msgs.parse_msg(ROUTE_MSG_TYPES[route], raw)
                except (msgs.SchemaViolation, msgs.UnsupportedType):
                    self.malformed_count += 1
                    continue
                if route == "scan":
                    if Channel.SCAN in MODE_CHANNELS[self._scene.mode]:
                        points += self._apply_scan(message)
                        updated.add(Channel.SCAN)
                elif route == "map":
                    self._latched_map = message
                    if Channel.MAP in MODE_CHANNELS[self._scene.mode]:
                        if message.header.seq != self._applied_map_seq:
                            points += self._apply_map(message)
                            updated.add(Channel.MAP)
                elif route == "path":
                    self._scene.last_path = message
                    self._plan_applied_at = self._clock()
                    if Channel.PATH in MODE_CHANNELS[self._scene.mode]:
                        points += self._apply_path(message)
                        updated.add(Channel.PATH)
                elif route == "odom":
                    self._scene.robot_pose = message.pose
                elif route == "amcl":
                    self._localization = message.pose
        duration = max(self._clock() - start, 1e-9)
        stats = FrameStats(tick_index=self._tick_index, tick_duration=duration,
                           points_processed=points, channels_updated=frozenset(updated))
        self._tick_index += 1
        return stats

    # -- internals (scene lock held) ------------------------------------------

    def _bump(self, channel: Channel) -> int:
        self._revisions[channel] += 1
        return self._revisions[channel]

    def _sensor_pose(self) -> RigidTransform:
        pose = self._localization if self._localization is not None else self._scene.robot_pose
        return _rigid_from_pose(pose)

    def _store(self, ps: PointSet) -> int:
        if self._max_points is not None:
            ps = decimate_points(ps, self._max_points)
        self._scene.channels[ps.channel] = ps
        return len(ps)

    def _apply_scan(self, scan: LaserScan) -> int:
        return self._store(scan_to_points(scan, self._sensor_pose(), self._anchor,
                                          revision=self._bump(Channel.SCAN)))

    def _apply_map(self, grid: OccupancyGrid) -> int:
        self._applied_map_seq = grid.header.seq
        return self._store(grid_to_points(grid, self._occupied_threshold, self._anchor,
                                          revision=self._bump(Channel.MAP)))

    def _apply_path(self, path: NavPath) -> int:
        return self._store(path_to_points(path, self._anchor, stride=self._path_stride,
                                          revision=self._bump(Channel.PATH)))

    # -- read side -----------------------------------------------------------

    @property
    def localization_pose(self) -> Pose | None:
        return self._localization

    def _snapshot_locked(self) -> SceneState:
        return SceneState(mode=self._scene.mode,
                          channels=dict(self._scene.channels),
                          robot_pose=self._scene.robot_pose,
                          goal=self._scene.goal,
                          last_path=self._scene.last_path)

    def snapshot(self) -> SceneState:
        """Consistent copy of the scene (point sets are immutable)."""
        with self._scene_lock:
            return self._snapshot_locked()

    def snapshot_json(self) -> dict:
        """JSON-ready scene: per channel a flat coordinate array + color +
        revision, for the relay and for golden-file tests."""
        scene = self.snapshot()
        channels = {}
        for ch, ps in scene.channels.items():
            channels[ch.value] = {
                "points": np.asarray(ps.points).ravel().tolist(),
                "color": list(ps.color),
                "revision": ps.revision,
            }
        doc: dict[str, Any] = {"mode": scene.mode, "channels": channels}
        x, y, z = scene.robot_pose.position
        qx, qy, qz, qw = scene.robot_pose.orientation
        doc["robot_pose"] = {"position": {"x": x, "y": y, "z": z},
                             "orientation": {"x": qx, "y": qy, "z": qz, "w": qw}}
        return doc
