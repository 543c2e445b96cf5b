"""Typed model of the navigation-stack messages carried on the wire.

Five message kinds cover every topic this system speaks: laser scans,
occupancy grids, planned paths, odometry, and stamped poses.  Values are
validated on construction and immutable afterwards, so they can be shared
freely across threads.  Parsing is lossless: out-of-range or non-finite
scan readings survive the round trip (encoded as JSON ``null``) and are
only filtered downstream.

Also here: the map loader that turns a grayscale PGM image plus its YAML
sidecar (the map_server export format) into an occupancy grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

Vec3 = tuple[float, float, float]
Quat = tuple[float, float, float, float]

LASER_SCAN = "sensor_msgs/LaserScan"
OCCUPANCY_GRID = "nav_msgs/OccupancyGrid"
NAV_PATH = "nav_msgs/Path"
ODOMETRY = "nav_msgs/Odometry"
POSE_STAMPED = "geometry_msgs/PoseStamped"

SUPPORTED_TYPES = (LASER_SCAN, OCCUPANCY_GRID, NAV_PATH, ODOMETRY, POSE_STAMPED)

# Grid cell values: unknown / free..occupied.
UNKNOWN = -1
FREE = 0
OCCUPIED = 100

# map_server defaults, used when the YAML omits the thresholds.
DEFAULT_OCCUPIED_THRESH = 0.65
DEFAULT_FREE_THRESH = 0.196

ANGLE_EPS = 1e-6
QUAT_NORM_TOL = 1e-6


class UnsupportedType(ValueError):
    """Message type string outside the supported set."""


class SchemaViolation(ValueError):
    """A message field failed validation."""

    def __init__(self, field_name: str, reason: str):
        super().__init__(f"{field_name}: {reason}")
        self.field = field_name
        self.reason = reason


class MapLoadError(ValueError):
    pass


class FileMissing(MapLoadError):
    pass


class BadYamlField(MapLoadError):
    pass


class ImageSizeZero(MapLoadError):
    pass


def _require(cond: bool, field_name: str, reason: str):
    if not cond:
        raise SchemaViolation(field_name, reason)


def _finite(value, field_name: str) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise SchemaViolation(field_name, f"not a number: {value!r}") from None
    _require(math.isfinite(v), field_name, f"not finite: {v!r}")
    return v


def _uint(value, field_name: str) -> int:
    try:
        v = int(value)
    except (TypeError, ValueError):
        raise SchemaViolation(field_name, f"not an integer: {value!r}") from None
    _require(v >= 0, field_name, f"negative: {v}")
    return v


@dataclass(frozen=True)
class Header:
    seq: int = 0
    stamp_sec: int = 0
    stamp_nsec: int = 0
    frame_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "seq", _uint(self.seq, "header.seq"))
        object.__setattr__(self, "stamp_sec", _uint(self.stamp_sec, "header.stamp.secs"))
        object.__setattr__(self, "stamp_nsec", _uint(self.stamp_nsec, "header.stamp.nsecs"))
        _require(self.stamp_nsec < 10**9, "header.stamp.nsecs", "must be < 1e9")

    @property
    def stamp(self) -> float:
        return self.stamp_sec + self.stamp_nsec * 1e-9


def stamp_from_seconds(t: float) -> tuple[int, int]:
    sec = int(t)
    nsec = int(round((t - sec) * 1e9))
    if nsec >= 10**9:
        sec, nsec = sec + 1, nsec - 10**9
    return sec, nsec


@dataclass(frozen=True)
class Pose:
    position: Vec3 = (0.0, 0.0, 0.0)
    orientation: Quat = (0.0, 0.0, 0.0, 1.0)

    def __post_init__(self):
        pos = tuple(_finite(v, "pose.position") for v in self.position)
        _require(len(pos) == 3, "pose.position", "needs 3 components")
        quat = tuple(_finite(v, "pose.orientation") for v in self.orientation)
        _require(len(quat) == 4, "pose.orientation", "needs 4 components")
        norm = math.sqrt(sum(c * c for c in quat))
        _require(abs(norm - 1.0) <= QUAT_NORM_TOL, "pose.orientation",
                 f"quaternion norm {norm} is not within {QUAT_NORM_TOL} of 1")
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "orientation", quat)


@dataclass(frozen=True)
class PoseStamped:
    header: Header = field(default_factory=Header)
    pose: Pose = field(default_factory=Pose)


@dataclass(frozen=True)
class LaserScan:
    header: Header
    angle_min: float
    angle_max: float
    angle_increment: float
    time_increment: float
    scan_time: float
    range_min: float
    range_max: float
    ranges: tuple[float, ...]
    intensities: tuple[float, ...] = ()

    def __post_init__(self):
        for name in ("angle_min", "angle_max", "angle_increment",
                     "time_increment", "scan_time", "range_min", "range_max"):
            object.__setattr__(self, name, _finite(getattr(self, name), name))
        _require(self.angle_increment > 0, "angle_increment", "must be > 0")
        _require(0 <= self.range_min < self.range_max, "range_min",
                 f"need 0 <= range_min < range_max, got [{self.range_min}, {self.range_max}]")
        ranges = tuple(float(r) for r in self.ranges)
        last = self.angle_min + (len(ranges) - 1) * self.angle_increment
        _require(last <= self.angle_max + ANGLE_EPS, "ranges",
                 f"{len(ranges)} beams overrun angle_max ({last} > {self.angle_max})")
        intensities = tuple(float(i) for i in self.intensities)
        _require(len(intensities) in (0, len(ranges)), "intensities",
                 "length must be 0 or match ranges")
        object.__setattr__(self, "ranges", ranges)
        object.__setattr__(self, "intensities", intensities)


@dataclass(frozen=True)
class OccupancyGrid:
    header: Header
    resolution: float
    width: int
    height: int
    origin: Pose
    data: bytes  # int8 cells, row-major, row 0 adjacent to the origin corner

    def __post_init__(self):
        object.__setattr__(self, "resolution", _finite(self.resolution, "resolution"))
        _require(self.resolution > 0, "resolution", "must be > 0")
        object.__setattr__(self, "width", _uint(self.width, "width"))
        object.__setattr__(self, "height", _uint(self.height, "height"))
        if not isinstance(self.data, bytes):
            arr = np.asarray(self.data)
            _require(arr.size == 0 or
                     (np.issubdtype(arr.dtype, np.integer) or np.issubdtype(arr.dtype, np.signedinteger)),
                     "data", "cells must be integers")
            object.__setattr__(self, "data", arr.astype(np.int8).tobytes())
        cells = np.frombuffer(self.data, dtype=np.int8)
        _require(len(cells) == self.width * self.height, "data",
                 f"length mismatch: {len(cells)} != {self.width}*{self.height}")
        if cells.size:
            bad = (cells < -1) | (cells > 100)
            _require(not bool(bad.any()), "data",
                     "cell values must be -1 or 0..100")

    @property
    def cells(self) -> np.ndarray:
        """Read-only (height, width) int8 view of the cell data."""
        arr = np.frombuffer(self.data, dtype=np.int8).reshape(self.height, self.width)
        arr.flags.writeable = False
        return arr

    @property
    def extent(self) -> tuple[float, float]:
        """World size of the grid in meters, (width, height)."""
        return (self.width * self.resolution, self.height * self.resolution)


@dataclass(frozen=True)
class NavPath:
    header: Header
    poses: tuple[PoseStamped, ...]

    def __post_init__(self):
        poses = tuple(self.poses)
        for i, ps in enumerate(poses):
            _require(ps.header.frame_id == self.header.frame_id, f"poses[{i}].header.frame_id",
                     f"{ps.header.frame_id!r} differs from path frame {self.header.frame_id!r}")
        object.__setattr__(self, "poses", poses)


@dataclass(frozen=True)
class Twist:
    linear: Vec3 = (0.0, 0.0, 0.0)
    angular: Vec3 = (0.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "linear", tuple(_finite(v, "twist.linear") for v in self.linear))
        object.__setattr__(self, "angular", tuple(_finite(v, "twist.angular") for v in self.angular))


def _covariance(values, field_name: str) -> tuple[float, ...]:
    cov = tuple(_finite(v, field_name) for v in values)
    _require(len(cov) == 36, field_name, f"length must be 36, got {len(cov)}")
    return cov


ZERO_COVARIANCE = (0.0,) * 36


@dataclass(frozen=True)
class Odometry:
    header: Header
    child_frame_id: str
    pose: Pose
    twist: Twist = field(default_factory=Twist)
    pose_covariance: tuple[float, ...] = ZERO_COVARIANCE
    twist_covariance: tuple[float, ...] = ZERO_COVARIANCE

    def __post_init__(self):
        object.__setattr__(self, "pose_covariance",
                           _covariance(self.pose_covariance, "pose.covariance"))
        object.__setattr__(self, "twist_covariance",
                           _covariance(self.twist_covariance, "twist.covariance"))


Message = LaserScan | OccupancyGrid | NavPath | Odometry | PoseStamped


# --- JSON (de)serialization -------------------------------------------------
#
# Wire shapes follow the stock ROS JSON layout so the system stays
# interoperable with real bridge servers.  Non-finite floats in range
# arrays become null; everything else must be finite.

def _header_to_json(h: Header) -> dict:
    return {"seq": h.seq,
            "stamp": {"secs": h.stamp_sec, "nsecs": h.stamp_nsec},
            "frame_id": h.frame_id}


def _header_from_json(doc, field_name="header") -> Header:
    if not isinstance(doc, dict):
        raise SchemaViolation(field_name, "must be an object")
    stamp = doc.get("stamp", {})
    return Header(seq=doc.get("seq", 0),
                  stamp_sec=stamp.get("secs", 0),
                  stamp_nsec=stamp.get("nsecs", 0),
                  frame_id=str(doc.get("frame_id", "")))


def _pose_to_json(p: Pose) -> dict:
    x, y, z = p.position
    qx, qy, qz, qw = p.orientation
    return {"position": {"x": x, "y": y, "z": z},
            "orientation": {"x": qx, "y": qy, "z": qz, "w": qw}}


def _pose_from_json(doc, field_name="pose") -> Pose:
    if not isinstance(doc, dict):
        raise SchemaViolation(field_name, "must be an object")
    pos = doc.get("position", {})
    ori = doc.get("orientation", {})
    return Pose(position=(pos.get("x", 0.0), pos.get("y", 0.0), pos.get("z", 0.0)),
                orientation=(ori.get("x", 0.0), ori.get("y", 0.0),
                             ori.get("z", 0.0), ori.get("w", 1.0)))


def _range_to_json(r: float):
    return r if math.isfinite(r) else None


def _range_from_json(v, field_name: str) -> float:
    if v is None:
        return float("nan")
    try:
        return float(v)
    except (TypeError, ValueError):
        raise SchemaViolation(field_name, f"not a number: {v!r}") from None


def serialize_msg(m: Message) -> dict:
    """Typed message -> plain JSON value matching the ROS wire layout."""
    if isinstance(m, LaserScan):
        return {
            "header": _header_to_json(m.header),
            "angle_min": m.angle_min,
            "angle_max": m.angle_max,
            "angle_increment": m.angle_increment,
            "time_increment": m.time_increment,
            "scan_time": m.scan_time,
            "range_min": m.range_min,
            "range_max": m.range_max,
            "ranges": [_range_to_json(r) for r in m.ranges],
            "intensities": [_range_to_json(i) for i in m.intensities],
        }
    if isinstance(m, OccupancyGrid):
        return {
            "header": _header_to_json(m.header),
            "info": {
                "map_load_time": {"secs": 0, "nsecs": 0},
                "resolution": m.resolution,
                "width": m.width,
                "height": m.height,
                "origin": _pose_to_json(m.origin),
            },
            "data": np.frombuffer(m.data, dtype=np.int8).tolist(),
        }
    if isinstance(m, NavPath):
        return {
            "header": _header_to_json(m.header),
            "poses": [{"header": _header_to_json(ps.header), "pose": _pose_to_json(ps.pose)}
                      for ps in m.poses],
        }
    if isinstance(m, Odometry):
        lx, ly, lz = m.twist.linear
        ax, ay, az = m.twist.angular
        return {
            "header": _header_to_json(m.header),
            "child_frame_id": m.child_frame_id,
            "pose": {"pose": _pose_to_json(m.pose), "covariance": list(m.pose_covariance)},
            "twist": {"twist": {"linear": {"x": lx, "y": ly, "z": lz},
                                "angular": {"x": ax, "y": ay, "z": az}},
                      "covariance": list(m.twist_covariance)},
        }
    if isinstance(m, PoseStamped):
        return {"header": _header_to_json(m.header), "pose": _pose_to_json(m.pose)}
    raise UnsupportedType(f"cannot serialize {type(m).__name__}")


def msg_type_of(m: Message) -> str:
    if isinstance(m, LaserScan):
        return LASER_SCAN
    if isinstance(m, OccupancyGrid):
        return OCCUPANCY_GRID
    if isinstance(m, NavPath):
        return NAV_PATH
    if isinstance(m, Odometry):
        return ODOMETRY
    if isinstance(m, PoseStamped):
        return POSE_STAMPED
    raise UnsupportedType(f"no type string for {type(m).__name__}")


def parse_msg(msg_type: str, msg) -> Message:
    """Validate a raw JSON message value into its typed form.

    Raises UnsupportedType for unknown type strings and SchemaViolation for
    structurally broken payloads.
    """
    if msg_type not in SUPPORTED_TYPES:
        raise UnsupportedType(f"unsupported message type {msg_type!r}")
    if not isinstance(msg, dict):
        raise SchemaViolation("msg", "must be a JSON object")

    if msg_type == LASER_SCAN:
        ranges = msg.get("ranges", [])
        if not isinstance(ranges, list):
            raise SchemaViolation("ranges", "must be an array")
        intensities = msg.get("intensities", [])
        if not isinstance(intensities, list):
            raise SchemaViolation("intensities", "must be an array")
        return LaserScan(
            header=_header_from_json(msg.get("header", {})),
            angle_min=_finite(msg.get("angle_min", 0.0), "angle_min"),
            angle_max=_finite(msg.get("angle_max", 0.0), "angle_max"),
            angle_increment=_finite(msg.get("angle_increment", 0.0), "angle_increment"),
            time_increment=_finite(msg.get("time_increment", 0.0), "time_increment"),
            scan_time=_finite(msg.get("scan_time", 0.0), "scan_time"),
            range_min=_finite(msg.get("range_min", 0.0), "range_min"),
            range_max=_finite(msg.get("range_max", 0.0), "range_max"),
            ranges=tuple(_range_from_json(r, "ranges") for r in ranges),
            intensities=tuple(_range_from_json(i, "intensities") for i in intensities),
        )
    if msg_type == OCCUPANCY_GRID:
        info = msg.get("info")
        if not isinstance(info, dict):
            raise SchemaViolation("info", "must be an object")
        data = msg.get("data", [])
        if not isinstance(data, list):
            raise SchemaViolation("data", "must be an array")
        return OccupancyGrid(
            header=_header_from_json(msg.get("header", {})),
            resolution=info.get("resolution", 0.0),
            width=info.get("width", 0),
            height=info.get("height", 0),
            origin=_pose_from_json(info.get("origin", {}), "info.origin"),
            data=data,
        )
    if msg_type == NAV_PATH:
        raw_poses = msg.get("poses", [])
        if not isinstance(raw_poses, list):
            raise SchemaViolation("poses", "must be an array")
        poses = []
        for i, entry in enumerate(raw_poses):
            if not isinstance(entry, dict):
                raise SchemaViolation(f"poses[{i}]", "must be an object")
            poses.append(PoseStamped(header=_header_from_json(entry.get("header", {})),
                                     pose=_pose_from_json(entry.get("pose", {}))))
        return NavPath(header=_header_from_json(msg.get("header", {})), poses=tuple(poses))
    if msg_type == ODOMETRY:
        pose_doc = msg.get("pose", {})
        twist_doc = msg.get("twist", {})
        if not isinstance(pose_doc, dict) or not isinstance(twist_doc, dict):
            raise SchemaViolation("pose", "must be objects")
        inner_twist = twist_doc.get("twist", {})
        lin = inner_twist.get("linear", {})
        ang = inner_twist.get("angular", {})
        return Odometry(
            header=_header_from_json(msg.get("header", {})),
            child_frame_id=str(msg.get("child_frame_id", "")),
            pose=_pose_from_json(pose_doc.get("pose", {})),
            twist=Twist(linear=(lin.get("x", 0.0), lin.get("y", 0.0), lin.get("z", 0.0)),
                        angular=(ang.get("x", 0.0), ang.get("y", 0.0), ang.get("z", 0.0))),
            pose_covariance=pose_doc.get("covariance", ZERO_COVARIANCE),
            twist_covariance=twist_doc.get("covariance", ZERO_COVARIANCE),
        )
    # POSE_STAMPED
    return PoseStamped(header=_header_from_json(msg.get("header", {})),
                       pose=_pose_from_json(msg.get("pose", {})))


# --- Map loading ------------------------------------------------------------

def _read_pgm(path: Path) -> np.ndarray:
    """8-bit binary PGM (P5) -> (rows, cols) uint8 array, row 0 = image top."""
    raw = path.read_bytes()

    # Header tokens (magic, width, height, maxval) separated by whitespace,
    # with '#' comments running to end of line.
    tokens: list[bytes] = []
    i = 0
    while len(tokens) < 4 and i < len(raw):
        c = raw[i:i + 1]
        if c == b"#":
            while i < len(raw) and raw[i:i + 1] not in (b"\n", b"\r"):
                i += 1
        elif c.isspace():
            i += 1
        else:
            j = i
            while j < len(raw) and not raw[j:j + 1].isspace() and raw[j:j + 1] != b"#":
                j += 1
            tokens.append(raw[i:j])
            i = j
    if len(tokens) < 4 or tokens[0] != b"P5":
        raise BadYamlField(f"{path}: not a binary (P5) PGM file")
    try:
        width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError:
        raise BadYamlField(f"{path}: malformed PGM header") from None
    if maxval <= 0 or maxval > 255:
        raise BadYamlField(f"{path}: only 8-bit PGM supported (maxval={maxval})")
    if width == 0 or height == 0:
        raise ImageSizeZero(f"{path}: image has zero pixels")
    i += 1  # single whitespace byte after maxval
    pixels = raw[i:i + width * height]
    if len(pixels) != width * height:
        raise BadYamlField(f"{path}: truncated pixel data "
                           f"({len(pixels)} of {width * height} bytes)")
    return np.frombuffer(pixels, dtype=np.uint8).reshape(height, width)


def load_map_file(yaml_path: str | Path, image_path: str | Path | None = None) -> OccupancyGrid:
    """Load a map_server-style YAML + PGM pair into an occupancy grid.

    Pixel occupancy probability is p = (255-v)/255, or v/255 when the YAML
    sets negate; a cell becomes occupied (100) when p >= occupied_thresh,
    free (0) when p <= free_thresh, unknown (-1) in between.  Image row 0 is
    the top of the map, so rows are flipped into the grid, whose row 0 sits
    at the origin corner.
    """
    yaml_path = Path(yaml_path)
    if not yaml_path.is_file():
        raise FileMissing(f"map YAML not found: {yaml_path}")
    try:
        meta = yaml.safe_load(yaml_path.read_text())
    except yaml.YAMLError as exc:
        raise BadYamlField(f"{yaml_path}: invalid YAML ({exc})") from None
    if not isinstance(meta, dict):
        raise BadYamlField(f"{yaml_path}: YAML root must be a mapping")

    for key in ("image", "resolution", "origin"):
        if key not in meta:
            raise BadYamlField(f"{yaml_path}: missing required field {key!r}")

    try:
        resolution = float(meta["resolution"])
        origin_raw = [float(v) for v in meta["origin"]]
        negate = int(meta.get("negate", 0))
        occupied_thresh = float(meta.get("occupied_thresh", DEFAULT_OCCUPIED_THRESH))
        free_thresh = float(meta.get("free_thresh", DEFAULT_FREE_THRESH))
    except (TypeError, ValueError) as exc:
        raise BadYamlField(f"{yaml_path}: {exc}") from None
    if resolution <= 0:
        raise BadYamlField(f"{yaml_path}: resolution must be > 0")
    if len(origin_raw) < 3:
        raise BadYamlField(f"{yaml_path}: origin must be [x, y, yaw]")

    if image_path is None:
        image_path = Path(meta["image"])
        if not image_path.is_absolute():
            image_path = yaml_path.parent / image_path
    image_path = Path(image_path)
    if not image_path.is_file():
        raise FileMissing(f"map image not found: {image_path}")

    img = _read_pgm(image_path)
    p = (img.astype(np.float64) / 255.0) if negate else ((255.0 - img) / 255.0)
    cells = np.full(img.shape, UNKNOWN, dtype=np.int8)
    cells[p >= occupied_thresh] = OCCUPIED
    cells[p <= free_thresh] = FREE
    cells = cells[::-1, :]  # image top row -> highest grid row

    ox, oy, oyaw = origin_raw[0], origin_raw[1], origin_raw[2]
    half = 0.5 * oyaw
    origin = Pose(position=(ox, oy, 0.0),
                  orientation=(0.0, 0.0, math.sin(half), math.cos(half)))
    height, width = cells.shape
    return OccupancyGrid(
        header=Header(frame_id="map"),
        resolution=resolution,
        width=width,
        height=height,
        origin=origin,
        data=cells.tobytes(),
    )
