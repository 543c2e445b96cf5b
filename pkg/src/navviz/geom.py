"""Rigid-body transforms and headset/robot/map frame alignment.

Transforms follow the ``T_A_B`` convention: a transform named A<-B maps a
point expressed in frame B into frame A via ``p_A = R * p_B + t``.  The
operator headset is tied to the robot map through a two-stage alignment:
an externally detected marker pose gives headset<-robot, the localization
pose gives robot<-map, and their composition is persisted as a spatial
anchor so every later map-frame point can be placed in the headset world:

    T_holo_map = T_holo_robo * T_robo_map

Quaternion + translation is the canonical representation; rotations are
renormalized on construction so long composition chains do not drift.
"""

from __future__ import annotations

import json
import math
import threading
import time
from dataclasses import dataclass
from pathlib import Path

Vec3 = tuple[float, float, float]
Quat = tuple[float, float, float, float]  # (x, y, z, w)

# Construction restores unit norm whenever the rotation drifts past this.
UNIT_NORM_TOL = 1e-9


def _as_quat(q) -> Quat:
    x, y, z, w = (float(v) for v in q)
    n = math.sqrt(x * x + y * y + z * z + w * w)
    if not math.isfinite(n) or n == 0.0:
        raise ValueError(f"rotation quaternion has unusable norm {n!r}")
    if abs(n - 1.0) <= UNIT_NORM_TOL:
        return (x, y, z, w)
    return (x / n, y / n, z / n, w / n)


def _as_vec3(v) -> Vec3:
    x, y, z = (float(c) for c in v)
    if not (math.isfinite(x) and math.isfinite(y) and math.isfinite(z)):
        raise ValueError(f"translation {(x, y, z)} is not finite")
    return (x, y, z)


@dataclass(frozen=True)
class RigidTransform:
    """SE(3) pose as unit quaternion (x, y, z, w) plus translation in meters."""

    rotation: Quat = (0.0, 0.0, 0.0, 1.0)
    translation: Vec3 = (0.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "rotation", _as_quat(self.rotation))
        object.__setattr__(self, "translation", _as_vec3(self.translation))


IDENTITY = RigidTransform()


def quat_multiply(a: Quat, b: Quat) -> Quat:
    ax, ay, az, aw = a
    bx, by, bz, bw = b
    return (
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
        aw * bw - ax * bx - ay * by - az * bz,
    )


def quat_conjugate(q: Quat) -> Quat:
    x, y, z, w = q
    return (-x, -y, -z, w)


def quat_rotate(q: Quat, v: Vec3) -> Vec3:
    # v' = v + w*(2 u x v) + u x (2 u x v), with u the vector part.
    qx, qy, qz, qw = q
    vx, vy, vz = v
    tx = 2.0 * (qy * vz - qz * vy)
    ty = 2.0 * (qz * vx - qx * vz)
    tz = 2.0 * (qx * vy - qy * vx)
    return (
        vx + qw * tx + (qy * tz - qz * ty),
        vy + qw * ty + (qz * tx - qx * tz),
        vz + qw * tz + (qx * ty - qy * tx),
    )


def compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    """T_A_B composed with T_B_C gives T_A_C."""
    rx, ry, rz = quat_rotate(a.rotation, b.translation)
    tx, ty, tz = a.translation
    return RigidTransform(
        rotation=quat_multiply(a.rotation, b.rotation),
        translation=(rx + tx, ry + ty, rz + tz),
    )


def invert(t: RigidTransform) -> RigidTransform:
    q_inv = quat_conjugate(t.rotation)
    x, y, z = quat_rotate(q_inv, t.translation)
    return RigidTransform(rotation=q_inv, translation=(-x, -y, -z))


def transform_point(t: RigidTransform, p: Vec3) -> Vec3:
    rx, ry, rz = quat_rotate(t.rotation, p)
    tx, ty, tz = t.translation
    return (rx + tx, ry + ty, rz + tz)


def from_planar(x: float, y: float, theta: float) -> RigidTransform:
    """Planar robot pose (x, y, heading) as a full transform: yaw about +z."""
    half = 0.5 * theta
    return RigidTransform(
        rotation=(0.0, 0.0, math.sin(half), math.cos(half)),
        translation=(float(x), float(y), 0.0),
    )


def planar_parts(t: RigidTransform) -> tuple[float, float, float]:
    """(x, y, yaw) of a transform whose rotation is a pure yaw."""
    qx, qy, qz, qw = t.rotation
    yaw = math.atan2(2.0 * (qw * qz + qx * qy), 1.0 - 2.0 * (qy * qy + qz * qz))
    return (t.translation[0], t.translation[1], yaw)


@dataclass(frozen=True)
class MarkerObservation:
    """An already-detected fiducial pose, seen both from the headset camera
    and in the robot's own frame."""

    marker_in_camera: RigidTransform
    marker_in_robot: RigidTransform


def observe_marker(observation: MarkerObservation) -> RigidTransform:
    """Headset<-robot pose from one marker sighting."""
    return compose(observation.marker_in_camera, invert(observation.marker_in_robot))


@dataclass(frozen=True)
class AnchorRecord:
    """Persistent reference tying the headset world frame to the map frame."""

    anchor_id: str
    T_holo_map: RigidTransform
    created_at: float


IDENTITY_ANCHOR = AnchorRecord(anchor_id="identity", T_holo_map=IDENTITY, created_at=0.0)


def align_anchor(
    T_holo_robo: RigidTransform,
    T_robo_map: RigidTransform,
    *,
    anchor_id: str = "anchor",
    created_at: float | None = None,
) -> AnchorRecord:
    """Chain headset<-robot and robot<-map into a headset<-map anchor.

    ``T_robo_map`` is the inverse of the localization pose (which reports the
    robot in the map frame).
    """
    if created_at is None:
        created_at = time.time()
    return AnchorRecord(
        anchor_id=anchor_id,
        T_holo_map=compose(T_holo_robo, T_robo_map),
        created_at=float(created_at),
    )


def map_to_world(anchor: AnchorRecord, p_map: Vec3) -> Vec3:
    """Express a map-frame point in the headset world frame."""
    return transform_point(anchor.T_holo_map, p_map)


def anchor_to_json(record: AnchorRecord) -> dict:
    return {
        "anchor_id": record.anchor_id,
        "rotation": list(record.T_holo_map.rotation),
        "translation": list(record.T_holo_map.translation),
        "created_at": record.created_at,
    }


def anchor_from_json(doc: dict) -> AnchorRecord:
    return AnchorRecord(
        anchor_id=str(doc["anchor_id"]),
        T_holo_map=RigidTransform(
            rotation=tuple(doc["rotation"]),
            translation=tuple(doc["translation"]),
        ),
        created_at=float(doc["created_at"]),
    )


class AnchorStore:
    """Single-writer cell holding the one active anchor of a session.

    Readers always see a consistent record.  The store can round-trip through
    a small JSON file so a restarted client re-aligns without a new marker
    pass.
    """

    def __init__(self, record: AnchorRecord | None = None):
        self._lock = threading.Lock()
        self._record = record

    def current(self) -> AnchorRecord | None:
        with self._lock:
            return self._record

    def replace(self, record: AnchorRecord) -> AnchorRecord:
        with self._lock:
            self._record = record
            return record

    def align(
        self,
        T_holo_robo: RigidTransform,
        T_robo_map: RigidTransform,
        *,
        anchor_id: str = "anchor",
    ) -> AnchorRecord:
        return self.replace(align_anchor(T_holo_robo, T_robo_map, anchor_id=anchor_id))

    def save(self, path: str | Path) -> None:
        record = self.current()
        if record is None:
            raise ValueError("no active anchor to save")
        Path(path).write_text(json.dumps(anchor_to_json(record), indent=2))

    @classmethod
    def load(cls, path: str | Path) -> "AnchorStore":
        doc = json.loads(Path(path).read_text())
        return cls(anchor_from_json(doc))
