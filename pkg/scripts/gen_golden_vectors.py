#!/usr/bin/env python3
"""Regenerate the shared conformance vectors in golden/.

The browser console converts raw topics locally with the same rules as the
Python pipeline; these frozen vectors are asserted byte-for-byte by the
Python tests and within 1e-6 by the TypeScript tests, guaranteeing both
implementations agree.
"""

import json
import math
from pathlib import Path

import numpy as np

from navviz import msgs
from navviz.bench.runner import goal_message
from navviz.geom import IDENTITY_ANCHOR, RigidTransform
from navviz.pipeline import grid_to_points, scan_to_points
from navviz.proto import Op, ProtocolEnvelope, encode_envelope
from navviz.simbot.core import TOPIC_GOAL

OUT = Path(__file__).resolve().parent.parent / "golden"


def goal_vector() -> dict:
    goal = (2.5, 1.25, math.pi / 4)
    raw = goal_message(goal)
    frame = encode_envelope(ProtocolEnvelope(op=Op.PUBLISH, topic=TOPIC_GOAL, msg=raw))
    return {
        "goal": {"x": goal[0], "y": goal[1], "theta": goal[2]},
        "topic": TOPIC_GOAL,
        "frame": frame.decode("utf-8"),
        "envelope": json.loads(frame),
    }


def map_vector() -> dict:
    cells = np.zeros((10, 12), dtype=np.int8)
    cells[0, :] = cells[-1, :] = 100
    cells[:, 0] = cells[:, -1] = 100
    cells[4, 5] = 100
    cells[5, 6] = 100
    cells[2, 3] = -1
    yaw = 0.3
    grid = msgs.OccupancyGrid(
        header=msgs.Header(seq=1, frame_id="map"),
        resolution=0.25, width=12, height=10,
        origin=msgs.Pose(position=(-0.3, 0.2, 0.0),
                         orientation=(0.0, 0.0, math.sin(yaw / 2), math.cos(yaw / 2))),
        data=cells.tobytes())
    points = grid_to_points(grid, 50, IDENTITY_ANCHOR)
    return {
        "grid_msg": msgs.serialize_msg(grid),
        "occupied_threshold": 50,
        "expected_count": len(points),
        "expected_points": np.asarray(points.points).ravel().tolist(),
        "color": list(points.color),
    }


def scan_vector() -> dict:
    ranges = [1.0, 2.0, None, 0.6, 5.0, 12.0, 0.01, 3.3, None, 2.2,
              1.1, 0.9, 4.4, 3.6, 2.8, 1.7]
    scan = msgs.LaserScan(
        header=msgs.Header(seq=7, frame_id="laser"),
        angle_min=-1.2, angle_max=-1.2 + 15 * 0.16, angle_increment=0.16,
        time_increment=0.0, scan_time=0.1, range_min=0.05, range_max=5.6,
        ranges=tuple(float("nan") if r is None else r for r in ranges))
    pose = msgs.Pose(position=(1.1, 0.4, 0.0),
                     orientation=(0.0, 0.0, math.sin(0.3), math.cos(0.3)))
    sensor = RigidTransform(rotation=pose.orientation, translation=pose.position)
    points = scan_to_points(scan, sensor, IDENTITY_ANCHOR)
    return {
        "scan_msg": msgs.serialize_msg(scan),
        "robot_pose": {"position": {"x": 1.1, "y": 0.4, "z": 0.0},
                       "orientation": {"x": 0.0, "y": 0.0,
                                       "z": math.sin(0.3), "w": math.cos(0.3)}},
        "expected_count": len(points),
        "expected_points": np.asarray(points.points).ravel().tolist(),
        "color": list(points.color),
    }


def main() -> None:
    OUT.mkdir(exist_ok=True)
    for name, build in [("goal_envelope", goal_vector),
                        ("map_points", map_vector),
                        ("scan_points", scan_vector)]:
        path = OUT / f"{name}.json"
        path.write_text(json.dumps(build(), indent=2) + "\n")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
