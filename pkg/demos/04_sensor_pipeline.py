"""
Sensor data to render-ready points, across the five visualization modes
=======================================================================

Scans become one point per valid beam, grids one point per occupied cell,
paths a downsampled waypoint array -- all expressed in the operator's
world frame.  A SceneUpdater owns the scene: wire handlers queue raw
messages, one tick applies them to whichever channels the current mode
enables (1 none, 2 scan, 3 map, 4 scan+map, 5 scan+map+path).
"""

import math

import numpy as np

from navviz import msgs
from navviz.msgs import Header, LaserScan, NavPath, Pose, PoseStamped
from navviz.pipeline import (SceneUpdater, decimate_points, downsample_path,
                             grid_to_points, scan_to_points)
from navviz.geom import IDENTITY_ANCHOR, from_planar

# -- one-shot conversions ------------------------------------------------------

scan = LaserScan(header=Header(frame_id="laser"), angle_min=-math.pi / 2,
                 angle_max=math.pi / 2, angle_increment=math.pi / 8,
                 time_increment=0.0, scan_time=0.1, range_min=0.05,
                 range_max=5.0,
                 ranges=(1.0, 1.2, float("nan"), 2.0, 9.9, 1.4, 1.0, 0.8, 0.9))
points = scan_to_points(scan, from_planar(2.0, 1.0, 0.0), IDENTITY_ANCHOR)
print(f"scan: {len(scan.ranges)} beams -> {len(points)} points "
      f"(NaN and out-of-range beams dropped), color {points.color}")

cells = np.zeros((6, 6), dtype=np.int8)
cells[0, :] = cells[-1, :] = 100
grid = msgs.OccupancyGrid(header=Header(frame_id="map"), resolution=0.5,
                          width=6, height=6, origin=Pose(), data=cells.tobytes())
map_points = grid_to_points(grid, 50, IDENTITY_ANCHOR)
print(f"grid: {int((cells >= 50).sum())} occupied cells -> {len(map_points)} points, "
      f"color {map_points.color}")

path = NavPath(header=Header(frame_id="map"),
               poses=tuple(PoseStamped(header=Header(seq=i, frame_id="map"),
                                       pose=Pose(position=(i * 0.1, 0.0, 0.0)))
                           for i in range(30)))
waypoints = downsample_path(path, stride=10)
print(f"path: 30 poses, stride 10 -> {len(waypoints)} waypoints "
      f"(first and last always kept)")

print("decimation:", len(decimate_points(map_points, 4)), "of", len(map_points),
      "map points survive a cap of 4")

# -- the stateful scene --------------------------------------------------------

updater = SceneUpdater()
scan_doc = msgs.serialize_msg(scan)
grid_doc = msgs.serialize_msg(grid)
path_doc = msgs.serialize_msg(path)

for mode in (1, 2, 3, 4, 5):
    updater.set_mode(mode)
    for topic, doc in [("/scan", scan_doc), ("/map", grid_doc),
                       ("/global_plan", path_doc)]:
        updater.offer(topic, doc)
    stats = updater.tick()
    scene = updater.snapshot()
    sizes = {ch.value: len(ps) for ch, ps in scene.channels.items()}
    print(f"mode {mode}: channels {sizes}  "
          f"(tick cost {stats.tick_duration * 1e6:.0f} us, "
          f"{stats.points_processed} points processed)")

snapshot = updater.snapshot_json()
print("snapshot JSON channels:", {k: len(v["points"]) // 3
                                  for k, v in snapshot["channels"].items()})
