"""
The simulated robot server, end to end over real sockets
========================================================

A SimServer stands in for the robot + navigation stack: it serves the map
(latched: once per subscriber), streams raycast laser scans and poses,
accepts navigation goals, plans with A*, and drives the robot along the
plan.  Everything below talks to it through the public wire protocol
only -- the same way the browser console does.
"""

import math
import threading
import time

import numpy as np

from navviz import msgs
from navviz.proto import session_connect
from navviz.simbot import SimCore, SimParams, SimServer, WorldModel
from navviz.simbot.core import (TOPIC_AMCL, TOPIC_GOAL, TOPIC_MAP, TOPIC_PLAN,
                                TOPIC_SCAN, TOPIC_TYPES, planar_pose)

# A 10 m x 10 m hall with a pillar in the middle.
cells = np.zeros((100, 100), dtype=np.int8)
cells[0, :] = cells[-1, :] = cells[:, 0] = cells[:, -1] = 100
cells[45:55, 45:55] = 100
grid = msgs.OccupancyGrid(header=msgs.Header(frame_id="map"), resolution=0.1,
                          width=100, height=100, origin=msgs.Pose(),
                          data=cells.tobytes())

world = WorldModel(grid=grid, robot=(2.0, 2.0, 0.0),
                   params=SimParams(scan_rate=10.0, beams=180))
server = SimServer(SimCore(world, seed=1), port=0)
server.start()
print("serving at", server.url)

inbox: dict[str, list] = {}
got_plan = threading.Event()

def collect(topic, msg):
    inbox.setdefault(topic, []).append(msg)
    if topic == TOPIC_PLAN:
        got_plan.set()

session = session_connect(server.url)
for topic in (TOPIC_MAP, TOPIC_SCAN, TOPIC_AMCL, TOPIC_PLAN):
    session.subscribe(topic, TOPIC_TYPES[topic], collect)

time.sleep(0.5)
grid_msg = msgs.parse_msg(msgs.OCCUPANCY_GRID, inbox[TOPIC_MAP][0])
scan_msg = msgs.parse_msg(msgs.LASER_SCAN, inbox[TOPIC_SCAN][-1])
print(f"map arrived once: {len(inbox[TOPIC_MAP])} message, "
      f"{grid_msg.width}x{grid_msg.height} cells")
print(f"scans streaming: {len(inbox[TOPIC_SCAN])} so far, "
      f"{len(scan_msg.ranges)} beams, first few ranges "
      f"{[round(r, 2) for r in scan_msg.ranges[:5]]}")

# Send a goal to the far corner; the server plans and starts driving.
goal = msgs.PoseStamped(header=msgs.Header(frame_id="map"),
                        pose=planar_pose(8.0, 8.0, 0.0))
session.advertise_and_publish(TOPIC_GOAL, msgs.POSE_STAMPED,
                              msgs.serialize_msg(goal))
got_plan.wait(5.0)
plan = msgs.parse_msg(msgs.NAV_PATH, inbox[TOPIC_PLAN][0])
length = sum(math.dist(a.pose.position, b.pose.position)
             for a, b in zip(plan.poses, plan.poses[1:]))
print(f"plan arrived: {len(plan.poses)} waypoints, {length:.2f} m "
      f"(detours around the pillar)")

print("driving for 4 seconds...")
time.sleep(4.0)
pose = msgs.parse_msg(msgs.POSE_STAMPED, inbox[TOPIC_AMCL][-1]).pose.position
print(f"robot now near ({pose[0]:.2f}, {pose[1]:.2f}), "
      f"started at (2.00, 2.00), heading for (8.00, 8.00)")

session.close()
server.stop()
