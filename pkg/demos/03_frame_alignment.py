"""
Two-stage frame alignment: marker pose, then a persistent anchor
================================================================

The operator headset and the robot map have unrelated coordinate frames.
Alignment happens in two steps:

  1. a fiducial marker on the robot is detected once, giving the
     headset<-robot pose;
  2. the localization pose (robot in the map frame) is inverted and
     composed with it, yielding headset<-map, which is stored as the
     session's anchor:  T_holo_map = T_holo_robo * T_robo_map.

Afterwards every map-frame point can be placed in the headset world, and
the anchor survives restarts through a small JSON file.
"""

import math
import tempfile
from pathlib import Path

from navviz.geom import (AnchorStore, MarkerObservation, RigidTransform,
                         from_planar, invert, map_to_world, observe_marker)

# Step 1: the vision system hands us a detected marker pose.  The marker is
# mounted 20 cm above the robot center; the camera sees it 1.5 m ahead.
marker_in_camera = RigidTransform(rotation=(0, 0, 0, 1), translation=(0.0, -0.1, 1.5))
marker_in_robot = RigidTransform(rotation=(0, 0, 0, 1), translation=(0.0, 0.0, 0.2))
T_holo_robo = observe_marker(MarkerObservation(marker_in_camera, marker_in_robot))
print("headset<-robot:", T_holo_robo.translation)

# Step 2: localization says the robot stands at (3.0, 2.0) facing 90 deg.
T_map_robo = from_planar(3.0, 2.0, math.pi / 2)
store = AnchorStore()
anchor = store.align(T_holo_robo, invert(T_map_robo), anchor_id="lab-floor")
print("anchor:", anchor.anchor_id, "->", tuple(round(v, 3) for v in anchor.T_holo_map.translation))

# Any map point now lands in the headset world.
for p_map in [(3.0, 2.0, 0.0),   # the robot itself
              (4.0, 2.0, 0.0),   # one meter ahead of it (in map x)
              (0.0, 0.0, 0.0)]:  # the map origin
    p_world = map_to_world(anchor, p_map)
    print(f"map {p_map} -> world {tuple(round(v, 3) for v in p_world)}")

# The anchor persists, so a restarted client re-aligns without a marker.
path = Path(tempfile.mkdtemp(prefix="navviz-anchor-")) / "anchor.json"
store.save(path)
restored = AnchorStore.load(path).current()
print("restored from disk:", restored.anchor_id,
      "identical:", restored.T_holo_map == anchor.T_holo_map)
