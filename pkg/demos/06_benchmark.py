"""
The five-mode visualization benchmark
=====================================

Reproduces the experiment protocol: for each visualization mode the client
streams against the simulated robot, a navigation goal is published at
the trial midpoint, and three metrics are recorded per trial -- update
rate (the fps analogue), per-tick processing cost, and time from goal
publish to the plan entering the scene.  Aggregates are reported per mode
with mean/std and box-plot quartiles.

This demo runs a shortened live experiment (the real protocol is 20
trials of 10 s), then shows the deterministic lockstep harness, whose
reports are byte-identical across runs for a fixed seed.
"""

import numpy as np

from navviz import msgs
from navviz.bench import (LockstepConfig, ModeSpec, render_report,
                          run_experiment, run_lockstep_experiment)
from navviz.simbot import SimCore, SimParams, SimServer, WorldModel


def hall_grid() -> msgs.OccupancyGrid:
    cells = np.zeros((100, 100), dtype=np.int8)
    cells[0, :] = cells[-1, :] = cells[:, 0] = cells[:, -1] = 100
    return msgs.OccupancyGrid(header=msgs.Header(frame_id="map"), resolution=0.1,
                              width=100, height=100, origin=msgs.Pose(),
                              data=cells.tobytes())


def make_world() -> WorldModel:
    return WorldModel(grid=hall_grid(), robot=(5.0, 5.0, 0.0),
                      params=SimParams(scan_rate=10.0, beams=360))


# -- live, over real sockets ---------------------------------------------------

specs = [ModeSpec(mode=m, duration=1.0, goal=(7.5, 7.5, 0.0)) for m in (1, 3, 5)]
with SimServer(SimCore(make_world(), seed=11), port=0) as server:
    print(f"live experiment against {server.url} (3 modes x 2 trials x 1 s)...")
    report, failures = run_experiment(specs, trials=2, sim_url=server.url,
                                      positions=[(3.0, 3.0, 0.0), (7.0, 3.0, 1.57)])
assert not failures
print(render_report(report, "markdown"))

# -- deterministic lockstep ------------------------------------------------------

print("lockstep experiment (virtual clock, byte-identical for a fixed seed)...")
det_specs = [ModeSpec(mode=m, duration=2.0, goal=(7.5, 7.5, 0.0)) for m in (1, 5)]
a = run_lockstep_experiment(make_world, det_specs, trials=2,
                            config=LockstepConfig(step=0.05, seed=7))
b = run_lockstep_experiment(make_world, det_specs, trials=2,
                            config=LockstepConfig(step=0.05, seed=7))
print(render_report(a, "markdown"))
print("two runs byte-identical:",
      render_report(a, "csv") == render_report(b, "csv"))
