"""
Loading an occupancy grid from a PGM + YAML map export
======================================================

Maps come as an 8-bit grayscale PGM image with a YAML sidecar naming the
resolution, origin pose, and occupancy thresholds.  Dark pixels are
obstacles: probability p = (255-v)/255 decides occupied (p >= 0.65) /
free (p <= 0.196) / unknown in between; image rows are flipped so grid
row 0 sits at the map origin.
"""

import tempfile
from pathlib import Path

import numpy as np

from navviz.msgs import load_map_file

# Paint a little world: white = free, black = walls, gray = unexplored.
image = np.full((60, 80), 255, dtype=np.uint8)
image[:3, :] = 0            # top wall (ends up at HIGH y in the grid)
image[-3:, :] = 0           # bottom wall (at the origin side)
image[:, :3] = 0
image[:, -3:] = 0
image[25:35, 30:50] = 0     # a block of shelving
image[5:15, 55:75] = 128    # unexplored corner

workdir = Path(tempfile.mkdtemp(prefix="navviz-map-"))
(workdir / "room.pgm").write_bytes(
    b"P5\n80 60\n255\n" + image.tobytes())
(workdir / "room.yaml").write_text(
    "image: room.pgm\n"
    "resolution: 0.05\n"
    "origin: [-2.0, -1.5, 0.0]\n"
    "negate: 0\n"
    "occupied_thresh: 0.65\n"
    "free_thresh: 0.196\n")

grid = load_map_file(workdir / "room.yaml")
cells = grid.cells

print(f"grid:      {grid.width} x {grid.height} cells at {grid.resolution} m")
print(f"extent:    {grid.extent[0]:.2f} m x {grid.extent[1]:.2f} m")
print(f"origin:    {grid.origin.position}")
print(f"occupied:  {(cells == 100).sum()} cells")
print(f"free:      {(cells == 0).sum()} cells")
print(f"unknown:   {(cells == -1).sum()} cells")

# Rough ASCII rendering, origin row at the bottom like a map on a desk.
glyphs = {100: "#", 0: ".", -1: "?"}
for row in range(grid.height - 1, -1, -6):
    print("".join(glyphs[int(v)] for v in cells[row, ::2]))
