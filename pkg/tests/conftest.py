"""Shared fixtures and independent oracle helpers.

The matrix helpers here are deliberately the *other* representation:
library transforms are quaternion+translation, oracles check them against
explicit homogeneous 4x4 matrices.
"""

from __future__ import annotations

import math
import threading
from pathlib import Path

import numpy as np
import pytest

from navviz.geom import RigidTransform
from navviz.msgs import Header, OccupancyGrid, Pose


# --- grid builders -----------------------------------------------------------

def make_grid(cells: np.ndarray, resolution: float = 0.1,
              origin: Pose = Pose(), frame_id: str = "map") -> OccupancyGrid:
    cells = np.asarray(cells, dtype=np.int8)
    height, width = cells.shape
    return OccupancyGrid(header=Header(frame_id=frame_id), resolution=resolution,
                         width=width, height=height, origin=origin,
                         data=cells.tobytes())


def walled_room(size_cells: int = 100, resolution: float = 0.1) -> OccupancyGrid:
    """Square room with occupied outer walls and free interior."""
    cells = np.zeros((size_cells, size_cells), dtype=np.int8)
    cells[0, :] = 100
    cells[-1, :] = 100
    cells[:, 0] = 100
    cells[:, -1] = 100
    return make_grid(cells, resolution)


@pytest.fixture
def room_grid() -> OccupancyGrid:
    return walled_room()


# --- PGM writing (for map loader tests) ---------------------------------------

def write_pgm(path: Path, image: np.ndarray, maxval: int = 255,
              comment: str | None = None) -> None:
    image = np.asarray(image, dtype=np.uint8)
    height, width = image.shape
    header = b"P5\n"
    if comment:
        header += b"# " + comment.encode() + b"\n"
    header += f"{width} {height}\n{maxval}\n".encode()
    path.write_bytes(header + image.tobytes())


def write_map_pair(tmp_path: Path, image: np.ndarray, *, resolution: float = 0.05,
                   origin=(0.0, 0.0, 0.0), negate: int = 0,
                   occupied_thresh: float = 0.65, free_thresh: float = 0.196,
                   name: str = "map") -> Path:
    pgm = tmp_path / f"{name}.pgm"
    write_pgm(pgm, image)
    yaml_path = tmp_path / f"{name}.yaml"
    yaml_path.write_text(
        f"image: {name}.pgm\n"
        f"resolution: {resolution}\n"
        f"origin: [{origin[0]}, {origin[1]}, {origin[2]}]\n"
        f"negate: {negate}\n"
        f"occupied_thresh: {occupied_thresh}\n"
        f"free_thresh: {free_thresh}\n")
    return yaml_path


# --- transform oracles ---------------------------------------------------------

def quat_to_matrix(q) -> np.ndarray:
    x, y, z, w = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


def rigid_to_matrix(t: RigidTransform) -> np.ndarray:
    m = np.eye(4)
    m[:3, :3] = quat_to_matrix(t.rotation)
    m[:3, 3] = t.translation
    return m


def matrix_apply(m: np.ndarray, p) -> tuple[float, float, float]:
    v = m @ np.array([p[0], p[1], p[2], 1.0])
    return (v[0], v[1], v[2])


def random_quat(rng: np.random.Generator):
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    return tuple(q)


def random_rigid(rng: np.random.Generator, span: float = 10.0) -> RigidTransform:
    return RigidTransform(rotation=random_quat(rng),
                          translation=tuple(rng.uniform(-span, span, 3)))


def random_translation(rng: np.random.Generator, span: float = 10.0) -> RigidTransform:
    return RigidTransform(translation=tuple(rng.uniform(-span, span, 3)))


# --- raycast oracle helpers -------------------------------------------------------

def fine_step_raycast(grid: OccupancyGrid, origin, angle: float, max_range: float,
                      step_frac: float = 0.01) -> float:
    """March the ray in steps of resolution*step_frac, checking occupancy."""
    from navviz.simbot.world import cell_of, in_bounds
    step = grid.resolution * step_frac
    cells = grid.cells
    cos_a, sin_a = math.cos(angle), math.sin(angle)
    t = 0.0
    while t <= max_range:
        row, col = cell_of(grid, origin[0] + t * cos_a, origin[1] + t * sin_a)
        if not in_bounds(grid, row, col):
            return max_range
        if cells[row, col] >= 50:
            return t
        t += step
    return max_range


def raycast_agreement(grid: OccupancyGrid, origin, angle: float, max_range: float,
                      got: float, want: float) -> str:
    """Classify a DDA range vs the sampling oracle.

    "agree": within res/2.  "clip": the DDA hit earlier and a point probe just
    past its boundary entry lands in an occupied cell, i.e. the ray grazes an
    occupied corner thinner than the oracle's sampling step.  "disagree"
    otherwise.
    """
    from navviz.simbot.world import cell_of, in_bounds
    res = grid.resolution
    if abs(got - want) <= res / 2:
        return "agree"
    if got < want:
        cells = grid.cells
        cos_a, sin_a = math.cos(angle), math.sin(angle)
        for eps in (res * 1e-3, res * 1e-5, res * 1e-7):
            row, col = cell_of(grid, origin[0] + (got + eps) * cos_a,
                               origin[1] + (got + eps) * sin_a)
            if in_bounds(grid, row, col) and cells[row, col] >= 50:
                return "clip"
    return "disagree"


# --- tiny recording WebSocket server (for client wire assertions) ---------------

class RecordingServer:
    """Accepts protocol clients, records every frame, can push frames back."""

    def __init__(self):
        from websockets.sync.server import serve
        self.frames: list[str] = []
        self.connections = []
        self._lock = threading.Lock()
        self._frame_seen = threading.Condition(self._lock)
        self._server = serve(self._handler, "127.0.0.1", 0)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        self.port = self._server.socket.getsockname()[1]
        self.url = f"ws://127.0.0.1:{self.port}"

    def _handler(self, conn):
        with self._lock:
            self.connections.append(conn)
        try:
            for raw in conn:
                with self._frame_seen:
                    self.frames.append(raw if isinstance(raw, str) else raw.decode())
                    self._frame_seen.notify_all()
        except Exception:
            pass

    def wait_frames(self, count: int, timeout: float = 5.0) -> list[str]:
        with self._frame_seen:
            self._frame_seen.wait_for(lambda: len(self.frames) >= count, timeout)
            return list(self.frames)

    def send_all(self, text: str) -> None:
        with self._lock:
            conns = list(self.connections)
        for conn in conns:
            conn.send(text)

    def close(self) -> None:
        with self._lock:
            conns = list(self.connections)
        for conn in conns:
            try:
                conn.close()
            except Exception:
                pass
        self._server.shutdown()


@pytest.fixture
def recording_server():
    server = RecordingServer()
    yield server
    server.close()
