"""Headless navigation-stack visualization loop.

A wire-protocol pub/sub client (proto), the typed message model (msgs),
rigid-frame alignment (geom), sensor-to-point conversion and scene state
(pipeline), a simulated mobile robot server (simbot), and the five-mode
visualization benchmark (bench).
"""

__version__ = "0.1.0"

from . import bench, geom, msgs, pipeline, proto, simbot

__all__ = ["bench", "geom", "msgs", "pipeline", "proto", "simbot", "__version__"]
