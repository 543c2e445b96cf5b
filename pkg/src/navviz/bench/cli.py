"""Command line front end for the benchmark harness.

Live mode drives a reachable robot server; --deterministic runs the
lockstep harness against an in-process engine built from a map file.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .. import msgs
from ..simbot.world import SimParams, WorldModel, free_cell_near
from .lockstep import LockstepConfig, run_lockstep_experiment
from .report import ModeSpec, render_report
from .runner import SimUnreachable, TrialConfig, run_experiment


def _parse_pose(text: str) -> tuple[float, float, float]:
    parts = [float(v) for v in text.split(",") if v.strip()]
    if len(parts) == 2:
        parts.append(0.0)
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected x,y[,theta], got {text!r}")
    return (parts[0], parts[1], parts[2])


def _parse_positions(text: str) -> list[tuple[float, float, float]]:
    return [_parse_pose(chunk) for chunk in text.split(";") if chunk.strip()]


def _format_for(path: str | None) -> str:
    if path is None:
        return "markdown"
    suffix = Path(path).suffix.lower()
    return {".csv": "csv", ".json": "json", ".md": "markdown"}.get(suffix, "markdown")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="bench",
        description="Run the five-mode visualization benchmark against a robot server.")
    parser.add_argument("--sim", default="ws://127.0.0.1:9090",
                        help="server endpoint, e.g. ws://host:port")
    parser.add_argument("--modes", default="1,2,3,4,5",
                        help="comma separated visualization modes")
    parser.add_argument("--trials", type=int, default=20)
    parser.add_argument("--duration", type=float, default=10.0, help="seconds per trial")
    parser.add_argument("--out", default=None,
                        help="report file (.csv/.json/.md); default: markdown to stdout")
    parser.add_argument("--goal", type=_parse_pose, default=None,
                        help="navigation goal x,y[,theta] sent at each trial midpoint")
    parser.add_argument("--positions", type=_parse_positions, default=[],
                        help="robot positions cycled between trials: x,y,theta;x,y,theta")
    parser.add_argument("--tick-rate", type=float, default=60.0)
    parser.add_argument("--deterministic", action="store_true",
                        help="lockstep in-process run (requires --map)")
    parser.add_argument("--map", default=None, help="map YAML for --deterministic")
    parser.add_argument("--robot", type=_parse_pose, default=None,
                        help="robot start pose for --deterministic")
    parser.add_argument("--step", type=float, default=0.05,
                        help="virtual clock step for --deterministic (s)")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    try:
        mode_numbers = [int(v) for v in args.modes.split(",") if v.strip()]
    except ValueError:
        parser.error(f"bad --modes value {args.modes!r}")
    modes = [ModeSpec(mode=m, duration=args.duration, goal=args.goal)
             for m in mode_numbers]

    failures = []
    if args.deterministic:
        if not args.map:
            parser.error("--deterministic requires --map")
        grid = msgs.load_map_file(args.map)
        if args.robot is not None:
            robot = args.robot
        else:
            x, y = free_cell_near(grid)
            robot = (x, y, 0.0)

        def world_factory() -> WorldModel:
            return WorldModel(grid=grid, robot=robot, params=SimParams())

        report = run_lockstep_experiment(
            world_factory, modes, args.trials, positions=args.positions,
            config=LockstepConfig(step=args.step, seed=args.seed))
    else:
        try:
            report, failures = run_experiment(
                modes, args.trials, args.sim, positions=args.positions,
                config=TrialConfig(tick_rate=args.tick_rate))
        except SimUnreachable as exc:
            print(f"bench: {exc}", file=sys.stderr)
            return 2

    document = render_report(report, _format_for(args.out))
    if args.out:
        Path(args.out).write_text(document)
        print(f"wrote {args.out}", flush=True)
    else:
        print(document, end="")

    for failure in failures:
        print(f"trial failed: mode {failure.mode} trial {failure.trial}: {failure.error}",
              file=sys.stderr)
    return 1 if failures else 0


if __name__ == "__main__":
    raise SystemExit(main())
