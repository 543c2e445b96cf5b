"""Live trial execution against a running robot server."""

from __future__ import annotations

import sys
import time
from dataclasses import dataclass
from typing import Callable, Sequence

from .. import msgs
from ..geom import (IDENTITY, MarkerObservation, align_anchor, from_planar,
                    invert, observe_marker)
from ..pipeline import Channel, MODE_CHANNELS, SceneUpdater
from ..proto import ConnectFailed, ProtocolError, SessionConfig, session_connect
from ..simbot.core import (TOPIC_AMCL, TOPIC_GOAL, TOPIC_MAP, TOPIC_ODOM,
                           TOPIC_PLAN, TOPIC_SCAN, TOPIC_TELEPORT, TOPIC_TYPES,
                           planar_pose, yaw_of)
from .report import ModeSpec, Report, TrialResult, aggregate, make_fingerprint, quantile_linear

Position = tuple[float, float, float]


class SimUnreachable(Exception):
    pass


class TrialTimeout(Exception):
    pass


@dataclass(frozen=True)
class TrialFailure:
    mode: int
    trial: int
    error: str


@dataclass
class TrialConfig:
    tick_rate: float = 60.0       # scene update cadence (fps analogue)
    align_timeout: float = 10.0   # s to wait for the first localization pose
    plan_timeout: float = 30.0    # s from goal publish to plan arrival
    settle_time: float = 0.2      # s pause after a teleport
    queue_capacity: int = 512
    frame_tap: Callable | None = None  # (direction, frame, t) wire-log hook


def subscriptions_for(mode: int, goal: Position | None) -> set[str]:
    """Topics a trial listens to: the mode's channels, the robot poses, and
    the plan topic whenever a goal will be sent."""
    channels = MODE_CHANNELS[mode]
    topics = {TOPIC_ODOM, TOPIC_AMCL}
    if Channel.SCAN in channels:
        topics.add(TOPIC_SCAN)
    if Channel.MAP in channels:
        topics.add(TOPIC_MAP)
    if Channel.PATH in channels or goal is not None:
        topics.add(TOPIC_PLAN)
    return topics


def goal_message(position: Position, frame_id: str = "map") -> dict:
    ps = msgs.PoseStamped(header=msgs.Header(frame_id=frame_id),
                          pose=planar_pose(*position))
    return msgs.serialize_msg(ps)


def _scene_points(updater: SceneUpdater) -> int:
    return sum(len(ps) for ps in updater.snapshot().channels.values())


def run_trial(spec: ModeSpec, sim_url: str,
              config: TrialConfig | None = None) -> TrialResult:
    """One benchmark trial: connect, align, stream for the trial duration,
    send the goal at the midpoint, and collect the metrics."""
    config = config or TrialConfig()
    try:
        session = session_connect(sim_url, SessionConfig(on_frame=config.frame_tap))
    except ConnectFailed as exc:
        raise SimUnreachable(str(exc)) from exc

    # Tighten the interpreter's thread switch interval for the trial:
    # wire arrival -> scene application crosses threads, and the default
    # 5 ms quantum would dominate millisecond latency measurements.
    previous_switch = sys.getswitchinterval()
    sys.setswitchinterval(2e-4)
    try:
        return _run_trial_body(spec, session, config)
    finally:
        sys.setswitchinterval(previous_switch)


def _run_trial_body(spec: ModeSpec, session, config: TrialConfig) -> TrialResult:
    with session:
        updater = SceneUpdater(queue_capacity=config.queue_capacity)
        for topic in sorted(subscriptions_for(spec.mode, spec.goal)):
            session.subscribe(topic, TOPIC_TYPES[topic], updater.handler_for(topic))

        # Alignment: identity marker observation + the first localization pose.
        deadline = time.perf_counter() + config.align_timeout
        while updater.localization_pose is None:
            updater.tick()
            if time.perf_counter() > deadline:
                raise TrialTimeout("no localization pose before the trial start")
            time.sleep(0.01)
        T_holo_robo = observe_marker(MarkerObservation(IDENTITY, IDENTITY))
        amcl = updater.localization_pose
        x, y, _ = amcl.position
        anchor = align_anchor(T_holo_robo, invert(from_planar(x, y, yaw_of(amcl))),
                              anchor_id=f"trial-mode{spec.mode}")
        updater.set_anchor(anchor)
        updater.set_mode(spec.mode)

        period = 1.0 / config.tick_rate
        stats = []
        points_peak = 0
        goal_sent_at: float | None = None
        plan_at: float | None = None
        t0 = time.perf_counter()
        next_tick = t0 + period
        goal_due = t0 + spec.duration / 2.0
        end_at = t0 + spec.duration

        while True:
            now = time.perf_counter()
            if now >= end_at and (goal_sent_at is None or plan_at is not None):
                break
            if goal_sent_at is not None and plan_at is None \
                    and now - goal_sent_at > config.plan_timeout:
                raise TrialTimeout(f"no plan within {config.plan_timeout}s of the goal")
            if now < next_tick:
                # Sleep coarsely, then yield-spin the last stretch: keeps
                # the tick cadence accurate enough for millisecond latency
                # metrics without starving the receive loop of the GIL.
                if next_tick - now > 0.001:
                    time.sleep(min(next_tick - now - 0.0005, 0.005))
                else:
                    time.sleep(0)
                continue

            stats.append(updater.tick())
            points_peak = max(points_peak, _scene_points(updater))
            next_tick += period

            if spec.goal is not None and goal_sent_at is None \
                    and time.perf_counter() >= goal_due:
                updater.set_goal(planar_pose(*spec.goal))
                session.advertise_and_publish(TOPIC_GOAL, msgs.POSE_STAMPED,
                                              goal_message(spec.goal))
                goal_sent_at = time.perf_counter()
            if goal_sent_at is not None and plan_at is None:
                plan_at = updater.plan_applied_at

        elapsed = time.perf_counter() - t0
        costs = [s.tick_duration for s in stats]
        return TrialResult(
            mode=spec.mode,
            update_rate=len(stats) / elapsed,
            mean_tick_cost=sum(costs) / len(costs),
            p95_tick_cost=quantile_linear(costs, 0.95),
            time_to_execution=(plan_at - goal_sent_at) if goal_sent_at is not None else None,
            points_peak=points_peak,
        )


def teleport(session, position: Position) -> None:
    ps = msgs.PoseStamped(header=msgs.Header(frame_id="map"),
                          pose=planar_pose(*position))
    session.advertise_and_publish(TOPIC_TELEPORT, msgs.POSE_STAMPED,
                                  msgs.serialize_msg(ps))


def run_experiment(modes: Sequence[ModeSpec], trials: int, sim_url: str, *,
                   positions: Sequence[Position] = (),
                   config: TrialConfig | None = None,
                   on_progress: Callable[[ModeSpec, int], None] | None = None,
                   ) -> tuple[Report, list[TrialFailure]]:
    """The full grid: every mode x trial (x position, cycled), one trial at
    a time so measurements never contend."""
    config = config or TrialConfig()
    try:
        control = session_connect(sim_url, SessionConfig())
    except ConnectFailed as exc:
        raise SimUnreachable(str(exc)) from exc

    results: list[TrialResult] = []
    failures: list[TrialFailure] = []
    with control:
        for spec in modes:
            for k in range(trials):
                if positions:
                    teleport(control, positions[k % len(positions)])
                    time.sleep(config.settle_time)
                try:
                    results.append(run_trial(spec, sim_url, config))
                except (SimUnreachable, TrialTimeout, ProtocolError) as exc:
                    failures.append(TrialFailure(spec.mode, k, str(exc)))
                if on_progress:
                    on_progress(spec, k)

    fingerprint = make_fingerprint({
        "modes": [(s.mode, s.duration, s.goal) for s in modes],
        "trials": trials,
        "positions": list(positions),
        "tick_rate": config.tick_rate,
        "sim_url": sim_url,
    })
    report = aggregate(results, trials_per_mode=trials, fingerprint=fingerprint,
                       partial=bool(failures))
    return report, failures
