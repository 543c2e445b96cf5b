"""Deterministic in-process benchmark: engine and client in lockstep.

Messages still cross the real wire encoding (encode -> bytes -> decode),
but the simulation is driven step by step on a virtual clock instead of
live sockets, so a fixed seed yields byte-identical reports across runs.
Timing metrics are read off the virtual clock: tick costs collapse to the
clock's floor (the clock does not advance while the client processes) and
time-to-execution counts whole simulation steps.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from .. import msgs
from ..geom import (IDENTITY, MarkerObservation, align_anchor, from_planar,
                    invert, observe_marker)
from ..pipeline import SceneUpdater
from ..proto import Op, ProtocolEnvelope, decode_envelope, encode_envelope
from ..simbot.core import SimCore, TOPIC_GOAL, TOPIC_MAP, planar_pose, yaw_of
from ..simbot.world import WorldModel
from .report import ModeSpec, Report, TrialResult, aggregate, make_fingerprint, quantile_linear
from .runner import Position, goal_message, subscriptions_for


@dataclass
class LockstepConfig:
    step: float = 0.05   # virtual seconds per simulation step (= one tick)
    seed: int = 0


class _VirtualClock:
    def __init__(self, now: float = 0.0):
        self.now = now

    def __call__(self) -> float:
        return self.now


def _through_wire(topic: str, raw_msg) -> tuple[str, object]:
    """Round a publish through the real encoder/decoder."""
    frame = encode_envelope(ProtocolEnvelope(op=Op.PUBLISH, topic=topic, msg=raw_msg))
    envelope = decode_envelope(frame)
    return envelope.topic, envelope.msg


def run_lockstep_trial(core: SimCore, spec: ModeSpec,
                       config: LockstepConfig | None = None) -> TrialResult:
    config = config or LockstepConfig()
    step = config.step
    clock = _VirtualClock(core.sim_time)
    updater = SceneUpdater(clock=clock)
    subscribed = subscriptions_for(spec.mode, spec.goal)

    def deliver(outs) -> None:
        for topic, _, message in outs:
            if topic not in subscribed:
                continue
            raw = message if isinstance(message, dict) else msgs.serialize_msg(message)
            wire_topic, wire_msg = _through_wire(topic, raw)
            updater.offer(wire_topic, wire_msg)

    # Latched map: subscribing yields the current revision exactly once.
    if TOPIC_MAP in subscribed:
        deliver([(TOPIC_MAP, msgs.OCCUPANCY_GRID, core.latched_map_message())])

    # Alignment phase (not measured): step until the first localization pose.
    for _i in range(10_000):
        deliver(core.advance(step))
        clock.now = core.sim_time
        updater.tick()
        if updater.localization_pose is not None:
            break
    else:
        raise RuntimeError("engine produced no localization pose")
    amcl = updater.localization_pose
    x, y, _z = amcl.position
    anchor = align_anchor(observe_marker(MarkerObservation(IDENTITY, IDENTITY)),
                          invert(from_planar(x, y, yaw_of(amcl))),
                          anchor_id=f"lockstep-mode{spec.mode}", created_at=clock.now)
    updater.set_anchor(anchor)
    updater.set_mode(spec.mode)

    n_steps = max(1, round(spec.duration / step))
    goal_step = n_steps // 2
    stats = []
    points_peak = 0
    goal_sent_at: float | None = None
    plan_at: float | None = None

    for i in range(n_steps):
        outs = core.advance(step)
        if spec.goal is not None and i == goal_step:
            goal_sent_at = clock.now  # published before this step's delivery
            updater.set_goal(msgs.parse_msg(msgs.POSE_STAMPED, goal_message(spec.goal)).pose)
            wire_topic, wire_msg = _through_wire(TOPIC_GOAL, goal_message(spec.goal))
            outs = outs + core.handle_publish(wire_topic, wire_msg)
        deliver(outs)
        clock.now = core.sim_time
        stats.append(updater.tick())
        points_peak = max(points_peak,
                          sum(len(ps) for ps in updater.snapshot().channels.values()))
        if goal_sent_at is not None and plan_at is None:
            plan_at = updater.plan_applied_at

    costs = [s.tick_duration for s in stats]
    return TrialResult(
        mode=spec.mode,
        update_rate=len(stats) / (n_steps * step),
        mean_tick_cost=sum(costs) / len(costs),
        p95_tick_cost=quantile_linear(costs, 0.95),
        time_to_execution=(plan_at - goal_sent_at) if goal_sent_at is not None else None,
        points_peak=points_peak,
    )


def run_lockstep_experiment(world_factory: Callable[[], WorldModel],
                            modes: Sequence[ModeSpec], trials: int, *,
                            positions: Sequence[Position] = (),
                            config: LockstepConfig | None = None) -> Report:
    """Deterministic mode x trial grid over fresh worlds.

    world_factory must build a fresh WorldModel per call.  Each trial gets
    its own engine seeded from (seed, mode index, trial index), so two runs
    with the same configuration produce byte-identical reports.
    """
    config = config or LockstepConfig()
    results: list[TrialResult] = []
    for mi, spec in enumerate(modes):
        for k in range(trials):
            core = SimCore(world_factory(), seed=config.seed + mi * 10_000 + k)
            if positions:
                px, py, ptheta = positions[k % len(positions)]
                core.handle_teleport(msgs.PoseStamped(
                    header=msgs.Header(frame_id="map"),
                    pose=planar_pose(px, py, ptheta)))
            results.append(run_lockstep_trial(core, spec, config))

    fingerprint = make_fingerprint({
        "modes": [(s.mode, s.duration, s.goal) for s in modes],
        "trials": trials,
        "positions": list(positions),
        "step": config.step,
        "seed": config.seed,
        "lockstep": True,
    })
    return aggregate(results, trials_per_mode=trials, fingerprint=fingerprint)
