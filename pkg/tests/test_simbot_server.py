"""Wire behavior of the simulated robot server."""

import json
import math
import threading
import time

import numpy as np
import pytest

from navviz import msgs
from navviz.proto import SessionConfig, session_connect
from navviz.simbot import BindFailed, SimCore, SimServer, SimParams, WorldModel
from navviz.simbot.core import (TOPIC_AMCL, TOPIC_GOAL, TOPIC_MAP, TOPIC_ODOM,
                                TOPIC_PLAN, TOPIC_SCAN, TOPIC_STATUS,
                                TOPIC_TELEPORT, TOPIC_TYPES, planar_pose)

from conftest import walled_room


@pytest.fixture
def server():
    world = WorldModel(grid=walled_room(), robot=(5.0, 5.0, 0.0),
                       params=SimParams(scan_rate=10.0, beams=60, pose_rate=20.0))
    core = SimCore(world, seed=5)
    with SimServer(core, port=0) as s:
        yield s


class Collector:
    def __init__(self):
        self.by_topic: dict[str, list] = {}
        self.event = threading.Condition()

    def handler(self, topic, msg):
        with self.event:
            self.by_topic.setdefault(topic, []).append(msg)
            self.event.notify_all()

    def wait_for(self, topic, count=1, timeout=5.0):
        with self.event:
            self.event.wait_for(
                lambda: len(self.by_topic.get(topic, [])) >= count, timeout)
            return list(self.by_topic.get(topic, []))


class TestLatchedMap:
    def test_each_subscriber_gets_exactly_one_map(self, server):
        sessions, collectors = [], []
        try:
            for _ in range(4):
                collector = Collector()
                session = session_connect(server.url)
                session.subscribe(TOPIC_MAP, TOPIC_TYPES[TOPIC_MAP], collector.handler)
                sessions.append(session)
                collectors.append(collector)
            for collector in collectors:
                maps = collector.wait_for(TOPIC_MAP, 1)
                assert len(maps) >= 1
            time.sleep(1.0)  # no further map traffic may arrive
            for collector in collectors:
                assert len(collector.by_topic[TOPIC_MAP]) == 1
                grid = msgs.parse_msg(msgs.OCCUPANCY_GRID,
                                      collector.by_topic[TOPIC_MAP][0])
                assert (grid.width, grid.height) == (100, 100)
        finally:
            for session in sessions:
                session.close()

    def test_resubscribe_same_revision_not_resent(self, server):
        collector = Collector()
        with session_connect(server.url) as session:
            session.subscribe(TOPIC_MAP, TOPIC_TYPES[TOPIC_MAP], collector.handler)
            collector.wait_for(TOPIC_MAP, 1)
            session.unsubscribe(TOPIC_MAP)
            session.subscribe(TOPIC_MAP, TOPIC_TYPES[TOPIC_MAP], collector.handler)
            time.sleep(0.5)
            assert len(collector.by_topic[TOPIC_MAP]) == 1


class TestScanStream:
    def test_rate_two_seconds(self, server):
        collector = Collector()
        with session_connect(server.url) as session:
            session.subscribe(TOPIC_SCAN, TOPIC_TYPES[TOPIC_SCAN], collector.handler)
            first = collector.wait_for(TOPIC_SCAN, 1, timeout=3.0)
            assert first, "no scans at all"
            with collector.event:
                start_count = len(collector.by_topic[TOPIC_SCAN])
            time.sleep(2.0)
            with collector.event:
                count = len(collector.by_topic[TOPIC_SCAN]) - start_count
        assert 19 <= count <= 21, count

    def test_rate_ten_second_window_within_5_percent(self, server):
        collector = Collector()
        with session_connect(server.url) as session:
            session.subscribe(TOPIC_SCAN, TOPIC_TYPES[TOPIC_SCAN], collector.handler)
            collector.wait_for(TOPIC_SCAN, 1, timeout=3.0)
            with collector.event:
                start_count = len(collector.by_topic[TOPIC_SCAN])
            time.sleep(10.0)
            with collector.event:
                count = len(collector.by_topic[TOPIC_SCAN]) - start_count
        assert abs(count - 100) <= 5, count  # 10 Hz * 10 s, +/- 5%

    def test_scan_parses_and_matches_params(self, server):
        collector = Collector()
        with session_connect(server.url) as session:
            session.subscribe(TOPIC_SCAN, TOPIC_TYPES[TOPIC_SCAN], collector.handler)
            scans = collector.wait_for(TOPIC_SCAN, 2)
        scan = msgs.parse_msg(msgs.LASER_SCAN, scans[0])
        assert len(scan.ranges) == 60
        assert scan.range_max == 5.6


class TestGoalFlow:
    def test_goal_produces_global_plan(self, server):
        collector = Collector()
        with session_connect(server.url) as session:
            session.subscribe(TOPIC_PLAN, TOPIC_TYPES[TOPIC_PLAN], collector.handler)
            goal = msgs.PoseStamped(header=msgs.Header(frame_id="map"),
                                    pose=planar_pose(7.0, 7.0, 0.0))
            session.advertise_and_publish(TOPIC_GOAL, msgs.POSE_STAMPED,
                                          msgs.serialize_msg(goal))
            plans = collector.wait_for(TOPIC_PLAN, 1)
        assert plans
        path = msgs.parse_msg(msgs.NAV_PATH, plans[0])
        assert len(path.poses) >= 2
        assert path.header.frame_id == "map"
        first = path.poses[0].pose.position
        assert math.hypot(first[0] - 5.0, first[1] - 5.0) < 0.2

    def test_occupied_goal_surfaces_error_status(self, server):
        collector = Collector()
        with session_connect(server.url) as session:
            session.subscribe(TOPIC_STATUS, TOPIC_TYPES[TOPIC_STATUS], collector.handler)
            session.subscribe(TOPIC_PLAN, TOPIC_TYPES[TOPIC_PLAN], collector.handler)
            goal = msgs.PoseStamped(header=msgs.Header(frame_id="map"),
                                    pose=planar_pose(0.05, 0.05, 0.0))  # inside the wall
            session.advertise_and_publish(TOPIC_GOAL, msgs.POSE_STAMPED,
                                          msgs.serialize_msg(goal))
            statuses = collector.wait_for(TOPIC_STATUS, 1)
        assert statuses and statuses[0]["level"] == "error"
        assert TOPIC_PLAN not in collector.by_topic

    def test_robot_moves_after_goal(self, server):
        collector = Collector()
        with session_connect(server.url) as session:
            session.subscribe(TOPIC_AMCL, TOPIC_TYPES[TOPIC_AMCL], collector.handler)
            session.subscribe(TOPIC_ODOM, TOPIC_TYPES[TOPIC_ODOM], collector.handler)
            before = msgs.parse_msg(msgs.POSE_STAMPED,
                                    collector.wait_for(TOPIC_AMCL, 1)[0])
            goal = msgs.PoseStamped(header=msgs.Header(frame_id="map"),
                                    pose=planar_pose(6.0, 5.0, 0.0))
            session.advertise_and_publish(TOPIC_GOAL, msgs.POSE_STAMPED,
                                          msgs.serialize_msg(goal))
            time.sleep(1.5)
            with collector.event:
                after = msgs.parse_msg(msgs.POSE_STAMPED,
                                       collector.by_topic[TOPIC_AMCL][-1])
        moved = math.hypot(after.pose.position[0] - before.pose.position[0],
                           after.pose.position[1] - before.pose.position[1])
        assert moved > 0.3, moved


class TestTeleport:
    def test_teleport_moves_localization(self, server):
        collector = Collector()
        with session_connect(server.url) as session:
            session.subscribe(TOPIC_AMCL, TOPIC_TYPES[TOPIC_AMCL], collector.handler)
            collector.wait_for(TOPIC_AMCL, 1)
            target = msgs.PoseStamped(header=msgs.Header(frame_id="map"),
                                      pose=planar_pose(2.0, 8.0, 1.0))
            session.advertise_and_publish(TOPIC_TELEPORT, msgs.POSE_STAMPED,
                                          msgs.serialize_msg(target))
            deadline = time.monotonic() + 5.0
            while time.monotonic() < deadline:
                with collector.event:
                    latest = msgs.parse_msg(msgs.POSE_STAMPED,
                                            collector.by_topic[TOPIC_AMCL][-1])
                if math.hypot(latest.pose.position[0] - 2.0,
                              latest.pose.position[1] - 8.0) < 0.01:
                    break
                time.sleep(0.05)
            else:
                pytest.fail("teleport never reflected in localization")

    def test_teleport_into_wall_rejected(self, server):
        collector = Collector()
        with session_connect(server.url) as session:
            session.subscribe(TOPIC_STATUS, TOPIC_TYPES[TOPIC_STATUS], collector.handler)
            target = msgs.PoseStamped(header=msgs.Header(frame_id="map"),
                                      pose=planar_pose(0.05, 0.05, 0.0))
            session.advertise_and_publish(TOPIC_TELEPORT, msgs.POSE_STAMPED,
                                          msgs.serialize_msg(target))
            statuses = collector.wait_for(TOPIC_STATUS, 1)
        assert statuses[0]["level"] == "error"


class TestRobustness:
    def test_garbage_frames_do_not_drop_client(self, server):
        collector = Collector()
        with session_connect(server.url) as session:
            session.subscribe(TOPIC_ODOM, TOPIC_TYPES[TOPIC_ODOM], collector.handler)
            collector.wait_for(TOPIC_ODOM, 1)
            session._conn.send("this is not json")
            session._conn.send('{"op":"publish","topic":"/move_base_simple/goal"}')
            with collector.event:
                count = len(collector.by_topic[TOPIC_ODOM])
            odoms = collector.wait_for(TOPIC_ODOM, count + 5)
            assert len(odoms) >= count + 5
            assert not session.closed

    def test_unknown_command_topics_ignored(self, server):
        with session_connect(server.url) as session:
            session.advertise_and_publish("/somewhere/else", "t/T", {"x": 1})
            time.sleep(0.2)
            assert not session.closed

    def test_bind_failed_on_taken_port(self, server):
        world = WorldModel(grid=walled_room(), robot=(5.0, 5.0, 0.0))
        with pytest.raises(BindFailed):
            SimServer(SimCore(world), port=server.port).start()


class TestCli:
    def test_build_server_from_cli_args(self, tmp_path):
        import argparse
        from navviz.simbot.server import build_server
        from conftest import write_map_pair
        image = np.full((30, 30), 255, dtype=np.uint8)
        image[:2, :] = image[-2:, :] = image[:, :2] = image[:, -2:] = 0
        yaml_path = write_map_pair(tmp_path, image, resolution=0.1)
        ns = argparse.Namespace(map=str(yaml_path), port=0, host="127.0.0.1",
                                scan_rate=5.0, beams=16, noise=0.01, seed=9,
                                fixed_step=None, robot=None, fov_deg=270.0,
                                max_range=5.6, v_max=0.5, inflation=0.15)
        with build_server(ns) as server:
            collector = Collector()
            with session_connect(server.url) as session:
                session.subscribe(TOPIC_SCAN, TOPIC_TYPES[TOPIC_SCAN],
                                  collector.handler)
                scans = collector.wait_for(TOPIC_SCAN, 1)
        scan = msgs.parse_msg(msgs.LASER_SCAN, scans[0])
        assert len(scan.ranges) == 16


class TestFixedStep:
    def test_stamps_follow_virtual_clock(self):
        world = WorldModel(grid=walled_room(), robot=(5.0, 5.0, 0.0),
                           params=SimParams(scan_rate=10.0, beams=8))
        core = SimCore(world, seed=1)
        collector = Collector()
        with SimServer(core, port=0, fixed_step=0.02) as server:
            with session_connect(server.url) as session:
                session.subscribe(TOPIC_SCAN, TOPIC_TYPES[TOPIC_SCAN], collector.handler)
                scans = collector.wait_for(TOPIC_SCAN, 5)
        stamps = [msgs.parse_msg(msgs.LASER_SCAN, s).header.stamp for s in scans[:5]]
        diffs = np.diff(stamps)
        assert np.allclose(diffs, 0.1, atol=1e-6), stamps
