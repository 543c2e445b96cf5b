"""Message validation, JSON round-trips, and the PGM/YAML map loader."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from navviz import msgs
from navviz.msgs import (BadYamlField, FileMissing, Header, ImageSizeZero,
                         LaserScan, NavPath, OccupancyGrid, Odometry, Pose,
                         PoseStamped, SchemaViolation, Twist, UnsupportedType,
                         load_map_file, parse_msg, serialize_msg, msg_type_of)

from conftest import write_map_pair, write_pgm


finite = st.floats(allow_nan=False, allow_infinity=False,
                   min_value=-1e6, max_value=1e6)
small_float = st.floats(allow_nan=False, allow_infinity=False,
                        min_value=-100.0, max_value=100.0)


@st.composite
def headers(draw):
    return Header(seq=draw(st.integers(0, 2**31)),
                  stamp_sec=draw(st.integers(0, 2**31)),
                  stamp_nsec=draw(st.integers(0, 10**9 - 1)),
                  frame_id=draw(st.text(max_size=12)))


@st.composite
def unit_quats(draw):
    raw = draw(st.lists(st.floats(-1, 1), min_size=4, max_size=4)
               .filter(lambda q: sum(c * c for c in q) > 1e-3))
    n = math.sqrt(sum(c * c for c in raw))
    return tuple(c / n for c in raw)


@st.composite
def poses(draw):
    return Pose(position=tuple(draw(st.lists(small_float, min_size=3, max_size=3))),
                orientation=draw(unit_quats()))


@st.composite
def laser_scans(draw):
    n = draw(st.integers(0, 40))
    angle_min = draw(st.floats(-math.pi, math.pi))
    increment = draw(st.floats(1e-4, 0.1))
    range_min = draw(st.floats(0.0, 1.0))
    range_max = range_min + draw(st.floats(0.5, 10.0))
    ranges = tuple(draw(st.lists(st.floats(0, 20), min_size=n, max_size=n)))
    return LaserScan(header=draw(headers()),
                     angle_min=angle_min,
                     angle_max=angle_min + max(n - 1, 0) * increment,
                     angle_increment=increment,
                     time_increment=draw(st.floats(0, 1)),
                     scan_time=draw(st.floats(0, 1)),
                     range_min=range_min, range_max=range_max,
                     ranges=ranges)


@st.composite
def grids(draw):
    width = draw(st.integers(1, 8))
    height = draw(st.integers(1, 8))
    data = draw(st.lists(st.sampled_from([-1] + list(range(0, 101, 20))),
                         min_size=width * height, max_size=width * height))
    return OccupancyGrid(header=draw(headers()), resolution=draw(st.floats(0.01, 1.0)),
                         width=width, height=height, origin=draw(poses()),
                         data=np.asarray(data, dtype=np.int8).tobytes())


@st.composite
def nav_paths(draw):
    header = draw(headers())
    n = draw(st.integers(0, 6))
    pose_list = tuple(
        PoseStamped(header=Header(seq=i, frame_id=header.frame_id), pose=draw(poses()))
        for i in range(n))
    return NavPath(header=header, poses=pose_list)


@st.composite
def odometries(draw):
    cov = tuple(draw(st.lists(small_float, min_size=36, max_size=36)))
    return Odometry(header=draw(headers()), child_frame_id=draw(st.text(max_size=8)),
                    pose=draw(poses()),
                    twist=Twist(linear=tuple(draw(st.lists(small_float, min_size=3, max_size=3))),
                                angular=tuple(draw(st.lists(small_float, min_size=3, max_size=3)))),
                    pose_covariance=cov, twist_covariance=cov)


@st.composite
def pose_stampeds(draw):
    return PoseStamped(header=draw(headers()), pose=draw(poses()))


any_message = st.one_of(laser_scans(), grids(), nav_paths(), odometries(), pose_stampeds())


class TestParse:
    def test_minimal_scan_one_beam(self):
        scan = parse_msg(msgs.LASER_SCAN, {
            "angle_min": 0.0, "angle_max": 0.0, "angle_increment": 0.01,
            "range_min": 0.1, "range_max": 5.0, "ranges": [1.0],
        })
        assert isinstance(scan, LaserScan)
        assert scan.ranges == (1.0,)

    def test_grid_length_mismatch(self):
        with pytest.raises(SchemaViolation) as err:
            parse_msg(msgs.OCCUPANCY_GRID, {
                "info": {"resolution": 0.1, "width": 2, "height": 2,
                         "origin": {}},
                "data": [0, 0, 0],
            })
        assert err.value.field == "data"
        assert "mismatch" in err.value.reason

    def test_unsupported_type(self):
        with pytest.raises(UnsupportedType):
            parse_msg("std_msgs/String", {"data": "x"})

    def test_msg_not_object(self):
        with pytest.raises(SchemaViolation):
            parse_msg(msgs.LASER_SCAN, [1, 2, 3])

    def test_nonunit_quaternion_rejected(self):
        with pytest.raises(SchemaViolation):
            parse_msg(msgs.POSE_STAMPED,
                      {"pose": {"orientation": {"x": 0, "y": 0, "z": 0, "w": 1.1}}})

    def test_path_frame_mismatch_rejected(self):
        with pytest.raises(SchemaViolation):
            parse_msg(msgs.NAV_PATH, {
                "header": {"frame_id": "map"},
                "poses": [{"header": {"frame_id": "odom"}, "pose": {}}],
            })

    def test_bad_covariance_length(self):
        with pytest.raises(SchemaViolation):
            Odometry(header=Header(), child_frame_id="b", pose=Pose(),
                     pose_covariance=(0.0,) * 35)

    def test_nonfinite_ranges_survive_as_nan(self):
        scan = LaserScan(header=Header(), angle_min=0.0, angle_max=0.2,
                         angle_increment=0.1, time_increment=0.0, scan_time=0.1,
                         range_min=0.05, range_max=5.0,
                         ranges=(math.inf, math.nan, 1.0))
        doc = serialize_msg(scan)
        assert doc["ranges"][:2] == [None, None]
        back = parse_msg(msgs.LASER_SCAN, doc)
        assert math.isnan(back.ranges[0]) and math.isnan(back.ranges[1])
        assert back.ranges[2] == 1.0

    @settings(max_examples=200, deadline=None)
    @given(any_message)
    def test_roundtrip(self, message):
        assert parse_msg(msg_type_of(message), serialize_msg(message)) == message

    @settings(max_examples=50, deadline=None)
    @given(grids())
    def test_grid_invariant_on_every_ingestion(self, grid):
        doc = serialize_msg(grid)
        doc["data"] = doc["data"][:-1] + [0, 0]  # corrupt the length
        with pytest.raises(SchemaViolation):
            parse_msg(msgs.OCCUPANCY_GRID, doc)


class TestScanValidation:
    def test_angle_overrun_rejected(self):
        with pytest.raises(SchemaViolation):
            LaserScan(header=Header(), angle_min=0.0, angle_max=0.1,
                      angle_increment=0.2, time_increment=0.0, scan_time=0.1,
                      range_min=0.0, range_max=1.0, ranges=(1.0, 1.0, 1.0))

    def test_negative_increment_rejected(self):
        with pytest.raises(SchemaViolation):
            LaserScan(header=Header(), angle_min=0.0, angle_max=1.0,
                      angle_increment=-0.1, time_increment=0.0, scan_time=0.1,
                      range_min=0.0, range_max=1.0, ranges=(1.0,))

    def test_range_bounds_rejected(self):
        with pytest.raises(SchemaViolation):
            LaserScan(header=Header(), angle_min=0.0, angle_max=1.0,
                      angle_increment=0.1, time_increment=0.0, scan_time=0.1,
                      range_min=2.0, range_max=1.0, ranges=(1.0,))


class TestHeaderValidation:
    def test_nanoseconds_bound(self):
        with pytest.raises(SchemaViolation):
            Header(stamp_nsec=10**9)

    def test_grid_cell_range(self):
        with pytest.raises(SchemaViolation):
            OccupancyGrid(header=Header(), resolution=0.1, width=1, height=1,
                          origin=Pose(), data=np.asarray([101], dtype=np.int8).tobytes())


class TestMapLoader:
    def test_paper_scale_extent(self, tmp_path):
        image = np.full((448, 1060), 255, dtype=np.uint8)
        yaml_path = write_map_pair(tmp_path, image, resolution=0.02)
        grid = load_map_file(yaml_path)
        assert (grid.width, grid.height) == (1060, 448)
        assert abs(grid.extent[0] - 21.2) < 1e-9
        assert abs(grid.extent[1] - 8.96) < 1e-9

    def test_all_white_is_free(self, tmp_path):
        image = np.full((8, 8), 255, dtype=np.uint8)
        grid = load_map_file(write_map_pair(tmp_path, image))
        assert np.array_equal(grid.cells, np.zeros((8, 8), dtype=np.int8))

    def test_checkerboard_matches_per_pixel_reference(self, tmp_path):
        rng = np.random.default_rng(42)
        image = rng.integers(0, 256, size=(4, 4)).astype(np.uint8)
        image[0, 0], image[0, 1] = 0, 255  # force both extremes present
        occupied_thresh, free_thresh = 0.65, 0.196
        grid = load_map_file(write_map_pair(tmp_path, image,
                                            occupied_thresh=occupied_thresh,
                                            free_thresh=free_thresh))
        cells = grid.cells
        for img_row in range(4):
            for col in range(4):
                p = (255 - int(image[img_row, col])) / 255.0
                if p >= occupied_thresh:
                    expected = 100
                elif p <= free_thresh:
                    expected = 0
                else:
                    expected = -1
                grid_row = 4 - 1 - img_row  # image top -> highest grid row
                assert cells[grid_row, col] == expected, (img_row, col)

    def test_occupied_count_equals_pixel_count(self, tmp_path):
        rng = np.random.default_rng(7)
        image = rng.integers(0, 256, size=(16, 16)).astype(np.uint8)
        occupied_thresh = 0.65
        grid = load_map_file(write_map_pair(tmp_path, image,
                                            occupied_thresh=occupied_thresh))
        p = (255.0 - image) / 255.0
        assert (grid.cells == 100).sum() == (p >= occupied_thresh).sum()

    def test_negate_flips_interpretation(self, tmp_path):
        image = np.zeros((4, 4), dtype=np.uint8)  # black
        grid = load_map_file(write_map_pair(tmp_path, image, negate=1))
        assert np.all(grid.cells == 0)  # negate: p = v/255 = 0 -> free

    def test_yflip_puts_image_top_at_high_rows(self, tmp_path):
        image = np.full((4, 4), 255, dtype=np.uint8)
        image[0, 0] = 0  # occupied pixel at the top-left of the image
        grid = load_map_file(write_map_pair(tmp_path, image))
        assert grid.cells[3, 0] == 100
        assert grid.cells[0, 0] == 0

    def test_thresholds_default_when_absent(self, tmp_path):
        image = np.full((4, 4), 128, dtype=np.uint8)
        pgm = tmp_path / "m.pgm"
        write_pgm(pgm, image)
        yaml_path = tmp_path / "m.yaml"
        yaml_path.write_text("image: m.pgm\nresolution: 0.05\norigin: [0, 0, 0]\n")
        grid = load_map_file(yaml_path)
        # p = 127/255 = 0.498: between the defaults 0.196 and 0.65 -> unknown
        assert np.all(grid.cells == -1)

    def test_missing_yaml(self, tmp_path):
        with pytest.raises(FileMissing):
            load_map_file(tmp_path / "nope.yaml")

    def test_missing_image(self, tmp_path):
        yaml_path = tmp_path / "m.yaml"
        yaml_path.write_text("image: gone.pgm\nresolution: 0.05\norigin: [0, 0, 0]\n")
        with pytest.raises(FileMissing):
            load_map_file(yaml_path)

    def test_bad_yaml_fields(self, tmp_path):
        yaml_path = tmp_path / "m.yaml"
        yaml_path.write_text("resolution: 0.05\n")
        with pytest.raises(BadYamlField):
            load_map_file(yaml_path)

    def test_zero_size_image(self, tmp_path):
        pgm = tmp_path / "z.pgm"
        pgm.write_bytes(b"P5\n0 0\n255\n")
        yaml_path = tmp_path / "z.yaml"
        yaml_path.write_text("image: z.pgm\nresolution: 0.05\norigin: [0, 0, 0]\n")
        with pytest.raises(ImageSizeZero):
            load_map_file(yaml_path)

    def test_pgm_comments_are_skipped(self, tmp_path):
        image = np.full((2, 3), 255, dtype=np.uint8)
        pgm = tmp_path / "c.pgm"
        write_pgm(pgm, image, comment="made by a map exporter")
        yaml_path = tmp_path / "c.yaml"
        yaml_path.write_text("image: c.pgm\nresolution: 0.1\norigin: [0, 0, 0]\n")
        grid = load_map_file(yaml_path)
        assert (grid.width, grid.height) == (3, 2)

    def test_origin_carried_through(self, tmp_path):
        image = np.full((4, 4), 255, dtype=np.uint8)
        yaml_path = write_map_pair(tmp_path, image, origin=(-1.0, 2.0, 0.5))
        grid = load_map_file(yaml_path)
        assert grid.origin.position[:2] == (-1.0, 2.0)
        qz, qw = grid.origin.orientation[2], grid.origin.orientation[3]
        assert abs(2 * math.atan2(qz, qw) - 0.5) < 1e-12
