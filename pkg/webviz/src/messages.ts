/**
 * Navigation-stack message shapes as they appear on the wire, and the
 * few readers the console needs.  Non-finite ranges arrive as null and
 * become NaN, matching the server's strict-JSON convention.
 */

export interface Header {
  seq: number;
  stamp: { secs: number; nsecs: number };
  frame_id: string;
}

export interface PoseMsg {
  position: { x: number; y: number; z: number };
  orientation: { x: number; y: number; z: number; w: number };
}

export interface PoseStampedMsg {
  header: Header;
  pose: PoseMsg;
}

export interface LaserScanMsg {
  header: Header;
  angle_min: number;
  angle_max: number;
  angle_increment: number;
  time_increment: number;
  scan_time: number;
  range_min: number;
  range_max: number;
  ranges: (number | null)[];
  intensities: (number | null)[];
}

export interface OccupancyGridMsg {
  header: Header;
  info: {
    resolution: number;
    width: number;
    height: number;
    origin: PoseMsg;
  };
  data: number[];
}

export interface NavPathMsg {
  header: Header;
  poses: PoseStampedMsg[];
}

export interface StatusMsg {
  level: string;
  text: string;
  seq?: number;
}

export const MSG_TYPES = {
  scan: "sensor_msgs/LaserScan",
  map: "nav_msgs/OccupancyGrid",
  path: "nav_msgs/Path",
  odom: "nav_msgs/Odometry",
  pose: "geometry_msgs/PoseStamped",
  status: "simbot/Status",
} as const;

export const TOPICS = {
  scan: "/scan",
  map: "/map",
  plan: "/global_plan",
  odom: "/odom",
  amcl: "/amcl_pose",
  goal: "/move_base_simple/goal",
  status: "/simbot/status",
} as const;

export function zeroHeader(frameId = ""): Header {
  return { seq: 0, stamp: { secs: 0, nsecs: 0 }, frame_id: frameId };
}

/** Planar pose -> wire pose message (yaw about +z). */
export function planarPoseMsg(x: number, y: number, theta: number): PoseMsg {
  const half = theta / 2;
  return {
    position: { x, y, z: 0.0 },
    orientation: { x: 0.0, y: 0.0, z: Math.sin(half), w: Math.cos(half) },
  };
}

/** The goal message published on click-to-place (stamp zero: wall time is
 * the transport's business, conformance vectors compare modulo stamps). */
export function goalMessage(x: number, y: number, theta: number): PoseStampedMsg {
  return { header: zeroHeader("map"), pose: planarPoseMsg(x, y, theta) };
}

export function yawOf(pose: PoseMsg): number {
  const { x, y, z, w } = pose.orientation;
  return Math.atan2(2 * (w * z + x * y), 1 - 2 * (y * y + z * z));
}

export function rangeValue(r: number | null): number {
  return r === null ? NaN : r;
}
