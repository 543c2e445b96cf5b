/**
 * Raw topic messages -> flat world-frame point arrays, using the same
 * rules as the reference pipeline (shared golden vectors pin both sides):
 * scans keep finite beams within [range_min, range_max], grids emit one
 * point per occupied cell (value >= threshold, unknown excluded) at the
 * cell center through the origin pose, paths are downsampled keeping the
 * endpoints.  Channel colors: scan green, map magenta, path blue.
 */

import {
  LaserScanMsg,
  NavPathMsg,
  OccupancyGridMsg,
  PoseMsg,
  rangeValue,
} from "./messages.js";

export type Channel = "scan" | "map" | "path";

export const CHANNEL_COLORS: Record<Channel, [number, number, number]> = {
  scan: [0, 255, 0],
  map: [255, 0, 255],
  path: [0, 0, 255],
};

export const OCCUPIED_THRESHOLD = 50;
export const PATH_STRIDE = 10;

/** p' = R p + t for a quaternion pose; same expansion as the reference. */
function applyPose(pose: PoseMsg, x: number, y: number, z: number): [number, number, number] {
  const { x: qx, y: qy, z: qz, w: qw } = pose.orientation;
  const tx = 2 * (qy * z - qz * y);
  const ty = 2 * (qz * x - qx * z);
  const tz = 2 * (qx * y - qy * x);
  const rx = x + qw * tx + (qy * tz - qz * ty);
  const ry = y + qw * ty + (qz * tx - qx * tz);
  const rz = z + qw * tz + (qx * ty - qy * tx);
  return [rx + pose.position.x, ry + pose.position.y, rz + pose.position.z];
}

/** Flat [x0,y0,z0, x1,...] world points for the valid beams of a scan,
 * with the sensor at sensorPose (the latest localization pose). */
export function scanToPoints(scan: LaserScanMsg, sensorPose: PoseMsg): number[] {
  const out: number[] = [];
  for (let i = 0; i < scan.ranges.length; i++) {
    const r = rangeValue(scan.ranges[i]);
    if (!Number.isFinite(r) || r < scan.range_min || r > scan.range_max) continue;
    const theta = scan.angle_min + i * scan.angle_increment;
    const p = applyPose(sensorPose, r * Math.cos(theta), r * Math.sin(theta), 0);
    out.push(p[0], p[1], p[2]);
  }
  return out;
}

/** One point per occupied cell, at the cell center in the map frame. */
export function gridToPoints(
  grid: OccupancyGridMsg,
  occupiedThreshold: number = OCCUPIED_THRESHOLD,
): number[] {
  const { width, height, resolution, origin } = grid.info;
  const out: number[] = [];
  for (let row = 0; row < height; row++) {
    for (let col = 0; col < width; col++) {
      const value = grid.data[row * width + col];
      if (value < occupiedThreshold || value < 0) continue;
      const p = applyPose(origin, (col + 0.5) * resolution, (row + 0.5) * resolution, 0);
      out.push(p[0], p[1], p[2]);
    }
  }
  return out;
}

/** Every stride-th pose position, endpoints always kept. */
export function pathToPoints(path: NavPathMsg, stride: number = PATH_STRIDE): number[] {
  const n = path.poses.length;
  if (n === 0) return [];
  const indices: number[] = [];
  for (let i = 0; i < n; i += stride) indices.push(i);
  if (indices[indices.length - 1] !== n - 1) indices.push(n - 1);
  const out: number[] = [];
  for (const i of indices) {
    const { x, y, z } = path.poses[i].pose.position;
    out.push(x, y, z);
  }
  return out;
}
