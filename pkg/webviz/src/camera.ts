/**
 * Orbit camera over a z-up world: yaw/pitch/distance around a target,
 * perspective projection to screen pixels, and the inverse ray used for
 * click-to-place goals (screen point -> ground plane z=0).
 */

export type Vec3 = [number, number, number];

function sub(a: Vec3, b: Vec3): Vec3 {
  return [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
}

function cross(a: Vec3, b: Vec3): Vec3 {
  return [
    a[1] * b[2] - a[2] * b[1],
    a[2] * b[0] - a[0] * b[2],
    a[0] * b[1] - a[1] * b[0],
  ];
}

function dot(a: Vec3, b: Vec3): number {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

function normalize(v: Vec3): Vec3 {
  const n = Math.hypot(v[0], v[1], v[2]);
  return [v[0] / n, v[1] / n, v[2] / n];
}

export interface OrbitParams {
  target: Vec3;
  yaw: number;      // rad, around +z
  pitch: number;    // rad, 0 = horizontal, pi/2 = straight down
  distance: number; // m
  fovY: number;     // rad
}

export class OrbitCamera {
  params: OrbitParams;

  constructor(
    public width: number,
    public height: number,
    params?: Partial<OrbitParams>,
  ) {
    this.params = {
      target: [0, 0, 0],
      yaw: -Math.PI / 2,
      pitch: 0.9,
      distance: 12,
      fovY: Math.PI / 4,
      ...params,
    };
  }

  resize(width: number, height: number): void {
    this.width = width;
    this.height = height;
  }

  orbit(dYaw: number, dPitch: number): void {
    this.params.yaw += dYaw;
    this.params.pitch = Math.min(Math.PI / 2, Math.max(0.05, this.params.pitch + dPitch));
  }

  zoom(factor: number): void {
    this.params.distance = Math.min(200, Math.max(0.5, this.params.distance * factor));
  }

  pan(dx: number, dy: number): void {
    const { right, up } = this.basis();
    const scale = this.params.distance / this.focal();
    const t = this.params.target;
    this.params.target = [
      t[0] - dx * scale * right[0] + dy * scale * up[0],
      t[1] - dx * scale * right[1] + dy * scale * up[1],
      t[2],
    ];
  }

  eye(): Vec3 {
    const { target, yaw, pitch, distance } = this.params;
    const c = Math.cos(pitch);
    return [
      target[0] + distance * c * Math.cos(yaw),
      target[1] + distance * c * Math.sin(yaw),
      target[2] + distance * Math.sin(pitch),
    ];
  }

  private focal(): number {
    return this.height / 2 / Math.tan(this.params.fovY / 2);
  }

  private basis(): { forward: Vec3; right: Vec3; up: Vec3 } {
    const eye = this.eye();
    const forward = normalize(sub(this.params.target, eye));
    // Degenerate straight-down view: derive right from the yaw instead.
    let right = cross(forward, [0, 0, 1]);
    const n = Math.hypot(right[0], right[1], right[2]);
    if (n < 1e-9) {
      right = [-Math.sin(this.params.yaw), Math.cos(this.params.yaw), 0];
    } else {
      right = [right[0] / n, right[1] / n, right[2] / n];
    }
    const up = cross(right, forward);
    return { forward, right, up };
  }

  /** World point -> [sx, sy, depth]; null when behind the camera. */
  project(p: Vec3): [number, number, number] | null {
    const eye = this.eye();
    const { forward, right, up } = this.basis();
    const v = sub(p, eye);
    const depth = dot(v, forward);
    if (depth <= 1e-6) return null;
    const f = this.focal();
    return [
      this.width / 2 + (f * dot(v, right)) / depth,
      this.height / 2 - (f * dot(v, up)) / depth,
      depth,
    ];
  }

  /** Screen pixel -> world ray (origin at the eye). */
  screenRay(sx: number, sy: number): { origin: Vec3; dir: Vec3 } {
    const { forward, right, up } = this.basis();
    const f = this.focal();
    const nx = (sx - this.width / 2) / f;
    const ny = (this.height / 2 - sy) / f;
    const dir = normalize([
      forward[0] + nx * right[0] + ny * up[0],
      forward[1] + nx * right[1] + ny * up[1],
      forward[2] + nx * right[2] + ny * up[2],
    ]);
    return { origin: this.eye(), dir };
  }

  /** Intersection of a screen click with the ground plane z=0, or null
   * when the ray misses (looking at the sky). */
  groundPoint(sx: number, sy: number): Vec3 | null {
    const { origin, dir } = this.screenRay(sx, sy);
    if (Math.abs(dir[2]) < 1e-9) return null;
    const t = -origin[2] / dir[2];
    if (t <= 0) return null;
    return [origin[0] + t * dir[0], origin[1] + t * dir[1], 0];
  }
}
