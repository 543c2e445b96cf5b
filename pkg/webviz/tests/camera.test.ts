/** Orbit camera projection and the click-to-ground ray. */

import { describe, expect, it } from "vitest";

import { OrbitCamera } from "../src/camera.js";

describe("ground intersection", () => {
  it("top-down center click lands at the camera target", () => {
    const camera = new OrbitCamera(800, 600, {
      target: [0, 0, 0], yaw: -Math.PI / 2, pitch: Math.PI / 2, distance: 10,
    });
    const hit = camera.groundPoint(400, 300);
    expect(hit).not.toBeNull();
    expect(Math.hypot(hit![0], hit![1])).toBeLessThan(1e-9);
    expect(hit![2]).toBe(0);
  });

  it("clicking above the horizon misses the ground", () => {
    const camera = new OrbitCamera(800, 600, {
      target: [0, 0, 0], yaw: 0, pitch: 0.2, distance: 5,
    });
    expect(camera.groundPoint(400, 0)).toBeNull();
  });

  it("ray through a projected ground point returns that point", () => {
    const camera = new OrbitCamera(640, 480, {
      target: [3, 2, 0], yaw: 1.1, pitch: 0.8, distance: 9,
    });
    const world: [number, number, number] = [4.5, 1.25, 0];
    const screen = camera.project(world);
    expect(screen).not.toBeNull();
    const back = camera.groundPoint(screen![0], screen![1]);
    expect(back).not.toBeNull();
    expect(Math.hypot(back![0] - world[0], back![1] - world[1])).toBeLessThan(1e-6);
  });
});

describe("projection", () => {
  it("points behind the camera are culled", () => {
    const camera = new OrbitCamera(640, 480, {
      target: [0, 0, 0], yaw: 0, pitch: 0.5, distance: 5,
    });
    const eye = camera.eye();
    const behind: [number, number, number] =
      [eye[0] * 2, eye[1] * 2, eye[2] * 2];
    expect(camera.project(behind)).toBeNull();
  });

  it("the target projects to the screen center", () => {
    const camera = new OrbitCamera(800, 600, {
      target: [2, -1, 0], yaw: 0.7, pitch: 0.6, distance: 8,
    });
    const p = camera.project([2, -1, 0]);
    expect(p).not.toBeNull();
    expect(p![0]).toBeCloseTo(400, 6);
    expect(p![1]).toBeCloseTo(300, 6);
  });

  it("orbit keeps the distance to the target", () => {
    const camera = new OrbitCamera(800, 600, { target: [1, 1, 0], distance: 7 });
    camera.orbit(0.5, -0.2);
    const eye = camera.eye();
    const d = Math.hypot(eye[0] - 1, eye[1] - 1, eye[2]);
    expect(d).toBeCloseTo(7, 9);
  });
});
