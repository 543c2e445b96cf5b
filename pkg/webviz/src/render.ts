/**
 * Canvas renderer: projected point channels, a ground reference grid,
 * the robot marker, and the goal arrow.
 */

import { OrbitCamera, Vec3 } from "./camera.js";
import { yawOf } from "./messages.js";
import { ViewState } from "./scene.js";

export class Renderer {
  private ctx: CanvasRenderingContext2D;

  constructor(private canvas: HTMLCanvasElement, private camera: OrbitCamera) {
    const ctx = canvas.getContext("2d");
    if (!ctx) throw new Error("no 2d context");
    this.ctx = ctx;
  }

  draw(state: ViewState): void {
    const { ctx, canvas, camera } = this;
    ctx.fillStyle = "#10141a";
    ctx.fillRect(0, 0, canvas.width, canvas.height);
    this.drawGroundGrid();

    for (const channel of ["map", "scan", "path"] as const) {
      const view = state.channels[channel];
      if (!view.on || view.points.length === 0) continue;
      const [r, g, b] = view.color;
      ctx.fillStyle = `rgb(${r},${g},${b})`;
      const size = channel === "path" ? 5 : 2.5;
      const pts = view.points;
      for (let i = 0; i < pts.length; i += 3) {
        const p = camera.project([pts[i], pts[i + 1], pts[i + 2]]);
        if (!p) continue;
        ctx.fillRect(p[0] - size / 2, p[1] - size / 2, size, size);
      }
    }

    if (state.robotPose) {
      const { x, y } = state.robotPose.position;
      this.drawArrow([x, y, 0], yawOf(state.robotPose), "#4ea3ff", 0.4);
    }
    if (state.pendingGoal) {
      const { x, y, theta } = state.pendingGoal;
      this.drawArrow([x, y, 0], theta, "#3355ff", 0.5);
    }
  }

  private drawGroundGrid(): void {
    const { ctx, camera } = this;
    ctx.strokeStyle = "#232a33";
    ctx.lineWidth = 1;
    const span = 20;
    for (let i = -span; i <= span; i += 2) {
      this.line([i, -span, 0], [i, span, 0]);
      this.line([-span, i, 0], [span, i, 0]);
    }
    void ctx;
  }

  private line(a: Vec3, b: Vec3): void {
    const pa = this.camera.project(a);
    const pb = this.camera.project(b);
    if (!pa || !pb) return;
    this.ctx.beginPath();
    this.ctx.moveTo(pa[0], pa[1]);
    this.ctx.lineTo(pb[0], pb[1]);
    this.ctx.stroke();
  }

  private drawArrow(at: Vec3, theta: number, color: string, length: number): void {
    const tip: Vec3 = [at[0] + Math.cos(theta) * length,
                       at[1] + Math.sin(theta) * length, 0];
    const left: Vec3 = [at[0] + Math.cos(theta + 2.6) * length * 0.45,
                        at[1] + Math.sin(theta + 2.6) * length * 0.45, 0];
    const right: Vec3 = [at[0] + Math.cos(theta - 2.6) * length * 0.45,
                         at[1] + Math.sin(theta - 2.6) * length * 0.45, 0];
    const pt = this.camera.project(tip);
    const pl = this.camera.project(left);
    const pr = this.camera.project(right);
    if (!pt || !pl || !pr) return;
    this.ctx.fillStyle = color;
    this.ctx.beginPath();
    this.ctx.moveTo(pt[0], pt[1]);
    this.ctx.lineTo(pl[0], pl[1]);
    this.ctx.lineTo(pr[0], pr[1]);
    this.ctx.closePath();
    this.ctx.fill();
  }
}
