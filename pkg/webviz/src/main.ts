/**
 * Console bootstrap: connect to the server named in the query string
 * (?ws=ws://host:port), wire the toolbar toggles, the orbit controls,
 * and click-to-place goals with a heading drag handle.
 */

import { OrbitCamera } from "./camera.js";
import { Channel } from "./convert.js";
import { Renderer } from "./render.js";
import { SceneStore } from "./scene.js";
import { WireClient } from "./protocol.js";

const params = new URLSearchParams(window.location.search);
const url = params.get("ws") ?? "ws://127.0.0.1:9090";

const canvas = document.getElementById("view") as HTMLCanvasElement;
const statusLine = document.getElementById("status") as HTMLElement;

function fit(): void {
  canvas.width = window.innerWidth;
  canvas.height = window.innerHeight - 48;
}
fit();

const camera = new OrbitCamera(canvas.width, canvas.height,
                               { target: [5, 5, 0], distance: 14 });
const client = new WireClient(url, {
  onStatus: (s) => { statusLine.textContent = `${url} [${s}]`; },
});
const scene = new SceneStore(client, camera);
scene.onStatus = (status) => {
  statusLine.textContent = `${status.level}: ${status.text}`;
};
const renderer = new Renderer(canvas, camera);

window.addEventListener("resize", () => {
  fit();
  camera.resize(canvas.width, canvas.height);
});

// Toolbar: one toggle per sensor channel.
for (const channel of ["scan", "map", "path"] as Channel[]) {
  const button = document.getElementById(`toggle-${channel}`) as HTMLButtonElement;
  button.addEventListener("click", () => {
    const on = !scene.state.channels[channel].on;
    scene.toggle(channel, on);
    button.classList.toggle("on", on);
  });
}

// Mouse: drag = orbit (shift: pan), wheel = zoom, click = place goal,
// then drag the handle to set the goal heading.
let dragging = false;
let draggingGoal = false;
let moved = 0;
let last: [number, number] = [0, 0];

canvas.addEventListener("mousedown", (e) => {
  const goal = scene.state.pendingGoal;
  if (goal) {
    const p = camera.project([goal.x, goal.y, 0]);
    if (p && Math.hypot(p[0] - e.offsetX, p[1] - e.offsetY) < 18) {
      draggingGoal = true;
      return;
    }
  }
  dragging = true;
  moved = 0;
  last = [e.offsetX, e.offsetY];
});

canvas.addEventListener("mousemove", (e) => {
  if (draggingGoal) {
    const goal = scene.state.pendingGoal;
    const ground = camera.groundPoint(e.offsetX, e.offsetY);
    if (goal && ground) {
      goal.theta = Math.atan2(ground[1] - goal.y, ground[0] - goal.x);
    }
    return;
  }
  if (!dragging) return;
  const dx = e.offsetX - last[0];
  const dy = e.offsetY - last[1];
  moved += Math.abs(dx) + Math.abs(dy);
  last = [e.offsetX, e.offsetY];
  if (e.shiftKey) {
    camera.pan(dx, dy);
  } else {
    camera.orbit(-dx * 0.008, dy * 0.008);
  }
});

canvas.addEventListener("mouseup", (e) => {
  if (draggingGoal) {
    draggingGoal = false;
    const goal = scene.state.pendingGoal;
    if (goal) scene.placeGoal(goal.x, goal.y, goal.theta); // republish with heading
    return;
  }
  if (dragging && moved < 4) {
    const ground = camera.groundPoint(e.offsetX, e.offsetY);
    if (ground) {
      scene.placeGoal(ground[0], ground[1], 0);
    } else {
      statusLine.textContent = "no ground under the cursor";
    }
  }
  dragging = false;
});

canvas.addEventListener("wheel", (e) => {
  e.preventDefault();
  camera.zoom(e.deltaY > 0 ? 1.1 : 0.9);
});

function frame(): void {
  scene.apply();
  renderer.draw(scene.state);
  requestAnimationFrame(frame);
}
frame();
