/**
 * Scene state behind the console: which channels are on, their latest
 * converted points (never mutated in place, revisions strictly increase),
 * the robot pose, and the pending goal.  Wire messages are buffered per
 * channel and coalesced latest-wins for scans; apply() folds the buffers
 * into the view on the render loop's schedule.
 */

import { OrbitCamera } from "./camera.js";
import {
  CHANNEL_COLORS,
  Channel,
  OCCUPIED_THRESHOLD,
  PATH_STRIDE,
  gridToPoints,
  pathToPoints,
  scanToPoints,
} from "./convert.js";
import {
  LaserScanMsg,
  MSG_TYPES,
  NavPathMsg,
  OccupancyGridMsg,
  PoseMsg,
  PoseStampedMsg,
  StatusMsg,
  TOPICS,
  goalMessage,
  planarPoseMsg,
} from "./messages.js";

export interface ClientLike {
  subscribe(topic: string, type: string, handler: (topic: string, msg: unknown) => void): void;
  unsubscribe(topic: string): void;
  advertiseAndPublish(topic: string, type: string, msg: unknown): void;
}

export interface ChannelView {
  on: boolean;
  points: number[];
  color: [number, number, number];
  revision: number;
}

export interface ViewState {
  camera: OrbitCamera;
  channels: Record<Channel, ChannelView>;
  robotPose: PoseMsg | null;
  pendingGoal: { x: number; y: number; theta: number } | null;
  lastStatus: StatusMsg | null;
}

const CHANNEL_TOPICS: Record<Channel, string> = {
  scan: TOPICS.scan,
  map: TOPICS.map,
  path: TOPICS.plan,
};

const CHANNEL_TYPES: Record<Channel, string> = {
  scan: MSG_TYPES.scan,
  map: MSG_TYPES.map,
  path: MSG_TYPES.path,
};

export class SceneStore {
  state: ViewState;
  private latestScan: LaserScanMsg | null = null;
  private latestGrid: OccupancyGridMsg | null = null;
  private appliedGridSeq: number | null = null;
  private latestPath: NavPathMsg | null = null;
  private scanDirty = false;
  private pathDirty = false;
  private localization: PoseMsg | null = null;
  onStatus?: (status: StatusMsg) => void;

  constructor(private client: ClientLike, camera: OrbitCamera) {
    this.state = {
      camera,
      channels: {
        scan: { on: false, points: [], color: CHANNEL_COLORS.scan, revision: 0 },
        map: { on: false, points: [], color: CHANNEL_COLORS.map, revision: 0 },
        path: { on: false, points: [], color: CHANNEL_COLORS.path, revision: 0 },
      },
      robotPose: null,
      pendingGoal: null,
      lastStatus: null,
    };
    client.subscribe(TOPICS.amcl, MSG_TYPES.pose, (_t, msg) => {
      this.localization = (msg as PoseStampedMsg).pose;
      this.state.robotPose = this.localization;
    });
    client.subscribe(TOPICS.status, MSG_TYPES.status, (_t, msg) => {
      this.state.lastStatus = msg as StatusMsg;
      this.onStatus?.(this.state.lastStatus);
    });
  }

  /** Enable/disable a channel: issues subscribe/unsubscribe on the wire
   * and clears the view when disabling. */
  toggle(channel: Channel, on: boolean): void {
    const view = this.state.channels[channel];
    if (view.on === on) return;
    view.on = on;
    const topic = CHANNEL_TOPICS[channel];
    if (on) {
      this.client.subscribe(topic, CHANNEL_TYPES[channel], (_t, msg) => {
        this.receive(channel, msg);
      });
    } else {
      this.client.unsubscribe(topic);
      view.points = [];
      view.revision += 1;
      if (channel === "scan") this.latestScan = null;
      if (channel === "map") this.appliedGridSeq = null;
      if (channel === "path") this.latestPath = null;
    }
  }

  private receive(channel: Channel, msg: unknown): void {
    if (channel === "scan") {
      this.latestScan = msg as LaserScanMsg; // latest-wins, scans are perishable
      this.scanDirty = true;
    } else if (channel === "map") {
      this.latestGrid = msg as OccupancyGridMsg;
    } else {
      this.latestPath = msg as NavPathMsg;
      this.pathDirty = true;
    }
  }

  /** Fold buffered messages into the view; call once per render frame.
   * Returns true when anything changed. */
  apply(): boolean {
    let changed = false;
    const { channels } = this.state;
    if (channels.scan.on && this.scanDirty && this.latestScan) {
      const pose = this.localization ?? planarPoseMsg(0, 0, 0);
      channels.scan.points = scanToPoints(this.latestScan, pose);
      channels.scan.revision += 1;
      this.scanDirty = false;
      changed = true;
    }
    if (channels.map.on && this.latestGrid &&
        this.latestGrid.header.seq !== this.appliedGridSeq) {
      channels.map.points = gridToPoints(this.latestGrid, OCCUPIED_THRESHOLD);
      channels.map.revision += 1;
      this.appliedGridSeq = this.latestGrid.header.seq;
      changed = true;
    }
    if (channels.path.on && this.pathDirty && this.latestPath) {
      channels.path.points = pathToPoints(this.latestPath, PATH_STRIDE);
      channels.path.revision += 1;
      this.pathDirty = false;
      changed = true;
    }
    return changed;
  }

  /** Publish a navigation goal at a ground-plane point. */
  placeGoal(x: number, y: number, theta: number): void {
    this.state.pendingGoal = { x, y, theta };
    this.client.advertiseAndPublish(TOPICS.goal, MSG_TYPES.pose,
                                    goalMessage(x, y, theta));
  }
}
