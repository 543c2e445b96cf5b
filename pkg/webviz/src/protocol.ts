/**
 * The JSON pub/sub wire protocol: one envelope per WebSocket text frame.
 *
 *   {"op":"subscribe","topic":"/scan","type":"sensor_msgs/LaserScan"}
 *   {"op":"publish","topic":"/move_base_simple/goal","msg":{...}}
 *
 * WireClient keeps one handler per subscribed topic, advertises each
 * outbound topic exactly once, and drops undecodable frames and unknown
 * topics without dying.
 */

export type Op = "advertise" | "unadvertise" | "publish" | "subscribe" | "unsubscribe";

export interface Envelope {
  op: Op;
  topic: string;
  type?: string;
  msg?: unknown;
  id?: string;
  throttle_rate?: number;
  queue_length?: number;
}

const OPS: readonly Op[] = ["advertise", "unadvertise", "publish", "subscribe", "unsubscribe"];

export function encodeEnvelope(e: Envelope): string {
  if (!e.topic.startsWith("/")) {
    throw new Error(`topic must start with '/': ${e.topic}`);
  }
  if (e.op === "publish" && e.msg === undefined) {
    throw new Error("publish envelopes carry msg");
  }
  if ((e.op === "subscribe" || e.op === "advertise") && !e.type) {
    throw new Error(`${e.op} envelopes carry a message type`);
  }
  // Field order matches the reference client: op, topic, type, msg, id, ...
  const doc: Record<string, unknown> = { op: e.op, topic: e.topic };
  if (e.type !== undefined) doc.type = e.type;
  if (e.msg !== undefined) doc.msg = e.msg;
  if (e.id !== undefined) doc.id = e.id;
  if (e.throttle_rate !== undefined) doc.throttle_rate = e.throttle_rate;
  if (e.queue_length !== undefined) doc.queue_length = e.queue_length;
  return JSON.stringify(doc);
}

export function decodeEnvelope(raw: string): Envelope {
  let doc: any;
  try {
    doc = JSON.parse(raw);
  } catch (err) {
    throw new Error(`malformed frame: ${err}`);
  }
  if (typeof doc !== "object" || doc === null || Array.isArray(doc)) {
    throw new Error("frame is not a JSON object");
  }
  if (!OPS.includes(doc.op)) {
    throw new Error(`unknown op ${JSON.stringify(doc.op)}`);
  }
  if (typeof doc.topic !== "string" || !doc.topic) {
    throw new Error("missing topic");
  }
  if (doc.op === "publish" && !("msg" in doc)) {
    throw new Error("publish envelopes carry msg");
  }
  if ((doc.op === "subscribe" || doc.op === "advertise") && !doc.type) {
    throw new Error(`${doc.op} envelopes carry a message type`);
  }
  const e: Envelope = { op: doc.op, topic: doc.topic };
  if (doc.type !== undefined) e.type = doc.type;
  if (doc.msg !== undefined) e.msg = doc.msg;
  if (doc.id !== undefined) e.id = doc.id;
  if (doc.throttle_rate !== undefined) e.throttle_rate = doc.throttle_rate;
  if (doc.queue_length !== undefined) e.queue_length = doc.queue_length;
  return e;
}

export type MessageHandler = (topic: string, msg: unknown) => void;
export type ConnectionStatus = "connecting" | "open" | "closed";

interface WebSocketLike {
  send(data: string): void;
  close(): void;
  addEventListener(type: string, listener: (event: any) => void): void;
}

export interface WireClientOptions {
  /** WebSocket constructor; defaults to the browser global. */
  webSocketImpl?: new (url: string) => WebSocketLike;
  onStatus?: (status: ConnectionStatus) => void;
}

export class WireClient {
  private socket: WebSocketLike;
  private handlers = new Map<string, MessageHandler>();
  private advertised = new Set<string>();
  private pending: string[] = [];
  private open = false;
  status: ConnectionStatus = "connecting";
  droppedFrames = 0;

  constructor(url: string, private options: WireClientOptions = {}) {
    const Impl = options.webSocketImpl ??
      ((globalThis as any).WebSocket as new (url: string) => WebSocketLike);
    if (!Impl) {
      throw new Error("no WebSocket implementation available");
    }
    this.socket = new Impl(url);
    this.socket.addEventListener("open", () => {
      this.open = true;
      this.setStatus("open");
      for (const frame of this.pending.splice(0)) this.socket.send(frame);
    });
    this.socket.addEventListener("close", () => {
      this.open = false;
      this.setStatus("closed");
    });
    this.socket.addEventListener("error", () => {
      this.setStatus("closed");
    });
    this.socket.addEventListener("message", (event: any) => {
      const data = typeof event.data === "string" ? event.data : String(event.data);
      let envelope: Envelope;
      try {
        envelope = decodeEnvelope(data);
      } catch {
        this.droppedFrames += 1;
        return;
      }
      if (envelope.op !== "publish") return;
      const handler = this.handlers.get(envelope.topic);
      if (!handler) {
        this.droppedFrames += 1;
        return;
      }
      handler(envelope.topic, envelope.msg);
    });
  }

  private setStatus(status: ConnectionStatus): void {
    this.status = status;
    this.options.onStatus?.(status);
  }

  private send(envelope: Envelope): void {
    const frame = encodeEnvelope(envelope);
    if (this.open) {
      this.socket.send(frame);
    } else {
      this.pending.push(frame);
    }
  }

  subscribe(topic: string, type: string, handler: MessageHandler): void {
    if (this.handlers.has(topic)) {
      throw new Error(`already subscribed to ${topic}`);
    }
    this.handlers.set(topic, handler);
    this.send({ op: "subscribe", topic, type });
  }

  unsubscribe(topic: string): void {
    this.handlers.delete(topic);
    this.send({ op: "unsubscribe", topic });
  }

  /** Publish, advertising the topic first exactly once per session. */
  advertiseAndPublish(topic: string, type: string, msg: unknown): void {
    if (!this.advertised.has(topic)) {
      this.advertised.add(topic);
      this.send({ op: "advertise", topic, type });
    }
    this.send({ op: "publish", topic, msg });
  }

  close(): void {
    this.socket.close();
  }
}
