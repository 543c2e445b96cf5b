"""WebSocket server speaking the pub/sub wire protocol, plus the CLI.

One simulation loop owns the world; per-client connection handlers talk to
it through a command queue only.  Publishing fans out through bounded
per-client outboxes so a slow client never stalls the loop: when an outbox
fills up, its oldest scan frames are dropped first, and map/path/status
frames are never dropped.

The latched-map contract: every client receives the current map revision
exactly once, on subscribing to the map topic.
"""

from __future__ import annotations

import argparse
import logging
import math
import queue
import threading
import time
from collections import deque

from websockets.exceptions import ConnectionClosed
from websockets.sync.server import serve as ws_serve

from .. import msgs
from ..proto import Op, ProtocolEnvelope, ProtocolError, decode_envelope, encode_envelope
from .core import (SimCore, TOPIC_GOAL, TOPIC_MAP, TOPIC_SCAN, TOPIC_TELEPORT,
                   Outbound)
from .world import SimParams, WorldModel, free_cell_near

logger = logging.getLogger(__name__)


class BindFailed(OSError):
    pass


class Outbox:
    """Bounded frame queue; scan frames are sacrificed first on overflow."""

    def __init__(self, limit: int = 64):
        self._limit = limit
        self._frames: deque[tuple[str, bool]] = deque()
        self._cond = threading.Condition()
        self.closed = False
        self.dropped = 0

    def push(self, frame: str, droppable: bool) -> None:
        with self._cond:
            if self.closed:
                return
            if len(self._frames) >= self._limit:
                for i, (_, can_drop) in enumerate(self._frames):
                    if can_drop:
                        del self._frames[i]
                        self.dropped += 1
                        break
                else:
                    if droppable:
                        self.dropped += 1
                        return
            self._frames.append((frame, droppable))
            self._cond.notify()

    def pop(self, timeout: float = 0.5) -> str | None:
        with self._cond:
            if not self._frames:
                self._cond.wait(timeout)
            if not self._frames:
                return None
            return self._frames.popleft()[0]

    def close(self) -> None:
        with self._cond:
            self.closed = True
            self._cond.notify_all()


class _Client:
    def __init__(self, conn, outbox_limit: int):
        self.conn = conn
        self.subscriptions: set[str] = set()
        self.outbox = Outbox(outbox_limit)
        self.sent_map_revision: int | None = None
        self.bad_frames = 0


class SimServer:
    """Serves a SimCore over WebSocket at ws://host:port/."""

    def __init__(self, core: SimCore, host: str = "127.0.0.1", port: int = 9090, *,
                 loop_rate: float = 50.0, fixed_step: float | None = None,
                 outbox_limit: int = 64):
        self.core = core
        self.host = host
        self.port = port
        self.loop_rate = loop_rate
        self.fixed_step = fixed_step
        self.outbox_limit = outbox_limit
        self._core_lock = threading.Lock()
        self._clients: set[_Client] = set()
        self._clients_lock = threading.Lock()
        self._commands: queue.Queue[tuple[str, object]] = queue.Queue()
        self._stop = threading.Event()
        self._server = None
        self._threads: list[threading.Thread] = []

    # -- lifecycle -------------------------------------------------------------

    def start(self) -> "SimServer":
        try:
            self._server = ws_serve(self._handle_client, self.host, self.port)
        except OSError as exc:
            raise BindFailed(f"cannot bind {self.host}:{self.port}: {exc}") from exc
        self.port = self._server.socket.getsockname()[1]
        accept = threading.Thread(target=self._server.serve_forever,
                                  name="simbot-accept", daemon=True)
        sim = threading.Thread(target=self._sim_loop, name="simbot-loop", daemon=True)
        self._threads = [accept, sim]
        accept.start()
        sim.start()
        return self

    def stop(self) -> None:
        self._stop.set()
        if self._server is not None:
            self._server.shutdown()
        with self._clients_lock:
            clients = list(self._clients)
        for client in clients:
            client.outbox.close()
            try:
                client.conn.close()
            except Exception:
                pass
        for t in self._threads:
            t.join(timeout=5.0)

    @property
    def url(self) -> str:
        return f"ws://{self.host}:{self.port}"

    def __enter__(self) -> "SimServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()

    # -- simulation loop ---------------------------------------------------------

    def _sim_loop(self) -> None:
        period = self.fixed_step if self.fixed_step else 1.0 / self.loop_rate
        last = time.monotonic()
        next_wake = last + period
        while not self._stop.is_set():
            now = time.monotonic()
            dt = self.fixed_step if self.fixed_step else max(now - last, 1e-6)
            last = now
            outs: list[Outbound] = []
            with self._core_lock:
                while True:
                    try:
                        topic, raw = self._commands.get_nowait()
                    except queue.Empty:
                        break
                    outs.extend(self.core.handle_publish(topic, raw))
                outs.extend(self.core.advance(dt))
            for out in outs:
                self._fan_out(out)
            next_wake += period
            delay = next_wake - time.monotonic()
            if delay > 0:
                time.sleep(delay)
            else:
                next_wake = time.monotonic()

    def _fan_out(self, out: Outbound) -> None:
        topic, _, message = out
        frame = self._publish_frame(topic, message)
        droppable = topic == TOPIC_SCAN
        with self._clients_lock:
            targets = [c for c in self._clients if topic in c.subscriptions]
        for client in targets:
            client.outbox.push(frame, droppable)

    @staticmethod
    def _publish_frame(topic: str, message) -> str:
        raw = message if isinstance(message, dict) else msgs.serialize_msg(message)
        envelope = ProtocolEnvelope(op=Op.PUBLISH, topic=topic, msg=raw)
        return encode_envelope(envelope).decode("utf-8")

    # -- per-client handling -----------------------------------------------------

    def _handle_client(self, conn) -> None:
        client = _Client(conn, self.outbox_limit)
        with self._clients_lock:
            self._clients.add(client)
        sender = threading.Thread(target=self._send_loop, args=(client,),
                                  name="simbot-send", daemon=True)
        sender.start()
        try:
            for raw in conn:
                try:
                    envelope = decode_envelope(
                        raw if isinstance(raw, (bytes, str)) else bytes(raw))
                except ProtocolError:
                    client.bad_frames += 1
                    continue
                self._dispatch(client, envelope)
        except ConnectionClosed:
            pass
        finally:
            with self._clients_lock:
                self._clients.discard(client)
            client.outbox.close()
            sender.join(timeout=2.0)

    def _dispatch(self, client: _Client, envelope: ProtocolEnvelope) -> None:
        if envelope.op is Op.SUBSCRIBE:
            client.subscriptions.add(envelope.topic)
            if envelope.topic == TOPIC_MAP:
                with self._core_lock:
                    revision = self.core.map_revision
                    grid = self.core.latched_map_message()
                if client.sent_map_revision != revision:
                    client.sent_map_revision = revision
                    client.outbox.push(self._publish_frame(TOPIC_MAP, grid),
                                       droppable=False)
        elif envelope.op is Op.UNSUBSCRIBE:
            client.subscriptions.discard(envelope.topic)
        elif envelope.op is Op.PUBLISH:
            if envelope.topic in (TOPIC_GOAL, TOPIC_TELEPORT):
                self._commands.put((envelope.topic, envelope.msg))
        # advertise/unadvertise are acknowledged by silence

    def _send_loop(self, client: _Client) -> None:
        while not client.outbox.closed:
            frame = client.outbox.pop(timeout=0.5)
            if frame is None:
                continue
            try:
                client.conn.send(frame)
            except (ConnectionClosed, OSError):
                break


# -- CLI ------------------------------------------------------------------------

def _parse_pose(text: str) -> tuple[float, float, float]:
    parts = [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    if len(parts) == 2:
        parts.append(0.0)
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected x,y[,theta], got {text!r}")
    return (parts[0], parts[1], parts[2])


def build_server(args) -> SimServer:
    grid = msgs.load_map_file(args.map)
    if args.robot is not None:
        robot = args.robot
    else:
        x, y = free_cell_near(grid)
        robot = (x, y, 0.0)
    params = SimParams(scan_rate=args.scan_rate, beams=args.beams,
                       fov=math.radians(args.fov_deg), max_range=args.max_range,
                       noise_sigma=args.noise, v_max=args.v_max,
                       inflation_radius=args.inflation)
    world = WorldModel(grid=grid, robot=robot, params=params)
    core = SimCore(world=world, seed=args.seed)
    return SimServer(core, host=args.host, port=args.port,
                     fixed_step=args.fixed_step)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="simbot",
        description="Simulated mobile robot served over the JSON pub/sub wire protocol.")
    parser.add_argument("--map", required=True, help="map YAML file (PGM sidecar)")
    parser.add_argument("--port", type=int, default=9090)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--scan-rate", type=float, default=10.0, help="Hz")
    parser.add_argument("--beams", type=int, default=360)
    parser.add_argument("--noise", type=float, default=0.0, help="per-beam sigma (m)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--fixed-step", type=float, default=None,
                        help="deterministic sim clock step (s)")
    parser.add_argument("--robot", type=_parse_pose, default=None,
                        help="start pose x,y[,theta]; default: free cell near map center")
    parser.add_argument("--fov-deg", type=float, default=270.0)
    parser.add_argument("--max-range", type=float, default=5.6)
    parser.add_argument("--v-max", type=float, default=0.5)
    parser.add_argument("--inflation", type=float, default=0.15)
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s %(message)s")
    server = build_server(args)
    server.start()
    print(f"simbot serving {args.map} at {server.url}", flush=True)
    try:
        while True:
            time.sleep(1.0)
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
