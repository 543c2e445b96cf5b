"""JSON pub/sub wire protocol and client session.

One JSON object per WebSocket text frame, using the public bridge field
names so the client stays interoperable with real bridge servers:

  {"op": "subscribe",   "topic": "/scan", "type": "sensor_msgs/LaserScan"}
  {"op": "advertise",   "topic": "/move_base_simple/goal", "type": "..."}
  {"op": "publish",     "topic": "/odom", "msg": {...}}
  {"op": "unsubscribe", "topic": "/scan"}
  {"op": "unadvertise", "topic": "/move_base_simple/goal"}

Optional fields: "id" on any envelope, "throttle_rate"/"queue_length" on
subscribe (forwarded to the server, never enforced client-side).

A session runs one background receive loop that dispatches inbound publish
envelopes, in arrival order, to the handler bound to the topic.  Handlers
execute on that loop and must hand off anything slow.  All public methods
are callable from any thread.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable

from websockets.exceptions import ConnectionClosed
from websockets.sync.client import connect as ws_connect

logger = logging.getLogger(__name__)


class ProtocolError(Exception):
    pass


class MalformedJson(ProtocolError):
    """Frame is not a JSON object."""


class UnknownOp(ProtocolError):
    """The "op" field names no known operation."""


class MissingField(ProtocolError):
    """An op-specific required field is absent or unusable."""

    def __init__(self, field_name: str, detail: str = ""):
        super().__init__(f"missing or invalid field {field_name!r}"
                         + (f": {detail}" if detail else ""))
        self.field = field_name


class ConnectFailed(ProtocolError):
    pass


class DuplicateBinding(ProtocolError):
    pass


class SessionClosed(ProtocolError):
    pass


class Op(str, Enum):
    ADVERTISE = "advertise"
    UNADVERTISE = "unadvertise"
    PUBLISH = "publish"
    SUBSCRIBE = "subscribe"
    UNSUBSCRIBE = "unsubscribe"


@dataclass(frozen=True)
class ProtocolEnvelope:
    """One wire message.  Validity is enforced at construction: publish
    carries msg, subscribe/advertise carry msg_type."""

    op: Op
    topic: str
    msg_type: str | None = None
    msg: Any = None
    id: str | None = None
    throttle_rate: int | None = None
    queue_length: int | None = None

    def __post_init__(self):
        if not isinstance(self.op, Op):
            object.__setattr__(self, "op", Op(self.op))
        if not self.topic or not self.topic.startswith("/"):
            raise MissingField("topic", f"topic must start with '/', got {self.topic!r}")
        if self.op is Op.PUBLISH and self.msg is None:
            raise MissingField("msg", "publish envelopes carry msg")
        if self.op in (Op.SUBSCRIBE, Op.ADVERTISE) and not self.msg_type:
            raise MissingField("type", f"{self.op.value} envelopes carry a message type")
        for name in ("throttle_rate", "queue_length"):
            v = getattr(self, name)
            if v is not None:
                if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                    raise MissingField(name, "must be a non-negative integer")


def encode_envelope(e: ProtocolEnvelope) -> bytes:
    """Envelope -> UTF-8 JSON with exactly the populated fields."""
    doc: dict[str, Any] = {"op": e.op.value, "topic": e.topic}
    if e.msg_type is not None:
        doc["type"] = e.msg_type
    if e.msg is not None:
        doc["msg"] = e.msg
    if e.id is not None:
        doc["id"] = e.id
    if e.throttle_rate is not None:
        doc["throttle_rate"] = e.throttle_rate
    if e.queue_length is not None:
        doc["queue_length"] = e.queue_length
    # allow_nan=False keeps frames strict JSON for non-Python peers.
    return json.dumps(doc, separators=(",", ":"), allow_nan=False).encode("utf-8")


def decode_envelope(raw: bytes | str) -> ProtocolEnvelope:
    """Inverse of encode_envelope.  Unknown extra fields are ignored."""
    try:
        doc = json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedJson(f"undecodable frame: {exc}") from None
    if not isinstance(doc, dict):
        raise MalformedJson("frame is not a JSON object")
    try:
        op = Op(doc["op"])
    except KeyError:
        raise MissingField("op") from None
    except ValueError:
        raise UnknownOp(f"unknown op {doc['op']!r}") from None
    topic = doc.get("topic")
    if not isinstance(topic, str) or not topic:
        raise MissingField("topic")
    if op is Op.PUBLISH and "msg" not in doc:
        raise MissingField("msg", "publish envelopes carry msg")
    if op in (Op.SUBSCRIBE, Op.ADVERTISE) and not doc.get("type"):
        raise MissingField("type", f"{op.value} envelopes carry a message type")
    try:
        return ProtocolEnvelope(
            op=op,
            topic=topic,
            msg_type=doc.get("type"),
            msg=doc.get("msg"),
            id=doc.get("id"),
            throttle_rate=doc.get("throttle_rate"),
            queue_length=doc.get("queue_length"),
        )
    except MissingField:
        raise
    except ProtocolError:
        raise


class Direction(str, Enum):
    INBOUND = "inbound"
    OUTBOUND = "outbound"


@dataclass(frozen=True)
class TopicBinding:
    topic: str
    msg_type: str
    direction: Direction
    handler_id: int


Handler = Callable[[str, Any], None]
FrameTap = Callable[[str, bytes, float], None]  # (direction, frame, monotonic time)


@dataclass
class SessionConfig:
    open_timeout: float = 5.0
    on_close: Callable[[], None] | None = None
    on_frame: FrameTap | None = None  # wire tap for logging/latency oracles


class ClientSession:
    """Open pub/sub connection with a background receive loop.

    Inbound publish envelopes are dispatched to the handler subscribed to
    their topic; publishes on unknown topics and undecodable frames are
    dropped without ending the session.
    """

    def __init__(self, conn, url: str, config: SessionConfig):
        self._conn = conn
        self.url = url
        self._config = config
        self._lock = threading.Lock()
        self._send_lock = threading.Lock()
        self._inbound: dict[str, TopicBinding] = {}
        self._handlers: dict[str, Handler] = {}
        self._outbound: dict[str, TopicBinding] = {}
        self._advertised: set[str] = set()
        self._next_handler_id = 1
        self._closed = threading.Event()
        self.dropped_frames = 0
        self._recv_thread = threading.Thread(
            target=self._receive_loop, name=f"proto-recv {url}", daemon=True)
        self._recv_thread.start()

    # -- wire helpers --------------------------------------------------------

    def _send(self, envelope: ProtocolEnvelope) -> None:
        if self._closed.is_set():
            raise SessionClosed(f"session to {self.url} is closed")
        frame = encode_envelope(envelope)
        try:
            with self._send_lock:
                self._conn.send(frame.decode("utf-8"))
        except ConnectionClosed as exc:
            self._mark_closed()
            raise SessionClosed(f"send failed: {exc}") from None
        if self._config.on_frame:
            self._config.on_frame("send", frame, time.monotonic())

    def _receive_loop(self) -> None:
        try:
            while True:
                raw = self._conn.recv()
                now = time.monotonic()
                if isinstance(raw, str):
                    raw = raw.encode("utf-8")
                if self._config.on_frame:
                    self._config.on_frame("recv", raw, now)
                try:
                    envelope = decode_envelope(raw)
                except ProtocolError:
                    self.dropped_frames += 1
                    continue
                if envelope.op is not Op.PUBLISH:
                    continue
                with self._lock:
                    handler = self._handlers.get(envelope.topic)
                if handler is None:
                    self.dropped_frames += 1
                    continue
                try:
                    handler(envelope.topic, envelope.msg)
                except Exception:
                    logger.exception("handler for %s raised", envelope.topic)
        except ConnectionClosed:
            pass
        except Exception:
            logger.exception("receive loop for %s died", self.url)
        finally:
            self._mark_closed()

    def _mark_closed(self) -> None:
        if not self._closed.is_set():
            self._closed.set()
            if self._config.on_close:
                try:
                    self._config.on_close()
                except Exception:
                    logger.exception("on_close callback raised")

    # -- public API ----------------------------------------------------------

    @property
    def closed(self) -> bool:
        return self._closed.is_set()

    def wait_closed(self, timeout: float | None = None) -> bool:
        return self._closed.wait(timeout)

    def subscribe(self, topic: str, msg_type: str, handler: Handler,
                  *, throttle_rate: int | None = None,
                  queue_length: int | None = None) -> TopicBinding:
        """Bind a handler and send the subscribe envelope.

        The handler runs on the receive loop, once per inbound publish on
        the topic, in arrival order.
        """
        with self._lock:
            if topic in self._inbound:
                raise DuplicateBinding(f"already subscribed to {topic}")
            binding = TopicBinding(topic=topic, msg_type=msg_type,
                                   direction=Direction.INBOUND,
                                   handler_id=self._next_handler_id)
            self._next_handler_id += 1
            self._inbound[topic] = binding
            self._handlers[topic] = handler
        try:
            self._send(ProtocolEnvelope(op=Op.SUBSCRIBE, topic=topic, msg_type=msg_type,
                                        throttle_rate=throttle_rate,
                                        queue_length=queue_length))
        except SessionClosed:
            with self._lock:
                self._inbound.pop(topic, None)
                self._handlers.pop(topic, None)
            raise
        return binding

    def unsubscribe(self, topic: str) -> None:
        with self._lock:
            self._inbound.pop(topic, None)
            self._handlers.pop(topic, None)
        self._send(ProtocolEnvelope(op=Op.UNSUBSCRIBE, topic=topic))

    def advertise_and_publish(self, topic: str, msg_type: str, msg: Any) -> None:
        """Publish, advertising the topic first exactly once per session."""
        with self._lock:
            advertise = topic not in self._advertised
            if advertise:
                self._advertised.add(topic)
                if topic not in self._outbound:
                    self._outbound[topic] = TopicBinding(
                        topic=topic, msg_type=msg_type,
                        direction=Direction.OUTBOUND,
                        handler_id=self._next_handler_id)
                    self._next_handler_id += 1
        if advertise:
            try:
                self._send(ProtocolEnvelope(op=Op.ADVERTISE, topic=topic, msg_type=msg_type))
            except SessionClosed:
                with self._lock:
                    self._advertised.discard(topic)
                    self._outbound.pop(topic, None)
                raise
        self._send(ProtocolEnvelope(op=Op.PUBLISH, topic=topic, msg=msg))

    def close(self) -> None:
        try:
            self._conn.close()
        except Exception:
            pass
        self._recv_thread.join(timeout=5.0)
        self._mark_closed()

    def __enter__(self) -> "ClientSession":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def session_connect(url: str, config: SessionConfig | None = None) -> ClientSession:
    """Open a session to a ws:// endpoint and start its receive loop."""
    config = config or SessionConfig()
    if not url.startswith("ws://"):
        raise ConnectFailed(f"unsupported URL scheme: {url!r} (only ws:// is spoken)")
    try:
        conn = ws_connect(url, open_timeout=config.open_timeout)
    except Exception as exc:
        raise ConnectFailed(f"connect to {url} failed: {exc}") from exc
    return ClientSession(conn, url, config)
