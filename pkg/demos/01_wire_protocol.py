"""
The pub/sub wire protocol
=========================

Every frame on the wire is one JSON envelope.  Five operations exist:
advertise, unadvertise, publish, subscribe, unsubscribe.  This script
builds envelopes, shows their exact wire bytes, and round-trips them.
"""

from navviz.proto import (Op, ProtocolEnvelope, decode_envelope, encode_envelope,
                          MalformedJson, UnknownOp)

# A subscription to the laser scanner topic.
subscribe = ProtocolEnvelope(op=Op.SUBSCRIBE, topic="/scan",
                             msg_type="sensor_msgs/LaserScan")
print("subscribe frame: ", encode_envelope(subscribe).decode())

# Publishing embeds the message object verbatim under "msg".
goal = ProtocolEnvelope(op=Op.PUBLISH, topic="/move_base_simple/goal",
                        msg={"pose": {"position": {"x": 2.0, "y": 1.0, "z": 0.0}}})
print("publish frame:   ", encode_envelope(goal).decode())

# decode(encode(e)) == e for every valid envelope.
assert decode_envelope(encode_envelope(subscribe)) == subscribe
assert decode_envelope(encode_envelope(goal)) == goal
print("round-trip:       ok")

# Unknown extra fields are ignored for forward compatibility; unknown ops
# and broken JSON are hard errors.
tolerant = decode_envelope(b'{"op":"publish","topic":"/odom","msg":{},"compression":"none"}')
print("extra fields:     ignored ->", tolerant)

for raw, expected in [(b'{"op":"dance","topic":"/x"}', UnknownOp),
                      (b'{"op":"publish","topic', MalformedJson)]:
    try:
        decode_envelope(raw)
    except expected as exc:
        print(f"{expected.__name__}: {exc}")
