"""Binary wire protocol for the streaming service.

Message = 1 type byte + payload; all integers little-endian, floats float32.

    INIT    0x01  version, object count, scene buffers + binding tables,
                  JSON metadata trailer
    FRAME   0x02  frame index, sim time, per-object particle (ΔT, ΔR)
    GRAB    0x10  pick ray (origin, direction)
    DRAG    0x11  world target
    RELEASE 0x12  -
    SPAWN   0x13  origin, velocity, radius, mass
    ERROR   0x7F  code, utf-8 message

INIT carries the static splat buffers per object (rest pose) and the binding
tables in the transform-buffer convention; FRAME carries only per-particle
deltas, so bandwidth scales with particle count and the client runs the
skinning math itself.
"""

import json
import struct

import numpy as np

PROTOCOL_VERSION = 1

MSG_INIT = 0x01
MSG_FRAME = 0x02
MSG_GRAB = 0x10
MSG_DRAG = 0x11
MSG_RELEASE = 0x12
MSG_SPAWN = 0x13
MSG_ERROR = 0x7F

CATEGORY_CODES = {"deformation": 0, "rigid": 1, "granular": 2}
CATEGORY_NAMES = {v: k for k, v in CATEGORY_CODES.items()}

ERR_MALFORMED = 1
ERR_NOT_OWNER = 2
ERR_PROTOCOL = 3


class ProtocolError(ValueError):
    pass


class _Reader:
    def __init__(self, data):
        self.data = data
        self.off = 0

    def take(self, n):
        if self.off + n > len(self.data):
            raise ProtocolError(f"message truncated at byte {self.off} (+{n})")
        out = self.data[self.off : self.off + n]
        self.off += n
        return out

    def u8(self):
        return self.take(1)[0]

    def u32(self):
        return struct.unpack("<I", self.take(4))[0]

    def f32(self, count=1):
        vals = struct.unpack(f"<{count}f", self.take(4 * count))
        return vals[0] if count == 1 else np.asarray(vals, dtype=np.float32)

    def array(self, dtype, shape):
        n = int(np.prod(shape))
        raw = self.take(n * np.dtype(dtype).itemsize)
        return np.frombuffer(raw, dtype=dtype).reshape(shape).copy()

    def done(self):
        if self.off != len(self.data):
            raise ProtocolError(f"{len(self.data) - self.off} trailing bytes")


def _scene_block(scene):
    from splatphys.splat.render import dc_color

    n = len(scene)
    parts = [struct.pack("<I", n)]
    parts.append(scene.positions.astype("<f4").tobytes())
    parts.append(scene.scales.astype("<f4").tobytes())
    parts.append(scene.rotations.astype("<f4").tobytes())
    parts.append(scene.opacities.astype("<f4").tobytes())
    parts.append(dc_color(scene.sh_dc).astype("<f4").tobytes())
    return b"".join(parts)


def _read_scene_block(r):
    n = r.u32()
    return {
        "count": n,
        "positions": r.array("<f4", (n, 3)),
        "scales": r.array("<f4", (n, 3)),
        "rotations": r.array("<f4", (n, 4)),
        "opacities": r.array("<f4", (n,)),
        "colors": r.array("<f4", (n, 3)),
    }


def encode_init(bundle):
    parts = [
        struct.pack("<BII", MSG_INIT, PROTOCOL_VERSION, len(bundle.objects)),
        _scene_block(bundle.environment),
    ]
    meta = {"objects": [], "dt": bundle.engine.config.dt}
    for obj in bundle.objects:
        b = obj.binding
        n, m = b.indices.shape
        parts.append(
            struct.pack(
                "<IBBI",
                obj.object_id,
                CATEGORY_CODES[obj.material.category],
                m,
                obj.particle_count,
            )
        )
        parts.append(_scene_block(obj.scene))
        parts.append(b.indices.astype("<u4").tobytes())
        parts.append(b.weights.astype("<f4").tobytes())
        parts.append(b.offsets_xd.astype("<f4").tobytes())
        meta["objects"].append(
            {
                "id": obj.object_id,
                "category": obj.material.category,
                "mass_kg": obj.material.mass_kg,
                "kernels": n,
                "particles": obj.particle_count,
            }
        )
    blob = json.dumps(meta).encode()
    parts.append(struct.pack("<I", len(blob)))
    parts.append(blob)
    return b"".join(parts)


def decode_init(data):
    r = _Reader(data)
    if r.u8() != MSG_INIT:
        raise ProtocolError("not an INIT message")
    version = r.u32()
    if version != PROTOCOL_VERSION:
        raise ProtocolError(f"protocol version mismatch: {version} != {PROTOCOL_VERSION}")
    n_objects = r.u32()
    env = _read_scene_block(r)
    objects = []
    for _ in range(n_objects):
        object_id, category, m, particle_count = struct.unpack("<IBBI", r.take(10))
        scene = _read_scene_block(r)
        n = scene["count"]
        objects.append(
            {
                "object_id": object_id,
                "category": CATEGORY_NAMES[category],
                "m": m,
                "particle_count": particle_count,
                "scene": scene,
                "indices": r.array("<u4", (n, m)),
                "weights": r.array("<f4", (n, m)),
                "offsets_xd": r.array("<f4", (n, m, 3)),
            }
        )
    meta_len = r.u32()
    meta = json.loads(r.take(meta_len).decode())
    r.done()
    return {"version": version, "environment": env, "objects": objects, "meta": meta}


def encode_frame(frame_index, sim_time, object_deltas):
    """object_deltas: list of (object_id, dT (P,3) f32, dR (P,4) f32)."""
    parts = [struct.pack("<BIfI", MSG_FRAME, frame_index, sim_time, len(object_deltas))]
    for object_id, d_t, d_r in object_deltas:
        parts.append(struct.pack("<II", object_id, len(d_t)))
        parts.append(np.ascontiguousarray(d_t, dtype="<f4").tobytes())
        parts.append(np.ascontiguousarray(d_r, dtype="<f4").tobytes())
    return b"".join(parts)


def decode_frame(data):
    r = _Reader(data)
    if r.u8() != MSG_FRAME:
        raise ProtocolError("not a FRAME message")
    frame_index, sim_time, n_objects = struct.unpack("<IfI", r.take(12))
    objects = []
    for _ in range(n_objects):
        object_id, count = struct.unpack("<II", r.take(8))
        d_t = r.array("<f4", (count, 3))
        d_r = r.array("<f4", (count, 4))
        objects.append((object_id, d_t, d_r))
    r.done()
    return {"frame": frame_index, "time": sim_time, "objects": objects}


def encode_grab(origin, direction):
    return struct.pack("<B6f", MSG_GRAB, *origin, *direction)


def encode_drag(target):
    return struct.pack("<B3f", MSG_DRAG, *target)


def encode_release():
    return struct.pack("<B", MSG_RELEASE)


def encode_spawn(origin, velocity, radius, mass):
    return struct.pack("<B8f", MSG_SPAWN, *origin, *velocity, radius, mass)


def encode_error(code, message):
    blob = message.encode()
    return struct.pack("<BHH", MSG_ERROR, code, len(blob)) + blob


def decode_client_message(data):
    """Parse one client → server message into (kind, payload dict)."""
    r = _Reader(data)
    kind = r.u8()
    if kind == MSG_GRAB:
        vals = r.f32(6)
        r.done()
        return "grab", {"origin": vals[:3], "direction": vals[3:]}
    if kind == MSG_DRAG:
        vals = r.f32(3)
        r.done()
        return "drag", {"target": vals}
    if kind == MSG_RELEASE:
        r.done()
        return "release", {}
    if kind == MSG_SPAWN:
        vals = r.f32(8)
        r.done()
        return "spawn", {
            "origin": vals[:3],
            "velocity": vals[3:6],
            "radius": float(vals[6]),
            "mass": float(vals[7]),
        }
    raise ProtocolError(f"unknown client message type 0x{kind:02x}")


def decode_error(data):
    r = _Reader(data)
    if r.u8() != MSG_ERROR:
        raise ProtocolError("not an ERROR message")
    code, length = struct.unpack("<HH", r.take(4))
    message = r.take(length).decode()
    r.done()
    return {"code": code, "message": message}
