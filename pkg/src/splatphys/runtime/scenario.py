"""Scripted scenario timelines.

JSON: {"actions": [
    {"type": "spring", "start": 0.0, "end": 2.0, "object": 1,
     "grab": [x,y,z], "anchor": [x,y,z], "stiffness": 0.8},
    {"type": "drag", "start": 0.0, "end": 2.0, "object": 1,
     "grab": [x,y,z], "path": [[x,y,z], ...]},
    {"type": "impulse", "time": 1.0, "object": 2, "velocity": [vx,vy,vz]},
    {"type": "spawn_projectile", "time": 1.5, "origin": [...],
     "velocity": [...], "radius": 0.05, "mass": 0.2},
    {"type": "release", "time": 2.5, "object": 1}
]}
Start times must be non-decreasing in file order.
"""

import json
from dataclasses import dataclass, field

import numpy as np

_KINDS = {"spring", "drag", "impulse", "spawn_projectile", "release"}


@dataclass
class Action:
    kind: str
    start: float
    end: float
    params: dict


@dataclass
class ScenarioScript:
    actions: list = field(default_factory=list)

    @classmethod
    def from_json(cls, data):
        if isinstance(data, (str, bytes)):
            data = json.loads(data)
        actions = []
        last_start = -np.inf
        for i, rec in enumerate(data.get("actions", [])):
            kind = rec.get("type")
            if kind not in _KINDS:
                raise ValueError(f"actions[{i}]: unknown action type {kind!r}")
            if kind in ("impulse", "spawn_projectile", "release"):
                start = float(rec["time"])
                end = start
            else:
                start = float(rec["start"])
                end = float(rec["end"])
                if end < start:
                    raise ValueError(f"actions[{i}]: end {end} before start {start}")
            if start < last_start:
                raise ValueError(f"actions[{i}]: start times must be non-decreasing")
            last_start = start
            actions.append(Action(kind=kind, start=start, end=end, params=rec))
        return cls(actions=actions)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json(fh.read())

    def referenced_objects(self):
        return sorted(
            {a.params["object"] for a in self.actions if "object" in a.params}
        )


class ScenarioRunner:
    """Applies a script to an engine as simulation time advances."""

    def __init__(self, script, bundle):
        self.script = script
        self.bundle = bundle
        known = {obj.object_id for obj in bundle.objects}
        missing = [oid for oid in script.referenced_objects() if oid not in known]
        if missing:
            raise ValueError(f"scenario references unknown object ids: {missing}")
        self._pending = list(script.actions)
        self._active = []  # (action, spring handle)

    def _pick(self, object_id, point):
        obj = next(o for o in self.bundle.objects if o.object_id == object_id)
        sl = slice(obj.particle_start, obj.particle_start + obj.particle_count)
        x0 = self.bundle.engine.particles.x0[sl]
        local = int(np.argmin(np.linalg.norm(x0 - np.asarray(point, dtype=np.float64), axis=1)))
        return obj.particle_start + local

    def apply(self, t):
        """Start/advance/stop actions for simulation time t (frame start)."""
        engine = self.bundle.engine
        still_pending = []
        for action in self._pending:
            if action.start > t + 1e-12:
                still_pending.append(action)
                continue
            p = action.params
            if action.kind == "impulse":
                obj = next(o for o in self.bundle.objects if o.object_id == p["object"])
                sl = slice(obj.particle_start, obj.particle_start + obj.particle_count)
                engine.particles.v[sl] += np.asarray(p["velocity"], dtype=np.float64)
            elif action.kind == "spawn_projectile":
                engine.spawn_projectile(
                    origin=p["origin"],
                    velocity=p["velocity"],
                    radius=p.get("radius", 0.05),
                    mass=p.get("mass", 0.2),
                )
            elif action.kind == "release":
                self._release_object(p["object"])
            else:  # spring / drag
                particle = self._pick(p["object"], p["grab"])
                target = p["anchor"] if action.kind == "spring" else p["path"][0]
                spring = engine.add_spring(
                    particle, target, stiffness=p.get("stiffness", 0.8)
                )
                self._active.append((action, spring))
        self._pending = still_pending

        for action, spring in list(self._active):
            p = action.params
            if t > action.end + 1e-12:
                engine.remove_spring(spring)
                self._active.remove((action, spring))
                continue
            if action.kind == "drag":
                path = np.asarray(p["path"], dtype=np.float64)
                span = max(action.end - action.start, 1e-9)
                u = np.clip((t - action.start) / span, 0.0, 1.0) * (len(path) - 1)
                i = min(int(u), len(path) - 2)
                spring.target = path[i] + (u - i) * (path[i + 1] - path[i])

    def _release_object(self, object_id):
        engine = self.bundle.engine
        for action, spring in list(self._active):
            if action.params.get("object") == object_id:
                engine.remove_spring(spring)
                self._active.remove((action, spring))
