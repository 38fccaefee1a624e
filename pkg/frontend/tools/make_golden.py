#!/usr/bin/env python3
"""Record the golden session for the viewer tests.

Builds the synthetic world, runs a 100-frame scripted session, and writes
under test/golden/:
    init.bin        the INIT message bytes
    frames.bin      100 FRAME messages, each prefixed with a u32 length
    reference.bin   per frame, per object: server-side skinned kernels in
                    the transform-buffer convention [tx ty tz qw qx qy qz]
    meta.json       frame/object bookkeeping for the test harness
"""

import json
import struct
import sys
import tempfile
from pathlib import Path

import numpy as np

HERE = Path(__file__).resolve().parent
sys.path.insert(0, str(HERE.parent.parent / "tests"))

import worldbuild  # noqa: E402
from splatphys.bind import transform_buffer  # noqa: E402
from splatphys.runtime import protocol  # noqa: E402
from splatphys.runtime.bundle import build_bundle  # noqa: E402
from splatphys.runtime.headless import skin_bundle  # noqa: E402
from splatphys.runtime.scenario import ScenarioRunner, ScenarioScript  # noqa: E402

N_FRAMES = 100


def main():
    out_dir = HERE.parent / "test" / "golden"
    out_dir.mkdir(parents=True, exist_ok=True)

    with tempfile.TemporaryDirectory() as tmp:
        config_path = worldbuild.write_world(Path(tmp))
        bundle = build_bundle(config_path)

    obj = next(o for o in bundle.objects if o.object_id == worldbuild.DEFORMABLE_ID)
    sl = bundle.object_slice(obj)
    grab = bundle.engine.particles.x0[sl].mean(axis=0)
    script = ScenarioScript.from_json(
        {
            "actions": [
                {"type": "spring", "start": 0.2, "end": 1.4,
                 "object": worldbuild.DEFORMABLE_ID,
                 "grab": grab.tolist(),
                 "anchor": (grab + [0.05, 0.35, 0.0]).tolist(),
                 "stiffness": 0.2},
                {"type": "impulse", "time": 1.5, "object": worldbuild.RIGID_ID,
                 "velocity": [0.15, 0.6, 0.0]},
            ]
        }
    )
    runner = ScenarioRunner(script, bundle)

    (out_dir / "init.bin").write_bytes(protocol.encode_init(bundle))

    frames = bytearray()
    reference = bytearray()
    dt = bundle.engine.config.dt
    for frame in range(N_FRAMES):
        runner.apply(frame * dt)
        bundle.engine.step()
        payload = protocol.encode_frame(frame, frame * dt, bundle.frame_deltas())
        frames += struct.pack("<I", len(payload))
        frames += payload
        for _, pos, rot in skin_bundle(bundle):
            reference += transform_buffer(pos, rot)

    (out_dir / "frames.bin").write_bytes(frames)
    (out_dir / "reference.bin").write_bytes(reference)
    meta = {
        "frames": N_FRAMES,
        "objects": [
            {"id": o.object_id, "kernels": len(o.scene), "particles": o.particle_count}
            for o in bundle.objects
        ],
    }
    (out_dir / "meta.json").write_text(json.dumps(meta, indent=2))
    total = sum(len(o.scene) for o in bundle.objects)
    print(f"golden session: {N_FRAMES} frames, {total} skinned kernels/frame, "
          f"{len(frames)} frame bytes, {len(reference)} reference bytes")


if __name__ == "__main__":
    main()
