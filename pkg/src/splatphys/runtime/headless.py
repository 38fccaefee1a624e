"""Headless scenario runner: metrics CSV, frame PLYs, transform buffers."""

import csv
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from splatphys.bind import skin_all, transform_buffer
from splatphys.errors import SimulationFault
from splatphys.runtime.scenario import ScenarioRunner, ScenarioScript
from splatphys.splat import save_ply
from splatphys.splat.scene import SplatScene


@dataclass
class FrameMetrics:
    frame: int
    step_ms: float
    skin_ms: float
    total_ms: float

    @property
    def fps(self):
        return 1000.0 / self.total_ms if self.total_ms > 0 else float("inf")

    def row(self):
        return [self.frame, f"{self.step_ms:.4f}", f"{self.skin_ms:.4f}",
                f"{self.total_ms:.4f}", f"{self.fps:.2f}"]


def skin_bundle(bundle, reuse=None):
    """Skin every object; returns list of (object_id, pos f32, rot f32)."""
    out = []
    p = bundle.engine.particles
    for i, obj in enumerate(bundle.objects):
        sl = bundle.object_slice(obj)
        d_t = (p.x[sl] - p.x0[sl]).astype(np.float32)
        d_r = p.delta_rot[sl].astype(np.float32)
        buffers = reuse[i] if reuse else (None, None)
        pos, rot = skin_all(obj.binding, d_t, d_r, out_pos=buffers[0], out_rot=buffers[1])
        out.append((obj.object_id, pos, rot))
    return out


def merged_frame_scene(bundle, skinned):
    """Environment + transformed objects as one SplatScene for export."""
    parts = [bundle.environment]
    for obj, (_, pos, rot) in zip(bundle.objects, skinned):
        moved = obj.scene.copy()
        moved.positions[:] = pos
        norms = np.linalg.norm(rot.astype(np.float64), axis=1, keepdims=True)
        moved.rotations[:] = (rot / np.where(norms == 0, 1.0, norms)).astype(np.float32)
        parts.append(moved)
    return SplatScene.concatenate(parts)


def run_headless(
    bundle,
    scenario=None,
    duration=1.0,
    out_dir=None,
    export_frames=True,
    save_transforms=False,
):
    """Step the bundle for `duration` seconds of simulation time.

    Writes frame_%05d.ply and metrics.csv under out_dir (when given); with
    `save_transforms` also transforms.bin, the concatenated per-frame
    per-object little-endian [t xyz | q wxyz] float32 buffers, which is the
    determinism golden format. Returns (metrics list, transforms bytes|None).
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    engine = bundle.engine
    dt = engine.config.dt
    n_frames = int(round(duration / dt))
    out_dir = Path(out_dir) if out_dir else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)

    if isinstance(scenario, (str, Path)):
        scenario = ScenarioScript.load(scenario)
    runner = ScenarioRunner(scenario, bundle) if scenario else None

    metrics = []
    transforms = bytearray() if save_transforms else None
    csv_fh = open(out_dir / "metrics.csv", "w", newline="") if out_dir else None
    writer = None
    if csv_fh:
        writer = csv.writer(csv_fh)
        writer.writerow(["frame", "step_ms", "skin_ms", "total_ms", "fps"])

    try:
        for frame in range(n_frames):
            t_frame = time.perf_counter()
            if runner:
                runner.apply(frame * dt)
            try:
                timing = engine.step()
            except SimulationFault as exc:
                raise SimulationFault(
                    f"aborted; last good frame {frame - 1}", frame=frame
                ) from exc

            t_skin = time.perf_counter()
            skinned = skin_bundle(bundle)
            skin_ms = (time.perf_counter() - t_skin) * 1e3

            if transforms is not None:
                for _, pos, rot in skinned:
                    transforms.extend(transform_buffer(pos, rot))
            if out_dir and export_frames:
                save_ply(merged_frame_scene(bundle, skinned), out_dir / f"frame_{frame:05d}.ply")

            total_ms = (time.perf_counter() - t_frame) * 1e3
            fm = FrameMetrics(frame=frame, step_ms=timing.step_ms, skin_ms=skin_ms,
                              total_ms=total_ms)
            metrics.append(fm)
            if writer:
                writer.writerow(fm.row())
    finally:
        if csv_fh:
            csv_fh.close()

    return metrics, bytes(transforms) if transforms is not None else None
