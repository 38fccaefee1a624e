"""Benchmark harness: skinning throughput per backend and full-frame cost.

The acceptance budget presumes 8 hardware threads; on smaller machines the
skinning budget scales by the missing parallelism (the kernel is
embarrassingly parallel over kernels), which `budget_scale()` reports.
"""

import os
import time

import numpy as np

from splatphys._kernels import get_backend
from splatphys.bind import BindingTable, skin_all
from splatphys.solver import (
    ConstraintSet,
    ContactGroup,
    Engine,
    ParticleSet,
    Phase,
    SolverConfig,
    SupportPlane,
)

REFERENCE_THREADS = 8
SKIN_BUDGET_MS = 8.0
FRAME_BUDGET_MS = 16.0


def hardware_threads():
    return os.cpu_count() or 1


def budget_scale():
    """Budget multiplier for machines with fewer than the reference threads."""
    return max(1.0, REFERENCE_THREADS / hardware_threads())


def synthetic_binding(n_kernels, n_particles, m=4, seed=0):
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, n_particles, size=(n_kernels, m)).astype(np.int32)
    w = rng.random((n_kernels, m), dtype=np.float32)
    w /= w.sum(axis=1, keepdims=True)
    xd = rng.normal(scale=0.05, size=(n_kernels, m, 3)).astype(np.float32)
    rest_pos = rng.normal(size=(n_kernels, 3)).astype(np.float32)
    q = rng.normal(size=(n_kernels, 4))
    rest_rot = (q / np.linalg.norm(q, axis=1, keepdims=True)).astype(np.float32)
    binding = BindingTable(idx, w, xd, rest_pos, rest_rot)

    d_t = rng.normal(scale=0.1, size=(n_particles, 3)).astype(np.float32)
    q = rng.normal(size=(n_particles, 4))
    d_r = (q / np.linalg.norm(q, axis=1, keepdims=True)).astype(np.float32)
    return binding, d_t, d_r


def time_skinning(n_kernels=200_000, n_particles=1500, m=4, repeats=7, backend="native"):
    """Median per-call skinning time in ms for one backend."""
    kern = get_backend(backend)
    binding, d_t, d_r = synthetic_binding(n_kernels, n_particles, m)
    out_pos = np.empty((n_kernels, 3), dtype=np.float32)
    out_rot = np.empty((n_kernels, 4), dtype=np.float32)
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        skin_all(binding, d_t, d_r, out_pos=out_pos, out_rot=out_rot, kernels=kern)
        times.append((time.perf_counter() - t0) * 1e3)
    return float(np.median(times))


def synthetic_engine(n_particles=1500, seed=0):
    """Mixed granular pile over a plane: representative full-step load."""
    rng = np.random.default_rng(seed)
    side = max(int(round(n_particles ** (1.0 / 3.0))), 2)
    grid = np.stack(
        np.meshgrid(*[np.arange(side)] * 3, indexing="ij"), -1
    ).reshape(-1, 3)[:n_particles]
    pts = grid * 0.022 + rng.normal(scale=0.002, size=(len(grid), 3))
    pts[:, 1] += 0.2
    particles = ParticleSet(pts, phase=Phase.GRANULAR, radius=0.01)
    constraints = ConstraintSet(
        contacts=[ContactGroup(indices=np.arange(len(pts), dtype=np.int32), mu=0.3)]
    )
    plane = SupportPlane(normal=(0, 1, 0), offset=0.0)
    return Engine(particles, constraints, plane=plane, config=SolverConfig())


def time_step(n_particles=1500, warmup=5, repeats=10):
    """Median engine.step() time in ms (dt=0.02, 4 substeps, 8 iterations)."""
    engine = synthetic_engine(n_particles)
    for _ in range(warmup):
        engine.step()
    times = [engine.step().step_ms for _ in range(repeats)]
    return float(np.median(times))


def run_benchmark(n_kernels=200_000, n_particles=1500, m=4):
    """Times both backends; returns the report dict used by `splatphys bench`."""
    available = {"native": True, "pure": True}
    try:
        get_backend("native")
    except ImportError:
        available["native"] = False

    report = {
        "kernels": n_kernels,
        "particles": n_particles,
        "m": m,
        "hardware_threads": hardware_threads(),
        "budget_scale": budget_scale(),
        "skin_budget_ms": SKIN_BUDGET_MS * budget_scale(),
        "frame_budget_ms": FRAME_BUDGET_MS * budget_scale(),
        "backends": {},
    }
    for name, ok in available.items():
        if not ok:
            report["backends"][name] = None
            continue
        report["backends"][name] = {
            "skin_ms": time_skinning(n_kernels, n_particles, m, backend=name)
        }
    report["step_ms"] = time_step(n_particles)
    return report


def format_report(report):
    lines = [
        f"kernels={report['kernels']}  particles={report['particles']}  m={report['m']}",
        f"hardware threads: {report['hardware_threads']} "
        f"(budget x{report['budget_scale']:.1f} vs 8-thread reference)",
        f"{'backend':<10}{'skin ms/frame':>16}",
    ]
    for name, entry in report["backends"].items():
        val = f"{entry['skin_ms']:.2f}" if entry else "unavailable"
        lines.append(f"{name:<10}{val:>16}")
    lines.append(f"step ({report['particles']} particles): {report['step_ms']:.2f} ms/frame")
    lines.append(
        f"budgets: skin ≤ {report['skin_budget_ms']:.1f} ms, "
        f"step+skin ≤ {report['frame_budget_ms']:.1f} ms"
    )
    return "\n".join(lines)
