"""Scene assembly: segmentation → fill → particles → materials → binding →
collision proxies → engine, driven by a JSON config.

Config schema (paths resolve relative to the config file):
    scene_ply: str                     trained splat scene
    scene_name: str                    fixture corpus key
    cameras: str                       camera JSON (with mask paths)
    classifier: str                    identity classifier sidecar
    materials: {"fixtures": dir} | {"endpoint": url, "token_env": name}
    sigma1: float = 0.3
    objects: [{id, sigma2=0.3, dialogue=None, h=None, material=None}]
    fill: {shrink=0.2, s_f=0.6, include_above_surface=False}
    solver: {dt, substeps, iterations, gravity}
    correction_a: float = 1.0
    anisotropy_limit: float = 4.0      (paper gives no value; exposed here)
    up_axis: 1, up_sign: 1
    plane: {"fit": true, ...} | {"normal": [..], "offset": ..} | null
    sdf: {"h": float} | null
    seed: int = 0
    deterministic: bool = true
"""

import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from splatphys.bind import BindingTable, build_binding, default_m_for_phase
from splatphys.errors import BuildError
from splatphys.fill import fill_granular
from splatphys.materials import (
    AnalysisRequest,
    FixtureClient,
    RemoteClient,
    apply_material,
    parse_material,
)
from splatphys.segment import IdentityClassifier, load_camera_views, segment_object
from splatphys.solver import (
    ConstraintSet,
    Engine,
    ParticleSet,
    SolverConfig,
    SupportPlane,
    build_sdf,
    fit_support_plane,
    generate_particles,
)
from splatphys.solver.particles import Phase
from splatphys.splat import clamp_anisotropy, load_ply

DEFAULT_VOXELS_ALONG_LONGEST_AXIS = 24


@dataclass
class ObjectBundle:
    object_id: int
    scene: object  # rest-pose kernels (granule scene for granular objects)
    material: object
    binding: BindingTable
    particle_start: int
    particle_count: int
    h: float
    fill_report: dict | None = None
    segmentation: dict | None = None


@dataclass
class SceneBundle:
    environment: object
    objects: list
    engine: Engine
    plane: SupportPlane | None
    config: dict = field(default_factory=dict)
    report: dict = field(default_factory=dict)

    def object_slice(self, obj):
        return slice(obj.particle_start, obj.particle_start + obj.particle_count)

    def frame_deltas(self):
        """Per-object (object_id, ΔT, ΔR) float32 slices for streaming."""
        p = self.engine.particles
        d_t = (p.x - p.x0).astype(np.float32)
        d_r = p.delta_rot.astype(np.float32)
        return [
            (obj.object_id, d_t[self.object_slice(obj)], d_r[self.object_slice(obj)])
            for obj in self.objects
        ]

    def validate(self):
        for obj in self.objects:
            if len(obj.binding) != len(obj.scene):
                raise ValueError(
                    f"object {obj.object_id}: binding size {len(obj.binding)} "
                    f"!= kernel count {len(obj.scene)}"
                )


def _default_h(scene):
    lo, hi = scene.bounds
    return float((hi - lo).max() / DEFAULT_VOXELS_ALONG_LONGEST_AXIS)


def _stage(name):
    def wrap(fn):
        def inner(*args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except BuildError:
                raise
            except Exception as exc:
                raise BuildError(name, str(exc)) from exc

        return inner

    return wrap


def _material_client(cfg, base):
    mat = cfg.get("materials", {})
    if "endpoint" in mat:
        token = os.environ.get(mat.get("token_env", ""), None)
        return RemoteClient(mat["endpoint"], token=token)
    if "fixtures" in mat:
        return FixtureClient(base / mat["fixtures"])
    from splatphys.materials import default_fixture_client

    return default_fixture_client()


def build_bundle(config, base_dir=None):
    """Build a SceneBundle from a config dict or path. Raises BuildError
    naming the failing stage."""
    if isinstance(config, (str, Path)):
        base = Path(config).parent
        with open(config) as fh:
            cfg = json.load(fh)
    else:
        cfg = dict(config)
        base = Path(base_dir) if base_dir else Path(".")

    report = {"stages": {}, "objects": {}}
    t_start = time.perf_counter()

    scene = _stage("load_scene")(load_ply)(base / cfg["scene_ply"])
    limit = cfg.get("anisotropy_limit", 4.0)
    n_clamped = _stage("anisotropy_clamp")(clamp_anisotropy)(scene, limit)
    report["stages"]["load_scene"] = {"kernels": len(scene), "anisotropy_clamped": n_clamped}

    views = _stage("load_cameras")(load_camera_views)(base / cfg["cameras"])
    classifier = _stage("load_classifier")(IdentityClassifier.load)(base / cfg["classifier"])
    client = _stage("materials_client")(_material_client)(cfg, base)

    sigma1 = cfg.get("sigma1", 0.3)
    scene_name = cfg.get("scene_name", "scene")
    fill_cfg = cfg.get("fill", {})
    up_axis = cfg.get("up_axis", 1)
    up_sign = cfg.get("up_sign", 1)
    a = cfg.get("correction_a", 1.0)

    known_ids = set(np.unique(scene.object_ids).tolist())
    requested = [obj["id"] for obj in cfg.get("objects", [])]
    unknown = [oid for oid in requested if oid not in known_ids]
    if unknown:
        raise BuildError("segment", f"config references unknown object id(s): {unknown}")

    # segmentation for every requested object against the full scene
    seg_results = {}
    for obj_cfg in cfg.get("objects", []):
        oid = obj_cfg["id"]
        sigma2 = obj_cfg.get("sigma2", 0.3)
        result = _stage("segment")(segment_object)(scene, classifier, views, oid, sigma1, sigma2)
        seg_results[oid] = result
        report["objects"][oid] = {
            "feature_set": int(len(result.feature_set)),
            "mask_set": int(len(result.mask_set)),
            "final_set": int(len(result.final_set)),
            "empty_stage": result.empty_stage,
        }

    # overlap resolution: a kernel claimed by several objects goes to the
    # highest softmax score; ties are flagged in the report
    claimed = {}
    probs = classifier.probabilities(scene.features) if scene.features is not None else None
    ties = []
    for oid, result in seg_results.items():
        for k in result.final_set:
            k = int(k)
            if k not in claimed:
                claimed[k] = oid
            else:
                other = claimed[k]
                if probs is None:
                    ties.append(k)
                    continue
                p_new, p_old = probs[k, oid], probs[k, other]
                if p_new == p_old:
                    ties.append(k)
                if p_new > p_old:
                    claimed[k] = oid
    if ties:
        report["stages"]["overlaps"] = {"ties": sorted(set(ties))}

    env_mask = np.ones(len(scene), dtype=bool)
    object_sets = {oid: [] for oid in seg_results}
    for k, oid in claimed.items():
        object_sets[oid].append(k)
        env_mask[k] = False
    environment = scene.select(np.nonzero(env_mask)[0])

    # per-object pipeline
    objects = []
    particle_sets = []
    merged_constraints = ConstraintSet()
    offset = 0
    for obj_cfg in cfg.get("objects", []):
        oid = obj_cfg["id"]
        indices = np.asarray(sorted(object_sets[oid]), dtype=np.int64)
        if len(indices) == 0:
            raise BuildError("segment", f"object {oid}: empty final set")
        obj_scene = scene.select(indices)

        request = AnalysisRequest(
            scene=scene_name, object_id=oid, dialogue=obj_cfg.get("dialogue")
        )
        if obj_cfg.get("material") is not None:
            material = _stage("analyze")(parse_material)(obj_cfg["material"])
        else:
            material = _stage("analyze")(client.analyze)(request)

        h = obj_cfg.get("h") or _default_h(obj_scene)
        fill_report = None
        if material.category == "granular":
            # voxelize the content together with its container so the
            # interior below the powder surface is actually enclosed
            fill_input = obj_scene
            ctx_ids = [c for c in obj_cfg.get("fill_context", []) if c in object_sets]
            if ctx_ids:
                from splatphys.splat.scene import SplatScene

                ctx = [obj_scene] + [
                    scene.select(np.asarray(sorted(object_sets[c]), dtype=np.int64))
                    for c in ctx_ids
                ]
                fill_input = SplatScene.concatenate(ctx)
            obj_scene, fill_report = _stage("fill")(fill_granular)(
                fill_input,
                h,
                shrink=fill_cfg.get("shrink", 0.2),
                s_f=fill_cfg.get("s_f", 0.6),
                up_axis=up_axis,
                up_sign=up_sign,
                include_above_surface=fill_cfg.get("include_above_surface", False),
            )

        particles, constraints = _stage("generate_particles")(generate_particles)(
            obj_scene, material.category, h, fill_report=fill_report, object_id=oid
        )
        _stage("apply_material")(apply_material)(material, particles, constraints, a=a)

        m = default_m_for_phase(Phase(particles.phase[0]))
        binding = _stage("build_binding")(build_binding)(obj_scene, particles, m=m)

        objects.append(
            ObjectBundle(
                object_id=oid,
                scene=obj_scene,
                material=material,
                binding=binding,
                particle_start=offset,
                particle_count=len(particles),
                h=h,
                fill_report=fill_report,
                segmentation=report["objects"].get(oid),
            )
        )
        report["objects"][oid].update(
            {
                "category": material.category,
                "particles": len(particles),
                "kernels": len(obj_scene),
                "h": h,
            }
        )

        # shift constraint indices into the merged particle numbering
        for dc in constraints.distance:
            merged_constraints.distance.append(dc.offset(offset))
        for cl in constraints.clusters:
            cl.members = cl.members + offset
            merged_constraints.clusters.append(cl)
        for grp in constraints.contacts:
            grp.indices = grp.indices + offset
            merged_constraints.contacts.append(grp)
        if constraints.graph is not None:
            particle_sets.append((particles, constraints.graph))
        else:
            particle_sets.append((particles, None))
        offset += len(particles)

    merged_particles = ParticleSet(np.empty((0, 3)))
    graph_offsets = [np.zeros(1, dtype=np.int64)]
    graph_indices = []
    base_off = 0
    for particles, graph in particle_sets:
        merged_particles.append(particles)
        if graph is None:
            graph_offsets.append(
                np.full(len(particles), graph_offsets[-1][-1], dtype=np.int64)
            )
        else:
            graph_offsets.append(graph.offsets[1:] + (graph_offsets[-1][-1]))
            graph_indices.append(graph.indices + base_off)
        base_off += len(particles)
    from splatphys.solver.constraints import NeighborGraph

    merged_constraints.graph = NeighborGraph(
        np.concatenate(graph_offsets),
        np.concatenate(graph_indices) if graph_indices else np.empty(0, dtype=np.int32),
    )

    # collision proxies from the environment
    plane = None
    plane_cfg = cfg.get("plane", {"fit": True})
    if plane_cfg:
        if plane_cfg.get("fit", False):
            plane = _stage("fit_plane")(fit_support_plane)(
                environment,
                inlier_tol=plane_cfg.get("inlier_tol", 0.02),
                min_inlier_frac=plane_cfg.get("min_inlier_frac", 0.25),
                seed=cfg.get("seed", 0),
                gravity=cfg.get("solver", {}).get("gravity", (0.0, -9.8, 0.0)),
            )
        else:
            plane = SupportPlane(normal=plane_cfg["normal"], offset=plane_cfg["offset"])

    sdf = None
    sdf_cfg = cfg.get("sdf")
    if sdf_cfg:
        sdf = _stage("build_sdf")(build_sdf)(
            environment, sdf_cfg["h"], memory_budget_mb=sdf_cfg.get("memory_budget_mb", 512)
        )

    solver_cfg = cfg.get("solver", {})
    config_obj = SolverConfig(
        dt=solver_cfg.get("dt", 0.02),
        substeps=solver_cfg.get("substeps", 4),
        iterations=solver_cfg.get("iterations", 8),
        gravity=tuple(solver_cfg.get("gravity", (0.0, -9.8, 0.0))),
        damping=solver_cfg.get("damping", 0.0),
        deterministic=cfg.get("deterministic", True),
    )
    engine = Engine(merged_particles, merged_constraints, plane=plane, sdf=sdf,
                    config=config_obj)

    report["stages"]["total_ms"] = (time.perf_counter() - t_start) * 1e3
    report["particles_total"] = len(merged_particles)
    bundle = SceneBundle(
        environment=environment,
        objects=objects,
        engine=engine,
        plane=plane,
        config=cfg,
        report=report,
    )
    bundle.validate()
    return bundle
