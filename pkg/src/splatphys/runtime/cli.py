"""Command line interface."""

import argparse
import json
import sys
from pathlib import Path


def _cmd_segment(args):
    from splatphys.segment import IdentityClassifier, load_camera_views, segment_object
    from splatphys.segment.segment import remove_object
    from splatphys.splat import load_ply, save_ply

    scene = load_ply(args.scene)
    views = load_camera_views(args.cameras)
    classifier = IdentityClassifier.load(args.classifier)
    result = segment_object(scene, classifier, views, args.object, args.sigma1, args.sigma2)
    obj, remainder = remove_object(scene, result.final_set)
    save_ply(obj, args.out)
    if args.remainder:
        save_ply(remainder, args.remainder)
    print(
        json.dumps(
            {
                "object": args.object,
                "feature_set": len(result.feature_set),
                "mask_set": len(result.mask_set),
                "final_set": len(result.final_set),
                "empty_stage": result.empty_stage,
                "out": str(args.out),
            }
        )
    )
    return 0


def _cmd_fill(args):
    from splatphys.fill import fill_granular
    from splatphys.splat import load_ply, save_ply

    scene = load_ply(args.scene)
    granules, report = fill_granular(
        scene, args.h, shrink=args.shrink, s_f=args.sf,
        up_axis=args.up_axis, up_sign=args.up_sign,
        include_above_surface=args.include_above_surface,
    )
    save_ply(granules, args.out)
    if args.report:
        Path(args.report).write_text(json.dumps(report, indent=2))
    print(json.dumps(report))
    return 0


def _cmd_analyze(args):
    from splatphys.materials import (
        AnalysisRequest,
        FixtureClient,
        RemoteClient,
        default_fixture_client,
    )

    if args.endpoint:
        client = RemoteClient(args.endpoint, token=args.token)
    elif args.fixtures:
        client = FixtureClient(args.fixtures)
    else:
        client = default_fixture_client()
    request = AnalysisRequest(
        scene=args.scene_name,
        object_id=args.object,
        dialogue=args.dialogue,
        image=Path(args.image).read_bytes() if args.image else None,
        mask=Path(args.mask).read_bytes() if args.mask else None,
    )
    spec = client.analyze(request)
    payload = json.dumps(spec.to_json(), indent=2)
    if args.out:
        Path(args.out).write_text(payload)
    print(payload)
    return 0


def _cmd_simulate(args):
    from splatphys.runtime.bundle import build_bundle
    from splatphys.runtime.headless import run_headless

    bundle = build_bundle(args.config)
    metrics, transforms = run_headless(
        bundle,
        scenario=args.scenario,
        duration=args.duration,
        out_dir=args.out,
        export_frames=not args.no_frames,
        save_transforms=args.transforms,
    )
    if args.transforms and args.out:
        (Path(args.out) / "transforms.bin").write_bytes(transforms)
    mean_total = sum(m.total_ms for m in metrics) / max(len(metrics), 1)
    print(
        json.dumps(
            {
                "frames": len(metrics),
                "mean_total_ms": round(mean_total, 3),
                "mean_fps": round(1000.0 / mean_total, 2) if mean_total else None,
                "fracture_events": len(bundle.engine.fracture_events),
                "out": str(args.out) if args.out else None,
            }
        )
    )
    return 0


def _cmd_serve(args):
    from splatphys.runtime.bundle import build_bundle
    from splatphys.runtime.service import serve

    bundle = build_bundle(args.config)
    print(f"serving on ws://{args.host}:{args.port} "
          f"({len(bundle.objects)} objects, {bundle.report['particles_total']} particles)")
    serve(bundle, args.port, host=args.host, scenario=args.scenario)
    return 0


def _cmd_bench(args):
    from splatphys.runtime.bench import format_report, run_benchmark

    report = run_benchmark(args.kernels, args.particles, args.m)
    print(format_report(report))
    if args.json:
        Path(args.json).write_text(json.dumps(report, indent=2))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="splatphys",
        description="Segmentation, PBD physics and particle-skinning for "
        "Gaussian splat scenes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", help="two-stage feature-mask object segmentation")
    p.add_argument("--scene", required=True)
    p.add_argument("--cameras", required=True)
    p.add_argument("--classifier", required=True)
    p.add_argument("--object", type=int, required=True)
    p.add_argument("--sigma1", type=float, default=0.3)
    p.add_argument("--sigma2", type=float, default=0.3)
    p.add_argument("--out", required=True)
    p.add_argument("--remainder")
    p.set_defaults(fn=_cmd_segment)

    p = sub.add_parser("fill", help="granular interior filling for container scenes")
    p.add_argument("--scene", required=True)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--shrink", type=float, default=0.2)
    p.add_argument("--sf", type=float, default=0.6)
    p.add_argument("--up-axis", type=int, default=1, choices=(0, 1, 2))
    p.add_argument("--up-sign", type=int, default=1, choices=(-1, 1))
    p.add_argument("--include-above-surface", action="store_true")
    p.add_argument("--out", required=True)
    p.add_argument("--report")
    p.set_defaults(fn=_cmd_fill)

    p = sub.add_parser("analyze", help="material analysis (fixture or remote)")
    p.add_argument("--scene-name", required=True)
    p.add_argument("--object", type=int, required=True)
    p.add_argument("--dialogue")
    p.add_argument("--fixtures")
    p.add_argument("--endpoint")
    p.add_argument("--token")
    p.add_argument("--image")
    p.add_argument("--mask")
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_analyze)

    p = sub.add_parser("simulate", help="headless scenario run with metrics")
    p.add_argument("--config", required=True)
    p.add_argument("--scenario")
    p.add_argument("--duration", type=float, default=1.0)
    p.add_argument("--out")
    p.add_argument("--no-frames", action="store_true")
    p.add_argument("--transforms", action="store_true")
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("serve", help="interactive streaming service")
    p.add_argument("--config", required=True)
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--scenario")
    p.set_defaults(fn=_cmd_serve)

    p = sub.add_parser("bench", help="kernel backend benchmark")
    p.add_argument("--kernels", type=int, default=200_000)
    p.add_argument("--particles", type=int, default=1500)
    p.add_argument("--m", type=int, default=4)
    p.add_argument("--json")
    p.set_defaults(fn=_cmd_bench)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except KeyboardInterrupt:
        return 130
    except Exception as exc:  # structured failure for scripts
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
