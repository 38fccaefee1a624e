from splatphys.runtime.bundle import ObjectBundle, SceneBundle, build_bundle
from splatphys.runtime.headless import FrameMetrics, run_headless, skin_bundle
from splatphys.runtime.scenario import ScenarioRunner, ScenarioScript

__all__ = [
    "FrameMetrics",
    "ObjectBundle",
    "SceneBundle",
    "ScenarioRunner",
    "ScenarioScript",
    "build_bundle",
    "run_headless",
    "skin_bundle",
]
