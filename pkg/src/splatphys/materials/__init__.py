from splatphys.materials.spec import (
    MaterialSpec,
    apply_material,
    correction_factor,
    parse_material,
)
from splatphys.materials.client import (
    AnalysisRequest,
    FixtureClient,
    RemoteClient,
    analyze,
    default_fixture_client,
)

__all__ = [
    "AnalysisRequest",
    "FixtureClient",
    "MaterialSpec",
    "RemoteClient",
    "analyze",
    "apply_material",
    "correction_factor",
    "default_fixture_client",
    "parse_material",
]
