"""Material schema, correction factor, fixtures and clients."""

import json

import numpy as np
import pytest

from conftest import point_scene
from splatphys.errors import AnalysisError, SchemaError, TransportError
from splatphys.materials import (
    AnalysisRequest,
    FixtureClient,
    RemoteClient,
    analyze,
    apply_material,
    correction_factor,
    default_fixture_client,
    parse_material,
)
from splatphys.solver import generate_particles

WOLF_SAND = {"category": "granular", "mass": 0.5, "friction": 0.3}
BOTTLE = {"category": "rigid", "mass": 0.5, "fragile": True, "force_threshold": 30}


# ---- parse ----


def test_parse_wolf_as_sand():
    spec = parse_material(WOLF_SAND)
    assert spec.category == "granular"
    assert spec.mass_kg == 0.5
    assert spec.friction == 0.3


def test_parse_fragile_bottle():
    spec = parse_material(BOTTLE)
    assert spec.fragile and spec.force_threshold_n == 30


def test_parse_rejects_cross_category_field():
    bad = {"category": "deformation", "mass": 1.0, "deformation_resistance": 0.3,
           "plasticity": 0.1, "friction": 0.3}
    with pytest.raises(SchemaError, match="friction"):
        parse_material(bad)


def test_parse_requires_threshold_when_fragile():
    with pytest.raises(SchemaError, match="force_threshold"):
        parse_material({"category": "rigid", "mass": 1.0, "fragile": True})


def test_parse_rejects_out_of_range():
    with pytest.raises(SchemaError, match="friction"):
        parse_material({"category": "granular", "mass": 1.0, "friction": 1.5})
    with pytest.raises(SchemaError, match="mass"):
        parse_material({"category": "granular", "mass": -1.0, "friction": 0.5})


def test_parse_reports_field_path():
    with pytest.raises(SchemaError) as err:
        parse_material({"category": "granular", "mass": 1.0, "friction": "high"})
    assert "friction" in err.value.path


def test_parse_serialize_round_trip():
    for spec_json in (
        WOLF_SAND,
        BOTTLE,
        {"category": "deformation", "mass": 0.3, "deformation_resistance": 0.2,
         "plasticity": 0.5},
        {"category": "rigid", "mass": 0.5, "fragile": False},
    ):
        spec = parse_material(spec_json)
        again = parse_material(spec.to_json())
        assert again == spec


# ---- correction factor ----


def test_correction_factor_closed_forms():
    assert correction_factor(1000, "deformation") == pytest.approx(10.0)
    assert correction_factor(1000, "granular") == pytest.approx(10.0)
    assert correction_factor(100, "rigid") == pytest.approx(10.0)
    assert correction_factor(1, "deformation", a=2.5) == 2.5


def test_correction_factor_monotone():
    for cat in ("deformation", "granular", "rigid"):
        values = [correction_factor(n, cat) for n in (1, 10, 100, 1000, 10000)]
        assert all(b > a for a, b in zip(values, values[1:]))


def test_correction_factor_validation():
    with pytest.raises(ValueError):
        correction_factor(0, "rigid")
    with pytest.raises(ValueError):
        correction_factor(10, "rigid", a=0.0)
    with pytest.raises(ValueError):
        correction_factor(10, "fluid")


# ---- apply ----


def _deformable_object(n_side=4, h=0.05):
    pts = np.stack(np.meshgrid(*[np.arange(n_side)] * 3, indexing="ij"), -1).reshape(-1, 3) * h
    scene = point_scene(pts, scale=0.02)
    return generate_particles(scene, "deformation", h)


def test_apply_material_mass_split():
    particles, constraints = _deformable_object()
    spec = parse_material(
        {"category": "deformation", "mass": 0.5, "deformation_resistance": 0.4, "plasticity": 0.1}
    )
    apply_material(spec, particles, constraints, a=1.0)
    n = len(particles)
    c = correction_factor(n, "deformation")
    np.testing.assert_allclose(particles.mass.sum(), 0.5 * c, rtol=1e-9)
    np.testing.assert_allclose(particles.mass, 0.5 * c / n)
    assert constraints.distance[0].stiffness == pytest.approx(0.4)
    assert constraints.clusters[0].absorb_rate[0] == pytest.approx(0.1)


def test_apply_material_cube_root_mass_ratio():
    # equal analyzed mass, particle counts 1000 vs 8000 → effective totals 1:2
    a_total = 1.0 * correction_factor(1000, "deformation")
    b_total = 1.0 * correction_factor(8000, "deformation")
    assert b_total / a_total == pytest.approx(2.0)


def test_apply_material_fragility_switch():
    h = 0.05
    pts = np.stack(np.meshgrid(*[np.arange(3)] * 3, indexing="ij"), -1).reshape(-1, 3) * h
    scene = point_scene(pts, scale=0.02)

    particles, constraints = generate_particles(scene, "rigid", h)
    spec = parse_material({"category": "rigid", "mass": 0.5, "fragile": False})
    apply_material(spec, particles, constraints)
    assert not constraints.clusters[0].fragile.any()
    assert np.isinf(constraints.clusters[0].force_threshold).all()

    particles2, constraints2 = generate_particles(scene, "rigid", h)
    spec2 = parse_material(BOTTLE)
    apply_material(spec2, particles2, constraints2)
    assert constraints2.clusters[0].fragile.all()
    np.testing.assert_allclose(constraints2.clusters[0].force_threshold, 30.0)


def test_apply_material_phase_mismatch():
    particles, constraints = _deformable_object()
    with pytest.raises(ValueError, match="phase"):
        apply_material(parse_material(WOLF_SAND), particles, constraints)


# ---- fixture client ----


def test_fixture_corpus_parses_completely():
    client = default_fixture_client()
    expected = {
        ("wolf", 1, None): "deformation",
        ("wolf", 1, "this wolf is made of sand"): "granular",
        ("fox", 1, None): "rigid",
        ("fox", 1, "this fox is a doll"): "deformation",
        ("sofa", 1, None): "deformation",
        ("sofa", 2, None): "deformation",
        ("sofa", 3, None): "deformation",
        ("sofa", 4, None): "deformation",
        ("garden", 1, None): "deformation",
        ("garden", 2, None): "rigid",
        ("labdesk", 1, None): "deformation",
        ("labdesk", 2, None): "deformation",
        ("labdesk", 3, None): "deformation",
        ("labdesk", 4, None): "rigid",
        ("labdesk", 5, None): "rigid",
        ("labdesk", 6, None): "granular",
    }
    for (scene, oid, dialogue), category in expected.items():
        spec = analyze(client, AnalysisRequest(scene=scene, object_id=oid, dialogue=dialogue))
        assert spec.category == category, (scene, oid, dialogue)


def test_fixture_known_values():
    client = default_fixture_client()
    powder = analyze(client, AnalysisRequest(scene="labdesk", object_id=6))
    assert powder.friction == 0.1
    cup = analyze(client, AnalysisRequest(scene="labdesk", object_id=1))
    assert (cup.mass_kg, cup.deformation_resistance, cup.plasticity) == (0.05, 0.2, 0.8)
    mug = analyze(client, AnalysisRequest(scene="labdesk", object_id=5))
    assert mug.fragile and mug.force_threshold_n == 20
    sofa4 = analyze(client, AnalysisRequest(scene="sofa", object_id=4))
    assert sofa4.mass_kg == 1.5


def test_fixture_dialogue_switches_wolf():
    client = default_fixture_client()
    plain = analyze(client, AnalysisRequest(scene="wolf", object_id=1))
    assert (plain.mass_kg, plain.deformation_resistance, plain.plasticity) == (0.3, 0.2, 0.5)
    sandy = analyze(
        client, AnalysisRequest(scene="wolf", object_id=1, dialogue="this wolf is made of sand")
    )
    assert (sandy.mass_kg, sandy.friction) == (0.5, 0.3)


def test_fixture_is_deterministic():
    client = default_fixture_client()
    req = AnalysisRequest(scene="wolf", object_id=1, dialogue="made of sand")
    assert analyze(client, req) == analyze(client, req)


def test_fixture_missing_keys(tmp_path):
    client = FixtureClient(tmp_path)
    with pytest.raises(AnalysisError, match="no fixture file"):
        client.analyze(AnalysisRequest(scene="nowhere", object_id=1))
    (tmp_path / "partial.json").write_text("{}")
    with pytest.raises(AnalysisError, match="no fixture for object"):
        client.analyze(AnalysisRequest(scene="partial", object_id=9))


# ---- remote client ----


def test_remote_client_validates_reply():
    def fake_post(url, payload, headers):
        assert payload["system"]
        assert payload["examples"]
        return json.dumps({"category": "granular", "mass": 0.5, "friction": 0.3})

    client = RemoteClient("http://analysis.local/api", post=fake_post)
    spec = client.analyze(AnalysisRequest(scene="x", object_id=1, image=b"img", mask=b"msk"))
    assert spec.category == "granular"


def test_remote_client_bad_reply_carries_raw():
    client = RemoteClient("http://analysis.local/api", post=lambda *a: "not json at all")
    with pytest.raises(AnalysisError) as err:
        client.analyze(AnalysisRequest(scene="x", object_id=1))
    assert err.value.raw_reply == "not json at all"


def test_remote_client_transport_error():
    def dead_post(url, payload, headers):
        raise TransportError("connection refused")

    client = RemoteClient("http://analysis.local/api", post=dead_post)
    with pytest.raises(TransportError):
        client.analyze(AnalysisRequest(scene="x", object_id=1))
    assert TransportError.retriable
