"""Material specs: schema validation, particle-count mass correction, and
application onto solver state.

JSON schema (all analysis clients must produce this):
    category: "deformation" | "granular" | "rigid"
    mass: float > 0 (kg)
    deformation_resistance: float in [0,1]     deformation only
    plasticity: float in [0,1]                 deformation only
    friction: float in [0,1]                   granular only
    fragile: bool                              rigid only
    force_threshold: float > 0 (N)             rigid, required iff fragile
Unknown fields are rejected.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from splatphys.errors import SchemaError

CATEGORIES = ("deformation", "granular", "rigid")

# normalized-value → engine-parameter ranges (documented calibration knobs)
STIFFNESS_MIN = 0.05
YIELD_BASE = 0.1
FRICTION_GAIN = 1.2


@dataclass(frozen=True)
class MaterialSpec:
    category: str
    mass_kg: float
    deformation_resistance: float | None = None
    plasticity: float | None = None
    friction: float | None = None
    fragile: bool | None = None
    force_threshold_n: float | None = None

    def to_json(self):
        out = {"category": self.category, "mass": self.mass_kg}
        if self.category == "deformation":
            out["deformation_resistance"] = self.deformation_resistance
            out["plasticity"] = self.plasticity
        elif self.category == "granular":
            out["friction"] = self.friction
        else:
            out["fragile"] = self.fragile
            if self.fragile:
                out["force_threshold"] = self.force_threshold_n
        return out


def _require(data, key, kind, path):
    if key not in data:
        raise SchemaError(f"missing required field {key!r}", path=path)
    val = data[key]
    if kind == "number":
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise SchemaError(f"expected a number, got {type(val).__name__}", path=f"{path}.{key}")
    elif kind == "bool" and not isinstance(val, bool):
        raise SchemaError(f"expected a boolean, got {type(val).__name__}", path=f"{path}.{key}")
    return val


def _unit_range(value, key, path):
    if not 0.0 <= value <= 1.0:
        raise SchemaError(f"{key} must lie in [0,1], got {value}", path=path)
    return float(value)


def parse_material(data, path="material"):
    """Validate a JSON object (or string) into a MaterialSpec."""
    if isinstance(data, (str, bytes)):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc}", path=path) from exc
    if not isinstance(data, dict):
        raise SchemaError("material must be a JSON object", path=path)

    category = data.get("category")
    if category not in CATEGORIES:
        raise SchemaError(
            f"category must be one of {CATEGORIES}, got {category!r}", path=f"{path}.category"
        )
    mass = _require(data, "mass", "number", path)
    if mass <= 0:
        raise SchemaError(f"mass must be positive, got {mass}", path=f"{path}.mass")

    allowed = {"category", "mass"}
    kwargs = {"category": category, "mass_kg": float(mass)}

    if category == "deformation":
        allowed |= {"deformation_resistance", "plasticity"}
        kwargs["deformation_resistance"] = _unit_range(
            _require(data, "deformation_resistance", "number", path),
            "deformation_resistance", f"{path}.deformation_resistance",
        )
        kwargs["plasticity"] = _unit_range(
            _require(data, "plasticity", "number", path), "plasticity", f"{path}.plasticity"
        )
    elif category == "granular":
        allowed |= {"friction"}
        kwargs["friction"] = _unit_range(
            _require(data, "friction", "number", path), "friction", f"{path}.friction"
        )
    else:  # rigid
        allowed |= {"fragile"}
        fragile = bool(_require(data, "fragile", "bool", path))
        kwargs["fragile"] = fragile
        if fragile:
            allowed |= {"force_threshold"}
            threshold = _require(data, "force_threshold", "number", path)
            if threshold <= 0:
                raise SchemaError(
                    f"force_threshold must be positive, got {threshold}",
                    path=f"{path}.force_threshold",
                )
            kwargs["force_threshold_n"] = float(threshold)
        elif "force_threshold" in data:
            allowed |= {"force_threshold"}  # tolerated but ignored when not fragile

    unknown = set(data) - allowed
    if unknown:
        raise SchemaError(
            f"unknown field(s) for category {category!r}: {', '.join(sorted(unknown))}",
            path=path,
        )
    return MaterialSpec(**kwargs)


def correction_factor(n_particles, category, a=1.0):
    """Particle-count mass multiplier: a·∛N for volume-filled categories
    (deformation, granular), a·√N for surface-sampled rigid."""
    if n_particles < 1:
        raise ValueError(f"particle count must be ≥ 1, got {n_particles}")
    if a <= 0:
        raise ValueError(f"proportionality constant must be positive, got {a}")
    if category not in CATEGORIES:
        raise ValueError(f"unknown category {category!r}")
    if category == "rigid":
        return a * math.sqrt(n_particles)
    # np.cbrt is correctly rounded: exact for perfect cubes, unlike **(1/3)
    return a * float(np.cbrt(float(n_particles)))


def apply_material(spec, particles, constraints, a=1.0):
    """Distribute the corrected mass over the object's particles and map the
    normalized properties onto solver parameters.

    `particles`/`constraints` are one object's (pre-merge) solver state; all
    particles share the total mass equally.
    """
    n = len(particles)
    if n == 0:
        raise ValueError("no particles to apply the material to")
    c = correction_factor(n, spec.category, a)
    effective_total = spec.mass_kg * c
    particles.set_mass(slice(None), effective_total / n)

    from splatphys.solver.particles import Phase  # local import to avoid a cycle

    phase_map = {"deformation": Phase.DEFORMABLE, "granular": Phase.GRANULAR, "rigid": Phase.RIGID}
    expected = phase_map[spec.category]
    if not (particles.phase == int(expected)).all():
        raise ValueError(
            f"particle phases do not match material category {spec.category!r}"
        )

    if spec.category == "deformation":
        stiffness = min(max(spec.deformation_resistance, STIFFNESS_MIN), 1.0)
        for dc in constraints.distance:
            dc.stiffness = stiffness
        for cl in constraints.clusters:
            cl.stiffness[:] = stiffness
            cl.yield_threshold[:] = YIELD_BASE * (1.0 - spec.plasticity)
            cl.absorb_rate[:] = spec.plasticity
    elif spec.category == "granular":
        for group in constraints.contacts:
            group.mu = FRICTION_GAIN * spec.friction
    else:
        for cl in constraints.clusters:
            if spec.fragile:
                cl.fragile[:] = True
                cl.force_threshold[:] = spec.force_threshold_n
            else:
                cl.fragile[:] = False
                cl.force_threshold[:] = math.inf
