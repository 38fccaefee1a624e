from splatphys.solver.particles import ParticleSet, Phase
from splatphys.solver.constraints import (
    ClusterSet,
    ConstraintSet,
    ContactGroup,
    DistanceConstraints,
    NeighborGraph,
)
from splatphys.solver.generate import generate_particles
from splatphys.solver.collide import DistanceField, SupportPlane, build_sdf, fit_support_plane
from splatphys.solver.engine import Engine, SolverConfig, StepTiming, project_granular_contacts

__all__ = [
    "ClusterSet",
    "ConstraintSet",
    "ContactGroup",
    "DistanceConstraints",
    "DistanceField",
    "Engine",
    "NeighborGraph",
    "ParticleSet",
    "Phase",
    "SolverConfig",
    "StepTiming",
    "SupportPlane",
    "build_sdf",
    "fit_support_plane",
    "generate_particles",
    "project_granular_contacts",
]
