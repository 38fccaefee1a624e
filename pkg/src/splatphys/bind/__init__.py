from splatphys.bind.binding import (
    BindingTable,
    build_binding,
    default_m_for_phase,
    particle_deltas,
    skin_all,
    skin_kernel,
    transform_buffer,
)

__all__ = [
    "BindingTable",
    "build_binding",
    "default_m_for_phase",
    "particle_deltas",
    "skin_all",
    "skin_kernel",
    "transform_buffer",
]
