"""Hot-kernel backend selection.

The compiled extension (``_native``, Cython) is preferred; the pure numpy
twin is used when the extension is not built or when ``SPLATPHYS_PURE`` is
set in the environment. Both expose the same functions with identical array
contracts; ``splatphys.runtime.bench`` compares their throughput.
"""

import os
import warnings

if os.environ.get("SPLATPHYS_PURE"):
    from splatphys._kernels import pure as impl
else:
    try:
        from splatphys._kernels import _native as impl  # type: ignore[attr-defined]
    except ImportError:
        warnings.warn(
            "splatphys compiled kernels not available; falling back to the "
            "pure numpy backend (slower). Build with `pip install -e .`.",
            RuntimeWarning,
            stacklevel=2,
        )
        from splatphys._kernels import pure as impl

BACKEND = impl.BACKEND

skin_kernels = impl.skin_kernels
project_distance = impl.project_distance
project_contacts = impl.project_contacts
shape_match = impl.shape_match
local_rotations = impl.local_rotations


def get_backend(name):
    """Explicitly fetch one backend module ("native" or "pure")."""
    if name == "pure":
        from splatphys._kernels import pure

        return pure
    if name == "native":
        from splatphys._kernels import _native  # type: ignore[attr-defined]

        return _native
    raise ValueError(f"unknown kernel backend: {name!r}")
