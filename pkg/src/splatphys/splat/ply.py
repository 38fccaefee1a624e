"""Binary little-endian PLY I/O in the standard 3DGS vertex layout.

Required properties: x y z, f_dc_0..2, f_rest_0..44, opacity (logit),
scale_0..2 (log), rot_0..3 (quaternion, w first). Optional: feat_0..F-1
(identity features, float) and obj_id (uint object label). nx/ny/nz normals
are tolerated on input and ignored; we never write them.
"""

import numpy as np

from splatphys.errors import PlyParseError
from splatphys.splat.scene import SH_REST_DIM, SplatScene, _sigmoid

_PLY_TO_NUMPY = {
    "float": "<f4",
    "float32": "<f4",
    "double": "<f8",
    "float64": "<f8",
    "uchar": "u1",
    "uint8": "u1",
    "ushort": "<u2",
    "uint16": "<u2",
    "uint": "<u4",
    "uint32": "<u4",
    "int": "<i4",
    "int32": "<i4",
}

_BASE_PROPS = (
    ["x", "y", "z"]
    + [f"f_dc_{i}" for i in range(3)]
    + [f"f_rest_{i}" for i in range(SH_REST_DIM)]
    + ["opacity"]
    + [f"scale_{i}" for i in range(3)]
    + [f"rot_{i}" for i in range(4)]
)
_IGNORED_PROPS = {"nx", "ny", "nz"}


def _parse_header(fh):
    magic = fh.readline().strip()
    if magic != b"ply":
        raise PlyParseError("not a PLY file (missing 'ply' magic)")
    fmt = fh.readline().split()
    if len(fmt) < 2 or fmt[0] != b"format" or fmt[1] != b"binary_little_endian":
        raise PlyParseError("expected 'format binary_little_endian 1.0'")

    count = None
    props = []
    while True:
        line = fh.readline()
        if not line:
            raise PlyParseError("unexpected EOF in header")
        parts = line.split()
        if not parts or parts[0] == b"comment":
            continue
        if parts[0] == b"end_header":
            break
        if parts[0] == b"element":
            if parts[1] != b"vertex":
                raise PlyParseError(f"unsupported element {parts[1].decode()!r}")
            count = int(parts[2])
        elif parts[0] == b"property":
            if parts[1] == b"list":
                raise PlyParseError("list properties are not supported")
            ptype = parts[1].decode()
            name = parts[2].decode()
            if ptype not in _PLY_TO_NUMPY:
                raise PlyParseError(f"unsupported property type {ptype!r} for {name!r}")
            props.append((name, _PLY_TO_NUMPY[ptype]))
    if count is None:
        raise PlyParseError("header has no vertex element")
    return count, props


def load_ply(path):
    """Load a splat scene; establishes the in-memory invariants.

    Log-scales are exponentiated, logit-opacities pushed through a sigmoid
    and quaternions renormalized. Raises PlyParseError (with the offending
    element index for data errors).
    """
    with open(path, "rb") as fh:
        count, props = _parse_header(fh)
        names = [name for name, _ in props]

        missing = [p for p in _BASE_PROPS if p not in names]
        if missing:
            raise PlyParseError(f"missing required properties: {', '.join(missing)}")

        feat_names = sorted(
            (n for n in names if n.startswith("feat_")), key=lambda n: int(n.split("_")[1])
        )
        if feat_names and feat_names != [f"feat_{i}" for i in range(len(feat_names))]:
            raise PlyParseError("feature properties must be contiguous feat_0..feat_{F-1}")

        known = set(_BASE_PROPS) | _IGNORED_PROPS | set(feat_names) | {"obj_id"}
        unknown = [n for n in names if n not in known]
        if unknown:
            raise PlyParseError(f"property count mismatch, unexpected: {', '.join(unknown)}")

        dtype = np.dtype(props)
        payload = fh.read(count * dtype.itemsize)
        if len(payload) != count * dtype.itemsize:
            got = len(payload) // dtype.itemsize
            raise PlyParseError(f"expected {count} vertices, file truncated at {got}")
        raw = np.frombuffer(payload, dtype=dtype)

    def cols(names_):
        return np.stack([raw[n].astype(np.float32) for n in names_], axis=1)

    positions = cols(["x", "y", "z"])
    sh_dc = cols([f"f_dc_{i}" for i in range(3)])
    sh_rest = cols([f"f_rest_{i}" for i in range(SH_REST_DIM)])
    scales_log = cols([f"scale_{i}" for i in range(3)])
    rotations = cols([f"rot_{i}" for i in range(4)])
    opacity_logit = raw["opacity"].astype(np.float32)
    features = cols(feat_names) if feat_names else None
    object_ids = raw["obj_id"].astype(np.int32) if "obj_id" in names else None

    for label, arr in [
        ("position", positions),
        ("f_dc", sh_dc),
        ("f_rest", sh_rest),
        ("scale", scales_log),
        ("rot", rotations),
        ("opacity", opacity_logit.reshape(-1, 1)),
    ] + ([("feat", features)] if features is not None else []):
        bad = ~np.isfinite(arr)
        if np.any(bad):
            idx = int(np.nonzero(bad.any(axis=1))[0][0])
            raise PlyParseError(f"non-finite {label} value", element=idx)

    norms = np.linalg.norm(rotations.astype(np.float64), axis=1)
    if np.any(norms == 0.0):
        raise PlyParseError("zero-norm rotation", element=int(np.nonzero(norms == 0.0)[0][0]))

    return SplatScene(
        positions,
        np.exp(scales_log.astype(np.float64)).astype(np.float32),
        rotations,
        _sigmoid(opacity_logit).astype(np.float32),
        sh_dc,
        sh_rest,
        object_ids,
        features,
        _scales_log=scales_log,
        _opacity_logit=opacity_logit,
    )


def save_ply(scene, path):
    """Write the scene back in the on-disk encoding (log scale, logit opacity)."""
    n = len(scene)
    props = list(_BASE_PROPS)
    f = scene.feature_dim
    if f:
        props += [f"feat_{i}" for i in range(f)]
    props_typed = [(p, "<f4") for p in props] + [("obj_id", "<u4")]

    out = np.empty(n, dtype=np.dtype(props_typed))
    out["x"], out["y"], out["z"] = scene.positions.T
    for i in range(3):
        out[f"f_dc_{i}"] = scene.sh_dc[:, i]
    for i in range(SH_REST_DIM):
        out[f"f_rest_{i}"] = scene.sh_rest[:, i]
    out["opacity"] = scene._opacity_logit
    for i in range(3):
        out[f"scale_{i}"] = scene._scales_log[:, i]
    for i in range(4):
        out[f"rot_{i}"] = scene.rotations[:, i]
    for i in range(f):
        out[f"feat_{i}"] = scene.features[:, i]
    out["obj_id"] = scene.object_ids.astype(np.uint32)

    header = ["ply", "format binary_little_endian 1.0", f"element vertex {n}"]
    for name, dt in props_typed:
        ply_type = "uint" if dt == "<u4" else "float"
        header.append(f"property {ply_type} {name}")
    header.append("end_header\n")

    with open(path, "wb") as fh:
        fh.write("\n".join(header).encode("ascii"))
        fh.write(out.tobytes())
