"""Two-file artifact persistence: a JSON sidecar plus a raw float64 payload.

Every artifact ``<stem>`` is stored as ``<stem>.json`` and ``<stem>.bin``.
The sidecar carries a ``version`` tag, ``endianness: "little"``, ``dtype:
"float64"`` and a ``blocks`` table; each block has a ``name``, ``shape``,
``order`` ("F" column-major or "C" row-major), and ``offset``/``count`` in
8-byte words into the payload. Readers reject any other version tag.

Layouts:

* snapshots (``romclose-snap-v1``): ``fields`` (n_points, M) column-major,
  ``times`` (M,).
* basis (``romclose-basis-v1``): ``modes`` (n_points, R) column-major,
  ``singular_values`` (R,), ``mean_field`` (n_points,) when centered.
* operators (``romclose-ops-v1``): ``A``, ``A_affine`` (r, r) row-major,
  ``B`` (r, r, r) row-major, i.e. index i slowest then m then n, and
  ``constant`` (r,).
* closure (``romclose-closure-v1``): ``A_tilde``, ``B_tilde`` as above.
* trajectory (``romclose-traj-v1``): ``times``, ``coeffs`` (steps+1, r)
  row-major.
"""

import json
import os
from pathlib import Path

import numpy as np

from .closure import ClosureOperators
from .errors import IoFailure, UpstreamMissing, VersionMismatch
from .fom import Grid1D, SnapshotSet
from .galerkin import RomOperators
from .pod import PodBasis
from .timestepping import RomTrajectory

SNAP_VERSION = "romclose-snap-v1"
BASIS_VERSION = "romclose-basis-v1"
OPS_VERSION = "romclose-ops-v1"
CLOSURE_VERSION = "romclose-closure-v1"
TRAJ_VERSION = "romclose-traj-v1"


def artifact_paths(stem):
    stem = Path(stem)
    return stem.with_name(stem.name + ".json"), stem.with_name(stem.name + ".bin")


def artifact_exists(stem):
    return all(p.exists() for p in artifact_paths(stem))


def _atomic_write(path, data):
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def write_artifact(stem, version, meta, blocks):
    """Write ``blocks`` (a list of ``(name, array, order)``) under ``stem``."""
    json_path, bin_path = artifact_paths(stem)
    table = []
    chunks = []
    offset = 0
    for name, array, order in blocks:
        arr = np.asarray(array, dtype="<f8")
        raw = arr.tobytes(order=order)
        table.append({"name": name, "shape": list(arr.shape), "order": order,
                      "offset": offset, "count": int(arr.size)})
        chunks.append(raw)
        offset += arr.size
    sidecar = dict(meta)
    sidecar.update({"version": version, "endianness": "little", "dtype": "float64",
                    "data_file": bin_path.name, "blocks": table})
    try:
        json_path.parent.mkdir(parents=True, exist_ok=True)
        _atomic_write(bin_path, b"".join(chunks))
        _atomic_write(json_path, (json.dumps(sidecar, indent=2, sort_keys=True) + "\n").encode())
    except OSError as exc:
        raise IoFailure(f"cannot write artifact {stem}: {exc}") from exc
    return json_path, bin_path


def read_artifact(stem, version):
    """Return ``(sidecar, {name: array})``, checking the version tag."""
    json_path, bin_path = artifact_paths(stem)
    for p in (json_path, bin_path):
        if not p.exists():
            raise UpstreamMissing(f"required artifact file {p} is missing")
    try:
        sidecar = json.loads(json_path.read_text(encoding="utf-8"))
        payload = np.fromfile(bin_path, dtype="<f8")
    except (OSError, ValueError) as exc:
        raise IoFailure(f"cannot read artifact {stem}: {exc}") from exc
    found = sidecar.get("version")
    if found != version:
        raise VersionMismatch(f"{json_path}: version {found!r}, expected {version!r}")
    if sidecar.get("endianness") != "little" or sidecar.get("dtype") != "float64":
        raise IoFailure(f"{json_path}: unsupported encoding")
    arrays = {}
    for blk in sidecar["blocks"]:
        start, count = blk["offset"], blk["count"]
        if start + count > payload.size:
            raise IoFailure(f"{bin_path} is truncated")
        flat = payload[start:start + count]
        arrays[blk["name"]] = flat.reshape(blk["shape"], order=blk["order"]).astype(float)
    return sidecar, arrays


def _grid_meta(grid):
    return {"n_points": grid.n_points, "domain_length": grid.domain_length,
            "boundary": grid.boundary.value}


def _grid_from(meta):
    g = meta["grid"]
    return Grid1D(g["n_points"], g["domain_length"], g["boundary"])


def save_snapshots(stem, snaps, provenance=None):
    meta = {"grid": _grid_meta(snaps.grid), "times": [float(t) for t in snaps.times],
            "provenance": provenance or {}}
    return write_artifact(stem, SNAP_VERSION, meta,
                          [("fields", snaps.fields, "F"), ("times", snaps.times, "C")])


def load_snapshots(stem):
    meta, arr = read_artifact(stem, SNAP_VERSION)
    return SnapshotSet(_grid_from(meta), arr["times"], arr["fields"])


def save_basis(stem, basis, provenance=None):
    blocks = [("modes", basis.modes, "F"), ("singular_values", basis.singular_values, "C")]
    if basis.centered:
        blocks.append(("mean_field", basis.mean_field, "C"))
    meta = {"grid": _grid_meta(basis.grid), "R": basis.R, "centering": basis.centered,
            "provenance": provenance or {}}
    return write_artifact(stem, BASIS_VERSION, meta, blocks)


def load_basis(stem):
    meta, arr = read_artifact(stem, BASIS_VERSION)
    return PodBasis(_grid_from(meta), arr["modes"], arr["singular_values"], arr.get("mean_field"))


def save_operators(stem, ops, provenance=None):
    meta = {"r": ops.r, "viscosity": ops.viscosity, "centering": ops.centered,
            "provenance": provenance or {}}
    blocks = [("A", ops.A, "C"), ("B", ops.B, "C"), ("constant", ops.constant, "C"),
              ("A_affine", ops.A_affine, "C")]
    return write_artifact(stem, OPS_VERSION, meta, blocks)


def load_operators(stem):
    meta, arr = read_artifact(stem, OPS_VERSION)
    return RomOperators(arr["A"], arr["B"], meta["viscosity"], arr["constant"],
                        arr["A_affine"], meta["centering"])


def save_closure(stem, closure, provenance=None):
    meta = {"r": closure.r, "ridge_lambda": closure.ridge_lambda,
            "residual_rel": closure.residual_rel, "condition": closure.condition,
            "provenance": provenance or {}}
    return write_artifact(stem, CLOSURE_VERSION, meta,
                          [("A_tilde", closure.A_tilde, "C"), ("B_tilde", closure.B_tilde, "C")])


def load_closure(stem):
    meta, arr = read_artifact(stem, CLOSURE_VERSION)
    return ClosureOperators(arr["A_tilde"], arr["B_tilde"], meta["ridge_lambda"],
                            meta["residual_rel"], meta.get("condition", 1.0))


def save_trajectory(stem, traj, provenance=None):
    meta = {"label": traj.label.value, "r": traj.r, "provenance": provenance or {}}
    return write_artifact(stem, TRAJ_VERSION, meta,
                          [("times", traj.times, "C"), ("coeffs", traj.coeffs, "C")])


def load_trajectory(stem):
    meta, arr = read_artifact(stem, TRAJ_VERSION)
    return RomTrajectory(arr["times"], arr["coeffs"].reshape(len(arr["times"]), -1),
                         meta["label"])
