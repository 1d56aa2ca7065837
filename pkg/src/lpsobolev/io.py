"""JSON and CSV serialization of the package's artifacts.

Floats are written with Python's shortest round-trip representation, so a
saved artifact reloads to bit-identical arrays.
"""
from __future__ import annotations

import csv
import io as _io
import json
from pathlib import Path

import numpy as np

from .errors import InputError
from .geometry import DiscreteSphereMeasure, Polytope, canonicalize
from .pwa import PwaFunction
from .rearrangement import BALL, RadialConvexFunction, RadialProfile

SCHEMAS = """\
polytope  {"dim": n, "normals": [[...], ...], "offsets": [...]}
          (unit outer normals, positive offsets; "vertices" is written for
          reference and ignored on load)
measure   {"dim": n, "directions": [[...], ...], "weights": [...]}
function  {"dim": n, "vertices": [[...], ...], "simplices": [[i, j, k(, l)], ...],
           "values": [...], "gradients": [[...], ...] (optional)}
          boundary vertices must carry the value 0
radial    {"dim": n, "shape": <polytope> | "ball", "profile": [[s, value], ...]}
"""


def _tolist(a):
    return np.asarray(a).tolist()


def polytope_to_dict(P):
    return {
        "type": "polytope",
        "dim": P.dim,
        "normals": _tolist(P.normals),
        "offsets": _tolist(P.offsets),
        "vertices": _tolist(P.vertices),
        "volume": P.volume,
    }


def polytope_from_dict(d):
    try:
        normals = np.array(d["normals"], dtype=float)
        offsets = np.array(d["offsets"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed polytope: {exc}") from exc
    if normals.ndim != 2 or normals.shape[1] != d.get("dim", normals.shape[1]):
        raise InputError("polytope normals do not match the stated dimension")
    return canonicalize(normals, offsets)


def measure_to_dict(mu):
    return {
        "type": "measure",
        "dim": mu.dim,
        "directions": _tolist(mu.directions),
        "weights": _tolist(mu.weights),
    }


def measure_from_dict(d):
    try:
        return DiscreteSphereMeasure.from_atoms(
            np.array(d["directions"], dtype=float).reshape(-1, int(d["dim"])),
            d["weights"],
            dim=int(d["dim"]),
        )
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed measure: {exc}") from exc


def function_to_dict(f):
    return {
        "type": "function",
        "dim": f.dim,
        "vertices": _tolist(f.vertices),
        "simplices": _tolist(f.simplices),
        "values": _tolist(f.values),
        "gradients": _tolist(f.gradients),
    }


def function_from_dict(d, check_boundary=True):
    try:
        vertices = np.array(d["vertices"], dtype=float)
        simplices = d["simplices"]
        values = d["values"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed function: {exc}") from exc
    if vertices.ndim != 2 or vertices.shape[1] != d.get("dim", vertices.shape[1]):
        raise InputError("function vertices do not match the stated dimension")
    return PwaFunction.from_mesh(
        vertices, simplices, values, gradients=d.get("gradients"), check_boundary=check_boundary
    )


def radial_to_dict(g):
    shape = BALL if g.is_ball else polytope_to_dict(g.shape)
    return {
        "type": "radial",
        "dim": g.dim,
        "shape": shape,
        "profile": [[s, v] for s, v in zip(g.profile.grid.tolist(), g.profile.values.tolist())],
    }


def radial_from_dict(d):
    try:
        prof = np.array(d["profile"], dtype=float)
        shape = d["shape"]
        dim = int(d["dim"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed radial function: {exc}") from exc
    if prof.ndim != 2 or prof.shape[1] != 2:
        raise InputError("profile must be a list of [s, value] pairs")
    if not isinstance(shape, str):
        shape = polytope_from_dict(shape)
    return RadialConvexFunction(dim, shape, RadialProfile.from_samples(prof[:, 0], prof[:, 1]))


_LOADERS = {
    "polytope": polytope_from_dict,
    "measure": measure_from_dict,
    "function": function_from_dict,
    "radial": radial_from_dict,
}


def to_dict(obj):
    if isinstance(obj, Polytope):
        return polytope_to_dict(obj)
    if isinstance(obj, DiscreteSphereMeasure):
        return measure_to_dict(obj)
    if isinstance(obj, PwaFunction):
        return function_to_dict(obj)
    if isinstance(obj, RadialConvexFunction):
        return radial_to_dict(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj):
    """Deterministic JSON text (sorted keys, shortest float repr)."""
    data = to_dict(obj) if not isinstance(obj, (dict, list)) else obj
    return json.dumps(data, sort_keys=True, indent=1, allow_nan=False) + "\n"


def save(obj, path):
    Path(path).write_text(dumps(obj))


def read_json(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def load(path, kind=None):
    """Load an artifact; ``kind`` defaults to the file's ``"type"`` field.

    Files without a type tag are recognized by their keys.
    """
    d = read_json(path)
    return from_dict(d, kind)


def from_dict(d, kind=None):
    if not isinstance(d, dict):
        raise InputError("artifact must be a JSON object")
    kind = kind or d.get("type") or _guess_kind(d)
    if kind not in _LOADERS:
        raise InputError(f"unknown artifact type {kind!r}")
    return _LOADERS[kind](d)


def _guess_kind(d):
    if "simplices" in d:
        return "function"
    if "normals" in d:
        return "polytope"
    if "directions" in d:
        return "measure"
    if "profile" in d:
        return "radial"
    raise InputError("cannot recognize artifact type")


def write_csv(rows, header, path=None):
    """Write rows as CSV to ``path`` (or return the text when ``path`` is None)."""
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    text = buf.getvalue()
    if path is None:
        return text
    Path(path).write_text(text)
    return text


def profile_csv(profile, path=None):
    return write_csv(profile.rows(), ["s", "f_star", "slope"], path)


def trace_csv(trace, path=None):
    return write_csv(trace.rows(), ["iteration", "objective", "residual", "step"], path)
