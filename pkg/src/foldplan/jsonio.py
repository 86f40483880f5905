"""Byte-stable JSON serialization shared by all file formats.

Keys are sorted and floats serialize via their shortest repr, so a given
value always dumps to the same bytes. CP vertex coordinates are additionally
rounded to 9 decimal places (the file format's fixed precision); all other
floats keep full precision so states round-trip exactly.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .cp import CanonicalPattern, CreasePattern, FoldState, canonicalize

CP_FORMAT_VERSION = 1


def _pyify(obj):
    if isinstance(obj, dict):
        return {k: _pyify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_pyify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_pyify(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return 0.0 if v == 0 else v   # avoid -0.0 instability
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    return obj


def canonical_dumps(obj) -> str:
    return json.dumps(_pyify(obj), sort_keys=True, separators=(",", ":"))


def content_hash(obj) -> str:
    return hashlib.sha256(canonical_dumps(obj).encode("utf-8")).hexdigest()


def write_json(path, obj):
    Path(path).write_text(canonical_dumps(obj) + "\n", encoding="utf-8")


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


# -- crease-pattern file format ------------------------------------------

def pattern_to_dict(pattern: CreasePattern) -> dict:
    d = {
        "version": CP_FORMAT_VERSION,
        "vertices": np.round(pattern.vertices, 9),
        "edges": pattern.edges,
        "crease_types": pattern.crease_types.tolist(),
        "boundary": pattern.boundary,
    }
    if pattern.category is not None:
        d["category"] = pattern.category
    return d


def pattern_from_dict(d: dict, validate: bool = True) -> CreasePattern:
    if d.get("version") != CP_FORMAT_VERSION:
        raise ValueError(f"unsupported CP file version: {d.get('version')!r}")
    return CreasePattern(
        vertices=np.asarray(d["vertices"], dtype=np.float64),
        edges=np.asarray(d["edges"], dtype=np.int64),
        crease_types=np.asarray(d["crease_types"], dtype="<U1"),
        boundary=np.asarray(d["boundary"], dtype=bool),
        category=d.get("category"),
        validate=validate,
    )


def pattern_hash(pattern: CreasePattern) -> str:
    return content_hash(pattern_to_dict(pattern))


def load_pattern(path, validate: bool = True) -> CreasePattern:
    return pattern_from_dict(read_json(path), validate=validate)


def save_pattern(path, pattern: CreasePattern):
    write_json(path, pattern_to_dict(pattern))


def load_canonical(path) -> CanonicalPattern:
    return canonicalize(load_pattern(path))


# -- fold state ----------------------------------------------------------

def state_to_dict(state: FoldState) -> dict:
    return {
        "alpha": state.alpha,
        "rho": state.rho,
        "z": state.z.tolist(),
        "psi": state.psi,
        "b": state.b,
        "step": state.step,
    }


def state_from_dict(d: dict) -> FoldState:
    return FoldState(
        alpha=np.asarray(d["alpha"], dtype=np.float64),
        rho=np.asarray(d["rho"], dtype=np.float64),
        z=np.asarray(d["z"], dtype="<U1"),
        psi=float(d["psi"]),
        b=bool(d["b"]),
        step=int(d["step"]),
    )
