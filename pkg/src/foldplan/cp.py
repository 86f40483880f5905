"""Crease-pattern graphs, dynamic fold state, canonicalization, symmetries.

A crease pattern lives on the unit square. Vertices carry 2D coordinates,
edges carry a crease-type label (M = mountain, V = valley, U = unassigned)
and a flag marking sheet-boundary segments. All values are immutable after
construction; every operation here is a pure function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

COORD_SNAP = 1e-9          # grid used for deterministic lexicographic sorting
COORD_TOL = 1e-9
ANGLE_TOL = 1e-6

CREASE_TYPES = ("M", "V", "U")


class InvalidPattern(ValueError):
    """A CreasePattern invariant is violated (message names the first one)."""


class DegreeTooLow(ValueError):
    """Sector angles need at least two incident edge directions."""


def _snap(coords: np.ndarray) -> np.ndarray:
    # 1e-9 grid; matches the 9-decimal float formatting of the CP file format
    return np.round(np.asarray(coords, dtype=np.float64), 9)


def _segments_conflict(p1, p2, q1, q2, eps=1e-12) -> bool:
    """True if two segments with no shared endpoint index touch anywhere."""
    d = p2 - p1
    e = q2 - q1
    d1 = d[0] * (q1[1] - p1[1]) - d[1] * (q1[0] - p1[0])
    d2 = d[0] * (q2[1] - p1[1]) - d[1] * (q2[0] - p1[0])
    d3 = e[0] * (p1[1] - q1[1]) - e[1] * (p1[0] - q1[0])
    d4 = e[0] * (p2[1] - q1[1]) - e[1] * (p2[0] - q1[0])
    if (d1 > eps and d2 < -eps or d1 < -eps and d2 > eps) and (
        d3 > eps and d4 < -eps or d3 < -eps and d4 > eps
    ):
        return True

    def on_seg(a, b, c):
        # c collinear with a-b; does it lie within the bounding box?
        return (
            min(a[0], b[0]) - eps <= c[0] <= max(a[0], b[0]) + eps
            and min(a[1], b[1]) - eps <= c[1] <= max(a[1], b[1]) + eps
        )

    if abs(d1) <= eps and on_seg(p1, p2, q1):
        return True
    if abs(d2) <= eps and on_seg(p1, p2, q2):
        return True
    if abs(d3) <= eps and on_seg(q1, q2, p1):
        return True
    if abs(d4) <= eps and on_seg(q1, q2, p2):
        return True
    return False


@dataclass(frozen=True, eq=False)
class CreasePattern:
    """Static planar graph of a crease pattern on the unit square."""

    vertices: np.ndarray            # (N_v, 2) float64 in [0,1]^2
    edges: np.ndarray               # (N_e, 2) int64 vertex indices
    crease_types: np.ndarray        # (N_e,) '<U1' in {M, V, U}
    boundary: np.ndarray            # (N_e,) bool, True for sheet-boundary edges
    category: str | None = None
    validate: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        verts = np.ascontiguousarray(np.asarray(self.vertices, dtype=np.float64))
        edges = np.ascontiguousarray(np.asarray(self.edges, dtype=np.int64))
        types = np.asarray(self.crease_types, dtype="<U1")
        bnd = np.asarray(self.boundary, dtype=bool)
        for name, arr in (("vertices", verts), ("edges", edges),
                          ("crease_types", types), ("boundary", bnd)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.validate:
            self._check_invariants()

    # -- invariants -------------------------------------------------------

    def _check_invariants(self):
        verts, edges = self.vertices, self.edges
        if verts.ndim != 2 or verts.shape[1] != 2:
            raise InvalidPattern("vertices must be an (N_v, 2) array")
        if edges.ndim != 2 or edges.shape[1] != 2:
            raise InvalidPattern("edges must be an (N_e, 2) array")
        if len(edges) == 0 or len(verts) < 2:
            raise InvalidPattern("degenerate pattern: need >= 2 vertices and >= 1 edge")
        if len(self.crease_types) != len(edges) or len(self.boundary) != len(edges):
            raise InvalidPattern("per-edge label arrays must have length N_e")
        if not np.all(np.isin(self.crease_types, CREASE_TYPES)):
            raise InvalidPattern("crease types must be in {M, V, U}")
        if np.any(verts < -COORD_TOL) or np.any(verts > 1.0 + COORD_TOL):
            raise InvalidPattern("vertex coordinates must lie in the unit square")
        if np.any(edges < 0) or np.any(edges >= len(verts)):
            raise InvalidPattern("edge endpoint index out of range")
        if np.any(edges[:, 0] == edges[:, 1]):
            raise InvalidPattern("edge endpoints must be distinct")
        keys = {tuple(sorted(e)) for e in edges.tolist()}
        if len(keys) != len(edges):
            raise InvalidPattern("duplicate edge (unordered pair)")
        # distinct embedded vertices; zero-length edges would break directions
        snapped = _snap(verts)
        if len({tuple(p) for p in snapped.tolist()}) != len(verts):
            raise InvalidPattern("duplicate vertex coordinates")
        self._check_planarity()
        for v in range(len(verts)):
            if self.is_interior(v):
                total = float(np.sum(sector_angles(self, v)))
                if abs(total - 2.0 * math.pi) > ANGLE_TOL:
                    raise InvalidPattern(
                        f"interior vertex {v} violates developability "
                        f"(sector sum {total:.6f})"
                    )

    def _check_planarity(self):
        verts, edges = self.vertices, self.edges
        for i in range(len(edges)):
            a, b = edges[i]
            for j in range(i + 1, len(edges)):
                c, d = edges[j]
                if a == c or a == d or b == c or b == d:
                    continue
                if _segments_conflict(verts[a], verts[b], verts[c], verts[d]):
                    raise InvalidPattern(
                        f"edges {i} and {j} intersect away from shared endpoints"
                    )

    # -- accessors --------------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def incident_edges(self, vertex: int) -> list[int]:
        return [j for j, (a, b) in enumerate(self.edges.tolist())
                if a == vertex or b == vertex]

    def is_interior(self, vertex: int) -> bool:
        """Interior = not touching any boundary edge nor the square border."""
        x, y = self.vertices[vertex]
        if min(x, y) <= COORD_TOL or max(x, y) >= 1.0 - COORD_TOL:
            return False
        for j in self.incident_edges(vertex):
            if self.boundary[j]:
                return False
        return True

    # -- equality ---------------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, CreasePattern):
            return NotImplemented
        return (
            np.array_equal(self.vertices, other.vertices)
            and np.array_equal(self.edges, other.edges)
            and np.array_equal(self.crease_types, other.crease_types)
            and np.array_equal(self.boundary, other.boundary)
            and self.category == other.category
        )

    def __hash__(self):
        return hash(
            (self.vertices.tobytes(), self.edges.tobytes(),
             self.crease_types.tobytes(), self.boundary.tobytes(), self.category)
        )


@dataclass(frozen=True, eq=False)
class FoldState:
    """Dynamic per-edge fold state attached to a CreasePattern."""

    alpha: np.ndarray        # (N_e,) signed dihedral angle in [-pi, pi]
    rho: np.ndarray          # (N_e,) progress ratio in [0, 1]
    z: np.ndarray            # (N_e,) '<U1' current crease type
    psi: float = 0.0         # global frame angle
    b: bool = False          # MV-flip flag
    step: int = 0

    def __post_init__(self):
        alpha = np.ascontiguousarray(np.asarray(self.alpha, dtype=np.float64))
        rho = np.ascontiguousarray(np.asarray(self.rho, dtype=np.float64))
        z = np.asarray(self.z, dtype="<U1")
        for name, arr in (("alpha", alpha), ("rho", rho), ("z", z)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n = len(alpha)
        if len(rho) != n or len(z) != n:
            raise ValueError("alpha, rho, z must share length N_e")
        if self.step < 0:
            raise ValueError("step counter must be nonnegative")

    def __eq__(self, other):
        if not isinstance(other, FoldState):
            return NotImplemented
        return (
            np.array_equal(self.alpha, other.alpha)
            and np.array_equal(self.rho, other.rho)
            and np.array_equal(self.z, other.z)
            and self.psi == other.psi
            and self.b == other.b
            and self.step == other.step
        )

    def __hash__(self):
        return hash((self.alpha.tobytes(), self.rho.tobytes(), self.z.tobytes(),
                     self.psi, self.b, self.step))

    def replace(self, **kw) -> "FoldState":
        data = dict(alpha=self.alpha, rho=self.rho, z=self.z,
                    psi=self.psi, b=self.b, step=self.step)
        data.update(kw)
        return FoldState(**data)


def flat_state(pattern: CreasePattern) -> FoldState:
    """The unfolded state: all angles zero, types at their initial labels."""
    n = pattern.n_edges
    return FoldState(alpha=np.zeros(n), rho=np.zeros(n),
                     z=pattern.crease_types.copy())


@dataclass(frozen=True, eq=False)
class CanonicalPattern:
    """A CreasePattern in canonical indexing plus the permutations applied."""

    pattern: CreasePattern
    vertex_permutation: np.ndarray   # original index -> canonical index
    edge_permutation: np.ndarray     # original index -> canonical index

    def __post_init__(self):
        vp = np.asarray(self.vertex_permutation, dtype=np.int64)
        ep = np.asarray(self.edge_permutation, dtype=np.int64)
        vp.setflags(write=False)
        ep.setflags(write=False)
        object.__setattr__(self, "vertex_permutation", vp)
        object.__setattr__(self, "edge_permutation", ep)

    def __eq__(self, other):
        if not isinstance(other, CanonicalPattern):
            return NotImplemented
        return (
            self.pattern == other.pattern
            and np.array_equal(self.vertex_permutation, other.vertex_permutation)
            and np.array_equal(self.edge_permutation, other.edge_permutation)
        )

    def __hash__(self):
        return hash(self.pattern)


def canonicalize(pattern: CreasePattern) -> CanonicalPattern:
    """Reindex vertices lexicographically by (x, y), then sort edges.

    Coordinates are snapped to a 1e-9 grid before comparison so the order is
    stable under the float noise that dihedral transforms introduce. The
    result is idempotent and invariant to any input vertex/edge relabeling.

    Assumes a valid pattern; construction validates by default, and callers
    who opted out with validate=False own that proof.
    """
    verts = _snap(pattern.vertices)
    order = np.lexsort((verts[:, 1], verts[:, 0]))
    vperm = np.empty(len(order), dtype=np.int64)
    vperm[order] = np.arange(len(order))

    new_verts = verts[order]
    remapped = vperm[pattern.edges]
    lo = np.minimum(remapped[:, 0], remapped[:, 1])
    hi = np.maximum(remapped[:, 0], remapped[:, 1])
    eorder = np.lexsort((hi, lo))
    eperm = np.empty(len(eorder), dtype=np.int64)
    eperm[eorder] = np.arange(len(eorder))

    new_edges = np.stack([lo[eorder], hi[eorder]], axis=1)
    canon = CreasePattern(
        vertices=new_verts,
        edges=new_edges,
        crease_types=pattern.crease_types[eorder],
        boundary=pattern.boundary[eorder],
        category=pattern.category,
        validate=False,   # a relabeling of an already-valid pattern
    )
    return CanonicalPattern(pattern=canon, vertex_permutation=vperm,
                            edge_permutation=eperm)


# Dihedral group of the square, in the fixed order used throughout:
# transform_id = r + 4*f where r in 0..3 counts 90-degree counterclockwise
# rotations about (0.5, 0.5) and f = 1 applies the reflection x -> 1 - x
# after rotating. All eight maps are exact in floating point.
def _apply_d4(xy: np.ndarray, transform_id: int) -> np.ndarray:
    x, y = xy[:, 0].copy(), xy[:, 1].copy()
    for _ in range(transform_id % 4):
        x, y = 1.0 - y, x
    if transform_id >= 4:
        x = 1.0 - x
    return np.stack([x, y], axis=1)


def dihedral_augment(pattern: CreasePattern, transform_id: int) -> CreasePattern:
    """Apply one of the 8 unit-square symmetries to the vertex coordinates."""
    if not 0 <= transform_id <= 7:
        raise ValueError(f"transform_id must be in 0..7, got {transform_id}")
    if transform_id == 0:
        return pattern
    return CreasePattern(
        vertices=_apply_d4(pattern.vertices, transform_id),
        edges=pattern.edges.copy(),
        crease_types=pattern.crease_types.copy(),
        boundary=pattern.boundary.copy(),
        category=pattern.category,
    )


def incident_directions(pattern: CreasePattern, vertex: int) -> np.ndarray:
    """Angles of incident edge directions at a vertex, sorted ascending."""
    dirs = []
    for j in pattern.incident_edges(vertex):
        a, b = pattern.edges[j]
        other = b if a == vertex else a
        d = pattern.vertices[other] - pattern.vertices[vertex]
        dirs.append(math.atan2(d[1], d[0]))
    return np.sort(np.asarray(dirs))


def sector_angles(pattern: CreasePattern, vertex: int) -> np.ndarray:
    """Angular gaps between consecutive incident edge directions (CCW).

    For an interior vertex the gaps sum to 2*pi.
    """
    theta = incident_directions(pattern, vertex)
    if len(theta) < 2:
        raise DegreeTooLow(
            f"vertex {vertex} has {len(theta)} incident directions, need >= 2"
        )
    gaps = np.diff(theta)
    wrap = 2.0 * math.pi - (theta[-1] - theta[0])
    return np.append(gaps, wrap)
