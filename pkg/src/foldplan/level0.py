"""Deterministic constraint kernel.

Applies a FoldAction to a FoldState and verifies hard local constraints:
action well-formedness, edge existence, non-boundary targets, crease-type
sign consistency, angle range, monotone fold progress, a step budget, and
Kawasaki/Maekawa at interior vertices the action folds flat. Invalidity is
data (a Verdict), never an exception; invalid steps return the input state
unchanged. Everything here is a pure function with fixed iteration orders,
so identical inputs give bit-identical outputs.

Global layer ordering / face self-intersection is out of scope.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .actions import (
    N_ANGLE_BINS,
    N_RHO_BINS,
    FoldAction,
    dequantize_angle,
    dequantize_rho,
)
from .cp import (
    ANGLE_TOL,
    CanonicalPattern,
    CreasePattern,
    DegreeTooLow,
    FoldState,
    sector_angles,
)

DEFAULT_STEP_BUDGET = 64
FULLY_FOLDED = 1.0 - 1e-12


class Reason(str, enum.Enum):
    OK = "OK"
    INVALID_EDGE = "INVALID_EDGE"
    BOUNDARY_EDGE = "BOUNDARY_EDGE"
    TYPE_CONFLICT = "TYPE_CONFLICT"
    ANGLE_OUT_OF_RANGE = "ANGLE_OUT_OF_RANGE"
    NONMONOTONE_PROGRESS = "NONMONOTONE_PROGRESS"
    KAWASAKI_VIOLATION = "KAWASAKI_VIOLATION"
    MAEKAWA_VIOLATION = "MAEKAWA_VIOLATION"
    DEVELOPABILITY_VIOLATION = "DEVELOPABILITY_VIOLATION"
    STEP_BUDGET_EXCEEDED = "STEP_BUDGET_EXCEEDED"
    MALFORMED_ACTION = "MALFORMED_ACTION"


class NotFullyFolded(ValueError):
    """Maekawa's check is only defined at flat-folded vertices."""


class OddDegree(ValueError):
    """Kawasaki's check needs an even crease degree."""


@dataclass(frozen=True, eq=False)
class Verdict:
    valid: bool
    reason: Reason
    affected_mask: np.ndarray   # (N_e,) bool

    def __post_init__(self):
        mask = np.asarray(self.affected_mask, dtype=bool)
        mask.setflags(write=False)
        object.__setattr__(self, "affected_mask", mask)
        assert self.valid == (self.reason == Reason.OK)

    def __eq__(self, other):
        if not isinstance(other, Verdict):
            return NotImplemented
        return (self.valid == other.valid and self.reason == other.reason
                and np.array_equal(self.affected_mask, other.affected_mask))


class PatternIndex:
    """Precomputed adjacency/geometry used by the kernel's hot path."""

    def __init__(self, pattern: CreasePattern):
        self.pattern = pattern
        ne, nv = pattern.n_edges, pattern.n_vertices
        self.incident = [[] for _ in range(nv)]
        for j, (a, b) in enumerate(pattern.edges.tolist()):
            self.incident[a].append(j)
            self.incident[b].append(j)
        self.interior = np.array([pattern.is_interior(v) for v in range(nv)])
        self.creases = [
            [j for j in self.incident[v] if not pattern.boundary[j]]
            for v in range(nv)
        ]
        # acted edge + every edge sharing one of its endpoints
        self.ring = np.zeros((ne, ne), dtype=bool)
        for j, (a, b) in enumerate(pattern.edges.tolist()):
            self.ring[j, self.incident[a]] = True
            self.ring[j, self.incident[b]] = True
            self.ring[j, j] = True
        self.ring.setflags(write=False)
        self.sectors = {
            v: sector_angles(pattern, v)
            for v in range(nv)
            if self.interior[v] and len(self.incident[v]) >= 2
        }
        self.developable = {
            v: abs(float(np.sum(s)) - 2.0 * math.pi) <= ANGLE_TOL
            for v, s in self.sectors.items()
        }

    def incident_mask(self, vertex: int) -> np.ndarray:
        mask = np.zeros(self.pattern.n_edges, dtype=bool)
        mask[self.incident[vertex]] = True
        return mask


@lru_cache(maxsize=256)
def pattern_index(pattern: CreasePattern) -> PatternIndex:
    return PatternIndex(pattern)


def _as_pattern(pattern) -> CreasePattern:
    return pattern.pattern if isinstance(pattern, CanonicalPattern) else pattern


def _effective_type(z: str, b: bool) -> str:
    if not b or z == "U":
        return z
    return "V" if z == "M" else "M"


def kawasaki_from_angles(angles, tol: float = ANGLE_TOL) -> bool:
    """Alternating sector-angle sums must each equal pi."""
    angles = np.asarray(angles, dtype=np.float64)
    if len(angles) % 2 != 0:
        raise OddDegree(f"odd sector count {len(angles)}")
    return (abs(float(np.sum(angles[0::2])) - math.pi) <= tol
            and abs(float(np.sum(angles[1::2])) - math.pi) <= tol)


def maekawa_from_types(types) -> bool:
    """Even crease count with |#M - #V| == 2."""
    types = list(types)
    if len(types) % 2 != 0:
        return False
    n_m = sum(1 for t in types if t == "M")
    n_v = sum(1 for t in types if t == "V")
    return abs(n_m - n_v) == 2


def check_kawasaki(pattern, vertex: int) -> bool:
    pattern = _as_pattern(pattern)
    idx = pattern_index(pattern)
    if not idx.interior[vertex]:
        raise ValueError(f"vertex {vertex} is not interior")
    if len(idx.creases[vertex]) < 2:
        raise DegreeTooLow(f"vertex {vertex} has crease degree < 2")
    return kawasaki_from_angles(idx.sectors[vertex])


def check_maekawa(pattern, state: FoldState, vertex: int) -> bool:
    pattern = _as_pattern(pattern)
    idx = pattern_index(pattern)
    if not idx.interior[vertex]:
        raise ValueError(f"vertex {vertex} is not interior")
    creases = idx.creases[vertex]
    if any(state.rho[j] < FULLY_FOLDED for j in creases):
        raise NotFullyFolded(f"vertex {vertex} has a crease with rho < 1")
    types = [_effective_type(state.z[j], state.b) for j in creases]
    return maekawa_from_types(types)


def _flat_vertex_violation(idx: PatternIndex, state: FoldState, vertex: int):
    """Kawasaki then Maekawa at a fully folded interior vertex, else None."""
    creases = idx.creases[vertex]
    if len(creases) % 2 == 0 and len(creases) >= 2:
        if not kawasaki_from_angles(idx.sectors[vertex]):
            return Reason.KAWASAKI_VIOLATION
    types = [_effective_type(state.z[j], state.b) for j in creases]
    if not maekawa_from_types(types):
        return Reason.MAEKAWA_VIOLATION
    return None


def verify_flat_state(pattern, state: FoldState) -> Verdict:
    """Scan interior vertices in canonical order; report the first violation.

    Developability is checked everywhere; Kawasaki and Maekawa only where
    every incident crease is fully folded (the theorems speak about
    flat-folded states).
    """
    pattern = _as_pattern(pattern)
    idx = pattern_index(pattern)
    ne = pattern.n_edges
    for v in range(pattern.n_vertices):
        if not idx.interior[v]:
            continue
        if not idx.developable.get(v, True):
            return Verdict(False, Reason.DEVELOPABILITY_VIOLATION,
                           idx.incident_mask(v))
        creases = idx.creases[v]
        if creases and all(state.rho[j] >= FULLY_FOLDED for j in creases):
            reason = _flat_vertex_violation(idx, state, v)
            if reason is not None:
                return Verdict(False, reason, idx.incident_mask(v))
    return Verdict(True, Reason.OK, np.zeros(ne, dtype=bool))


def _invalid(state: FoldState, reason: Reason, mask: np.ndarray):
    return state, Verdict(False, reason, mask)


def step(pattern, state: FoldState, action: FoldAction,
         step_budget: int = DEFAULT_STEP_BUDGET):
    """Apply one action; returns (next_state, Verdict).

    Invalid actions never mutate: the returned state is the input state.
    """
    pattern = _as_pattern(pattern)
    ne = pattern.n_edges
    if len(state.alpha) != ne:
        raise ValueError("state does not belong to pattern (length mismatch)")
    no_mask = np.zeros(ne, dtype=bool)

    if not isinstance(action, FoldAction):
        return _invalid(state, Reason.MALFORMED_ACTION, no_mask)
    if state.step >= step_budget:
        return _invalid(state, Reason.STEP_BUDGET_EXCEEDED, no_mask)

    idx = pattern_index(pattern)
    op = action.op

    if op == "DONE":
        return state.replace(step=state.step + 1), Verdict(True, Reason.OK, no_mask)

    if op == "ROTATE":
        psi = (state.psi + action.rotate_quarter_turns * math.pi / 2.0) % (2.0 * math.pi)
        return (state.replace(psi=psi, step=state.step + 1),
                Verdict(True, Reason.OK, no_mask))

    if op == "FLIP":
        mask = state.rho > 0
        alpha = np.where(state.alpha != 0.0, -state.alpha, 0.0)
        return (state.replace(alpha=alpha, b=not state.b, step=state.step + 1),
                Verdict(True, Reason.OK, mask))

    # FOLD / UNFOLD share the edge checks
    e = action.edge
    if not 0 <= e < ne:
        return _invalid(state, Reason.INVALID_EDGE, no_mask)
    mask = idx.ring[e].copy()
    if pattern.boundary[e]:
        return _invalid(state, Reason.BOUNDARY_EDGE, mask)

    if op == "UNFOLD":
        alpha = state.alpha.copy()
        rho = state.rho.copy()
        z = state.z.copy()
        alpha[e] = 0.0
        rho[e] = 0.0
        z[e] = pattern.crease_types[e]
        return (state.replace(alpha=alpha, rho=rho, z=z, step=state.step + 1),
                Verdict(True, Reason.OK, mask))

    # FOLD
    if not 0 <= action.angle_bin < N_ANGLE_BINS:
        return _invalid(state, Reason.ANGLE_OUT_OF_RANGE, mask)
    if not 0 <= action.rho_bin < N_RHO_BINS:
        return _invalid(state, Reason.MALFORMED_ACTION, no_mask)

    a, bvert = pattern.edges[e]
    for v in (a, bvert):
        if idx.interior[v] and not idx.developable.get(v, True):
            return _invalid(state, Reason.DEVELOPABILITY_VIOLATION, mask)

    target = dequantize_angle(action.angle_bin)
    sign_pos = target > 0.0
    ztype = state.z[e]
    if ztype != "U":
        # M folds positive, V negative, under b = False; flipped under b = True
        want_pos = (ztype == "M") != state.b
        if sign_pos != want_pos:
            return _invalid(state, Reason.TYPE_CONFLICT, mask)
    new_rho = dequantize_rho(action.rho_bin)
    if new_rho < state.rho[e] - 1e-12:
        return _invalid(state, Reason.NONMONOTONE_PROGRESS, mask)

    alpha = state.alpha.copy()
    rho = state.rho.copy()
    z = state.z.copy()
    alpha[e] = target
    rho[e] = new_rho
    if ztype == "U":
        z[e] = "M" if sign_pos != state.b else "V"
    new_state = state.replace(alpha=alpha, rho=rho, z=z, step=state.step + 1)

    # flat-foldedness checks at endpoints the fold completes
    for v in (a, bvert):
        if not idx.interior[v]:
            continue
        creases = idx.creases[v]
        if creases and all(rho[j] >= FULLY_FOLDED for j in creases):
            reason = _flat_vertex_violation(idx, new_state, v)
            if reason is not None:
                return _invalid(state, reason, mask)

    return new_state, Verdict(True, Reason.OK, mask)
