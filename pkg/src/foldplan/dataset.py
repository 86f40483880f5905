"""Synthetic data engine.

Generates parameterized crease-pattern families, procedural expert folding
programs, counterfactual perturbations labeled by the constraint kernel,
and serialized trajectory corpora. No record's verdict is ever authored
here: every transition runs through level0.step and keeps whatever the
kernel said.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import level0
from .actions import FoldAction, quantize_angle
from .cp import CanonicalPattern, CreasePattern, FoldState, canonicalize, flat_state
from .jsonio import (
    canonical_dumps,
    content_hash,
    pattern_from_dict,
    pattern_hash,
    pattern_to_dict,
    read_json,
    state_from_dict,
    state_to_dict,
    write_json,
)
from .planner import GoalSpec
from .policy import PolicyContext

CORPUS_FORMAT_VERSION = 1

SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])

# angle bins whose centers are the procedural fold targets
BIN_FULL_M = 15      # pi - pi/16
BIN_FULL_V = 0       # -pi + pi/16
BIN_PART_M = 12      # 0.5625 * pi
BIN_PART_V = 3


class GenerationExhausted(RuntimeError):
    pass


class Tier(str, enum.Enum):
    SIMPLE = "SIMPLE"
    INTERMEDIATE = "INTERMEDIATE"
    COMPLEX = "COMPLEX"


class Provenance(str, enum.Enum):
    EXPERT = "EXPERT"
    PERTURBED = "PERTURBED"
    EXPLORED = "EXPLORED"


@dataclass(frozen=True, eq=False)
class TransitionRecord:
    pattern_ref: str
    pattern: CanonicalPattern          # resolved in memory, serialized as ref
    state_before: FoldState
    action: FoldAction
    state_after: FoldState
    verdict: level0.Verdict
    provenance: Provenance

    def __post_init__(self):
        if not self.verdict.valid:
            assert self.state_after == self.state_before

    def __eq__(self, other):
        if not isinstance(other, TransitionRecord):
            return NotImplemented
        return (self.pattern_ref == other.pattern_ref
                and self.state_before == other.state_before
                and self.action == other.action
                and self.state_after == other.state_after
                and self.verdict == other.verdict
                and self.provenance == other.provenance)


@dataclass(frozen=True)
class ExpertProgram:
    pattern: CanonicalPattern
    goal: GoalSpec
    actions: tuple
    category: str
    tier: Tier


# ---------------------------------------------------------------------------
# pattern families
# ---------------------------------------------------------------------------

def _boundary_loop(points: np.ndarray):
    """Edges between consecutive points of a closed boundary polygon."""
    n = len(points)
    return [(i, (i + 1) % n) for i in range(n)]


def _assemble(boundary_pts, extra_pts, creases, crease_types, category):
    """Patterns here list boundary vertices first, then interior ones."""
    verts = np.vstack([boundary_pts] + ([extra_pts] if len(extra_pts) else []))
    edges = _boundary_loop(boundary_pts) + list(creases)
    n_b = len(boundary_pts)
    types = ["U"] * n_b + list(crease_types)
    bnd = [True] * n_b + [False] * len(creases)
    return CreasePattern(vertices=verts, edges=np.array(edges),
                         crease_types=np.array(types), boundary=np.array(bnd),
                         category=category)


def diagonal_pattern(ctype: str = "V") -> CreasePattern:
    return _assemble(SQUARE, [], [(0, 2)], [ctype], "diagonal")


def book_pattern(ctype: str = "V") -> CreasePattern:
    pts = np.array([[0, 0], [0.5, 0], [1, 0], [1, 1], [0.5, 1], [0, 1]], dtype=float)
    return _assemble(pts, [], [(1, 4)], [ctype], "book")


def gate_pattern() -> CreasePattern:
    pts = np.array([[0, 0], [0.25, 0], [0.75, 0], [1, 0],
                    [1, 1], [0.75, 1], [0.25, 1], [0, 1]], dtype=float)
    return _assemble(pts, [], [(1, 6), (2, 5)], ["V", "V"], "gate")


def blintz_pattern() -> CreasePattern:
    pts = np.array([[0, 0], [0.5, 0], [1, 0], [1, 0.5], [1, 1],
                    [0.5, 1], [0, 1], [0, 0.5]], dtype=float)
    creases = [(1, 3), (3, 5), (5, 7), (7, 1)]
    return _assemble(pts, [], creases, ["M"] * 4, "blintz")


def grid_pattern(k: int) -> CreasePattern:
    """k x k box pleat with a map-folding MV assignment.

    Vertical line i is M for odd i; a horizontal segment in column c of
    line j is M when (j + c) is even. At every interior vertex this yields
    |#M - #V| = 2, so fully folding the grid passes Maekawa.
    """
    if k < 2:
        raise ValueError("grid needs k >= 2")
    coords = np.array([[i / k, j / k] for j in range(k + 1) for i in range(k + 1)])
    vid = lambda i, j: j * (k + 1) + i
    edges, types, bnd = [], [], []
    for j in range(k + 1):
        for i in range(k):
            edges.append((vid(i, j), vid(i + 1, j)))
            if j in (0, k):
                types.append("U")
                bnd.append(True)
            else:
                types.append("M" if (j + i) % 2 == 0 else "V")
                bnd.append(False)
    for i in range(k + 1):
        for j in range(k):
            edges.append((vid(i, j), vid(i, j + 1)))
            if i in (0, k):
                types.append("U")
                bnd.append(True)
            else:
                types.append("M" if i % 2 == 1 else "V")
                bnd.append(False)
    return CreasePattern(vertices=coords, edges=np.array(edges),
                         crease_types=np.array(types), boundary=np.array(bnd),
                         category=f"grid{k}")


def _ray_to_border(direction: float) -> np.ndarray:
    """Where a ray from the square's center exits the unit square."""
    dx, dy = math.cos(direction), math.sin(direction)
    best = math.inf
    for num, den in ((0.5, -dx), (0.5, dx), (0.5, -dy), (0.5, dy)):
        if den > 1e-12:
            best = min(best, num / den)
    p = np.array([0.5 + best * dx, 0.5 + best * dy])
    return np.clip(np.round(p, 9), 0.0, 1.0)


def _perimeter_pos(p: np.ndarray) -> float:
    """Position of a border point along the CCW perimeter from (0,0)."""
    x, y = p
    if y <= 1e-9 and x < 1.0:
        return x
    if x >= 1.0 - 1e-9 and y < 1.0:
        return 1.0 + y
    if y >= 1.0 - 1e-9:
        return 3.0 - x
    return 4.0 - y


def radial_from_directions(directions, crease_types, category="radial") -> CreasePattern:
    """d creases from the center to the border along the given directions."""
    d = len(directions)
    if d != len(crease_types):
        raise ValueError("need one crease type per direction")
    hits = [_ray_to_border(t) for t in directions]
    border = list(SQUARE) + hits
    keyed = sorted(range(len(border)), key=lambda i: _perimeter_pos(border[i]))
    # drop coincident border points (a ray through a corner)
    ordered, seen = [], set()
    for i in keyed:
        key = tuple(np.round(border[i], 9))
        if key not in seen:
            seen.add(key)
            ordered.append(border[i])
    boundary_pts = np.array(ordered)
    center = np.array([[0.5, 0.5]])
    cidx = len(boundary_pts)
    pos = {tuple(np.round(p, 9)): i for i, p in enumerate(boundary_pts)}
    creases = [(cidx, pos[tuple(np.round(h, 9))]) for h in hits]
    return _assemble(boundary_pts, center, creases, list(crease_types), category)


def kawasaki_directions(d: int, rng: np.random.Generator) -> np.ndarray:
    """d directions (d even) whose alternating sector sums are each pi."""
    if d < 4 or d % 2:
        raise ValueError("need an even crease count >= 4")
    half = d // 2

    def gaps():
        cuts = np.sort(rng.uniform(0.15, math.pi - 0.15, size=half - 1))
        g = np.diff(np.concatenate([[0.0], cuts, [math.pi]]))
        return g

    odd, even = gaps(), gaps()
    sectors = np.empty(d)
    sectors[0::2] = odd
    sectors[1::2] = even
    theta0 = rng.uniform(0.0, 2.0 * math.pi)
    return (theta0 + np.concatenate([[0.0], np.cumsum(sectors[:-1])])) % (2.0 * math.pi)


def maekawa_types(d: int, rng: np.random.Generator) -> list[str]:
    types = ["M"] * (d // 2 + 1) + ["V"] * (d // 2 - 1)
    rng.shuffle(types)
    return types


def radial_pattern(d: int, rng: np.random.Generator,
                   category: str | None = None) -> CreasePattern:
    for _ in range(10_000):
        try:
            dirs = kawasaki_directions(d, rng)
            return radial_from_directions(dirs, maekawa_types(d, rng),
                                          category or f"radial{d}")
        except Exception:
            continue
    raise GenerationExhausted(f"could not build a radial({d}) pattern")


def random_valid_pattern(n: int, rng: np.random.Generator,
                         category: str | None = None) -> CreasePattern:
    """Rejection-sampled developable pattern via Delaunay triangulation."""
    from scipy.spatial import Delaunay

    for _ in range(10_000):
        pts = np.vstack([SQUARE, rng.uniform(0.1, 0.9, size=(n, 2))])
        pts = np.round(pts, 9)
        try:
            tri = Delaunay(pts)
            pairs = set()
            for simplex in tri.simplices:
                for a in range(3):
                    pairs.add(tuple(sorted((simplex[a], simplex[(a + 1) % 3]))))
            hull = {tuple(sorted(h)) for h in tri.convex_hull}
            edges = sorted(pairs)
            types = [
                "U" if pair in hull else "MVU"[rng.integers(3)]
                for pair in edges
            ]
            bnd = [pair in hull for pair in edges]
            return CreasePattern(vertices=pts, edges=np.array(edges),
                                 crease_types=np.array(types),
                                 boundary=np.array(bnd),
                                 category=category or f"random{n}")
        except Exception:
            continue
    raise GenerationExhausted(f"could not build a random({n}) pattern")


FAMILIES = ("DIAGONAL", "BOOK_FOLD", "GATE", "BLINTZ", "GRID", "RADIAL",
            "RANDOM_VALID")


def generate_patterns(family: str, params: dict | None = None,
                      seed: int = 0, count: int = 1) -> list[CreasePattern]:
    """Deterministic per seed; every output passes pattern validation."""
    params = params or {}
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        if family == "DIAGONAL":
            out.append(diagonal_pattern(params.get("ctype", "V")))
        elif family == "BOOK_FOLD":
            out.append(book_pattern(params.get("ctype", "V")))
        elif family == "GATE":
            out.append(gate_pattern())
        elif family == "BLINTZ":
            out.append(blintz_pattern())
        elif family == "GRID":
            out.append(grid_pattern(int(params.get("k", 3))))
        elif family == "RADIAL":
            out.append(radial_pattern(int(params.get("d", 4)), rng))
        elif family == "RANDOM_VALID":
            out.append(random_valid_pattern(int(params.get("n", 8)), rng))
        else:
            raise ValueError(f"unknown family {family!r}; one of {FAMILIES}")
    return out


# ---------------------------------------------------------------------------
# expert programs
# ---------------------------------------------------------------------------

def _fold_bins(ctype: str, edge_index: int, full: bool):
    if ctype == "M":
        angle = BIN_FULL_M if full else BIN_PART_M
    elif ctype == "V":
        angle = BIN_FULL_V if full else BIN_PART_V
    else:  # unassigned: alternate directions by edge parity
        m_like = edge_index % 2 == 0
        angle = (BIN_FULL_M if m_like else BIN_FULL_V) if full else \
                (BIN_PART_M if m_like else BIN_PART_V)
    return angle, 7 if full else 5


def build_expert(pattern: CreasePattern | CanonicalPattern, tier: Tier,
                 full_folds: bool = True) -> ExpertProgram:
    """Fold every crease to its target in canonical edge order, then DONE.

    Replays through the kernel while building; the resulting action list is
    valid at every step and its goal is the reached final state.
    """
    cpat = pattern if isinstance(pattern, CanonicalPattern) else canonicalize(pattern)
    pat = cpat.pattern
    state = flat_state(pat)
    actions = []
    for j in range(pat.n_edges):
        if pat.boundary[j]:
            continue
        angle_bin, rho_bin = _fold_bins(pat.crease_types[j], j, full_folds)
        action = FoldAction(op="FOLD", edge=j, angle_bin=angle_bin, rho_bin=rho_bin)
        state, verdict = level0.step(pat, state, action)
        if not verdict.valid:
            raise GenerationExhausted(
                f"procedural expert hit {verdict.reason.value} on edge {j} "
                f"of {pat.category}"
            )
        actions.append(action)
    actions.append(FoldAction(op="DONE"))
    state, verdict = level0.step(pat, state, actions[-1])
    assert verdict.valid
    goal = GoalSpec(category=pat.category or "uncategorized",
                    target_alpha=state.alpha.copy(), target_z=state.z.copy())
    return ExpertProgram(pattern=cpat, goal=goal, actions=tuple(actions),
                         category=goal.category, tier=tier)


def replay_program(program: ExpertProgram):
    """(PolicyContext, action, state_before, state_after, verdict) per step."""
    pat = program.pattern
    state = flat_state(pat.pattern)
    out = []
    for action in program.actions:
        ctx = PolicyContext(goal=program.goal, pattern=pat, state=state)
        nxt, verdict = level0.step(pat, state, action)
        out.append((ctx, action, state, nxt, verdict))
        assert verdict.valid, "expert replay must stay valid"
        state = nxt
    return out


def training_pairs(program: ExpertProgram):
    steps = replay_program(program)
    return ([s[0] for s in steps], [s[1] for s in steps])


# ---------------------------------------------------------------------------
# perturbations
# ---------------------------------------------------------------------------

def _perturb_action(action: FoldAction, n_edges: int,
                    rng: np.random.Generator) -> FoldAction:
    if action.op != "FOLD":
        # substitute a random fold so even DONE steps yield counterfactuals
        return FoldAction(op="FOLD", edge=int(rng.integers(n_edges)),
                          angle_bin=int(rng.integers(16)),
                          rho_bin=int(rng.integers(8)))
    kind = int(rng.integers(5))
    if kind == 0:        # angle-bin shift
        shift = int(rng.choice([-2, -1, 1, 2]))
        return FoldAction(op="FOLD", edge=action.edge,
                          angle_bin=int(np.clip(action.angle_bin + shift, 0, 15)),
                          rho_bin=action.rho_bin)
    if kind == 1:        # rho-bin shift
        shift = int(rng.choice([-2, -1, 1, 2]))
        return FoldAction(op="FOLD", edge=action.edge,
                          angle_bin=action.angle_bin,
                          rho_bin=int(np.clip(action.rho_bin + shift, 0, 7)))
    if kind == 2:        # wrong-edge substitution
        others = [j for j in range(n_edges) if j != action.edge]
        return FoldAction(op="FOLD", edge=int(rng.choice(others)),
                          angle_bin=action.angle_bin, rho_bin=action.rho_bin)
    if kind == 3:        # crease-type sign flip
        return FoldAction(op="FOLD", edge=action.edge,
                          angle_bin=15 - action.angle_bin,
                          rho_bin=action.rho_bin)
    ops = ["UNFOLD", "FLIP", "ROTATE", "DONE"]
    op = ops[int(rng.integers(len(ops)))]
    if op == "UNFOLD":
        return FoldAction(op="UNFOLD", edge=action.edge)
    if op == "ROTATE":
        return FoldAction(op="ROTATE", rotate_quarter_turns=int(rng.integers(4)))
    return FoldAction(op=op)


def perturb_expert(program: ExpertProgram, per_step: int = 12,
                   seed: int = 0) -> list[TransitionRecord]:
    """Expert transitions plus kernel-labeled counterfactuals.

    Output size is exactly steps * (1 + per_step); both valid and invalid
    outcomes are retained.
    """
    if per_step < 1:
        raise ValueError("per_step must be >= 1")
    rng = np.random.default_rng(seed)
    pat = program.pattern
    ref = pattern_hash(pat.pattern)
    records = []
    for _ctx, action, before, after, verdict in replay_program(program):
        records.append(TransitionRecord(
            pattern_ref=ref, pattern=pat, state_before=before, action=action,
            state_after=after, verdict=verdict, provenance=Provenance.EXPERT))
        for _ in range(per_step):
            cand = _perturb_action(action, pat.pattern.n_edges, rng)
            nxt, v = level0.step(pat, before, cand)
            records.append(TransitionRecord(
                pattern_ref=ref, pattern=pat, state_before=before, action=cand,
                state_after=nxt, verdict=v, provenance=Provenance.PERTURBED))
    return records


# ---------------------------------------------------------------------------
# theorem fixtures (used by the oracle test suite)
# ---------------------------------------------------------------------------

def _fully_folded_state(pattern: CreasePattern) -> FoldState:
    alpha = np.where(pattern.boundary, 0.0,
                     np.where(pattern.crease_types == "M", math.pi, -math.pi))
    rho = np.where(pattern.boundary, 0.0, 1.0)
    return FoldState(alpha=alpha, rho=rho, z=pattern.crease_types.copy())


def valid_vertex_fixtures(count: int, seed: int = 0):
    """(pattern, fully folded state) pairs with a theorem-satisfying center."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        d = int(rng.choice([4, 6, 8]))
        pat = radial_pattern(d, rng)
        out.append((pat, _fully_folded_state(pat)))
    return out


def invalid_vertex_fixtures(count: int, seed: int = 0):
    """(pattern, state, expected reason) triples designed to fail.

    Half break Kawasaki (alternating sums perturbed by >= 2 degrees) and
    half break Maekawa (equal mountain/valley counts).
    """
    rng = np.random.default_rng(seed)
    two_deg = math.radians(2.0)
    out = []
    while len(out) < count:
        d = int(rng.choice([4, 6, 8]))
        dirs = kawasaki_directions(d, rng)
        if len(out) % 2 == 0:
            # shift one crease direction: moves angle between alternating
            # sums, keeping the planar embedding developable
            delta = two_deg * (1.0 + rng.random())
            dirs = dirs.copy()
            dirs[1] = (dirs[1] + delta) % (2.0 * math.pi)
            order = np.sort(dirs % (2.0 * math.pi))
            if np.min(np.diff(order)) < 0.05:
                continue
            pat = radial_from_directions(dirs, maekawa_types(d, rng),
                                         category="invalid_kawasaki")
            out.append((pat, _fully_folded_state(pat),
                        level0.Reason.KAWASAKI_VIOLATION))
        else:
            types = ["M"] * (d // 2) + ["V"] * (d // 2)
            rng.shuffle(types)
            pat = radial_from_directions(dirs, types,
                                         category="invalid_maekawa")
            out.append((pat, _fully_folded_state(pat),
                        level0.Reason.MAEKAWA_VIOLATION))
    return out


# ---------------------------------------------------------------------------
# corpus construction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CorpusConfig:
    per_step: int = 12
    partial_families: tuple = ("random",)
    test_fraction: float = 0.2
    # (family, params, tier, count) quadruples; counts are programs
    plan: tuple = (
        ("DIAGONAL", {}, "SIMPLE", 8),
        ("BOOK_FOLD", {}, "SIMPLE", 8),
        ("GATE", {}, "INTERMEDIATE", 8),
        ("BLINTZ", {}, "INTERMEDIATE", 8),
        ("GRID", {"k": 2}, "INTERMEDIATE", 8),
        ("GRID", {"k": 3}, "COMPLEX", 8),
        ("RADIAL", {"d": 4}, "INTERMEDIATE", 40),
        ("RADIAL", {"d": 6}, "COMPLEX", 40),
        ("RANDOM_VALID", {"n": 6}, "COMPLEX", 40),
        ("RANDOM_VALID", {"n": 9}, "COMPLEX", 40),
    )

    def to_dict(self) -> dict:
        return {
            "per_step": self.per_step,
            "partial_families": list(self.partial_families),
            "test_fraction": self.test_fraction,
            "plan": [list(row) for row in self.plan],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CorpusConfig":
        kw = dict(d)
        if "plan" in kw:
            kw["plan"] = tuple(
                (f, dict(p), t, int(c)) for f, p, t, c in kw["plan"]
            )
        if "partial_families" in kw:
            kw["partial_families"] = tuple(kw["partial_families"])
        return cls(**kw)


def generate_programs(config: CorpusConfig, seed: int) -> list[ExpertProgram]:
    """Family plan expanded through dihedral augmentation, then canonicalized."""
    from .cp import dihedral_augment

    programs = []
    for fam_index, (family, params, tier, count) in enumerate(config.plan):
        fam_seed = seed * 1000 + fam_index
        base_count = max(1, count // 8) if family in (
            "DIAGONAL", "BOOK_FOLD", "GATE", "BLINTZ", "GRID") else count
        patterns = generate_patterns(family, params, seed=fam_seed,
                                     count=base_count)
        variants = []
        for pat in patterns:
            if len(patterns) * 8 <= count:
                variants.extend(dihedral_augment(pat, t) for t in range(8))
            else:
                variants.append(pat)
        full = not any(tag in (patterns[0].category or "")
                       for tag in config.partial_families)
        for pat in variants[:count]:
            programs.append(build_expert(pat, Tier(tier), full_folds=full))
    return programs


def _verdict_to_dict(v: level0.Verdict) -> dict:
    return {"valid": v.valid, "reason": v.reason.value,
            "affected_mask": v.affected_mask}


def _verdict_from_dict(d: dict) -> level0.Verdict:
    return level0.Verdict(valid=d["valid"], reason=level0.Reason(d["reason"]),
                          affected_mask=np.asarray(d["affected_mask"], dtype=bool))


def _record_to_dict(rec: TransitionRecord) -> dict:
    return {
        "pattern_ref": rec.pattern_ref,
        "state_before": state_to_dict(rec.state_before),
        "action": rec.action.to_dict(),
        "state_after": state_to_dict(rec.state_after),
        "verdict": _verdict_to_dict(rec.verdict),
        "provenance": rec.provenance.value,
    }


def _record_from_dict(d: dict, pattern: CanonicalPattern) -> TransitionRecord:
    return TransitionRecord(
        pattern_ref=d["pattern_ref"], pattern=pattern,
        state_before=state_from_dict(d["state_before"]),
        action=FoldAction.from_dict(d["action"]),
        state_after=state_from_dict(d["state_after"]),
        verdict=_verdict_from_dict(d["verdict"]),
        provenance=Provenance(d["provenance"]),
    )


def build_corpus(out_dir, config: CorpusConfig | None = None, seed: int = 0) -> dict:
    """Write a trajectory corpus; returns the manifest. Deterministic per seed."""
    config = config or CorpusConfig()
    out = Path(out_dir)
    (out / "patterns").mkdir(parents=True, exist_ok=True)
    (out / "programs").mkdir(parents=True, exist_ok=True)

    programs = generate_programs(config, seed)
    rng = np.random.default_rng(seed + 1)

    by_category: dict[str, list[int]] = {}
    for i, prog in enumerate(programs):
        by_category.setdefault(prog.category, []).append(i)
    split = {}
    for cat in sorted(by_category):
        ids = by_category[cat]
        perm = rng.permutation(len(ids))
        n_test = max(1, int(round(config.test_fraction * len(ids)))) \
            if len(ids) > 1 else 0
        for rank, k in enumerate(perm):
            split[ids[k]] = "test" if rank < n_test else "train"

    manifest = {
        "version": CORPUS_FORMAT_VERSION,
        "seed": seed,
        "config": config.to_dict(),
        "programs": {},
        "per_category": {},
        "per_tier": {},
        "n_programs": len(programs),
        "n_transitions": 0,
        "n_valid": 0,
        "n_invalid": 0,
    }
    for i, prog in enumerate(programs):
        phash = pattern_hash(prog.pattern.pattern)
        ppath = out / "patterns" / f"{phash}.json"
        if not ppath.exists():
            write_json(ppath, pattern_to_dict(prog.pattern.pattern))
        records = perturb_expert(prog, per_step=config.per_step,
                                 seed=seed * 100_003 + i)
        prog_id = f"{prog.category}_{i:04d}"
        doc = {
            "pattern_ref": phash,
            "category": prog.category,
            "tier": prog.tier.value,
            "split": split[i],
            "goal": prog.goal.to_dict(),
            "actions": [a.to_dict() for a in prog.actions],
            "records": [_record_to_dict(r) for r in records],
        }
        write_json(out / "programs" / f"{prog_id}.json", doc)
        manifest["programs"][prog_id] = {
            "hash": content_hash(doc), "split": split[i],
            "category": prog.category, "tier": prog.tier.value,
            "n_records": len(records),
        }
        manifest["n_transitions"] += len(records)
        n_valid = sum(1 for r in records if r.verdict.valid)
        manifest["n_valid"] += n_valid
        manifest["n_invalid"] += len(records) - n_valid
        cat = manifest["per_category"].setdefault(
            prog.category, {"programs": 0, "records": 0})
        cat["programs"] += 1
        cat["records"] += len(records)
        tier = manifest["per_tier"].setdefault(
            prog.tier.value, {"programs": 0, "records": 0})
        tier["programs"] += 1
        tier["records"] += len(records)

    write_json(out / "manifest.json", manifest)
    return manifest


def load_corpus(corpus_dir, split: str | None = None):
    """Programs as dicts with resolved patterns and TransitionRecords."""
    corpus = Path(corpus_dir)
    manifest = read_json(corpus / "manifest.json")
    if manifest.get("version") != CORPUS_FORMAT_VERSION:
        raise ValueError("unsupported corpus version")
    patterns: dict[str, CanonicalPattern] = {}
    out = []
    for prog_id in sorted(manifest["programs"]):
        meta = manifest["programs"][prog_id]
        if split is not None and meta["split"] != split:
            continue
        doc = read_json(corpus / "programs" / f"{prog_id}.json")
        ref = doc["pattern_ref"]
        if ref not in patterns:
            pat = pattern_from_dict(read_json(corpus / "patterns" / f"{ref}.json"))
            patterns[ref] = canonicalize(pat)
        cpat = patterns[ref]
        out.append({
            "id": prog_id,
            "pattern": cpat,
            "category": doc["category"],
            "tier": Tier(doc["tier"]),
            "split": doc["split"],
            "goal": GoalSpec.from_dict(doc["goal"]),
            "actions": [FoldAction.from_dict(a) for a in doc["actions"]],
            "records": [_record_from_dict(r, cpat) for r in doc["records"]],
        })
    return out


def load_transitions(corpus_dir, split: str | None = None) -> list[TransitionRecord]:
    records = []
    for prog in load_corpus(corpus_dir, split=split):
        records.extend(prog["records"])
    return records
