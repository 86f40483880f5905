"""Graph-guided MPC loop.

Each planning step samples candidate actions from the policy, hard-verifies
them with the constraint kernel, scores the survivors with the world model
plus a goal utility, and executes the argmax. When no candidate survives
(or the best fused score falls below the acceptance threshold), folds onto
the most suspect edges are banned and sampling retries under the grown
negative-constraint set. Execution always uses the symbolic kernel;
imagined states only ever score candidates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import level0
from .actions import FoldAction
from .cp import CanonicalPattern, FoldState
from .policy import PolicyContext
from .world_model import WorldModel


class NoValidAction(RuntimeError):
    """Every sampling round was exhausted without a valid candidate."""


class LengthMismatch(ValueError):
    pass


@dataclass(frozen=True)
class GoalSpec:
    category: str
    target_alpha: np.ndarray     # (N_e,) in [-pi, pi]
    target_z: np.ndarray         # (N_e,) '<U1'
    tolerance: float = math.pi / 16

    def __post_init__(self):
        ta = np.asarray(self.target_alpha, dtype=np.float64)
        tz = np.asarray(self.target_z, dtype="<U1")
        ta.setflags(write=False)
        tz.setflags(write=False)
        object.__setattr__(self, "target_alpha", ta)
        object.__setattr__(self, "target_z", tz)
        if len(ta) != len(tz):
            raise LengthMismatch("target_alpha and target_z lengths differ")
        if np.any(np.abs(ta) > math.pi + 1e-12):
            raise ValueError("target angles must lie in [-pi, pi]")

    def to_dict(self) -> dict:
        return {"category": self.category, "target_alpha": self.target_alpha,
                "target_z": self.target_z.tolist(), "tolerance": self.tolerance}

    @classmethod
    def from_dict(cls, d: dict) -> "GoalSpec":
        return cls(category=d["category"],
                   target_alpha=np.asarray(d["target_alpha"], dtype=np.float64),
                   target_z=np.asarray(d["target_z"], dtype="<U1"),
                   tolerance=float(d.get("tolerance", math.pi / 16)))


@dataclass(frozen=True)
class PlannerConfig:
    K: int = 8                   # candidates per sampling round
    p: float = 0.9               # nucleus mass
    lambda_goal: float = 1.0
    lambda_cst: float = 1.0
    epsilon: float = 1e-6
    tau: float = -10.0           # acceptance threshold on the fused score
    M: int = 3                   # edges banned per re-sampling round
    max_resamples: int = 3
    max_steps: int = 64
    seed: int = 0
    imagine_depth: int = 1
    violation_aggregate: str = "max"   # "max" (as scored) or "mean"

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if not 0.0 < self.p <= 1.0:
            raise ValueError("p must be in (0, 1]")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.violation_aggregate not in ("max", "mean"):
            raise ValueError("violation_aggregate must be 'max' or 'mean'")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    @classmethod
    def from_dict(cls, d: dict) -> "PlannerConfig":
        return cls(**d)


def goal_distance(state: FoldState, goal: GoalSpec) -> float:
    """Normalized angle/type mismatch in [0, 1]; 0 means goal reached."""
    ne = len(goal.target_alpha)
    if len(state.alpha) != ne:
        raise LengthMismatch("state and goal have different edge counts")
    angle_term = np.abs(state.alpha - goal.target_alpha) / (2.0 * math.pi)
    type_term = 0.5 * ((state.z != goal.target_z) & (state.rho > 0))
    return float(min(1.0, np.sum(angle_term + type_term) / ne))


def goal_reached(state: FoldState, goal: GoalSpec) -> bool:
    if np.any(np.abs(state.alpha - goal.target_alpha) > goal.tolerance):
        return False
    mismatch = (state.z != goal.target_z) & (state.rho > 0)
    return not bool(np.any(mismatch))


@dataclass
class Candidate:
    action: FoldAction
    verdict: level0.Verdict
    next_state: FoldState | None = None     # kernel output when valid
    imagined: FoldState | None = None
    log_prob_norm: float | None = None
    goal_term: float | None = None
    cst_term: float | None = None
    score: float | None = None
    round_index: int = 0


@dataclass
class StepDiagnostics:
    candidates: list = field(default_factory=list)
    rounds: int = 0
    banned_edges: frozenset = frozenset()
    chosen: Candidate | None = None


def _score_candidate(cand: Candidate, ctx: PolicyContext, goal: GoalSpec,
                     policy, wm: WorldModel | None, config: PlannerConfig):
    tokens = policy.vocab.encode(cand.action)
    cand.log_prob_norm = policy.log_prob(ctx, cand.action) / len(tokens)
    if wm is not None:
        pred = wm.predict(ctx.pattern, ctx.state, cand.action)
        cand.imagined = wm.imagine(ctx.pattern, ctx.state, cand.action,
                                   depth=config.imagine_depth)
        if config.violation_aggregate == "max":
            agg = float(np.max(pred.violation))
        else:
            agg = float(np.mean(pred.violation))
        cand.cst_term = config.lambda_cst * math.log(config.epsilon + 1.0 - agg)
        cand._violation = pred.violation
    else:
        cand.imagined = cand.next_state if cand.next_state is not None else ctx.state
        cand.cst_term = 0.0
        cand._violation = None
    cand.goal_term = -config.lambda_goal * goal_distance(cand.imagined, goal)
    cand.score = cand.log_prob_norm + cand.goal_term + cand.cst_term


def _tie_key(cand: Candidate, policy):
    edge = cand.action.edge if cand.action.edge is not None else 1 << 30
    return (-cand.score, edge, tuple(policy.vocab.encode(cand.action)))


def _grow_banned(banned: set[int], scored: list[Candidate],
                 invalid: list[Candidate], m: int, ne: int) -> set[int]:
    """Top-M suspect edges: by predicted violation when available, else by
    how often edges appear in invalid candidates' affected masks."""
    per_edge = np.zeros(ne)
    have_soft = False
    for cand in scored:
        v = getattr(cand, "_violation", None)
        if v is not None:
            per_edge = np.maximum(per_edge, v)
            have_soft = True
    if not have_soft:
        for cand in invalid:
            per_edge += cand.verdict.affected_mask
        if per_edge.sum() == 0:
            for cand in invalid:
                e = cand.action.edge
                if e is not None and 0 <= e < ne:
                    per_edge[e] += 1.0
    candidates = [j for j in np.argsort(-per_edge, kind="stable")
                  if per_edge[j] > 0 and j not in banned]
    return banned | set(int(j) for j in candidates[:m])


def plan_step(pattern: CanonicalPattern, state: FoldState, goal: GoalSpec,
              policy, wm: WorldModel | None, config: PlannerConfig,
              rng: np.random.Generator):
    """One MPC decision; returns (action, StepDiagnostics).

    Raises NoValidAction once all re-sampling rounds are exhausted.
    """
    ctx = PolicyContext(goal=goal, pattern=pattern, state=state)
    ne = pattern.pattern.n_edges
    diag = StepDiagnostics()
    banned: set[int] = set()

    for round_index in range(1 + config.max_resamples):
        diag.rounds = round_index + 1
        sampled: list[FoldAction] = []
        for _ in range(config.K):
            a = policy.nucleus_sample(ctx, p=config.p, rng=rng,
                                      banned_edges=frozenset(banned))
            if a not in sampled:
                sampled.append(a)

        round_cands = []
        for a in sampled:
            next_state, verdict = level0.step(pattern, state, a)
            cand = Candidate(action=a, verdict=verdict,
                             next_state=next_state if verdict.valid else None,
                             round_index=round_index)
            round_cands.append(cand)
            diag.candidates.append(cand)

        survivors = [c for c in round_cands if c.verdict.valid]
        for cand in survivors:
            _score_candidate(cand, ctx, goal, policy, wm, config)
        if survivors:
            best = min(survivors, key=lambda c: _tie_key(c, policy))
            if best.score >= config.tau:
                diag.chosen = best
                diag.banned_edges = frozenset(banned)
                return best.action, diag
        invalid = [c for c in round_cands if not c.verdict.valid]
        banned = _grow_banned(banned, survivors, invalid, config.M, ne)
        diag.banned_edges = frozenset(banned)

    raise NoValidAction(
        f"no valid candidate after {1 + config.max_resamples} rounds "
        f"(banned edges: {sorted(diag.banned_edges)})"
    )


@dataclass
class TrajectoryStep:
    action: FoldAction
    verdict: level0.Verdict
    state_after: FoldState
    score: float | None
    n_candidates: int
    n_valid_candidates: int
    provenance: str = "kernel"    # executed states always come from level0


@dataclass
class Trajectory:
    pattern: CanonicalPattern
    goal: GoalSpec
    steps: list
    final_state: FoldState
    success: bool
    failure: str | None = None

    @property
    def step_valid_fraction(self) -> float:
        """Fraction of raw sampled proposals the kernel accepted."""
        total = sum(s.n_candidates for s in self.steps)
        valid = sum(s.n_valid_candidates for s in self.steps)
        return valid / total if total else 0.0


def _record_step(steps, action, verdict, state_after, score, cands):
    steps.append(TrajectoryStep(
        action=action, verdict=verdict, state_after=state_after, score=score,
        n_candidates=len(cands),
        n_valid_candidates=sum(1 for c in cands if c.verdict.valid),
    ))


def rollout(pattern: CanonicalPattern, initial_state: FoldState,
            goal: GoalSpec, policy, wm: WorldModel | None,
            config: PlannerConfig, mode: str = "full") -> Trajectory:
    """Run the MPC loop to termination.

    Modes (the ablation axes): "full" = policy + world model + kernel
    filtering; "lm+wm" = world-model scoring without kernel filtering;
    "lm" = execute raw single samples. Execution always goes through the
    kernel; in the unfiltered modes a kernel-invalid execution ends the
    trajectory as failed.
    """
    if mode not in ("full", "lm", "lm+wm"):
        raise ValueError(f"unknown rollout mode {mode!r}")
    rng = np.random.default_rng(config.seed)
    state = initial_state
    steps: list[TrajectoryStep] = []
    failure = None

    while True:
        if goal_reached(state, goal):
            break
        if state.step >= config.max_steps:
            failure = "MAX_STEPS"
            break

        ctx = PolicyContext(goal=goal, pattern=pattern, state=state)
        if mode == "full":
            try:
                action, diag = plan_step(pattern, state, goal, policy, wm,
                                         config, rng)
            except NoValidAction as exc:
                failure = f"NO_VALID_ACTION: {exc}"
                break
            chosen = diag.chosen
            _record_step(steps, action, chosen.verdict, chosen.next_state,
                         chosen.score, diag.candidates)
            state = chosen.next_state
        else:
            if mode == "lm":
                cands = [Candidate(
                    action=policy.nucleus_sample(ctx, p=config.p, rng=rng),
                    verdict=None)]
                for c in cands:
                    c.next_state, c.verdict = level0.step(pattern, state, c.action)
                best = cands[0]
            else:  # lm+wm: score everything, no hard filter
                sampled = []
                for _ in range(config.K):
                    a = policy.nucleus_sample(ctx, p=config.p, rng=rng)
                    if a not in sampled:
                        sampled.append(a)
                cands = []
                for a in sampled:
                    ns, verdict = level0.step(pattern, state, a)
                    c = Candidate(action=a, verdict=verdict,
                                  next_state=ns if verdict.valid else None)
                    _score_candidate(c, ctx, goal, policy, wm, config)
                    cands.append(c)
                best = min(cands, key=lambda c: _tie_key(c, policy))
            _record_step(steps, best.action, best.verdict,
                         best.next_state if best.verdict.valid else state,
                         best.score, cands)
            if not best.verdict.valid:
                failure = f"INVALID_EXECUTION: {best.verdict.reason.value}"
                break
            state = best.next_state

        if steps and steps[-1].action.op == "DONE":
            if not goal_reached(state, goal):
                failure = "DONE_BEFORE_GOAL"
            break

    return Trajectory(pattern=pattern, goal=goal, steps=steps,
                      final_state=state, success=goal_reached(state, goal),
                      failure=None if goal_reached(state, goal) else failure)

# ---------------------------------------------------------------------------
# trajectory serialization
# ---------------------------------------------------------------------------

def trajectory_to_dict(traj: Trajectory) -> dict:
    from .jsonio import pattern_to_dict, state_to_dict

    return {
        "pattern": pattern_to_dict(traj.pattern.pattern),
        "goal": traj.goal.to_dict(),
        "steps": [
            {
                "action": s.action.to_dict(),
                "verdict": {
                    "valid": s.verdict.valid,
                    "reason": s.verdict.reason.value,
                    "affected_mask": s.verdict.affected_mask,
                },
                "state_after": state_to_dict(s.state_after),
                "score": s.score,
                "n_candidates": s.n_candidates,
                "n_valid_candidates": s.n_valid_candidates,
                "provenance": s.provenance,
            }
            for s in traj.steps
        ],
        "final_state": state_to_dict(traj.final_state),
        "success": traj.success,
        "failure": traj.failure,
    }


def trajectory_from_dict(d: dict) -> Trajectory:
    from .cp import canonicalize
    from .jsonio import pattern_from_dict, state_from_dict

    steps = [
        TrajectoryStep(
            action=FoldAction.from_dict(s["action"]),
            verdict=level0.Verdict(
                valid=s["verdict"]["valid"],
                reason=level0.Reason(s["verdict"]["reason"]),
                affected_mask=np.asarray(s["verdict"]["affected_mask"],
                                         dtype=bool),
            ),
            state_after=state_from_dict(s["state_after"]),
            score=s["score"],
            n_candidates=s["n_candidates"],
            n_valid_candidates=s["n_valid_candidates"],
            provenance=s.get("provenance", "kernel"),
        )
        for s in d["steps"]
    ]
    return Trajectory(
        pattern=canonicalize(pattern_from_dict(d["pattern"])),
        goal=GoalSpec.from_dict(d["goal"]),
        steps=steps,
        final_state=state_from_dict(d["final_state"]),
        success=d["success"],
        failure=d.get("failure"),
    )
