"""Evaluation harness: step-level and trajectory-level metrics.

All functions are pure. Step alignment is by index (strict), the
empty/empty IoU convention is 1.0 (no-op actions such as ROTATE and DONE
have empty affected masks), and step validity is measured over raw sampled
proposals before any planner filtering, so it reflects proposer quality
rather than filter quality.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .actions import Vocabulary
from .planner import Trajectory, goal_distance


class EmptyResults(ValueError):
    pass


def f1_score(precision: float, recall: float) -> float:
    if precision + recall <= 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def _match_counts(predicted, reference, vocab: Vocabulary):
    """(matched, n_pred_tokens, n_ref_tokens) under index alignment."""
    matched = n_pred = n_ref = 0
    for k in range(max(len(predicted), len(reference))):
        ptoks = vocab.encode(predicted[k]) if k < len(predicted) else []
        rtoks = vocab.encode(reference[k]) if k < len(reference) else []
        n_pred += len(ptoks)
        n_ref += len(rtoks)
        overlap = Counter(ptoks) & Counter(rtoks)
        matched += sum(overlap.values())
    return matched, n_pred, n_ref


def step_prf(predicted, reference, vocab: Vocabulary):
    """Micro precision / recall / F1 over index-aligned token multisets.

    Extra or missing steps contribute unmatched tokens. An empty
    prediction scores (0, 0, 0) by convention.
    """
    matched, n_pred, n_ref = _match_counts(predicted, reference, vocab)
    precision = matched / n_pred if n_pred else 0.0
    recall = matched / n_ref if n_ref else 0.0
    return precision, recall, f1_score(precision, recall)


def edge_iou(predicted_mask, truth_mask) -> float:
    """|intersection| / |union| of two edge index sets; empty/empty -> 1.0."""
    a, b = set(map(int, predicted_mask)), set(map(int, truth_mask))
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


def cat_sr(results) -> float:
    """Unweighted mean over categories of per-category success fractions."""
    results = list(results)
    if not results:
        raise EmptyResults("no (category, success) results")
    per_cat: dict[str, list[bool]] = {}
    for category, success in results:
        per_cat.setdefault(category, []).append(bool(success))
    return float(np.mean([np.mean(flags) for flags in per_cat.values()]))


def trajectory_metrics(trajectories, goals=None):
    """(step_valid, traj_sr, goal_dist) over a batch of trajectories.

    step_valid pools raw proposal verdicts across all steps of all
    trajectories; goal_dist is the mean final goal distance.
    """
    trajectories = list(trajectories)
    if goals is None:
        goals = [t.goal for t in trajectories]
    if len(goals) != len(trajectories):
        raise ValueError("one goal per trajectory required")
    if not trajectories:
        raise EmptyResults("no trajectories")
    total = sum(s.n_candidates for t in trajectories for s in t.steps)
    valid = sum(s.n_valid_candidates for t in trajectories for s in t.steps)
    step_valid = valid / total if total else 0.0
    traj_sr = float(np.mean([t.success for t in trajectories]))
    goal_dist = float(np.mean([
        goal_distance(t.final_state, g) for t, g in zip(trajectories, goals)
    ]))
    return step_valid, traj_sr, goal_dist


@dataclass(frozen=True)
class EvalReport:
    precision: float
    recall: float
    f1: float
    precision_macro: float
    recall_macro: float
    f1_macro: float
    edge_iou: float
    cat_sr: float
    step_valid: float
    traj_sr: float
    goal_dist: float
    per_category: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("precision", "recall", "f1", "precision_macro",
                     "recall_macro", "f1_macro", "edge_iou", "cat_sr",
                     "step_valid", "traj_sr", "goal_dist"):
            v = getattr(self, name)
            assert -1e-12 <= v <= 1.0 + 1e-12, (name, v)

    def to_dict(self) -> dict:
        return {
            "precision": self.precision, "recall": self.recall, "f1": self.f1,
            "precision_macro": self.precision_macro,
            "recall_macro": self.recall_macro, "f1_macro": self.f1_macro,
            "edge_iou": self.edge_iou, "cat_sr": self.cat_sr,
            "step_valid": self.step_valid, "traj_sr": self.traj_sr,
            "goal_dist": self.goal_dist, "per_category": self.per_category,
        }


def _mask_indices(mask) -> set:
    return {int(j) for j in np.flatnonzero(np.asarray(mask, dtype=bool))}


def evaluate_trajectories(trajectories: list[Trajectory], references,
                          vocab: Vocabulary) -> EvalReport:
    """Full report for planner trajectories against reference programs.

    `references` holds, per trajectory, the reference action sequence.
    P/R/F1 compare executed actions with the reference both micro over all
    steps and macro over categories. Edge IoU compares each executed step's
    kernel affected mask against the reference replay's mask at the same
    index when available, else against the empty set.
    """
    if len(trajectories) != len(references):
        raise ValueError("one reference per trajectory required")
    if not trajectories:
        raise EmptyResults("no trajectories")

    micro = np.zeros(3)          # matched, n_pred, n_ref
    per_cat_counts: dict[str, np.ndarray] = {}
    ious = []
    cat_results = []
    for traj, ref in zip(trajectories, references):
        ref_actions = list(ref["actions"]) if isinstance(ref, dict) else list(ref)
        ref_masks = ref.get("masks") if isinstance(ref, dict) else None
        pred_actions = [s.action for s in traj.steps]
        counts = np.array(_match_counts(pred_actions, ref_actions, vocab))
        micro += counts
        cat = traj.goal.category
        per_cat_counts[cat] = per_cat_counts.get(cat, np.zeros(3)) + counts
        cat_results.append((cat, traj.success))
        for k, step in enumerate(traj.steps):
            truth = _mask_indices(ref_masks[k]) if ref_masks and k < len(ref_masks) \
                else set()
            ious.append(edge_iou(_mask_indices(step.verdict.affected_mask), truth))

    def prf(counts):
        matched, n_pred, n_ref = counts
        p = matched / n_pred if n_pred else 0.0
        r = matched / n_ref if n_ref else 0.0
        return p, r, f1_score(p, r)

    p_micro, r_micro, f_micro = prf(micro)
    per_cat = {}
    macro = np.zeros(3)
    for cat in sorted(per_cat_counts):
        p, r, f = prf(per_cat_counts[cat])
        successes = [s for c, s in cat_results if c == cat]
        per_cat[cat] = {"precision": p, "recall": r, "f1": f,
                        "sr": float(np.mean(successes)),
                        "n": len(successes)}
        macro += (p, r, f)
    macro /= len(per_cat_counts)

    step_valid, traj_sr, goal_dist = trajectory_metrics(trajectories)
    return EvalReport(
        precision=p_micro, recall=r_micro, f1=f_micro,
        precision_macro=float(macro[0]), recall_macro=float(macro[1]),
        f1_macro=float(macro[2]),
        edge_iou=float(np.mean(ious)) if ious else 1.0,
        cat_sr=cat_sr(cat_results),
        step_valid=step_valid, traj_sr=traj_sr, goal_dist=goal_dist,
        per_category=per_cat,
    )
