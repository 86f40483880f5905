"""Constraint-aware folding toolkit.

Crease-pattern graphs with a deterministic constraint kernel, an n-gram
proposal policy over a unified action vocabulary, a learned residual graph
world model with analytic gradients, and a graph-guided MPC planning loop.
"""

__version__ = "0.1.0"

from .actions import FoldAction, Vocabulary
from .cp import (
    CanonicalPattern,
    CreasePattern,
    FoldState,
    canonicalize,
    dihedral_augment,
    flat_state,
)
from .level0 import Reason, Verdict, step, verify_flat_state
from .planner import GoalSpec, PlannerConfig, Trajectory, plan_step, rollout
from .policy import NGramPolicy, PolicyContext, train_mle
from .world_model import WorldModel

__all__ = [
    "CanonicalPattern",
    "CreasePattern",
    "FoldAction",
    "FoldState",
    "GoalSpec",
    "NGramPolicy",
    "PlannerConfig",
    "PolicyContext",
    "Reason",
    "Trajectory",
    "Verdict",
    "Vocabulary",
    "WorldModel",
    "__version__",
    "canonicalize",
    "dihedral_augment",
    "flat_state",
    "plan_step",
    "rollout",
    "step",
    "train_mle",
    "verify_flat_state",
]
