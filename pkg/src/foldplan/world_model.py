"""Learned surrogate simulator over crease-pattern graph states.

A per-edge two-layer network with mean-pooled 1-ring aggregation predicts a
residual state update, a locality mask, and a per-edge constraint-violation
likelihood. Imagined next states apply the masked residual to the
continuous channels (alpha, rho) only; discrete channels come from the
symbolic kernel. Training is plain full-batch gradient descent with
analytic gradients (see _kernels).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .actions import (
    N_ANGLE_BINS,
    N_RHO_BINS,
    FoldAction,
    dequantize_angle,
    dequantize_rho,
)
from .cp import CanonicalPattern, CreasePattern, FoldState
from .level0 import pattern_index

N_FEATURES = 15
HIDDEN = 32

_OP_INDEX = {"FOLD": 0, "UNFOLD": 1, "FLIP": 2, "ROTATE": 3, "DONE": 4}


class EmptyBatch(ValueError):
    pass


class EmptyDataset(ValueError):
    pass


def _as_pattern(pattern) -> CreasePattern:
    return pattern.pattern if isinstance(pattern, CanonicalPattern) else pattern


def edge_features(pattern, state: FoldState, action: FoldAction) -> np.ndarray:
    """(N_e, F) per-edge feature matrix; every entry lies in [-1, 1]."""
    pattern = _as_pattern(pattern)
    idx = pattern_index(pattern)
    ne = pattern.n_edges
    feats = np.zeros((ne, N_FEATURES), dtype=np.float64)
    feats[:, 0] = state.alpha / math.pi
    feats[:, 1] = state.rho
    for col, t in enumerate("MVU"):
        feats[:, 2 + col] = state.z == t
    feats[:, 5] = pattern.boundary

    acted = action.edge if action.op in ("FOLD", "UNFOLD") else None
    if acted is not None and 0 <= acted < ne:
        feats[acted, 6] = 1.0
        ring = idx.ring[acted].copy()
        ring[acted] = False
        feats[ring, 7] = 1.0
    feats[:, 8 + _OP_INDEX[action.op]] = 1.0
    if (action.op == "FOLD" and 0 <= action.angle_bin < N_ANGLE_BINS
            and 0 <= action.rho_bin < N_RHO_BINS):
        feats[:, 13] = dequantize_angle(action.angle_bin) / math.pi
        feats[:, 14] = dequantize_rho(action.rho_bin)
    return feats


def build_inputs(pattern, state: FoldState, action: FoldAction) -> np.ndarray:
    """Own features concatenated with the mean over 1-ring neighbors."""
    pattern = _as_pattern(pattern)
    idx = pattern_index(pattern)
    feats = edge_features(pattern, state, action)
    ne = feats.shape[0]
    pooled = np.zeros_like(feats)
    for j in range(ne):
        nbr = idx.ring[j].copy()
        nbr[j] = False
        if nbr.any():
            pooled[j] = feats[nbr].mean(axis=0)
    return np.ascontiguousarray(np.concatenate([feats, pooled], axis=1))


@dataclass(frozen=True)
class Prediction:
    delta_alpha: np.ndarray   # (N_e,) residual in units of alpha / pi
    delta_rho: np.ndarray     # (N_e,)
    mask: np.ndarray          # (N_e,) in (0, 1)
    violation: np.ndarray     # (N_e,) in (0, 1)


class WorldModel:
    """Parameter container plus predict / imagine / loss / train."""

    CHECKPOINT_VERSION = 1

    def __init__(self, W1, b1, Wd, bd, wm, bm, wv, bv):
        self.W1 = np.ascontiguousarray(W1, dtype=np.float64)
        self.b1 = np.ascontiguousarray(b1, dtype=np.float64)
        self.Wd = np.ascontiguousarray(Wd, dtype=np.float64)
        self.bd = np.ascontiguousarray(bd, dtype=np.float64)
        self.wm = np.ascontiguousarray(wm, dtype=np.float64)
        self.bm = float(bm)
        self.wv = np.ascontiguousarray(wv, dtype=np.float64)
        self.bv = float(bv)
        assert self.W1.shape == (2 * N_FEATURES, HIDDEN)

    @classmethod
    def initialize(cls, seed: int = 0, scale: float = 0.1) -> "WorldModel":
        rng = np.random.default_rng(seed)
        u = lambda *shape: rng.uniform(-scale, scale, size=shape)
        return cls(W1=u(2 * N_FEATURES, HIDDEN), b1=u(HIDDEN),
                   Wd=u(HIDDEN, 2), bd=u(2), wm=u(HIDDEN), bm=float(u()),
                   wv=u(HIDDEN), bv=float(u()))

    @classmethod
    def zeros(cls) -> "WorldModel":
        return cls(W1=np.zeros((2 * N_FEATURES, HIDDEN)), b1=np.zeros(HIDDEN),
                   Wd=np.zeros((HIDDEN, 2)), bd=np.zeros(2),
                   wm=np.zeros(HIDDEN), bm=0.0, wv=np.zeros(HIDDEN), bv=0.0)

    # -- parameter vector view (used by the finite-difference check) ------

    def to_vector(self) -> np.ndarray:
        return np.concatenate([
            self.W1.ravel(), self.b1, self.Wd.ravel(), self.bd,
            self.wm, [self.bm], self.wv, [self.bv],
        ])

    @classmethod
    def from_vector(cls, vec: np.ndarray) -> "WorldModel":
        f2, h = 2 * N_FEATURES, HIDDEN
        sizes = [f2 * h, h, h * 2, 2, h, 1, h, 1]
        parts, off = [], 0
        for s in sizes:
            parts.append(np.asarray(vec[off:off + s]))
            off += s
        assert off == len(vec)
        return cls(W1=parts[0].reshape(f2, h), b1=parts[1],
                   Wd=parts[2].reshape(h, 2), bd=parts[3],
                   wm=parts[4], bm=parts[5][0], wv=parts[6], bv=parts[7][0])

    def _args(self):
        return (self.W1, self.b1, self.Wd, self.bd, self.wm, self.bm,
                self.wv, self.bv)

    # -- inference --------------------------------------------------------

    def predict(self, pattern, state: FoldState, action: FoldAction,
                inputs: np.ndarray | None = None) -> Prediction:
        X = build_inputs(pattern, state, action) if inputs is None else inputs
        delta, m, c = _kernels.forward(X, *self._args())
        return Prediction(delta_alpha=delta[:, 0], delta_rho=delta[:, 1],
                          mask=m, violation=c)

    def imagine(self, pattern, state: FoldState, action: FoldAction,
                depth: int = 1) -> FoldState:
        """Masked residual update on the continuous channels, clamped.

        `depth` re-applies the predicted residual from the imagined state
        (short-horizon rollout); the default matches single-step scoring.
        """
        if not 1 <= depth <= 3:
            raise ValueError("imagination depth must be in 1..3")
        cur = state
        for _ in range(depth):
            p = self.predict(pattern, cur, action)
            alpha = np.clip(cur.alpha + p.delta_alpha * _kernels.ALPHA_SCALE * p.mask,
                            -math.pi, math.pi)
            rho = np.clip(cur.rho + p.delta_rho * p.mask, 0.0, 1.0)
            cur = cur.replace(alpha=alpha, rho=rho, step=cur.step + 1)
        return cur

    # -- training ---------------------------------------------------------

    def loss(self, batch) -> tuple[float, "WorldModel"]:
        """Mean loss over a batch of TransitionRecords plus its gradient.

        The gradient is returned as a WorldModel holding same-shaped
        arrays; it matches central finite differences on the scalar loss.
        """
        if len(batch) == 0:
            raise EmptyBatch("empty transition batch")
        grads = WorldModel.zeros()
        gbm = np.zeros(1)
        gbv = np.zeros(1)
        total = 0.0
        for rec in batch:
            X, tgt_d, tgt_m, tgt_c = _record_tensors(rec)
            total += _kernels.loss_grad(
                X, tgt_d, tgt_m, tgt_c, *self._args(),
                grads.W1, grads.b1, grads.Wd, grads.bd,
                grads.wm, gbm, grads.wv, gbv,
            )
        n = len(batch)
        grads.W1 /= n
        grads.b1 /= n
        grads.Wd /= n
        grads.bd /= n
        grads.wm /= n
        grads.wv /= n
        grads.bm = float(gbm[0]) / n
        grads.bv = float(gbv[0]) / n
        return total / n, grads

    # -- checkpoint -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "version": self.CHECKPOINT_VERSION,
            "n_features": N_FEATURES,
            "hidden": HIDDEN,
            "W1": self.W1, "b1": self.b1, "Wd": self.Wd, "bd": self.bd,
            "wm": self.wm, "bm": self.bm, "wv": self.wv, "bv": self.bv,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WorldModel":
        if d.get("version") != cls.CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {d.get('version')!r}")
        if d["n_features"] != N_FEATURES or d["hidden"] != HIDDEN:
            raise ValueError("checkpoint shape mismatch")
        return cls(W1=np.asarray(d["W1"]), b1=np.asarray(d["b1"]),
                   Wd=np.asarray(d["Wd"]), bd=np.asarray(d["bd"]),
                   wm=np.asarray(d["wm"]), bm=d["bm"],
                   wv=np.asarray(d["wv"]), bv=d["bv"])


def _record_tensors(rec):
    """Inputs and training targets for one TransitionRecord."""
    X = getattr(rec, "_inputs_cache", None)
    if X is None:
        X = build_inputs(rec.pattern, rec.state_before, rec.action)
        try:
            object.__setattr__(rec, "_inputs_cache", X)
        except AttributeError:
            pass
    tgt_d = np.stack([rec.state_after.alpha - rec.state_before.alpha,
                      rec.state_after.rho - rec.state_before.rho], axis=1)
    tgt_m = rec.verdict.affected_mask.astype(np.float64)
    tgt_c = violation_labels(rec)
    return np.ascontiguousarray(X), np.ascontiguousarray(tgt_d), tgt_m, tgt_c


def violation_labels(rec) -> np.ndarray:
    """Edges in the affected mask of an invalid transition are positives."""
    if rec.verdict.valid:
        return np.zeros(len(rec.verdict.affected_mask))
    return rec.verdict.affected_mask.astype(np.float64)


def train(transitions, epochs: int = 300, learning_rate: float = 0.05,
          seed: int = 0, max_restarts: int = 6):
    """Full-batch gradient descent, reproducible given the seed.

    If any epoch's loss exceeds the first epoch's (the line-search sanity
    check failing), the learning rate is halved and training restarts from
    the same seeded initialization.
    """
    transitions = list(transitions)
    if not transitions:
        raise EmptyDataset("no transitions to train on")
    lr = learning_rate
    for _ in range(max_restarts + 1):
        model = WorldModel.initialize(seed=seed)
        history = []
        ok = True
        for _epoch in range(epochs):
            value, grads = model.loss(transitions)
            history.append(value)
            if value > history[0] + 1e-12:
                ok = False
                break
            model.W1 = model.W1 - lr * grads.W1
            model.b1 = model.b1 - lr * grads.b1
            model.Wd = model.Wd - lr * grads.Wd
            model.bd = model.bd - lr * grads.bd
            model.wm = model.wm - lr * grads.wm
            model.bm = model.bm - lr * grads.bm
            model.wv = model.wv - lr * grads.wv
            model.bv = model.bv - lr * grads.bv
        if ok:
            return model, history
        lr *= 0.5
    raise RuntimeError("training diverged even after halving the learning rate")


def ranking_auc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Mann-Whitney AUC with average ranks for ties."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes")
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(len(scores))
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return float((ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0)
                 / (n_pos * n_neg))


def evaluate(model: WorldModel, transitions) -> dict:
    """Held-out residual MSE and violation-head AUC over per-edge labels."""
    if not transitions:
        raise EmptyDataset("no transitions to evaluate")
    scores, labels = [], []
    sq_err, n_vals = 0.0, 0
    for rec in transitions:
        X, tgt_d, _tgt_m, tgt_c = _record_tensors(rec)
        pred = model.predict(rec.pattern, rec.state_before, rec.action, inputs=X)
        resid = np.stack([pred.delta_alpha * _kernels.ALPHA_SCALE * pred.mask,
                          pred.delta_rho * pred.mask], axis=1)
        sq_err += float(np.sum((resid - tgt_d) ** 2))
        n_vals += tgt_d.size
        scores.append(pred.violation)
        labels.append(tgt_c > 0.5)
    return {
        "mse": sq_err / n_vals,
        "auc": ranking_auc(np.concatenate(scores), np.concatenate(labels)),
        "n_records": len(transitions),
    }
