"""Proposal policy: an additive-smoothed n-gram model over the action vocabulary.

The planner only needs two capabilities from a policy, scoring
(`log_prob`) and seeded grammar-masked sampling (`nucleus_sample`), so any
stronger sequence model can be dropped in behind the same two methods.
NGramPolicy is the shipped implementation: token counts conditioned on a
small deterministic context key plus up to `order - 1` previous tokens of
the current action.

Scoring distributions live over the full vocabulary (smoothing gives every
token positive mass); sampling first zeroes grammatically illegal tokens so
every sampled sequence decodes to a well-formed action.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .actions import FoldAction, Vocabulary
from .cp import CanonicalPattern, FoldState

DEFAULT_ORDER = 3
DEFAULT_SMOOTHING = 0.1

_STEP_BUCKETS = ((0, 3), (4, 7), (8, 15), (16, None))
_FOLDED_BUCKETS = ((0, 0), (1, 2), (3, 5), (6, None))


class EmptyCorpus(ValueError):
    pass


def _bucket(value: int, buckets) -> int:
    for i, (lo, hi) in enumerate(buckets):
        if value >= lo and (hi is None or value <= hi):
            return i
    raise AssertionError(value)


@dataclass(frozen=True)
class PolicyContext:
    """What the policy conditions on: goal, canonical pattern, current state."""

    goal: object                 # anything with a .category string
    pattern: CanonicalPattern
    state: FoldState


def featurize_context(ctx: PolicyContext) -> tuple:
    """Deterministic finite context key.

    The global frame angle psi is deliberately excluded: rotating the frame
    should not change folding intent.
    """
    n_folded = int(np.sum(ctx.state.rho >= 1.0 - 1e-12))
    return (
        str(getattr(ctx.goal, "category", None) or ""),
        _bucket(ctx.state.step, _STEP_BUCKETS),
        _bucket(n_folded, _FOLDED_BUCKETS),
        bool(ctx.state.b),
    )


class NGramPolicy:
    def __init__(self, vocab: Vocabulary, order: int = DEFAULT_ORDER,
                 smoothing: float = DEFAULT_SMOOTHING):
        if order < 1:
            raise ValueError("order must be >= 1")
        self.vocab = vocab
        self.order = order
        self.smoothing = smoothing
        # (context key, token prefix) -> {token id: count}
        self.counts: dict[tuple, dict[int, int]] = defaultdict(dict)

    # -- training --------------------------------------------------------

    def observe(self, ctx: PolicyContext, action: FoldAction):
        key = featurize_context(ctx)
        tokens = self.vocab.encode(action)
        for k, tok in enumerate(tokens):
            prefix = tuple(tokens[max(0, k - (self.order - 1)):k])
            slot = self.counts[(key, prefix)]
            slot[tok] = slot.get(tok, 0) + 1

    # -- scoring ---------------------------------------------------------

    def _probs(self, key: tuple, prefix: tuple) -> np.ndarray:
        """Smoothed next-token distribution over the full vocabulary."""
        n = len(self.vocab)
        probs = np.full(n, self.smoothing, dtype=np.float64)
        slot = self.counts.get((key, prefix))
        total = self.smoothing * n
        if slot:
            for tok, c in slot.items():
                probs[tok] += c
            total += sum(slot.values())
        return probs / total

    def log_prob(self, ctx: PolicyContext, action: FoldAction) -> float:
        """Sum of per-position log conditional probabilities; always <= 0."""
        key = featurize_context(ctx)
        tokens = self.vocab.encode(action)
        total = 0.0
        for k, tok in enumerate(tokens):
            prefix = tuple(tokens[max(0, k - (self.order - 1)):k])
            total += float(np.log(self._probs(key, prefix)[tok]))
        return total

    # -- sampling --------------------------------------------------------

    def nucleus_sample(self, ctx: PolicyContext, p: float = 0.9,
                       rng: np.random.Generator | int = 0,
                       banned_edges: frozenset[int] = frozenset()) -> FoldAction:
        """Grammar-masked nucleus sampling of one complete action.

        At each position, illegal tokens get probability zero, the
        remaining mass is renormalized, and sampling is restricted to the
        smallest probability-sorted prefix with cumulative mass >= p (ties
        broken by ascending token id).
        """
        if not 0.0 < p <= 1.0:
            raise ValueError("nucleus mass p must be in (0, 1]")
        if not isinstance(rng, np.random.Generator):
            rng = np.random.default_rng(rng)
        key = featurize_context(ctx)
        n_edges = ctx.pattern.pattern.n_edges
        tokens: list[int] = []
        while True:
            legal = self.vocab.legal_tokens(tokens, n_edges=n_edges,
                                            banned_edges=banned_edges)
            if not legal:
                break
            prefix = tuple(tokens[max(0, len(tokens) - (self.order - 1)):])
            probs = self._probs(key, prefix)
            masked = np.zeros_like(probs)
            masked[legal] = probs[legal]
            masked /= masked.sum()
            order = np.lexsort((np.arange(len(masked)), -masked))
            cum = np.cumsum(masked[order])
            cut = int(np.searchsorted(cum, p - 1e-12)) + 1
            nucleus = order[:cut]
            nprobs = masked[nucleus] / masked[nucleus].sum()
            r = rng.random()
            pick = nucleus[min(int(np.searchsorted(np.cumsum(nprobs), r)),
                               len(nucleus) - 1)]
            tokens.append(int(pick))
        return self.vocab.decode(tokens)

    # -- serialization ---------------------------------------------------

    POLICY_FORMAT_VERSION = 1

    def to_dict(self) -> dict:
        flat = {}
        for (key, prefix), slot in sorted(self.counts.items(),
                                          key=lambda kv: repr(kv[0])):
            cat, sb, fb, b = key
            skey = "|".join([cat, str(sb), str(fb), str(int(b)),
                             ",".join(map(str, prefix))])
            flat[skey] = {str(t): c for t, c in sorted(slot.items())}
        return {
            "version": self.POLICY_FORMAT_VERSION,
            "order": self.order,
            "smoothing": self.smoothing,
            "n_vertices": self.vocab.n_vertices,
            "n_edges": self.vocab.n_edges,
            "counts": flat,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NGramPolicy":
        if d.get("version") != cls.POLICY_FORMAT_VERSION:
            raise ValueError(f"unsupported policy file version {d.get('version')!r}")
        vocab = Vocabulary(d["n_vertices"], d["n_edges"])
        policy = cls(vocab, order=d["order"], smoothing=d["smoothing"])
        for skey, slot in d["counts"].items():
            cat, sb, fb, b, prefix = skey.split("|")
            ptoks = tuple(int(t) for t in prefix.split(",") if t != "")
            key = (cat, int(sb), int(fb), bool(int(b)))
            policy.counts[(key, ptoks)] = {int(t): c for t, c in slot.items()}
        return policy


def train_mle(programs, vocab: Vocabulary, order: int = DEFAULT_ORDER,
              smoothing: float = DEFAULT_SMOOTHING) -> NGramPolicy:
    """Count-based MLE over (context sequence, action sequence) pairs."""
    policy = NGramPolicy(vocab, order=order, smoothing=smoothing)
    seen = 0
    for contexts, actions in programs:
        for ctx, action in zip(contexts, actions):
            policy.observe(ctx, action)
            seen += 1
    if seen == 0:
        raise EmptyCorpus("no (context, action) pairs to train on")
    return policy


def mean_nll(policy: NGramPolicy, programs) -> float:
    """Per-token negative log-likelihood of a corpus under the policy."""
    total, n_tokens = 0.0, 0
    for contexts, actions in programs:
        for ctx, action in zip(contexts, actions):
            total -= policy.log_prob(ctx, action)
            n_tokens += len(policy.vocab.encode(action))
    if n_tokens == 0:
        raise EmptyCorpus("no tokens to evaluate")
    return total / n_tokens
