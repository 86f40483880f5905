"""Unified token vocabulary and structured fold actions.

Actions are short positional token sequences over one homogeneous
vocabulary: op tokens, graph tokens (edges and vertices of the bound
pattern), and geometry tokens (uniform angle and progress bins). The
grammar is fixed per op:

    FOLD   -> [FOLD, E_k, AB_i, RB_j]
    UNFOLD -> [UNFOLD, E_k]
    FLIP   -> [FLIP]
    ROTATE -> [ROTATE, RB_q]     (q = quarter turns, 0..3)
    DONE   -> [DONE]
"""

from __future__ import annotations

import math
from dataclasses import dataclass

N_ANGLE_BINS = 16
N_RHO_BINS = 8

OPS = ("FOLD", "UNFOLD", "FLIP", "ROTATE", "DONE")
CONTROL = ("BOS", "EOS", "SEP")


class SchemaViolation(ValueError):
    """An action is missing or carrying fields its op does not allow."""


class OutOfRange(ValueError):
    """A continuous parameter lies outside its quantization domain."""


def quantize_angle(angle: float) -> int:
    """Uniform bin over [-pi, pi], half-open [lo, hi); +pi goes to bin 15."""
    if not -math.pi <= angle <= math.pi:
        raise OutOfRange(f"angle {angle} outside [-pi, pi]")
    k = int((angle + math.pi) / (2.0 * math.pi) * N_ANGLE_BINS)
    return min(k, N_ANGLE_BINS - 1)


def dequantize_angle(bin_index: int) -> float:
    """Center of an angle bin."""
    if not 0 <= bin_index < N_ANGLE_BINS:
        raise OutOfRange(f"angle bin {bin_index} outside 0..{N_ANGLE_BINS - 1}")
    width = 2.0 * math.pi / N_ANGLE_BINS
    return -math.pi + (bin_index + 0.5) * width


def quantize_rho(rho: float) -> int:
    if not 0.0 <= rho <= 1.0:
        raise OutOfRange(f"rho {rho} outside [0, 1]")
    k = int(rho * N_RHO_BINS)
    return min(k, N_RHO_BINS - 1)


def dequantize_rho(bin_index: int) -> float:
    """Upper edge of a progress bin, so the top bin decodes to exactly 1.0.

    Upper-edge decoding keeps full folds representable and lets a crease
    actually reach the flat-folded threshold rho = 1.
    """
    if not 0 <= bin_index < N_RHO_BINS:
        raise OutOfRange(f"rho bin {bin_index} outside 0..{N_RHO_BINS - 1}")
    return (bin_index + 1) / N_RHO_BINS


@dataclass(frozen=True)
class FoldAction:
    """One structured folding operation."""

    op: str
    edge: int | None = None
    angle_bin: int | None = None
    rho_bin: int | None = None
    rotate_quarter_turns: int | None = None

    def __post_init__(self):
        if self.op not in OPS:
            raise SchemaViolation(f"unknown op {self.op!r}")
        required = {
            "FOLD": ("edge", "angle_bin", "rho_bin"),
            "UNFOLD": ("edge",),
            "FLIP": (),
            "ROTATE": ("rotate_quarter_turns",),
            "DONE": (),
        }[self.op]
        for name in ("edge", "angle_bin", "rho_bin", "rotate_quarter_turns"):
            val = getattr(self, name)
            if name in required and val is None:
                raise SchemaViolation(f"{self.op} requires field {name}")
            if name not in required and val is not None:
                raise SchemaViolation(f"{self.op} does not take field {name}")
        if self.op == "ROTATE" and not 0 <= self.rotate_quarter_turns <= 3:
            raise SchemaViolation("rotate_quarter_turns must be in 0..3")

    def to_dict(self) -> dict:
        d = {"op": self.op}
        for name in ("edge", "angle_bin", "rho_bin", "rotate_quarter_turns"):
            val = getattr(self, name)
            if val is not None:
                d[name] = int(val)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FoldAction":
        known = {"op", "edge", "angle_bin", "rho_bin", "rotate_quarter_turns"}
        extra = set(d) - known
        if extra:
            raise SchemaViolation(f"unknown action fields {sorted(extra)}")
        return cls(**d)


class Vocabulary:
    """Token-id table bound to a pattern size (N_v, N_e).

    Id layout is fixed and deterministic: ops, control, edges, vertices,
    angle bins, rho bins.
    """

    def __init__(self, n_vertices: int, n_edges: int):
        if n_vertices < 2 or n_edges < 1:
            raise ValueError("vocabulary needs n_vertices >= 2, n_edges >= 1")
        self.n_vertices = n_vertices
        self.n_edges = n_edges
        names = list(OPS) + list(CONTROL)
        names += [f"E{j}" for j in range(n_edges)]
        names += [f"V{i}" for i in range(n_vertices)]
        names += [f"AB{k}" for k in range(N_ANGLE_BINS)]
        names += [f"RB{k}" for k in range(N_RHO_BINS)]
        self.names = tuple(names)
        self.ids = {name: i for i, name in enumerate(names)}
        self.edge_base = len(OPS) + len(CONTROL)
        self.vertex_base = self.edge_base + n_edges
        self.angle_base = self.vertex_base + n_vertices
        self.rho_base = self.angle_base + N_ANGLE_BINS

    def __len__(self) -> int:
        return len(self.names)

    def op_id(self, op: str) -> int:
        return self.ids[op]

    def edge_id(self, edge: int) -> int:
        if not 0 <= edge < self.n_edges:
            raise OutOfRange(f"edge {edge} outside 0..{self.n_edges - 1}")
        return self.edge_base + edge

    def angle_id(self, bin_index: int) -> int:
        if not 0 <= bin_index < N_ANGLE_BINS:
            raise OutOfRange(f"angle bin {bin_index}")
        return self.angle_base + bin_index

    def rho_id(self, bin_index: int) -> int:
        if not 0 <= bin_index < N_RHO_BINS:
            raise OutOfRange(f"rho bin {bin_index}")
        return self.rho_base + bin_index

    def encode(self, action: FoldAction) -> list[int]:
        op = action.op
        if op == "FOLD":
            return [self.op_id(op), self.edge_id(action.edge),
                    self.angle_id(action.angle_bin), self.rho_id(action.rho_bin)]
        if op == "UNFOLD":
            return [self.op_id(op), self.edge_id(action.edge)]
        if op == "ROTATE":
            # quarter turns ride on the low rho-bin tokens
            return [self.op_id(op), self.rho_id(action.rotate_quarter_turns)]
        return [self.op_id(op)]

    def decode(self, tokens: list[int]) -> FoldAction:
        if not tokens:
            raise SchemaViolation("empty token sequence")
        op = self._op_of(tokens[0])
        want = {"FOLD": 4, "UNFOLD": 2, "FLIP": 1, "ROTATE": 2, "DONE": 1}[op]
        if len(tokens) != want:
            raise SchemaViolation(f"{op} takes {want} tokens, got {len(tokens)}")
        if op == "FOLD":
            return FoldAction(op="FOLD", edge=self._edge_of(tokens[1]),
                              angle_bin=self._angle_of(tokens[2]),
                              rho_bin=self._rho_of(tokens[3]))
        if op == "UNFOLD":
            return FoldAction(op="UNFOLD", edge=self._edge_of(tokens[1]))
        if op == "ROTATE":
            q = self._rho_of(tokens[1])
            return FoldAction(op="ROTATE", rotate_quarter_turns=q)
        return FoldAction(op=op)

    def _op_of(self, token: int) -> str:
        if not 0 <= token < len(OPS):
            raise SchemaViolation(f"token {token} is not an op token")
        return OPS[token]

    def _edge_of(self, token: int) -> int:
        if not self.edge_base <= token < self.edge_base + self.n_edges:
            raise SchemaViolation(f"token {token} is not an edge token")
        return token - self.edge_base

    def _angle_of(self, token: int) -> int:
        if not self.angle_base <= token < self.angle_base + N_ANGLE_BINS:
            raise SchemaViolation(f"token {token} is not an angle-bin token")
        return token - self.angle_base

    def _rho_of(self, token: int) -> int:
        if not self.rho_base <= token < self.rho_base + N_RHO_BINS:
            raise SchemaViolation(f"token {token} is not a rho-bin token")
        return token - self.rho_base

    # -- grammar ---------------------------------------------------------

    def action_length(self, op: str) -> int:
        return {"FOLD": 4, "UNFOLD": 2, "FLIP": 1, "ROTATE": 2, "DONE": 1}[op]

    def legal_tokens(self, prefix: list[int], n_edges: int | None = None,
                     banned_edges: frozenset[int] = frozenset()) -> list[int]:
        """Token ids legal at the next position of a partial action.

        `n_edges` restricts edge tokens to a pattern smaller than the
        vocabulary was sized for (shared cross-pattern vocabularies).
        Returns [] when the action is already complete.
        """
        ne = self.n_edges if n_edges is None else min(n_edges, self.n_edges)
        allowed_edges = [self.edge_base + j for j in range(ne)
                         if j not in banned_edges]
        if not prefix:
            ops = list(OPS)
            if not allowed_edges:
                ops = [o for o in ops if o not in ("FOLD", "UNFOLD")]
            return [self.op_id(o) for o in ops]
        op = self._op_of(prefix[0])
        pos = len(prefix)
        if pos >= self.action_length(op):
            return []
        if op in ("FOLD", "UNFOLD") and pos == 1:
            return allowed_edges
        if op == "FOLD" and pos == 2:
            return [self.angle_base + k for k in range(N_ANGLE_BINS)]
        if op == "FOLD" and pos == 3:
            return [self.rho_base + k for k in range(N_RHO_BINS)]
        if op == "ROTATE" and pos == 1:
            return [self.rho_base + q for q in range(4)]
        raise SchemaViolation(f"no legal continuation for prefix {prefix}")
