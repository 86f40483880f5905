import math

import numpy as np
import pytest

from foldplan.actions import (
    N_ANGLE_BINS,
    N_RHO_BINS,
    FoldAction,
    OutOfRange,
    SchemaViolation,
    Vocabulary,
    dequantize_angle,
    dequantize_rho,
    quantize_angle,
    quantize_rho,
)


class TestQuantization:
    def test_angle_endpoints(self):
        assert quantize_angle(-math.pi) == 0
        assert quantize_angle(math.pi) == N_ANGLE_BINS - 1
        assert quantize_angle(0.0) == N_ANGLE_BINS // 2

    def test_angle_out_of_range(self):
        with pytest.raises(OutOfRange):
            quantize_angle(math.pi + 0.01)

    def test_angle_dequantize_is_bin_center(self):
        width = 2 * math.pi / N_ANGLE_BINS
        for k in range(N_ANGLE_BINS):
            c = dequantize_angle(k)
            assert math.isclose(c, -math.pi + (k + 0.5) * width)
            assert quantize_angle(c) == k

    def test_quantize_roundtrip_error_bounded(self, rng):
        width = 2 * math.pi / N_ANGLE_BINS
        for a in rng.uniform(-math.pi, math.pi, size=200):
            assert abs(dequantize_angle(quantize_angle(a)) - a) <= width / 2 + 1e-12

    def test_rho_endpoints(self):
        assert quantize_rho(0.0) == 0
        assert quantize_rho(1.0) == N_RHO_BINS - 1

    def test_rho_top_bin_decodes_to_one(self):
        assert dequantize_rho(N_RHO_BINS - 1) == 1.0

    def test_rho_dequantize_upper_edge(self):
        for k in range(N_RHO_BINS):
            assert dequantize_rho(k) == (k + 1) / N_RHO_BINS

    def test_bin_index_range_checked(self):
        with pytest.raises(OutOfRange):
            dequantize_angle(N_ANGLE_BINS)
        with pytest.raises(OutOfRange):
            dequantize_rho(-1)


class TestFoldAction:
    def test_fold_requires_all_fields(self):
        with pytest.raises(SchemaViolation):
            FoldAction(op="FOLD", edge=0)

    def test_done_takes_no_fields(self):
        with pytest.raises(SchemaViolation):
            FoldAction(op="DONE", edge=1)

    def test_unknown_op(self):
        with pytest.raises(SchemaViolation):
            FoldAction(op="SPIN")

    def test_rotate_range(self):
        with pytest.raises(SchemaViolation):
            FoldAction(op="ROTATE", rotate_quarter_turns=4)

    def test_dict_roundtrip(self):
        for a in (FoldAction(op="FOLD", edge=3, angle_bin=15, rho_bin=7),
                  FoldAction(op="UNFOLD", edge=0),
                  FoldAction(op="FLIP"),
                  FoldAction(op="ROTATE", rotate_quarter_turns=2),
                  FoldAction(op="DONE")):
            assert FoldAction.from_dict(a.to_dict()) == a

    def test_from_dict_rejects_unknown_fields(self):
        with pytest.raises(SchemaViolation):
            FoldAction.from_dict({"op": "DONE", "speed": 3})


class TestVocabulary:
    def test_size_and_layout(self):
        v = Vocabulary(4, 5)
        assert len(v) == 5 + 3 + 5 + 4 + N_ANGLE_BINS + N_RHO_BINS
        assert v.edge_base == 8
        assert v.names[v.edge_base] == "E0"
        assert v.names[v.angle_base] == "AB0"

    def test_encode_decode_roundtrip(self):
        v = Vocabulary(6, 7)
        actions = [FoldAction(op="FOLD", edge=6, angle_bin=0, rho_bin=7),
                   FoldAction(op="UNFOLD", edge=2),
                   FoldAction(op="FLIP"),
                   FoldAction(op="ROTATE", rotate_quarter_turns=3),
                   FoldAction(op="DONE")]
        for a in actions:
            assert v.decode(v.encode(a)) == a

    def test_decode_rejects_wrong_arity(self):
        v = Vocabulary(4, 5)
        with pytest.raises(SchemaViolation):
            v.decode([v.op_id("FOLD"), v.edge_id(0)])

    def test_decode_rejects_wrong_token_kind(self):
        v = Vocabulary(4, 5)
        with pytest.raises(SchemaViolation):
            v.decode([v.op_id("UNFOLD"), v.angle_id(3)])

    def test_edge_id_range(self):
        v = Vocabulary(4, 5)
        with pytest.raises(OutOfRange):
            v.edge_id(5)

    def test_grammar_legal_sequences_decode(self, rng):
        v = Vocabulary(8, 10)
        for _ in range(100):
            prefix = []
            while True:
                legal = v.legal_tokens(prefix)
                if not legal:
                    break
                prefix.append(int(rng.choice(legal)))
            v.decode(prefix)   # must not raise

    def test_legal_tokens_restricted_edge_count(self):
        v = Vocabulary(8, 10)
        legal = v.legal_tokens([v.op_id("FOLD")], n_edges=3)
        assert legal == [v.edge_base, v.edge_base + 1, v.edge_base + 2]

    def test_banned_edges_masked(self):
        v = Vocabulary(8, 4)
        legal = v.legal_tokens([v.op_id("FOLD")],
                               banned_edges=frozenset({0, 2}))
        assert legal == [v.edge_base + 1, v.edge_base + 3]

    def test_all_edges_banned_removes_edge_ops(self):
        v = Vocabulary(8, 2)
        legal = v.legal_tokens([], banned_edges=frozenset({0, 1}))
        ops = {v.names[t] for t in legal}
        assert "FOLD" not in ops and "UNFOLD" not in ops
        assert {"FLIP", "ROTATE", "DONE"} <= ops
