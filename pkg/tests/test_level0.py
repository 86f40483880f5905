import math

import numpy as np
import pytest

from foldplan import level0
from foldplan.actions import FoldAction
from foldplan.cp import canonicalize, flat_state
from foldplan.dataset import (
    book_pattern,
    diagonal_pattern,
    grid_pattern,
    invalid_vertex_fixtures,
    valid_vertex_fixtures,
)
from foldplan.level0 import (
    FULLY_FOLDED,
    Reason,
    check_kawasaki,
    check_maekawa,
    kawasaki_from_angles,
    maekawa_from_types,
    step,
    verify_flat_state,
)


def fold(edge, angle_bin=0, rho_bin=7):
    return FoldAction(op="FOLD", edge=edge, angle_bin=angle_bin, rho_bin=rho_bin)


def diag_edge(pat):
    return int(np.flatnonzero(~pat.boundary)[0])


class TestTheoremHelpers:
    def test_kawasaki_symmetric_four(self):
        assert kawasaki_from_angles([math.pi / 2] * 4)

    def test_kawasaki_unbalanced(self):
        a = math.radians
        # alternating sums 200 and 160 degrees
        assert not kawasaki_from_angles([a(100), a(80), a(100), a(80)])

    def test_kawasaki_odd_degree_raises(self):
        with pytest.raises(level0.OddDegree):
            kawasaki_from_angles([math.pi] * 3)

    def test_maekawa_pass_and_fail(self):
        assert maekawa_from_types(["M", "M", "M", "V"])
        assert not maekawa_from_types(["M", "M", "V", "V"])
        assert not maekawa_from_types(["M", "M", "V"])   # odd degree

    def test_check_kawasaki_grid_center(self):
        pat = grid_pattern(2)
        center = next(v for v in range(pat.n_vertices)
                      if np.allclose(pat.vertices[v], [0.5, 0.5]))
        assert check_kawasaki(pat, center)

    def test_check_maekawa_requires_fully_folded(self):
        pat = grid_pattern(2)
        center = next(v for v in range(pat.n_vertices)
                      if np.allclose(pat.vertices[v], [0.5, 0.5]))
        with pytest.raises(level0.NotFullyFolded):
            check_maekawa(pat, flat_state(pat), center)

    def test_check_boundary_vertex_rejected(self):
        pat = diagonal_pattern()
        with pytest.raises(ValueError):
            check_kawasaki(pat, 0)


class TestVerifyFlatState:
    def test_valid_radial_fixtures(self):
        for pat, state in valid_vertex_fixtures(10, seed=1):
            v = verify_flat_state(pat, state)
            assert v.valid and v.reason is Reason.OK

    def test_invalid_fixtures_reasons(self):
        for pat, state, expected in invalid_vertex_fixtures(20, seed=2):
            v = verify_flat_state(pat, state)
            assert not v.valid
            assert v.reason is expected
            assert v.affected_mask.any()

    def test_not_fully_folded_vertices_skipped(self):
        pat, state, _ = invalid_vertex_fixtures(1, seed=3)[0]
        partial = state.replace(rho=state.rho * 0.5)
        assert verify_flat_state(pat, partial).valid


class TestFold:
    def test_valid_fold_mutates_only_target(self):
        pat = diagonal_pattern("V")
        e = diag_edge(pat)
        st, verdict = step(pat, flat_state(pat), fold(e, angle_bin=0))
        assert verdict.valid
        assert st.alpha[e] == pytest.approx(-math.pi + math.pi / 16)
        assert st.rho[e] == 1.0
        assert np.all(st.alpha[np.arange(pat.n_edges) != e] == 0)
        assert st.step == 1

    def test_invalid_edge(self):
        pat = diagonal_pattern()
        st0 = flat_state(pat)
        st, v = step(pat, st0, fold(99))
        assert v.reason is Reason.INVALID_EDGE
        assert st == st0
        assert not v.affected_mask.any()

    def test_boundary_edge(self):
        pat = diagonal_pattern()
        e = int(np.flatnonzero(pat.boundary)[0])
        _, v = step(pat, flat_state(pat), fold(e))
        assert v.reason is Reason.BOUNDARY_EDGE

    def test_type_conflict(self):
        pat = diagonal_pattern("V")   # valley must fold negative
        e = diag_edge(pat)
        _, v = step(pat, flat_state(pat), fold(e, angle_bin=15))
        assert v.reason is Reason.TYPE_CONFLICT

    def test_type_conflict_flipped_by_b(self):
        pat = diagonal_pattern("V")
        e = diag_edge(pat)
        st = flat_state(pat)
        st, v = step(pat, st, FoldAction(op="FLIP"))
        assert v.valid
        # under the flip a valley folds positive
        st2, v2 = step(pat, st, fold(e, angle_bin=15))
        assert v2.valid
        assert st2.alpha[e] > 0

    def test_unassigned_edge_gets_type_from_sign(self):
        pat = diagonal_pattern("U")
        e = diag_edge(pat)
        st, v = step(pat, flat_state(pat), fold(e, angle_bin=15))
        assert v.valid and st.z[e] == "M"
        st, v = step(pat, flat_state(pat), fold(e, angle_bin=0))
        assert v.valid and st.z[e] == "V"

    def test_nonmonotone_progress(self):
        pat = diagonal_pattern("V")
        e = diag_edge(pat)
        st, _ = step(pat, flat_state(pat), fold(e, angle_bin=0, rho_bin=7))
        _, v = step(pat, st, fold(e, angle_bin=0, rho_bin=3))
        assert v.reason is Reason.NONMONOTONE_PROGRESS

    def test_refold_same_rho_allowed(self):
        pat = diagonal_pattern("V")
        e = diag_edge(pat)
        st, _ = step(pat, flat_state(pat), fold(e, angle_bin=0, rho_bin=4))
        st2, v = step(pat, st, fold(e, angle_bin=1, rho_bin=4))
        assert v.valid
        assert st2.alpha[e] != st.alpha[e]

    def test_affected_mask_is_one_ring(self):
        pat = grid_pattern(2)
        e = int(np.flatnonzero(~pat.boundary)[0])
        _, v = step(pat, flat_state(pat), fold(e, rho_bin=4,
                                               angle_bin=15 if pat.crease_types[e] == "M" else 0))
        a, b = pat.edges[e]
        expected = set(pat.incident_edges(a)) | set(pat.incident_edges(b))
        assert set(np.flatnonzero(v.affected_mask)) == expected

    def test_maekawa_triggered_on_completion(self):
        # grid2 center is degree-4; fold three creases correctly, then give
        # the last one a sign that breaks |M - V| = 2
        pat = grid_pattern(2)
        st = flat_state(pat)
        creases = [j for j in range(pat.n_edges) if not pat.boundary[j]]
        for j in creases[:-1]:
            bin_ = 15 if pat.crease_types[j] == "M" else 0
            st, v = step(pat, st, fold(j, angle_bin=bin_))
            assert v.valid
        last = creases[-1]
        # fold it as unassigned-opposite via UNFOLD trick is blocked by type;
        # instead fold with the correct sign but checks still pass
        bin_ = 15 if pat.crease_types[last] == "M" else 0
        st2, v = step(pat, st, fold(last, angle_bin=bin_))
        assert v.valid   # the construction satisfies Maekawa

    def test_maekawa_violation_on_bad_assignment(self):
        pat, state, expected = invalid_vertex_fixtures(2, seed=5)[1]
        assert expected is Reason.MAEKAWA_VIOLATION
        # replay: fold all creases but the last, then the completing fold fails
        st = flat_state(pat)
        creases = [j for j in range(pat.n_edges) if not pat.boundary[j]]
        for j in creases[:-1]:
            bin_ = 15 if pat.crease_types[j] == "M" else 0
            st, v = step(pat, st, fold(j, angle_bin=bin_))
            assert v.valid
        last = creases[-1]
        bin_ = 15 if pat.crease_types[last] == "M" else 0
        st2, v = step(pat, st, fold(last, angle_bin=bin_))
        assert v.reason is Reason.MAEKAWA_VIOLATION
        assert st2 == st


class TestOtherOps:
    def test_unfold_resets_to_initial_type(self):
        pat = diagonal_pattern("U")
        e = diag_edge(pat)
        st, _ = step(pat, flat_state(pat), fold(e, angle_bin=15))
        assert st.z[e] == "M"
        st2, v = step(pat, st, FoldAction(op="UNFOLD", edge=e))
        assert v.valid
        assert st2.alpha[e] == 0 and st2.rho[e] == 0 and st2.z[e] == "U"

    def test_unfold_boundary_rejected(self):
        pat = diagonal_pattern()
        e = int(np.flatnonzero(pat.boundary)[0])
        _, v = step(pat, flat_state(pat), FoldAction(op="UNFOLD", edge=e))
        assert v.reason is Reason.BOUNDARY_EDGE

    def test_flip_negates_folded_angles(self):
        pat = diagonal_pattern("V")
        e = diag_edge(pat)
        st, _ = step(pat, flat_state(pat), fold(e, angle_bin=0, rho_bin=4))
        st2, v = step(pat, st, FoldAction(op="FLIP"))
        assert v.valid and st2.b is True
        assert st2.alpha[e] == -st.alpha[e]
        assert set(np.flatnonzero(v.affected_mask)) == {e}

    def test_flip_twice_restores(self):
        pat = diagonal_pattern("V")
        e = diag_edge(pat)
        st, _ = step(pat, flat_state(pat), fold(e, angle_bin=0, rho_bin=4))
        st1, _ = step(pat, st, FoldAction(op="FLIP"))
        st2, _ = step(pat, st1, FoldAction(op="FLIP"))
        assert np.array_equal(st2.alpha, st.alpha)
        assert st2.b is False

    def test_rotate_wraps_psi(self):
        pat = diagonal_pattern()
        st = flat_state(pat)
        for _ in range(4):
            st, v = step(pat, st, FoldAction(op="ROTATE", rotate_quarter_turns=1))
            assert v.valid
        assert st.psi == pytest.approx(0.0)
        assert st.step == 4

    def test_done_only_advances_step(self):
        pat = diagonal_pattern()
        st0 = flat_state(pat)
        st, v = step(pat, st0, FoldAction(op="DONE"))
        assert v.valid
        assert st == st0.replace(step=1)

    def test_step_budget(self):
        pat = diagonal_pattern()
        st = flat_state(pat).replace(step=64)
        st2, v = step(pat, st, FoldAction(op="DONE"))
        assert v.reason is Reason.STEP_BUDGET_EXCEEDED
        assert st2 == st

    def test_malformed_action_object(self):
        pat = diagonal_pattern()
        _, v = step(pat, flat_state(pat), "FOLD")
        assert v.reason is Reason.MALFORMED_ACTION


class TestDeterminism:
    def test_bit_identical_replay(self, rng):
        pat = canonicalize(grid_pattern(3))
        st = flat_state(pat.pattern)
        actions = []
        for _ in range(30):
            e = int(rng.integers(pat.pattern.n_edges))
            actions.append(fold(e, angle_bin=int(rng.integers(16)),
                                rho_bin=int(rng.integers(8))))

        def run():
            out = []
            s = st
            for a in actions:
                s, v = step(pat, s, a)
                out.append((s.alpha.tobytes(), s.rho.tobytes(),
                            v.reason, v.affected_mask.tobytes()))
            return out

        assert run() == run()

    def test_canonical_pattern_accepted(self):
        pat = canonicalize(book_pattern())
        e = int(np.flatnonzero(~pat.pattern.boundary)[0])
        _, v = step(pat, flat_state(pat.pattern), fold(e, angle_bin=0))
        assert v.valid
