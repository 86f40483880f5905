import numpy as np
import pytest

from foldplan.actions import FoldAction, Vocabulary
from foldplan.metrics import (
    EmptyResults,
    cat_sr,
    edge_iou,
    f1_score,
    step_prf,
    trajectory_metrics,
)


@pytest.fixture
def vocab():
    return Vocabulary(8, 10)


def fold(edge, angle_bin=15, rho_bin=7):
    return FoldAction(op="FOLD", edge=edge, angle_bin=angle_bin, rho_bin=rho_bin)


class TestStepPRF:
    def test_identical_sequences(self, vocab):
        seq = [fold(1), fold(2), FoldAction(op="DONE")]
        assert step_prf(seq, seq, vocab) == (1.0, 1.0, 1.0)

    def test_empty_prediction(self, vocab):
        assert step_prf([], [fold(0)], vocab) == (0.0, 0.0, 0.0)

    def test_three_of_four_tokens(self, vocab):
        p, r, f = step_prf([fold(3)], [fold(2)], vocab)
        assert (p, r, f) == (0.75, 0.75, 0.75)

    def test_extra_steps_penalize_precision(self, vocab):
        ref = [fold(1)]
        pred = [fold(1), FoldAction(op="DONE")]
        p, r, _ = step_prf(pred, ref, vocab)
        assert r == 1.0 and p == 4 / 5

    def test_missing_steps_penalize_recall(self, vocab):
        ref = [fold(1), FoldAction(op="DONE")]
        p, r, _ = step_prf([fold(1)], ref, vocab)
        assert p == 1.0 and r == 4 / 5

    def test_misaligned_steps_score_zero_overlap(self, vocab):
        # index alignment: the same actions shifted by one share few tokens
        ref = [fold(1), fold(2)]
        pred = [fold(2), fold(1)]
        p, _, _ = step_prf(pred, ref, vocab)
        assert p == 0.75   # op/angle/rho tokens match, edges do not


class TestEdgeIoU:
    def test_half_overlap(self):
        assert edge_iou({1, 2, 3}, {2, 3, 4}) == 0.5

    def test_identity(self):
        assert edge_iou({1, 2}, {1, 2}) == 1.0

    def test_disjoint(self):
        assert edge_iou({1}, {2}) == 0.0

    def test_empty_empty_is_one(self):
        assert edge_iou(set(), set()) == 1.0

    def test_symmetry(self, rng):
        for _ in range(20):
            a = set(rng.integers(0, 10, size=rng.integers(0, 6)).tolist())
            b = set(rng.integers(0, 10, size=rng.integers(0, 6)).tolist())
            assert edge_iou(a, b) == edge_iou(b, a)

    def test_accepts_numpy_masks(self):
        mask = np.array([False, True, True, False])
        assert edge_iou(np.flatnonzero(mask), {1, 2}) == 1.0


class TestCatSR:
    def test_macro_example(self):
        results = [("A", True), ("A", True), ("A", False), ("A", False),
                   ("B", True)]
        assert cat_sr(results) == 0.75

    def test_all_success(self):
        assert cat_sr([("A", True), ("B", True)]) == 1.0

    def test_single_category_is_micro(self):
        assert cat_sr([("A", True), ("A", False)]) == 0.5

    def test_duplication_invariance(self):
        base = [("A", True), ("A", False), ("B", True)]
        doubled = base + [("A", True), ("A", False)]
        assert cat_sr(base) == cat_sr(doubled)

    def test_empty_raises(self):
        with pytest.raises(EmptyResults):
            cat_sr([])


class TestF1:
    def test_harmonic_identity_random_pairs(self, rng):
        for _ in range(200):
            p, r = rng.random(), rng.random()
            f = f1_score(p, r)
            assert f == 2 * p * r / (p + r)

    def test_zero_convention(self):
        assert f1_score(0.0, 0.0) == 0.0


class TestTrajectoryMetrics:
    def _traj(self, success, n_cand=8, n_valid=8, goal_dist_alpha=0.0):
        import math

        from foldplan.cp import flat_state
        from foldplan.dataset import diagonal_pattern
        from foldplan.cp import canonicalize
        from foldplan.planner import GoalSpec, Trajectory, TrajectoryStep
        from foldplan import level0

        pat = canonicalize(diagonal_pattern("V"))
        ne = pat.pattern.n_edges
        goal = GoalSpec(category="diag",
                        target_alpha=np.full(ne, goal_dist_alpha),
                        target_z=pat.pattern.crease_types.copy())
        state = flat_state(pat.pattern)
        step = TrajectoryStep(
            action=FoldAction(op="DONE"),
            verdict=level0.Verdict(True, level0.Reason.OK,
                                   np.zeros(ne, dtype=bool)),
            state_after=state, score=0.0,
            n_candidates=n_cand, n_valid_candidates=n_valid)
        return Trajectory(pattern=pat, goal=goal, steps=[step],
                          final_state=state, success=success)

    def test_all_valid_all_reached(self):
        sv, sr, gd = trajectory_metrics([self._traj(True)])
        assert (sv, sr, gd) == (1.0, 1.0, 0.0)

    def test_single_failure(self):
        import math

        t = self._traj(False, n_valid=4, goal_dist_alpha=math.pi)
        sv, sr, gd = trajectory_metrics([t])
        assert sv == 0.5 and sr == 0.0
        assert gd > 0.0

    def test_empty_raises(self):
        with pytest.raises(EmptyResults):
            trajectory_metrics([])

    def test_goal_count_mismatch(self):
        with pytest.raises(ValueError):
            trajectory_metrics([self._traj(True)], goals=[])
