import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from afnprecond.errors import ArgumentError, SizeError
from afnprecond.geometry import (
    PointSet,
    brute_force_optimal_fill,
    brute_force_optimal_separation,
    centroid_seed,
    fill_distance,
    fps_sample,
    knn_pattern,
    random_sample,
    separation_distance,
)


def line(*xs):
    return PointSet(np.array(xs, dtype=float)[:, None])


class TestPointSet:
    def test_shapes(self):
        ps = PointSet([[0.0, 1.0], [2.0, 3.0]])
        assert (ps.n, ps.d) == (2, 2)

    def test_one_dimensional_input_becomes_column(self):
        assert line(0, 1, 2).d == 1

    def test_immutable(self):
        ps = line(0, 1)
        with pytest.raises(ValueError):
            ps.points[0, 0] = 5.0

    @pytest.mark.parametrize("bad", [np.zeros((0, 2)), [[np.nan, 0.0]], [[np.inf]]])
    def test_rejects_bad_points(self, bad):
        with pytest.raises(ArgumentError):
            PointSet(bad)


class TestFps:
    def test_forced_order_1d(self):
        sel = fps_sample(line(0, 1, 10), 3, seed_index=0)
        assert sel.indices.tolist() == [0, 2, 1]

    def test_k1_trace_is_max_distance_to_seed(self):
        ps = line(0, 1, 10)
        sel = fps_sample(ps, 1, seed_index=1)
        assert sel.indices.tolist() == [1]
        assert sel.fill_trace[0] == 9.0

    def test_trace_matches_fill_distance_of_prefix(self):
        ps = PointSet(np.random.default_rng(1).uniform(size=(60, 2)))
        sel = fps_sample(ps, 20, seed_index=3)
        for j in range(1, 21):
            assert sel.fill_trace[j - 1] == pytest.approx(fill_distance(ps, sel.indices[:j]), abs=0)

    def test_ties_go_to_smallest_id(self):
        # points 0 and 2 are both at distance 1 from the seed
        sel = fps_sample(line(-1, 0, 1), 2, seed_index=1)
        assert sel.indices.tolist() == [1, 0]

    def test_default_seed_is_nearest_centroid(self):
        ps = line(0, 4, 5, 10)
        assert centroid_seed(ps) == 2
        assert fps_sample(ps, 1).indices[0] == 2

    def test_nested_prefixes(self):
        ps = PointSet(np.random.default_rng(2).normal(size=(80, 3)))
        big = fps_sample(ps, 30, seed_index=5)
        for j in (1, 7, 19):
            small = fps_sample(ps, j, seed_index=5)
            np.testing.assert_array_equal(big.indices[:j], small.indices)
            np.testing.assert_array_equal(big.fill_trace[:j], small.fill_trace)

    def test_k_equals_n_trace_ends_at_zero(self):
        ps = line(0, 3, 4)
        sel = fps_sample(ps, 3, seed_index=0)
        assert sel.fill_trace[-1] == 0.0

    def test_duplicates_do_not_break_selection(self):
        ps = PointSet([[0.0], [0.0], [1.0]])
        sel = fps_sample(ps, 3, seed_index=0)
        assert sorted(sel.indices.tolist()) == [0, 1, 2]
        assert separation_distance(ps, sel) == 0.0

    @pytest.mark.parametrize("k,seed", [(0, 0), (4, 0), (2, 3), (2, -1)])
    def test_argument_errors(self, k, seed):
        with pytest.raises(ArgumentError):
            fps_sample(line(0, 1, 2), k, seed_index=seed)

    def test_figure_point_set_selected_points_are_separated(self):
        # 400 points in the plane, 30 FPS points: pairwise spacing >= fill distance
        ps = PointSet(np.random.default_rng(400).uniform(size=(400, 2)))
        sel = fps_sample(ps, 30)
        assert separation_distance(ps, sel) >= fill_distance(ps, sel)

    def test_deterministic(self):
        ps = PointSet(np.random.default_rng(3).uniform(size=(100, 3)))
        a, b = fps_sample(ps, 25), fps_sample(ps, 25)
        np.testing.assert_array_equal(a.indices, b.indices)


class TestRandomSample:
    def test_distinct_and_reproducible(self):
        ps = PointSet(np.random.default_rng(0).uniform(size=(50, 2)))
        a = random_sample(ps, 20, 7)
        b = random_sample(ps, 20, 7)
        np.testing.assert_array_equal(a.indices, b.indices)
        assert len(set(a.indices.tolist())) == 20

    def test_trace_is_prefix_fill_distance(self):
        ps = PointSet(np.random.default_rng(0).uniform(size=(50, 2)))
        sel = random_sample(ps, 10, 1)
        for j in (1, 5, 10):
            assert sel.fill_trace[j - 1] == pytest.approx(fill_distance(ps, sel.indices[:j]), abs=0)


class TestDistances:
    def test_fill_hand_values(self):
        ps = line(0, 1, 2)
        assert fill_distance(ps, [0]) == 2.0
        assert fill_distance(ps, [1]) == 1.0
        assert fill_distance(ps, [0, 1, 2]) == 0.0

    def test_fill_empty_selection(self):
        with pytest.raises(ArgumentError):
            fill_distance(line(0, 1), [])

    def test_fill_over_probe_domain(self):
        ps = line(0, 1)
        assert fill_distance(ps, [0], domain=[[3.0], [-0.5]]) == 3.0

    def test_separation_hand_values(self):
        assert separation_distance(line(0, 1, 3), [0, 1, 2]) == 1.0
        assert separation_distance(line(5, 5), [0, 1]) == 0.0

    def test_separation_needs_two(self):
        with pytest.raises(ArgumentError):
            separation_distance(line(0, 1), [0])

    def test_fill_monotone_when_appending(self):
        ps = PointSet(np.random.default_rng(4).uniform(size=(70, 2)))
        order = np.random.default_rng(5).permutation(70)
        h = [fill_distance(ps, order[:j]) for j in range(1, 71)]
        assert all(a >= b for a, b in zip(h, h[1:]))


class TestKnnPattern:
    def test_w1_is_diagonal(self):
        ps = PointSet(np.random.default_rng(0).uniform(size=(10, 2)))
        pat = knn_pattern(ps, np.arange(10), 1)
        assert all(r.tolist() == [i] for i, r in enumerate(pat.rows))

    def test_row0_and_hand_example(self):
        pat = knn_pattern(line(0, 1, 2, 3), np.arange(4), 2)
        assert pat.rows[0].tolist() == [0]
        assert pat.rows[3].tolist() == [2, 3]

    def test_tie_break_smaller_position(self):
        # point at 0 (pos 2) is equidistant from positions 0 (x=-1) and 1 (x=1)
        pat = knn_pattern(line(-1, 1, 0), np.arange(3), 2)
        assert pat.rows[2].tolist() == [0, 2]

    def test_positions_follow_ordering(self):
        ps = line(0, 10, 1)
        pat = knn_pattern(ps, np.array([1, 0, 2]), 2)
        # position 2 is x=1, nearest earlier is x=0 at position 1
        assert pat.rows[2].tolist() == [1, 2]

    def test_matches_brute_force_sort(self):
        ps = PointSet(np.random.default_rng(9).uniform(size=(120, 3)))
        order = np.random.default_rng(10).permutation(120)
        w = 7
        pat = knn_pattern(ps, order, w)
        pts = ps.points[order]
        for i in range(120):
            d = [math.dist(pts[i], pts[j]) for j in range(i)]
            expect = sorted(sorted(range(i), key=lambda j: (d[j], j))[: w - 1]) + [i]
            assert pat.rows[i].tolist() == expect

    def test_full_pattern_is_lower_triangle(self):
        ps = PointSet(np.random.default_rng(0).uniform(size=(15, 2)))
        pat = knn_pattern(ps, np.arange(15), 15)
        np.testing.assert_array_equal(pat.to_dense(), np.tril(np.ones((15, 15), dtype=bool)))

    def test_rejects_repeated_ids(self):
        with pytest.raises(ArgumentError):
            knn_pattern(line(0, 1, 2), [0, 0, 1], 2)


def _enumerate_fill(points, k):
    """Independent pure-Python enumeration of the optimal fill distance."""
    best = math.inf
    for combo in itertools.combinations(range(len(points)), k):
        h = max(min(math.dist(p, points[c]) for c in combo) for p in points)
        best = min(best, h)
    return best


class TestBruteForce:
    def test_hand_enumerated_line(self):
        _, h = brute_force_optimal_fill(line(0, 1, 2, 3), 2)
        assert h == 1.0
        assert _enumerate_fill([(0,), (1,), (2,), (3,)], 2) == 1.0

    def test_k_equals_n(self):
        _, h = brute_force_optimal_fill(line(0, 1, 5), 3)
        assert h == 0.0

    def test_separation_optimum(self):
        ids, q = brute_force_optimal_separation(line(0, 1, 2, 3), 2)
        assert q == 3.0 and ids.tolist() == [0, 3]

    def test_against_independent_enumeration(self):
        rng = np.random.default_rng(11)
        for _ in range(5):
            pts = rng.uniform(size=(8, 2))
            _, h = brute_force_optimal_fill(PointSet(pts), 3)
            assert h == pytest.approx(_enumerate_fill([tuple(p) for p in pts], 3), rel=1e-15)

    def test_size_guard(self):
        with pytest.raises(SizeError):
            brute_force_optimal_fill(PointSet(np.zeros((17, 1))), 2)


coords = st.floats(min_value=-100, max_value=100, allow_nan=False, allow_infinity=False)


@settings(max_examples=60, deadline=None)
@given(
    pts=st.lists(st.tuples(coords, coords), min_size=2, max_size=40, unique=True),
    data=st.data(),
)
def test_fps_fill_at_most_separation(pts, data):
    ps = PointSet(np.array(pts))
    k = data.draw(st.integers(2, ps.n))
    seed = data.draw(st.integers(0, ps.n - 1))
    sel = fps_sample(ps, k, seed)
    h, q = fill_distance(ps, sel), separation_distance(ps, sel)
    assert h <= q * (1 + 1e-12)
    assert np.all(np.diff(sel.fill_trace) <= 0)
