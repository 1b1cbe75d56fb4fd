import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jlkit.datagen import MixtureSpec, generate
from jlkit.errors import DegenerateDataError, DomainError
from jlkit.kmeans import (
    Partition,
    balance_quotient,
    brute_force_optimum,
    brute_force_optimum_sq_dists,
    canonical_labels,
    cluster_stats,
    cost_sandwich_check,
    global_optimum_transfer_check,
    is_lloyd_fixed_point,
    lloyd,
    load_partition,
    measure_gap,
    pair_balance,
    partition_cost_sq_dists,
    same_partition,
    save_partition,
    var_merge,
    var_merge_clusters,
    _square_sq_dists,
)
from jlkit.projection import Dataset, build_operator, project


def line_dataset(*coords):
    return Dataset(points=np.array([[float(c)] for c in coords]))


class TestClusterStats:
    def test_single_cluster_closed_form(self):
        data = Dataset(points=np.random.default_rng(0).standard_normal((20, 4)))
        part = Partition(assignments=np.zeros(20, dtype=int), k=1)
        stats = cluster_stats(data, part)
        mean = data.points.mean(axis=0)
        expected = float(np.sum((data.points - mean) ** 2))
        assert stats.cost == pytest.approx(expected, rel=1e-12)
        assert np.allclose(stats.centroids[0], mean, atol=1e-12)

    def test_cost_equals_sizes_dot_variances(self):
        rng = np.random.default_rng(1)
        data = Dataset(points=rng.standard_normal((30, 3)))
        part = Partition(assignments=rng.integers(0, 3, 30) % 3, k=3) \
            if len(np.unique(rng.integers(0, 3, 30))) == 3 else None
        labels = np.array([i % 3 for i in range(30)])
        part = Partition(assignments=labels, k=3)
        stats = cluster_stats(data, part)
        assert stats.cost == pytest.approx(float(np.dot(stats.sizes, stats.variances)), rel=1e-9)

    def test_cost_identity_three_ways(self):
        # Direct sum, sizes . variances, and the pairwise-distance form
        # must all agree.
        rng = np.random.default_rng(2)
        for trial in range(20):
            m = int(rng.integers(4, 12))
            data = Dataset(points=rng.standard_normal((m, 3)))
            k = int(rng.integers(1, min(4, m) + 1))
            labels = np.concatenate([np.arange(k), rng.integers(0, k, m - k)])
            part = Partition(assignments=labels, k=k)
            stats = cluster_stats(data, part)
            direct = float(np.sum((data.points - stats.centroids[part.assignments]) ** 2))
            pairwise = partition_cost_sq_dists(_square_sq_dists(data.points), part)
            assert stats.cost == pytest.approx(direct, rel=1e-9)
            assert stats.cost == pytest.approx(pairwise, rel=1e-9)

    def test_relabel_invariance(self):
        rng = np.random.default_rng(3)
        data = Dataset(points=rng.standard_normal((12, 2)))
        labels = np.array([0, 1, 2] * 4)
        cost_a = cluster_stats(data, Partition(assignments=labels, k=3)).cost
        swapped = np.array([2, 0, 1] * 4)
        cost_b = cluster_stats(data, Partition(assignments=swapped, k=3)).cost
        assert cost_a == pytest.approx(cost_b, rel=1e-12)


class TestPartitionValidation:
    def test_empty_cluster_rejected(self):
        with pytest.raises(DomainError):
            Partition(assignments=np.array([0, 0, 2]), k=3)

    def test_out_of_range_rejected(self):
        with pytest.raises(DomainError):
            Partition(assignments=np.array([0, 1, 3]), k=3)


class TestLloyd:
    def test_k1_closed_form(self):
        data = Dataset(points=np.random.default_rng(4).standard_normal((15, 3)))
        _, stats = lloyd(data, 1)
        mean = data.points.mean(axis=0)
        assert stats.cost == pytest.approx(float(np.sum((data.points - mean) ** 2)), rel=1e-12)

    def test_k_equals_m_zero_cost(self):
        data = Dataset(points=np.arange(12, dtype=float).reshape(6, 2) ** 1.3)
        part, stats = lloyd(data, 6)
        assert stats.cost == pytest.approx(0.0, abs=1e-18)
        assert np.unique(part.assignments).size == 6

    def test_recovers_separated_blobs(self):
        rng = np.random.default_rng(5)
        a = rng.standard_normal((50, 6)) + np.array([20.0] + [0.0] * 5)
        b = rng.standard_normal((50, 6))
        data = Dataset(points=np.vstack([a, b]))
        truth = Partition(assignments=np.array([0] * 50 + [1] * 50), k=2)
        part, stats = lloyd(data, 2, init=1)
        assert same_partition(part, truth)
        # Multi-restart agreement on the full instance.
        costs = {round(lloyd(data, 2, init=s)[1].cost, 6) for s in range(5)}
        assert len(costs) == 1
        # Exact agreement with the oracle on a subsample.
        sub = Dataset(points=np.vstack([a[:6], b[:6]]))
        _, sub_stats = brute_force_optimum(sub, 2)
        assert lloyd(sub, 2, init=0)[1].cost == pytest.approx(sub_stats.cost, rel=1e-12)

    def test_fixed_point_at_convergence(self):
        rng = np.random.default_rng(6)
        data = Dataset(points=rng.standard_normal((40, 3)))
        for seed in range(5):
            part, _ = lloyd(data, 4, init=seed)
            assert is_lloyd_fixed_point(data, part)

    def test_empty_cluster_repair(self):
        # Both initial centroids coincide, so the first reassignment
        # empties cluster 1; the farthest point must reseed it.
        data = line_dataset(0, 1, 2)
        part, stats = lloyd(data, 2, init=Partition(assignments=np.array([0, 1, 0]), k=2))
        assert np.unique(part.assignments).size == 2
        assert stats.cost == pytest.approx(0.5, rel=1e-12)

    def test_k_exceeding_m_rejected(self):
        with pytest.raises(DomainError):
            lloyd(line_dataset(0, 1), 3)


class TestBruteForce:
    def test_hand_enumeration_three_points(self):
        # Two-block partitions of {0, 1, 10}: costs 0.5, 40.5, 50.
        data = line_dataset(0, 1, 10)
        sq = _square_sq_dists(data.points)
        costs = {
            (0, 0, 1): 0.5,
            (0, 1, 1): 40.5,
            (0, 1, 0): 50.0,
        }
        for labels, expected in costs.items():
            part = Partition(assignments=np.array(labels), k=2)
            assert partition_cost_sq_dists(sq, part) == pytest.approx(expected, rel=1e-12)
        part, stats = brute_force_optimum(data, 2)
        assert stats.cost == pytest.approx(0.5, rel=1e-12)
        assert np.array_equal(canonical_labels(part.assignments), [0, 0, 1])

    def test_k_equals_m(self):
        data = line_dataset(3, 1, 4, 1.5)
        _, stats = brute_force_optimum(data, 4)
        assert stats.cost == pytest.approx(0.0, abs=1e-18)

    def test_lex_tie_break(self):
        # Unit square: the two axis-aligned splits tie; the
        # lexicographically first assignment vector [0,0,1,1] must win.
        data = Dataset(points=np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]))
        part, stats = brute_force_optimum(data, 2)
        assert stats.cost == pytest.approx(1.0, rel=1e-12)
        assert np.array_equal(part.assignments, [0, 0, 1, 1])

    def test_never_above_lloyd(self):
        rng = np.random.default_rng(7)
        for trial in range(5):
            data = Dataset(points=rng.standard_normal((10, 3)))
            _, opt = brute_force_optimum(data, 3)
            for seed in range(10):
                _, ll = lloyd(data, 3, init=seed)
                assert opt.cost <= ll.cost * (1 + 1e-9)

    def test_size_limit(self):
        with pytest.raises(DomainError):
            brute_force_optimum(Dataset(points=np.zeros((15, 2)) + np.arange(15)[:, None]), 2)

    def test_distance_matrix_route_matches_coordinates(self):
        rng = np.random.default_rng(8)
        data = Dataset(points=rng.standard_normal((9, 4)))
        part_a, stats = brute_force_optimum(data, 3)
        part_b, cost = brute_force_optimum_sq_dists(_square_sq_dists(data.points), 3)
        assert same_partition(part_a, part_b)
        assert cost == pytest.approx(stats.cost, rel=1e-9)


class TestVarMerge:
    def test_coincident_singletons(self):
        assert var_merge(1, 0.0, np.array([2.0]), 1, 0.0, np.array([2.0])) == 0.0

    def test_two_singletons_hand_value(self):
        # {0} and {2}: merged mean 1, deviations 1 and 1, VAR = 1.
        assert var_merge(1, 0.0, np.array([0.0]), 1, 0.0, np.array([2.0])) == pytest.approx(1.0)

    def test_identity_matches_direct_recomputation(self):
        rng = np.random.default_rng(9)
        for trial in range(100):
            n1, n2 = int(rng.integers(1, 20)), int(rng.integers(1, 20))
            d = int(rng.integers(1, 5))
            c1 = rng.standard_normal((n1, d)) * rng.uniform(0.5, 3)
            c2 = rng.standard_normal((n2, d)) + rng.uniform(-5, 5)
            v1 = float(np.mean(np.sum((c1 - c1.mean(0)) ** 2, axis=1)))
            v2 = float(np.mean(np.sum((c2 - c2.mean(0)) ** 2, axis=1)))
            merged = np.vstack([c1, c2])
            direct = float(np.mean(np.sum((merged - merged.mean(0)) ** 2, axis=1)))
            via_identity = var_merge(n1, v1, c1.mean(0), n2, v2, c2.mean(0))
            assert via_identity == pytest.approx(direct, rel=1e-9, abs=1e-12)

    def test_cluster_wrapper(self):
        data = line_dataset(0, 1, 10, 11)
        part = Partition(assignments=np.array([0, 0, 1, 1]), k=2)
        merged = var_merge_clusters(data, part, 0, 1)
        direct = float(np.mean((data.points - data.points.mean()) ** 2))
        assert merged == pytest.approx(direct, rel=1e-12)
        with pytest.raises(DomainError):
            var_merge_clusters(data, part, 1, 1)


class TestBalance:
    def test_symmetric_clusters(self):
        # Equal sizes, equal variance v, centre distance D: p = 4v/D^2.
        rng = np.random.default_rng(10)
        base = rng.standard_normal((40, 3))
        base -= base.mean(axis=0)
        shift = np.array([6.0, 0.0, 0.0])
        data = Dataset(points=np.vstack([base - shift / 2, base + shift / 2]))
        part = Partition(assignments=np.array([0] * 40 + [1] * 40), k=2)
        stats = cluster_stats(data, part)
        v = float(stats.variances[0])
        expected = 4.0 * v / 36.0
        assert balance_quotient(stats, 0, 1) == pytest.approx(expected, rel=1e-9)
        assert pair_balance(stats).p == pytest.approx(expected, rel=1e-9)

    def test_zero_variance_gives_zero(self):
        data = line_dataset(0, 0, 5, 5)
        stats = cluster_stats(data, Partition(assignments=np.array([0, 0, 1, 1]), k=2))
        assert balance_quotient(stats, 0, 1) == 0.0

    def test_coincident_centroids_error(self):
        data = line_dataset(0, 2, 1, 1)
        stats = cluster_stats(data, Partition(assignments=np.array([0, 0, 1, 1]), k=2))
        with pytest.raises(DegenerateDataError):
            balance_quotient(stats, 0, 1)


class TestFixedPoint:
    def test_swapped_points_not_fixed(self):
        rng = np.random.default_rng(11)
        a = rng.standard_normal((20, 2))
        b = rng.standard_normal((20, 2)) + np.array([30.0, 0.0])
        data = Dataset(points=np.vstack([a, b]))
        good = Partition(assignments=np.array([0] * 20 + [1] * 20), k=2)
        assert is_lloyd_fixed_point(data, good)
        swapped = good.assignments.copy()
        swapped[0], swapped[20] = 1, 0
        assert not is_lloyd_fixed_point(data, Partition(assignments=swapped, k=2))


class TestMeasureGap:
    def test_point_clusters_full_gap(self):
        data = line_dataset(0, 0, 8, 8)
        part = Partition(assignments=np.array([0, 0, 1, 1]), k=2)
        gap = measure_gap(data, part)
        assert gap.g == pytest.approx(2.0)
        assert np.nanmax(gap.per_pair_alpha) == 0.0
        assert gap.d_halfdist[0, 1] == pytest.approx(4.0)

    def test_point_on_bisector_closes_gap(self):
        data = Dataset(points=np.array([[-1.0, 0.0], [1.0, 0.0], [2.0, 0.0], [2.0, 0.0]]))
        part = Partition(assignments=np.array([0, 0, 1, 1]), k=2)
        gap = measure_gap(data, part)
        assert gap.per_pair_alpha[0, 1] == pytest.approx(1.0)
        assert gap.g == pytest.approx(0.0)

    def test_generated_gap_close_to_target(self):
        spec = MixtureSpec(k=2, sizes=(60, 60), dim=12, centre_distance=10.0,
                           cluster_sigma=0.8, target_gap=1.0, seed=3)
        data, part = generate(spec)
        measured = measure_gap(data, part).g
        assert measured >= 1.0 - 0.05

    def test_full_distance_reading(self):
        data = Dataset(points=np.array([[-1.0, 0.0], [1.0, 0.0], [3.0, 0.0], [3.0, 0.0]]))
        part = Partition(assignments=np.array([0, 0, 1, 1]), k=2)
        half = measure_gap(data, part, relative_to="half")
        full = measure_gap(data, part, relative_to="full")
        assert full.per_pair_alpha[0, 1] == pytest.approx(half.per_pair_alpha[0, 1] / 2.0)


class TestCostSandwich:
    def test_identity_case(self):
        data = Dataset(points=np.random.default_rng(12).standard_normal((20, 5)))
        part = Partition(assignments=np.array([i % 2 for i in range(20)]), k=2)
        stats = cluster_stats(data, part)
        res = cost_sandwich_check(stats, stats, 5, 5, 0.1)
        assert res.passed and res.quotient == pytest.approx(1.0)

    def test_zero_cost_case(self):
        # All points coincide per cluster, so linearity forces the
        # projected points to coincide too and both costs are exactly 0.
        # Power-of-two cluster sizes keep the float mean of identical rows
        # exact; odd sizes would manufacture a ~1e-33 variance floor.
        pts = np.array([[1.0, 2.0, 3.0]] * 4 + [[-4.0, 0.0, 2.0]] * 4)
        data = Dataset(points=pts)
        part = Partition(assignments=np.array([0] * 4 + [1] * 4), k=2)
        op = build_operator(3, 2, seed=0)
        projected = project(op, data)
        res = cost_sandwich_check(
            cluster_stats(data, part), cluster_stats(projected, part), 3, 2, 0.2
        )
        assert res.passed
        assert res.quotient == pytest.approx(1.0)

    def test_detects_violation(self):
        data = line_dataset(0, 1, 10, 11)
        part = Partition(assignments=np.array([0, 0, 1, 1]), k=2)
        stats = cluster_stats(data, part)
        shrunk = cluster_stats(Dataset(points=0.5 * data.points), part)
        res = cost_sandwich_check(stats, shrunk, 1, 1, 0.1)
        assert not res.passed


class TestGlobalTransfer:
    def test_k_equals_m(self):
        data = line_dataset(0, 3, 9)
        res = global_optimum_transfer_check(data, Dataset(points=data.points[:, :1]), 3, 0.2)
        assert res.forward_ok and res.reverse_ok

    def test_k1_reduces_to_sandwich(self):
        rng = np.random.default_rng(13)
        data = Dataset(points=rng.standard_normal((10, 30)))
        op = build_operator(30, 20, seed=1)
        projected = project(op, data)
        res = global_optimum_transfer_check(data, projected, 1, 0.9)
        part = Partition(assignments=np.zeros(10, dtype=int), k=1)
        sandwich = cost_sandwich_check(
            cluster_stats(data, part), cluster_stats(projected, part), 30, 20, 0.9
        )
        assert res.forward_ok == (sandwich.upper_margin >= 0)


class TestPartitionHelpers:
    def test_canonical_labels(self):
        assert np.array_equal(canonical_labels(np.array([2, 2, 0, 1, 0])), [0, 0, 1, 2, 1])

    def test_same_partition(self):
        a = Partition(assignments=np.array([0, 0, 1, 2]), k=3)
        b = Partition(assignments=np.array([1, 1, 2, 0]), k=3)
        c = Partition(assignments=np.array([0, 1, 1, 2]), k=3)
        assert same_partition(a, b)
        assert not same_partition(a, c)

    def test_save_load_round_trip(self, tmp_path):
        part = Partition(assignments=np.array([0, 1, 1, 0]), k=2)
        ids = ["p0", "p1", "p2", "p3"]
        path = str(tmp_path / "part.csv")
        save_partition(part, ids, path)
        back = load_partition(path, ids)
        assert np.array_equal(back.assignments, part.assignments)

    def test_load_partition_missing_ids_rejected(self, tmp_path):
        from jlkit.errors import ShapeError

        part = Partition(assignments=np.array([0, 1]), k=2)
        path = str(tmp_path / "part.csv")
        save_partition(part, ["a", "b"], path)
        with pytest.raises(ShapeError):
            load_partition(path, ["a", "b", "c"])


@given(st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=20, deadline=None)
def test_lloyd_cost_never_increases_property(seed):
    rng = np.random.default_rng(seed)
    data = Dataset(points=rng.standard_normal((25, 3)))
    part, stats = lloyd(data, 3, init=int(seed % 100))
    # The in-loop assertion guards monotonicity; a converged run must be
    # a fixed point too.
    assert is_lloyd_fixed_point(data, part)
