import numpy as np
import pytest

from framedisc import Covering, StructuralError, Weight2D, apply_kernel, \
    check_m_equivalent, identity_kernel, neighbor_sums, permutation_kernel, \
    singleton_covering, transfer_kernel, uniform_covering, uniform_grid, \
    validate_covering, weight_compatibility
from framedisc.coverings import build_pou, covering_from_json, covering_to_json, \
    is_admissible_permutation, random_admissible_permutation

from oracles import covering_stats_naive


def random_interval_covering(rng, space, n_sets):
    """Random intervals of indices, forced to cover everything."""
    n = space.n_points
    sets = []
    for _ in range(n_sets):
        a = int(rng.integers(0, n - 1))
        b = int(rng.integers(a + 1, n + 1))
        sets.append(np.arange(a, b))
    sets.append(np.arange(n))   # guarantee coverage
    return Covering(space, tuple(sets))


class TestValidation:
    def test_singleton_partition(self, small_space):
        cov = singleton_covering(small_space)
        rep = validate_covering(cov)
        assert rep.admissible and rep.moderate
        assert rep.overlap_bound == 1
        assert rep.moderateness == 1.0
        assert rep.min_measure == small_space.weights.min()

    def test_two_identical_full_sets(self, small_space):
        cov = Covering(small_space, (np.arange(5), np.arange(5)))
        rep = validate_covering(cov)
        assert rep.overlap_bound == 2
        assert rep.moderateness == 1.0

    def test_matches_brute_force(self, rng, grid64):
        cov = random_interval_covering(rng, grid64, 10)
        rep = validate_covering(cov)
        n, d, c = covering_stats_naive([s.tolist() for s in cov.sets],
                                       grid64.weights)
        assert rep.overlap_bound == n
        assert rep.min_measure == pytest.approx(d, rel=1e-14)
        assert rep.moderateness == pytest.approx(c, rel=1e-14)

    def test_uncovered_point_reported_not_raised(self, small_space):
        cov = Covering(small_space, (np.array([0, 1]), np.array([3, 4])))
        rep = validate_covering(cov)
        assert not rep.admissible
        assert rep.uncovered == (2,)

    def test_empty_set_rejected(self, small_space):
        with pytest.raises(StructuralError):
            Covering(small_space, (np.array([], dtype=int),))

    def test_overlap_count_bounded_by_n(self, rng, grid64):
        cov = random_interval_covering(rng, grid64, 8)
        assert np.max(cov.cover_counts) <= cov.overlap_bound


class TestWeightCompatibility:
    def test_trivial_weight(self, small_space):
        cov = Covering(small_space, (np.arange(5),))
        assert weight_compatibility(cov, Weight2D.constant(small_space)) == 1.0

    def test_singletons_give_diagonal(self, small_space, rng):
        cov = singleton_covering(small_space)
        m = Weight2D.from_pointwise(small_space, rng.uniform(0.5, 2.0, 5))
        assert weight_compatibility(cov, m) == 1.0

    def test_exponential_weight_interval(self):
        space = uniform_grid(32, spacing=1 / 32, weights=1 / 32)
        w = np.exp(space.points[:, 0])
        m = Weight2D.from_pointwise(space, w)
        cov = uniform_covering(space, 4 / 32)
        got = weight_compatibility(cov, m)
        want = max(m.matrix[np.ix_(s, s)].max() for s in cov.sets)
        assert got == want
        assert got == pytest.approx(np.exp(3 / 32), rel=1e-12)


class TestPartitionOfUnity:
    def test_flat_on_partition_is_indicator(self, grid64):
        cov = uniform_covering(grid64, 8.0)
        pou = build_pou(cov, "flat")
        assert np.array_equal(pou.phi, cov.membership.astype(float))
        assert np.allclose(pou.masses, cov.measures, rtol=0, atol=0)

    def test_equal_sharing_on_double_cover(self, small_space):
        cov = Covering(small_space, (np.array([0, 1, 2]), np.array([2, 3, 4])))
        pou = build_pou(cov, "flat")
        assert pou.phi[0, 2] == 0.5 and pou.phi[1, 2] == 0.5

    def test_masses_sum_to_total_measure(self, rng, grid64):
        for kind in ("flat", "smooth"):
            cov = random_interval_covering(rng, grid64, 6)
            pou = build_pou(cov, kind)
            assert np.sum(pou.masses) == pytest.approx(grid64.total_measure,
                                                       rel=1e-12)
            assert np.all(pou.masses > 0)
            assert np.all(pou.masses <= cov.measures + 1e-12)

    def test_smooth_invariants(self, rng, grid64):
        cov = random_interval_covering(rng, grid64, 5)
        pou = build_pou(cov, "smooth")
        assert np.all(pou.phi >= 0) and np.all(pou.phi <= 1)
        assert np.max(np.abs(pou.phi.sum(axis=0) - 1)) <= 1e-14
        assert np.all(pou.phi[~cov.membership] == 0)


class TestEquivalence:
    def test_same_covering(self, rng, grid64):
        cov = random_interval_covering(rng, grid64, 4)
        m = Weight2D.from_pointwise(grid64, rng.uniform(0.5, 2.0, 64))
        rep = check_m_equivalent(cov, cov, m)
        assert rep.equivalent
        assert rep.measure_lower == rep.measure_upper == 1.0
        assert rep.cross_weight == weight_compatibility(cov, m)

    def test_shifted_intervals_trivial_weight(self, grid64):
        cov_u = uniform_covering(grid64, 4.0)
        shifted = tuple(np.clip(s + 1, 0, 63) for s in cov_u.sets)
        cov_v = Covering(grid64, shifted)
        rep = check_m_equivalent(cov_u, cov_v, Weight2D.constant(grid64))
        assert rep.cross_weight == 1.0

    def test_constants_match_brute_force(self, rng, grid64):
        cov_u = random_interval_covering(rng, grid64, 5)
        cov_v = Covering(grid64, tuple(np.clip(s + 2, 0, 63) for s in cov_u.sets))
        m = Weight2D.from_pointwise(grid64, rng.uniform(0.5, 2.0, 64))
        rep = check_m_equivalent(cov_u, cov_v, m)
        ratios = [grid64.subset_measure(v) / grid64.subset_measure(u)
                  for u, v in zip(cov_u.sets, cov_v.sets)]
        cross = max(max(m.matrix[x, y] for x in u for y in v)
                    for u, v in zip(cov_u.sets, cov_v.sets))
        assert rep.measure_lower == pytest.approx(min(ratios), rel=1e-14)
        assert rep.measure_upper == pytest.approx(max(ratios), rel=1e-14)
        assert rep.cross_weight == cross

    def test_index_set_mismatch(self, grid64):
        with pytest.raises(StructuralError):
            check_m_equivalent(uniform_covering(grid64, 4.0),
                               uniform_covering(grid64, 8.0),
                               Weight2D.constant(grid64))


class TestTransferKernel:
    def test_partition_projects_onto_piecewise_constants(self, grid64):
        cov = uniform_covering(grid64, 8.0)
        L = transfer_kernel(cov, cov)
        for j in (0, 3, 7):
            chi = cov.membership[j].astype(float)
            out = apply_kernel(grid64, L, chi)
            assert np.max(np.abs(out - chi)) <= 1e-14

    def test_singletons_give_identity(self, small_space):
        cov = singleton_covering(small_space)
        L = transfer_kernel(cov, cov)
        assert np.allclose(L, identity_kernel(small_space), rtol=0, atol=1e-15)

    def test_entries_match_direct_formula(self, rng, grid64):
        cov_u = random_interval_covering(rng, grid64, 4)
        cov_v = Covering(grid64, tuple(np.clip(s + 1, 0, 63) for s in cov_u.sets))
        L = transfer_kernel(cov_u, cov_v)
        for _ in range(40):
            x = int(rng.integers(0, 64))
            y = int(rng.integers(0, 64))
            want = sum(
                (x in u.tolist()) * (y in v.tolist()) / grid64.subset_measure(v)
                for u, v in zip(cov_u.sets, cov_v.sets))
            assert abs(L[x, y] - want) <= 1e-13 * max(1.0, abs(want))


class TestUniformCovering:
    def test_full_span_single_set(self, grid64):
        cov = uniform_covering(grid64, 64.0)
        assert cov.n_sets == 1
        assert cov.overlap_bound == 1
        assert validate_covering(cov).admissible

    def test_unit_width_gives_singleton_partition(self, grid64):
        cov = uniform_covering(grid64, 1.0)
        assert cov.n_sets == 64
        assert all(s.size == 1 for s in cov.sets)

    def test_half_overlap_double_covers_interior(self, grid64):
        cov = uniform_covering(grid64, 4.0, overlap=2.0)
        counts = cov.cover_counts
        assert np.all(counts[2:] == 2)
        assert counts[0] == 1 and counts[1] == 1
        assert validate_covering(cov).admissible

    def test_empty_box_rejected(self, grid64):
        with pytest.raises(StructuralError):
            uniform_covering(grid64, 0.5)

    def test_bad_overlap_rejected(self, grid64):
        with pytest.raises(StructuralError):
            uniform_covering(grid64, 2.0, overlap=2.0)


class TestPermutations:
    def test_identity_kernel_matches_transfer(self, rng, grid64):
        cov = random_interval_covering(rng, grid64, 5)
        k_id = permutation_kernel(cov, np.arange(cov.n_sets))
        assert np.allclose(k_id, transfer_kernel(cov, cov), rtol=0, atol=1e-15)

    def test_entries_match_direct_formula(self, rng, grid64):
        cov = random_interval_covering(rng, grid64, 5)
        pi = random_admissible_permutation(cov, rng)
        if pi is None:
            pi = np.arange(cov.n_sets)
        assert is_admissible_permutation(cov, pi)
        k = permutation_kernel(cov, pi)
        inv = np.empty_like(pi)
        inv[pi] = np.arange(cov.n_sets)
        for _ in range(30):
            x = int(rng.integers(0, 64))
            y = int(rng.integers(0, 64))
            want = sum(
                (x in cov.sets[inv[i]].tolist()) * (y in cov.sets[i].tolist())
                / grid64.subset_measure(cov.sets[inv[i]])
                for i in range(cov.n_sets))
            assert abs(k[x, y] - want) <= 1e-13 * max(1.0, abs(want))

    def test_neighbor_sums_brute_force(self, rng, grid64):
        cov = random_interval_covering(rng, grid64, 6)
        lam = rng.standard_normal(cov.n_sets)
        got = neighbor_sums(cov, lam)
        for i in range(cov.n_sets):
            want = sum(lam[j] for j in range(cov.n_sets)
                       if set(cov.sets[i].tolist()) & set(cov.sets[j].tolist()))
            assert abs(got[i] - want) <= 1e-13 * max(1.0, abs(want))


def test_json_round_trip(rng, grid64):
    cov = random_interval_covering(rng, grid64, 4)
    back = covering_from_json(grid64, covering_to_json(cov))
    assert all(np.array_equal(a, b) for a, b in zip(back.sets, cov.sets))
    assert back.identifier() == cov.identifier()
