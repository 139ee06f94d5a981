import itertools
import math

import numpy as np
import pytest

from capddp.config import Dataset, ModelConfig, Variant
from capddp.distances import (
    approximate_with_common_atoms,
    composite_weights,
    exact_l2_quadrature,
    kernel_l1_quadrature,
    l2_conditional,
    pairwise_l2,
    running_average,
    tv_distance,
    DistanceTrace,
)
from capddp.experiments import example1_densities, example2_densities
from capddp.state import init_state


def brute_force_tv(wa, wb, tail_a, tail_b):
    """Supremum of |W_aJ - W_bJ| over every index subset, tail included."""
    ext_a = np.append(wa, tail_a)
    ext_b = np.append(wb, tail_b)
    best = 0.0
    for mask in itertools.product([0, 1], repeat=ext_a.size):
        sel = np.array(mask, dtype=bool)
        best = max(best, abs(ext_a[sel].sum() - ext_b[sel].sum()))
    return best


class TestL2Conditional:
    def test_identical_vectors(self):
        w = np.array([0.5, 0.3, 0.2])
        assert l2_conditional(w, w) == 0.0

    def test_disjoint_point_masses(self):
        assert l2_conditional([1.0, 0.0], [0.0, 1.0]) == pytest.approx(2.0)

    def test_scale_multiplies(self):
        assert l2_conditional([1.0, 0.0], [0.0, 1.0], scale=0.25) == pytest.approx(0.5)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            l2_conditional([0.5, 0.5], [1.0])

    def test_symmetry_and_sqrt_triangle(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            a, b, c = rng.dirichlet(np.ones(6), size=3)
            assert l2_conditional(a, b) == pytest.approx(l2_conditional(b, a))
            d_ab = math.sqrt(l2_conditional(a, b))
            d_bc = math.sqrt(l2_conditional(b, c))
            d_ac = math.sqrt(l2_conditional(a, c))
            assert d_ac <= d_ab + d_bc + 1e-12


class TestTVDistance:
    def test_identical(self):
        assert tv_distance([0.5, 0.5], [0.5, 0.5]) == 0.0

    def test_disjoint_unit_masses(self):
        assert tv_distance([1.0, 0.0], [0.0, 1.0]) == pytest.approx(1.0)

    def test_hand_value(self):
        assert tv_distance([0.7, 0.3], [0.3, 0.7]) == pytest.approx(0.4)

    def test_matches_subset_supremum_without_tails(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            k = rng.integers(2, 13)
            wa = rng.dirichlet(np.ones(k))
            wb = rng.dirichlet(np.ones(k))
            assert tv_distance(wa, wb) == pytest.approx(
                brute_force_tv(wa, wb, 0.0, 0.0), abs=1e-12
            )

    def test_matches_subset_supremum_with_tails(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            k = rng.integers(2, 11)
            full_a = rng.dirichlet(np.ones(k + 1))
            full_b = rng.dirichlet(np.ones(k + 1))
            wa, tail_a = full_a[:k], full_a[k]
            wb, tail_b = full_b[:k], full_b[k]
            assert tv_distance(wa, wb, tail_a, tail_b) == pytest.approx(
                brute_force_tv(wa, wb, tail_a, tail_b), abs=1e-12
            )


class TestCancellationIdentity:
    def test_sum_of_cross_terms_vanishes(self):
        # squared difference plus twice the off-diagonal products is (sum of
        # differences)^2, which is zero for two full weight vectors
        rng = np.random.default_rng(3)
        for _ in range(300):
            k = rng.integers(2, 30)
            wa = rng.dirichlet(np.ones(k))
            wb = rng.dirichlet(np.ones(k))
            delta = wa - wb
            cross = np.sum(np.outer(delta, delta)) - np.sum(delta**2)
            s = np.sum(delta**2) + cross
            assert abs(s) < 1e-10


class TestCompositeWeights:
    def test_basis_row_selects_single_stick_row(self):
        rng = np.random.default_rng(4)
        data = Dataset(groups=[rng.normal(size=4), rng.normal(size=4)])
        state = init_state(ModelConfig(m=2, s=0.5, eps=0.5), data, rng)
        state.p[0] = [1.0, 0.0]
        cw = composite_weights(state)
        np.testing.assert_allclose(cw.w[0], state.sticks.weights(0, 0))

    def test_hand_linear_combination(self):
        rng = np.random.default_rng(5)
        data = Dataset(groups=[rng.normal(size=3), rng.normal(size=3)])
        state = init_state(ModelConfig(m=2, s=0.5, eps=0.5), data, rng)
        z = np.zeros((3, 2))
        z[state.sticks.pair_index(0, 0)] = [0.6, 1.0 - 1e-15]
        z[state.sticks.pair_index(0, 1)] = [0.2, 1.0 - 1e-15]
        z[state.sticks.pair_index(1, 1)] = [0.5, 0.5]
        z = np.clip(z, 1e-12, 1 - 1e-15)
        state.sticks.replace(z)
        state.p[0] = [0.5, 0.5]
        cw = composite_weights(state)
        np.testing.assert_allclose(cw.w[0], [0.4, 0.6], atol=1e-9)

    def test_mass_conservation(self):
        rng = np.random.default_rng(6)
        data = Dataset(groups=[rng.normal(size=5)] * 3)
        state = init_state(ModelConfig(m=3, s=0.5, eps=0.5), data, rng)
        cw = composite_weights(state)
        for j in range(3):
            assert cw.w[j].sum() + cw.tail[j] == pytest.approx(1.0, abs=1e-12)

    def test_pddp_state_refused(self):
        rng = np.random.default_rng(7)
        data = Dataset(groups=[rng.normal(size=4), rng.normal(size=4)])
        state = init_state(ModelConfig(m=2, s=0.5, eps=0.5, variant=Variant.PDDP), data, rng)
        with pytest.raises(ValueError, match="common-atoms"):
            composite_weights(state)
        with pytest.raises(ValueError):
            pairwise_l2(state)


class TestExactL2Quadrature:
    def test_first_example_constants(self):
        f1, f2, f3 = example1_densities()
        grid = np.linspace(-12.0, 12.0, 9601)
        d12 = exact_l2_quadrature(f1, f2, grid)
        d13 = exact_l2_quadrature(f1, f3, grid)
        assert d12.value == pytest.approx(0.0346, abs=5e-4)
        assert d13.value == pytest.approx(0.1093, abs=5e-4)
        assert d12.error_estimate < 1e-8

    def test_second_example_constant(self):
        g1, g2, g3 = example2_densities()
        grid = np.linspace(-45.0, 50.0, 19001)
        for a, b in ((g1, g2), (g1, g3), (g2, g3)):
            assert exact_l2_quadrature(a, b, grid).value == pytest.approx(0.125, abs=2e-3)

    def test_identical_densities(self):
        f1, _, _ = example1_densities()
        grid = np.linspace(-12.0, 12.0, 2001)
        assert exact_l2_quadrature(f1, f1, grid).value == 0.0


class TestApproximateWithCommonAtoms:
    def test_exact_pool_match_gives_zero_bound(self):
        target = [((0.0, 1.0), 0.6), ((3.0, 2.0), 0.4)]
        pool = [(3.0, 2.0), (0.0, 1.0), (-5.0, 1.0)]
        q, bound = approximate_with_common_atoms(target, pool)
        np.testing.assert_allclose(q, [0.4, 0.6, 0.0], atol=1e-12)
        assert bound == pytest.approx(0.0, abs=1e-9)

    def test_single_component_picks_nearer_atom(self):
        target = [((1.0, 1.0), 1.0)]
        pool = [(4.0, 1.0), (1.5, 1.0)]
        q, bound = approximate_with_common_atoms(target, pool)
        assert q[1] == 1.0 and q[0] == 0.0
        assert bound == pytest.approx(kernel_l1_quadrature((1.0, 1.0), (1.5, 1.0)), rel=1e-9)

    def test_bound_dominates_actual_l1(self):
        from capddp.kernel import kernel_density
        from scipy.integrate import simpson

        rng = np.random.default_rng(8)
        for _ in range(5):
            target = [((rng.normal(0, 2), rng.uniform(0.5, 2)), w)
                      for w in rng.dirichlet(np.ones(3))]
            pool = [(rng.normal(0, 2), rng.uniform(0.5, 2)) for _ in range(5)]
            q, bound = approximate_with_common_atoms(target, pool)
            grid = np.linspace(-15, 15, 6001)
            f = sum(w * kernel_density(grid, mu, lam) for (mu, lam), w in target)
            g = sum(qt * kernel_density(grid, mu, lam) for qt, (mu, lam) in zip(q, pool))
            actual = simpson(np.abs(f - g), x=grid)
            assert bound >= actual - 1e-6

    def test_pool_too_small(self):
        with pytest.raises(ValueError, match="injective"):
            approximate_with_common_atoms(
                [((0.0, 1.0), 0.5), ((1.0, 1.0), 0.5)], [(0.0, 1.0)]
            )


class TestRunningAverage:
    def test_constant_series(self):
        np.testing.assert_allclose(running_average([2.5] * 4), [2.5] * 4)

    def test_two_point_series(self):
        np.testing.assert_allclose(running_average([1.0, 3.0]), [1.0, 2.0])

    def test_matches_brute_force(self):
        rng = np.random.default_rng(9)
        x = rng.normal(size=200)
        got = running_average(x)
        expected = np.array([x[: t + 1].mean() for t in range(x.size)])
        np.testing.assert_allclose(got, expected, atol=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            running_average([])


class TestDistanceTrace:
    def test_running_mean_matches_prefix_mean(self):
        rng = np.random.default_rng(10)
        trace = DistanceTrace(pairs=[(0, 1), (0, 2)])
        vals = rng.uniform(size=(50, 2))
        for row in vals:
            trace.append({(0, 1): row[0], (0, 2): row[1]},
                         {(0, 1): 0.0, (0, 2): 0.0}, 5)
        run = trace.l2_running_mean()
        for t in range(50):
            np.testing.assert_allclose(run[t], vals[: t + 1].mean(axis=0), atol=1e-12)
