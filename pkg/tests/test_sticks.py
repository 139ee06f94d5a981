import math

import numpy as np
import pytest

from capddp.sticks import (
    STICK_CAP,
    TruncationLimitError,
    slice_set,
    truncation_index,
    weights_from_sticks,
)


class TestWeightsFromSticks:
    def test_geometric_halving(self):
        wv = weights_from_sticks([0.5, 0.5, 0.5])
        np.testing.assert_allclose(wv.w, [0.5, 0.25, 0.125])
        assert wv.tail_mass == pytest.approx(0.125)

    def test_near_degenerate_stick(self):
        wv = weights_from_sticks([0.999999])
        assert wv.w[0] == pytest.approx(0.999999)
        assert wv.tail_mass == pytest.approx(1e-6, rel=1e-6)

    def test_hand_evaluated_product(self):
        # w1 = 0.3, w2 = 0.6*0.7, w3 = 0.2*0.7*0.4; tail = 0.7*0.4*0.8
        wv = weights_from_sticks([0.3, 0.6, 0.2])
        np.testing.assert_allclose(wv.w, [0.3, 0.42, 0.056])
        assert wv.tail_mass == pytest.approx(0.224)

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            weights_from_sticks([0.5, 1.0])
        with pytest.raises(ValueError):
            weights_from_sticks([0.0])

    def test_identity_on_random_sticks(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            z = rng.uniform(1e-6, 1 - 1e-6, size=rng.integers(1, 40))
            wv = weights_from_sticks(z)
            assert np.all(wv.w >= 0)
            assert abs(wv.w.sum() + wv.tail_mass - 1.0) < 1e-12


class TestSliceSet:
    def test_known_prefix(self):
        # halving sticks realized far enough that tail <= 0.2
        wv = weights_from_sticks([0.5] * 4)
        assert wv.tail_mass <= 0.2
        np.testing.assert_array_equal(slice_set(wv, 0.2), [0, 1])

    def test_empty_set_is_legal(self):
        wv = weights_from_sticks([0.5] * 10)
        assert slice_set(wv, 0.6).size == 0

    def test_insufficient_extension_rejected(self):
        wv = weights_from_sticks([0.5])
        with pytest.raises(ValueError, match="tail"):
            slice_set(wv, 0.2)

    def test_matches_brute_force_filter(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            z = rng.uniform(0.05, 0.95, size=30)
            wv = weights_from_sticks(z)
            u = rng.uniform(max(wv.tail_mass, 1e-9), 1.0)
            got = slice_set(wv, u)
            expected = [k for k in range(len(z)) if u < wv.w[k]]
            np.testing.assert_array_equal(got, expected)


class TestTruncationIndex:
    def test_hand_cumulative_sum(self):
        # cumsum(0.5, 0.75, 0.875) crosses 0.8 at N=3
        n, _ = truncation_index(np.array([0.5, 0.5, 0.5, 0.5]), 0.2, 1.0, np.random.default_rng(0))
        assert n == 3

    def test_single_term(self):
        n, _ = truncation_index(np.array([0.5]), 0.6, 1.0, np.random.default_rng(0))
        assert n == 1

    def test_u_near_one_needs_one_stick(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            n, _ = truncation_index(np.empty(0), 1 - 1e-12, 1.0, rng)
            assert n == 1

    def test_extension_preserves_prefix(self):
        rng = np.random.default_rng(4)
        z0 = rng.uniform(0.1, 0.9, size=3)
        n, z = truncation_index(z0, 1e-4, 1.0, rng)
        assert n >= 3 or z.size == z0.size
        np.testing.assert_array_equal(z[:3], z0)
        # crossing really happens at n and not before
        cp = np.cumprod(1 - z)
        assert cp[n - 1] < 1e-4
        assert np.all(cp[: n - 1] >= 1e-4)

    def test_cap_reported(self):
        # with c = 1 the tail shrinks like e^-N, far above 1e-300 at N = 100
        rng = np.random.default_rng(5)
        with pytest.raises(TruncationLimitError):
            truncation_index(np.empty(0), 1e-300, 1.0, rng, cap=100)

    def test_poisson_mean(self):
        # N - 1 is Poisson with mean c * log(1/u*)
        rng = np.random.default_rng(6)
        c, u_star = 1.0, 0.05
        draws = np.array(
            [truncation_index(np.empty(0), u_star, c, rng)[0] for _ in range(10_000)]
        )
        target = c * math.log(1.0 / u_star)
        se = draws.std(ddof=1) / math.sqrt(draws.size)
        assert abs((draws.mean() - 1.0) - target) < 3 * se


def test_cap_constant_is_large():
    assert STICK_CAP >= 10**6
