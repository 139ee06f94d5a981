import math

import numpy as np
import pytest
from scipy.integrate import simpson

from capddp.kernel import (
    PriorP0,
    alpha_beta_mc,
    conditional_update_atom,
    cross_kernel_mass,
    kernel_density,
    sample_prior_atom,
    squared_kernel_mass,
)


class TestKernelDensity:
    def test_standard_normal_mode(self):
        assert kernel_density(0.0, 0.0, 1.0) == pytest.approx(0.3989422804014327)

    def test_mode_value_scales_with_precision(self):
        for lam in (0.1, 1.0, 4.0, 25.0):
            assert kernel_density(3.0, 3.0, lam) == pytest.approx(math.sqrt(lam / (2 * math.pi)))

    def test_hand_evaluated_point(self):
        # sqrt(4/2pi) * exp(-4*1/2) = 2/sqrt(2pi) * e^-2
        assert kernel_density(1.0, 0.0, 4.0) == pytest.approx(0.10798193302637613, rel=1e-12)

    def test_rejects_nonpositive_precision(self):
        with pytest.raises(ValueError):
            kernel_density(0.0, 0.0, 0.0)

    @pytest.mark.parametrize("lam", [0.1, 1.0, 10.0])
    def test_integrates_to_one(self, lam):
        sd = 1.0 / math.sqrt(lam)
        grid = np.linspace(-10 * sd, 10 * sd, 20001)
        total = simpson(kernel_density(grid, 0.0, lam), x=grid)
        assert total == pytest.approx(1.0, abs=1e-6)


class TestPriorSampling:
    def test_tight_mean_prior_concentrates(self):
        rng = np.random.default_rng(0)
        prior = PriorP0(s=1e8, eps=1.0)
        mu, _ = prior.sample(2000, rng)
        # sd = 1e-4, so |mu| < 1e-3 is a 10-sigma event per draw
        assert np.mean(np.abs(mu) < 1e-3) > 0.95

    def test_precision_mean_is_one(self):
        rng = np.random.default_rng(1)
        _, lam = PriorP0(s=1.0, eps=2.0).sample(100_000, rng)
        assert lam.mean() == pytest.approx(1.0, abs=0.02)

    def test_seeded_determinism(self):
        prior = PriorP0(s=0.5, eps=0.5)
        a = sample_prior_atom(prior, np.random.default_rng(42))
        b = sample_prior_atom(prior, np.random.default_rng(42))
        assert a == b

    def test_invalid_hyperparameters(self):
        with pytest.raises(ValueError):
            PriorP0(s=0.0, eps=1.0)


class TestConditionalUpdate:
    def test_empty_assignment_is_prior_draw(self):
        prior = PriorP0(s=2.0, eps=3.0)
        got = conditional_update_atom((5.0, 5.0), [], prior, np.random.default_rng(9))
        expected = sample_prior_atom(prior, np.random.default_rng(9))
        assert got == expected

    def test_flat_mean_prior_centers_on_data(self):
        # s -> 0, one observation at 5, lam currently 1: mu | lam ~ N(5, 1)
        rng = np.random.default_rng(2)
        prior = PriorP0(s=1e-12, eps=0.001)
        mus = np.array(
            [conditional_update_atom((0.0, 1.0), [5.0], prior, rng)[0] for _ in range(4000)]
        )
        assert mus.mean() == pytest.approx(5.0, abs=0.06)
        assert mus.std() == pytest.approx(1.0, abs=0.05)

    def test_flat_precision_prior_matches_residual_variance(self):
        # eps -> 0 and mu pinned at the sample mean: lam ~ Ga(n/2, n v / 2)
        rng = np.random.default_rng(3)
        data = rng.normal(2.0, 0.5, size=400)
        data = data - data.mean() + 2.0
        v = np.mean((data - 2.0) ** 2)
        prior = PriorP0(s=1e12, eps=1e-12)  # mean pinned to 0 by s; shift data instead
        centered = data - 2.0
        lams = np.array(
            [conditional_update_atom((0.0, 1.0), centered, prior, rng)[1] for _ in range(2000)]
        )
        assert lams.mean() == pytest.approx(1.0 / v, rel=0.05)

    def test_sufficient_statistics_pool_across_sources(self):
        # the update only sees the pooled sample, however it was assembled
        rng_a = np.random.default_rng(7)
        rng_b = np.random.default_rng(7)
        prior = PriorP0(s=0.5, eps=0.5)
        part1, part2 = [1.0, 2.0], [3.0, -1.0, 0.5]
        a = conditional_update_atom((0.3, 2.0), part1 + part2, prior, rng_a)
        b = conditional_update_atom((0.3, 2.0), np.array(part1 + part2), prior, rng_b)
        assert a == b

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            conditional_update_atom((0.0, 1.0), [np.nan], PriorP0(1.0, 1.0), np.random.default_rng(0))


class _FixedPrecision:
    """Degenerate prior with lambda pinned to 1; mu ~ N(0, 1/s)."""

    def __init__(self, s):
        self.s = s

    def sample(self, n, rng):
        return rng.normal(0.0, 1.0 / math.sqrt(self.s), size=n), np.ones(n)


class _PointMass:
    def sample(self, n, rng):
        rng.normal(size=n)  # keep the stream moving like a real prior
        return np.zeros(n), np.ones(n)


class TestAlphaBetaMC:
    def test_degenerate_precision_gives_exact_alpha(self):
        rng = np.random.default_rng(4)
        alpha, _, (se_a, _) = alpha_beta_mc(_FixedPrecision(1.0), 5000, rng)
        assert alpha == pytest.approx(1.0 / (2.0 * math.sqrt(math.pi)), abs=1e-12)
        assert se_a == pytest.approx(0.0, abs=1e-12)

    def test_point_mass_atoms_cancel(self):
        rng = np.random.default_rng(5)
        alpha, beta, _ = alpha_beta_mc(_PointMass(), 5000, rng)
        assert alpha == pytest.approx(beta, abs=1e-12)
        assert alpha - beta == pytest.approx(0.0, abs=1e-12)

    def test_diffuse_means_kill_cross_term(self):
        rng = np.random.default_rng(6)
        alpha, beta, _ = alpha_beta_mc(_FixedPrecision(1e-8), 20_000, rng)
        assert beta < 1e-3
        assert alpha - beta == pytest.approx(alpha, rel=0.01)

    def test_gap_positive_for_nondegenerate_prior(self):
        rng = np.random.default_rng(7)
        alpha, beta, (se_a, se_b) = alpha_beta_mc(PriorP0(s=1.0, eps=2.0), 50_000, rng)
        assert alpha - beta > -3.0 * math.hypot(se_a, se_b)
        assert alpha - beta > 0

    def test_small_sample_rejected(self):
        with pytest.raises(ValueError):
            alpha_beta_mc(PriorP0(1.0, 1.0), 10, np.random.default_rng(0))


class TestClosedFormOverlaps:
    def test_squared_mass_standard_normal(self):
        assert squared_kernel_mass(1.0) == pytest.approx(0.28209479177387814)

    def test_cross_mass_matches_quadrature(self):
        rng = np.random.default_rng(8)
        for _ in range(10):
            mu_a, mu_b = rng.normal(0, 2, size=2)
            lam_a, lam_b = rng.uniform(0.2, 5.0, size=2)
            grid = np.linspace(min(mu_a, mu_b) - 12, max(mu_a, mu_b) + 12, 8001)
            quad = simpson(
                kernel_density(grid, mu_a, lam_a) * kernel_density(grid, mu_b, lam_b), x=grid
            )
            assert cross_kernel_mass(mu_a, lam_a, mu_b, lam_b) == pytest.approx(quad, abs=1e-8)
