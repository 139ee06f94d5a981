"""Normal kernel K(x | mu, lambda), its prior, and conjugate updates.

The kernel is parameterized by precision: K(x|theta) = sqrt(lambda/2pi)
exp(-lambda (x-mu)^2 / 2). The base measure factorizes as
N(mu | 0, 1/s) * Gamma(lambda | eps, eps) with independent components,
which is what lets the occupied-atom update run as a short normal/gamma
Gibbs scan instead of a joint draw.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_LOG_2PI = np.log(2.0 * np.pi)

# Numerical floor for precisions; keeps sqrt(lambda) and 1/lambda finite.
LAMBDA_FLOOR = 1e-12


@dataclass(frozen=True)
class PriorP0:
    """Independent normal-gamma base measure for atoms (mu, lambda)."""

    s: float
    eps: float

    def __post_init__(self):
        if not (self.s > 0 and self.eps > 0):
            raise ValueError("PriorP0 requires s > 0 and eps > 0")

    def sample(self, n: int, rng):
        """Draw n atoms; returns (mu, lam) arrays."""
        mu = rng.normal(0.0, 1.0 / np.sqrt(self.s), size=n)
        lam = np.maximum(rng.gamma(self.eps, 1.0 / self.eps, size=n), LAMBDA_FLOOR)
        return mu, lam


def kernel_density(x, mu, lam):
    """Normal density with precision lam, vectorized over any argument."""
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0):
        raise ValueError("precision must be positive")
    return np.sqrt(lam / (2.0 * np.pi)) * np.exp(-0.5 * lam * (np.asarray(x) - mu) ** 2)


def log_kernel_matrix(mu, lam, x):
    """log K(x_i | mu_k, lam_k) for all atoms and points, shape (K, n)."""
    diff = x[None, :] - mu[:, None]
    return 0.5 * (np.log(lam)[:, None] - _LOG_2PI) - 0.5 * lam[:, None] * diff * diff


def sample_prior_atom(prior: PriorP0, rng):
    """One fresh draw (mu, lam) from the base measure."""
    mu, lam = prior.sample(1, rng)
    return float(mu[0]), float(lam[0])


def conditional_update_atom(theta, assigned, prior: PriorP0, rng):
    """Resample an atom given the observations currently assigned to it.

    With no assignments this is a fresh prior draw. Otherwise one scan of
    the two conditionals:

        mu | lam ~ N( lam * sum(x) / (s + lam n), 1 / (s + lam n) )
        lam | mu ~ Gamma( eps + n/2, rate = eps + sum((x - mu)^2) / 2 )

    which is a valid Gibbs step for the conditional proportional to
    p0(theta) * prod K(x_i | theta).
    """
    assigned = np.asarray(assigned, dtype=float)
    if assigned.size and not np.all(np.isfinite(assigned)):
        raise ValueError("assigned data must be finite")
    n = assigned.size
    if n == 0:
        return sample_prior_atom(prior, rng)
    _, lam = theta
    prec = prior.s + lam * n
    mu_new = rng.normal(lam * assigned.sum() / prec, 1.0 / np.sqrt(prec))
    ss = np.sum((assigned - mu_new) ** 2)
    lam_new = rng.gamma(prior.eps + 0.5 * n, 1.0 / (prior.eps + 0.5 * ss))
    return float(mu_new), float(max(lam_new, LAMBDA_FLOOR))


def squared_kernel_mass(lam):
    """Closed form of the self-overlap integral of the kernel: sqrt(lam)/(2 sqrt(pi))."""
    return np.sqrt(np.asarray(lam, dtype=float)) / (2.0 * np.sqrt(np.pi))


def cross_kernel_mass(mu_a, lam_a, mu_b, lam_b):
    """Closed form of the overlap integral of two normal kernels.

    Equals the normal density of mu_a - mu_b at 0 with variance
    1/lam_a + 1/lam_b.
    """
    var = 1.0 / np.asarray(lam_a, dtype=float) + 1.0 / np.asarray(lam_b, dtype=float)
    diff = np.asarray(mu_a, dtype=float) - np.asarray(mu_b)
    return np.exp(-0.5 * diff * diff / var) / np.sqrt(2.0 * np.pi * var)


def alpha_beta_mc(prior, n_mc: int, rng):
    """Monte Carlo estimates of the two kernel-overlap constants.

    ``alpha`` is the expected self-overlap integral of a kernel whose atom
    is drawn from the prior; ``beta`` the expected overlap of two kernels
    with independent prior atoms. Under the mixture-weight identity, the
    conditional expected L2 distance between two random densities with
    common atoms is (alpha - beta) times the squared weight difference.

    ``prior`` is anything exposing ``sample(n, rng) -> (mu, lam)``.
    Returns ``(alpha_hat, beta_hat, (se_alpha, se_beta))``.
    """
    if n_mc < 1000:
        raise ValueError("n_mc must be at least 1000")
    _, lam = prior.sample(n_mc, rng)
    a_draws = squared_kernel_mass(lam)
    mu_j, lam_j = prior.sample(n_mc, rng)
    mu_k, lam_k = prior.sample(n_mc, rng)
    b_draws = cross_kernel_mass(mu_j, lam_j, mu_k, lam_k)
    alpha = float(a_draws.mean())
    beta = float(b_draws.mean())
    se_a = float(a_draws.std(ddof=1) / np.sqrt(n_mc))
    se_b = float(b_draws.std(ddof=1) / np.sqrt(n_mc))
    return alpha, beta, (se_a, se_b)
