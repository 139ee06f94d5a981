"""Distances between the random measures and densities, via weights only.

Everything here exploits the common-atoms structure: once two random
measures share their atom sequence, the total variation distance is an
absolute weight difference, and the conditional expected L2 distance
between the mixed densities collapses to a squared weight difference
times a constant that depends only on the kernel prior.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from .config import Variant


@dataclass
class CompositeWeights:
    """Per-group mixed weights w_jk = sum_l p_jl w_jlk, plus leftover tails."""

    w: np.ndarray      # (m, n_star)
    tail: np.ndarray   # (m,)


def composite_weights(state) -> CompositeWeights:
    """Mix each group's pair weights by its selection probabilities.

    Only meaningful with common atoms; a PDDP state is refused because its
    pair measures do not share support, so the composite weight vector does
    not identify a measure one can compare across groups.
    """
    if state.cfg.variant is not Variant.CAPDDP:
        raise ValueError("composite weights require a common-atoms (CAPDDP) state")
    m = state.m
    w = np.empty((m, state.n_star))
    tail = np.empty(m)
    for j in range(m):
        rows = state.sticks.pair_lookup[j]
        w[j] = state.p[j] @ state.sticks.w[rows]
        tail[j] = state.p[j] @ state.sticks.tail[rows]
    return CompositeWeights(w=w, tail=tail)


def l2_conditional(wa, wb, scale=None) -> float:
    """Sum of squared weight differences, optionally times (alpha - beta).

    This is the conditional expected L2 distance between the two mixed
    densities given their weights, up to the kernel constant; the default
    is the unscaled sum, matching the proportional convention used when
    reporting posterior traces.
    """
    wa = np.asarray(wa, dtype=float)
    wb = np.asarray(wb, dtype=float)
    if wa.shape != wb.shape:
        raise ValueError("weight vectors must have equal length")
    total = float(np.sum((wa - wb) ** 2))
    return total if scale is None else scale * total


def tv_distance(wa, wb, tail_a=None, tail_b=None) -> float:
    """Total variation distance between two discrete measures on common atoms.

    Unrealized mass is lumped into one pseudo-atom per measure, which is
    exact here because unrealized atoms coincide across measures. Half the
    absolute difference sum attains the supremum over index sets.
    """
    wa = np.asarray(wa, dtype=float)
    wb = np.asarray(wb, dtype=float)
    if wa.shape != wb.shape:
        raise ValueError("weight vectors must have equal length")
    if tail_a is None:
        tail_a = max(0.0, 1.0 - wa.sum())
    if tail_b is None:
        tail_b = max(0.0, 1.0 - wb.sum())
    return 0.5 * (float(np.abs(wa - wb).sum()) + abs(tail_a - tail_b))


def pairwise_l2(state, scale=None):
    """Conditional expected L2 for every group pair j < i of a CAPDDP state."""
    cw = composite_weights(state)
    m = state.m
    return {
        (j, i): l2_conditional(cw.w[j], cw.w[i], scale=scale)
        for j in range(m)
        for i in range(j + 1, m)
    }


def pairwise_tv(state):
    """Total variation for every group pair j < i of a CAPDDP state."""
    cw = composite_weights(state)
    m = state.m
    return {
        (j, i): tv_distance(cw.w[j], cw.w[i], cw.tail[j], cw.tail[i])
        for j in range(m)
        for i in range(j + 1, m)
    }


@dataclass
class QuadratureResult:
    value: float
    error_estimate: float


def exact_l2_quadrature(f, g, grid) -> QuadratureResult:
    """Squared-difference integral of two densities on a fixed grid.

    Simpson's rule on the full grid; the reported error estimate is the
    difference against the half-resolution evaluation, so the caller can
    tell when the grid is too coarse for the requested tolerance.
    """
    grid = np.asarray(grid, dtype=float)
    diff2 = (np.asarray(f(grid), dtype=float) - np.asarray(g(grid), dtype=float)) ** 2
    full = float(simpson(diff2, x=grid))
    coarse = float(simpson(diff2[::2], x=grid[::2]))
    return QuadratureResult(value=full, error_estimate=abs(full - coarse))


def kernel_l1_quadrature(theta_a, theta_b, n_grid: int = 4001) -> float:
    """L1 distance between two normal kernels by quadrature.

    The grid spans ten standard deviations beyond both means, which bounds
    the truncated tail mass far below the quadrature error.
    """
    mu_a, lam_a = theta_a
    mu_b, lam_b = theta_b
    sd = max(1.0 / np.sqrt(lam_a), 1.0 / np.sqrt(lam_b))
    lo = min(mu_a, mu_b) - 10.0 * sd
    hi = max(mu_a, mu_b) + 10.0 * sd
    grid = np.linspace(lo, hi, n_grid)
    from .kernel import kernel_density

    gap = np.abs(kernel_density(grid, mu_a, lam_a) - kernel_density(grid, mu_b, lam_b))
    return float(simpson(gap, x=grid))


def approximate_with_common_atoms(target, pool):
    """Project a mixture onto a fixed atom pool by weight reassignment.

    ``target`` is a list of ((mu, lam), weight) components summing to one;
    ``pool`` a list of atoms. Components are matched injectively to pool
    atoms, greedily by descending weight, each taking the L1-nearest
    remaining atom. Returns ``(q, bound)``: the weights placed on the pool
    and the triangle-inequality bound sum(w_j * eps_j) on the L1 distance
    between the target mixture and its projection.
    """
    if not pool:
        raise ValueError("atom pool is empty")
    weights = np.array([w for _, w in target], dtype=float)
    if abs(weights.sum() - 1.0) > 1e-9:
        raise ValueError("target weights must sum to 1")
    if len(target) > len(pool):
        raise ValueError(
            "pool holds %d atoms but the target has %d components; an "
            "injective matching needs at least as many atoms" % (len(pool), len(target))
        )
    q = np.zeros(len(pool))
    bound = 0.0
    free = list(range(len(pool)))
    for idx in np.argsort(-weights):
        psi, w_j = target[idx]
        dists = [kernel_l1_quadrature(psi, pool[t]) for t in free]
        best = int(np.argmin(dists))
        q[free[best]] = w_j
        bound += w_j * dists[best]
        free.pop(best)
    return q, float(bound)


def running_average(values) -> np.ndarray:
    """Prefix means of a series."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("empty series")
    return np.cumsum(values) / np.arange(1, values.size + 1)


@dataclass
class DistanceTrace:
    """Per-sweep pairwise distance values with incremental running means."""

    pairs: list
    l2: list = field(default_factory=list)
    tv: list = field(default_factory=list)
    n_star: list = field(default_factory=list)

    def append(self, l2_by_pair, tv_by_pair, n_star):
        self.l2.append([l2_by_pair[p] for p in self.pairs])
        self.tv.append([tv_by_pair[p] for p in self.pairs])
        self.n_star.append(n_star)

    def __len__(self):
        return len(self.l2)

    def l2_matrix(self):
        return np.asarray(self.l2, dtype=float)

    def tv_matrix(self):
        return np.asarray(self.tv, dtype=float)

    def l2_running_mean(self):
        mat = self.l2_matrix()
        return np.cumsum(mat, axis=0) / np.arange(1, mat.shape[0] + 1)[:, None]

    def tv_running_mean(self):
        mat = self.tv_matrix()
        return np.cumsum(mat, axis=0) / np.arange(1, mat.shape[0] + 1)[:, None]
