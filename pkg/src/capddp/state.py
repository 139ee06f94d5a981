"""Shared MCMC state: atoms, stick matrix, selection probabilities, latents.

Index conventions are 0-based throughout: group labels and mixture
selectors live in {0, ..., m-1}, component indices d in {0, ..., N*-1}.
Pairs (j, l) with j <= l are stored once; reads through the transposed
index hit the same storage.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import Dataset, ModelConfig, Variant, validate_config
from .kernel import PriorP0
from .sticks import stick_weights


class AtomTable:
    """Ordered list of kernel atoms (mu_k, lam_k)."""

    def __init__(self, mu, lam):
        self.mu = np.asarray(mu, dtype=float)
        self.lam = np.asarray(lam, dtype=float)
        if self.mu.shape != self.lam.shape:
            raise ValueError("mu and lam must have equal length")
        if np.any(self.lam <= 0):
            raise ValueError("atom precisions must be positive")

    def __len__(self):
        return self.mu.size

    @classmethod
    def from_prior(cls, n, prior, rng):
        mu, lam = prior.sample(n, rng)
        return cls(mu, lam)

    def extend(self, extra, prior, rng):
        mu, lam = prior.sample(extra, rng)
        self.mu = np.concatenate([self.mu, mu])
        self.lam = np.concatenate([self.lam, lam])

    def resize(self, n, prior, rng):
        """Truncate to n atoms, or extend with prior draws to reach n."""
        if n <= len(self):
            self.mu = self.mu[:n]
            self.lam = self.lam[:n]
        else:
            self.extend(n - len(self), prior, rng)


class StickMatrix:
    """Stick fractions and weights for every pair (j, l), j <= l.

    Rows of ``z`` are ordered (0,0), (0,1), ..., (0,m-1), (1,1), ...;
    ``pair_index(j, l)`` maps either orientation to the stored row, so
    writes through (j, l) are visible at (l, j) by construction.
    """

    def __init__(self, m, z):
        self.m = int(m)
        self.pair_list = [(j, l) for j in range(m) for l in range(j, m)]
        self._lookup = np.empty((m, m), dtype=int)
        for q, (j, l) in enumerate(self.pair_list):
            self._lookup[j, l] = q
            self._lookup[l, j] = q
        self.z = np.asarray(z, dtype=float)
        if self.z.shape[0] != len(self.pair_list):
            raise ValueError("z must have m(m+1)/2 rows")
        self.recompute()

    @classmethod
    def from_prior(cls, m, n, c, rng):
        n_pairs = m * (m + 1) // 2
        return cls(m, rng.beta(1.0, c, size=(n_pairs, n)))

    @property
    def n_pairs(self):
        return len(self.pair_list)

    @property
    def n_star(self):
        return self.z.shape[1]

    @property
    def pair_lookup(self):
        return self._lookup

    def pair_index(self, j, l):
        return int(self._lookup[j, l])

    def recompute(self):
        """Refresh cached weights and tails after mutating ``z``."""
        self.w, self.tail = stick_weights(self.z)

    def replace(self, z_new):
        self.z = np.asarray(z_new, dtype=float)
        self.recompute()

    def weights(self, j, l):
        return self.w[self._lookup[j, l]]


@dataclass
class GibbsState:
    """Everything one sweep reads and writes.

    ``x`` and the latent arrays (``u``, ``d``, ``delta``) are flat over all
    observations in group-major order; ``group_slices[j]`` selects group j.
    ``atoms`` holds one table under CAPDDP, one per pair under PDDP.

    Single-writer: a sweep mutates exactly one state with its own generator.
    Run independent chains on independent states; read-only snapshots (for
    distance or trace computation) can be shared freely.
    """

    cfg: ModelConfig
    dataset: Dataset
    x: np.ndarray
    groups: np.ndarray
    group_slices: list
    sticks: StickMatrix
    atoms: list
    p: np.ndarray
    u: np.ndarray
    d: np.ndarray
    delta: np.ndarray
    sweep_count: int = 0
    prior: PriorP0 = field(default=None)

    def __post_init__(self):
        if self.prior is None:
            self.prior = PriorP0(self.cfg.s, self.cfg.eps)

    @property
    def m(self) -> int:
        return self.cfg.m

    @property
    def n_obs(self) -> int:
        return self.x.size

    @property
    def m_max(self) -> int:
        """Largest occupied component index plus one (prefix length)."""
        return int(self.d.max()) + 1

    @property
    def n_star(self) -> int:
        return self.sticks.n_star

    def atom_table_for_pair(self, q: int) -> AtomTable:
        if self.cfg.variant is Variant.CAPDDP:
            return self.atoms[0]
        return self.atoms[q]

    def selected_pair(self):
        """Stored pair row index chosen by each observation's selector."""
        return self.sticks.pair_lookup[self.groups, self.delta]

    def selected_weight(self):
        return self.sticks.w[self.selected_pair(), self.d]

    def validate(self, atol: float = 1e-12) -> None:
        """Raise if any structural invariant is violated."""
        if np.any(self.p < 0):
            raise AssertionError("negative selection probability")
        if np.max(np.abs(self.p.sum(axis=1) - 1.0)) > atol:
            raise AssertionError("selection probability rows must sum to 1")
        z = self.sticks.z
        if np.any(z <= 0) or np.any(z >= 1):
            raise AssertionError("stick fractions must lie in (0, 1)")
        gap = np.abs(1.0 - self.sticks.w.sum(axis=1) - self.sticks.tail)
        if np.max(gap) > atol:
            raise AssertionError("stick tail identity violated: %.3g" % np.max(gap))
        if self.d.min() < 0 or self.d.max() >= self.n_star:
            raise AssertionError("component index out of range")
        for table in self.atoms:
            if len(table) != self.n_star:
                raise AssertionError("atom table length != N*")
        if self.delta.min() < 0 or self.delta.max() >= self.m:
            raise AssertionError("mixture selector out of range")
        if np.any(self.u >= self.selected_weight()):
            raise AssertionError("slice variable >= selected weight")
        if np.any(self.u < 0):
            raise AssertionError("negative slice variable")


def init_state(cfg: ModelConfig, data: Dataset, rng) -> GibbsState:
    """Build a valid starting state.

    Selectors start on the own idiosyncratic row (delta_ji = j) and each
    group's components come from quantile-binning its values into at most
    five clusters, which spreads initial occupancy so the first sweep's
    full conditionals are informative. Everything else is drawn from the
    prior at a truncation just covering the occupied prefix.
    """
    cfg = validate_config(cfg)
    if data.m != cfg.m:
        raise ValueError("dataset has %d groups, config expects %d" % (data.m, cfg.m))
    x, groups = data.concatenated()
    sizes = data.sizes
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    group_slices = [slice(int(offsets[j]), int(offsets[j + 1])) for j in range(cfg.m)]

    d = np.empty(x.size, dtype=int)
    for j, sl in enumerate(group_slices):
        xj = x[sl]
        n_bins = min(5, xj.size)
        edges = np.quantile(xj, np.arange(1, n_bins) / n_bins)
        d[sl] = np.searchsorted(edges, xj, side="right")
    delta = groups.copy()

    prior = PriorP0(cfg.s, cfg.eps)
    n0 = int(d.max()) + 1
    sticks = StickMatrix.from_prior(cfg.m, n0, cfg.c, rng)
    n_tables = 1 if cfg.variant is Variant.CAPDDP else sticks.n_pairs
    atoms = [AtomTable.from_prior(n0, prior, rng) for _ in range(n_tables)]

    p = np.vstack([rng.dirichlet(cfg.dirichlet_hyper[j]) for j in range(cfg.m)])

    state = GibbsState(
        cfg=cfg,
        dataset=data,
        x=x,
        groups=groups,
        group_slices=group_slices,
        sticks=sticks,
        atoms=atoms,
        p=p,
        u=np.zeros(x.size),
        d=d,
        delta=delta,
        prior=prior,
    )
    state.u = state.selected_weight() * rng.uniform(size=x.size)
    state.validate()
    return state
