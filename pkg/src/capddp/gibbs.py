"""The Gibbs sweep: sticks, atoms, slices, truncation, allocations, selection.

One sweep runs the six steps in a fixed order (A through F) for
reproducibility. The CAPDDP and PDDP variants share every step; the only
difference is which atom table a pair resolves to, so the variant enters
only through ``GibbsState.atom_table_for_pair``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .config import Variant
from .kernel import LAMBDA_FLOOR, log_kernel_matrix
from .sticks import extend_to, truncation_index

_Z_LO = 1e-300
_Z_HI = float(np.nextafter(1.0, 0.0))


class ZeroMassError(RuntimeError):
    """A block-allocation categorical lost all its mass; the state is corrupt."""


@dataclass(frozen=True)
class StickCounts:
    """Indicator sums feeding one stick fraction's beta full conditional."""

    eq: int
    gt: int


@dataclass
class SweepReport:
    m_max: int
    n_star: int
    n_jl: np.ndarray
    n_clusters: int
    seconds: float


def _pair_mask(state, j, l):
    """Observations whose (group, selector) attaches them to pair (j, l)."""
    g, dl = state.groups, state.delta
    if j == l:
        return (g == j) & (dl == j)
    return ((g == j) & (dl == l)) | ((g == l) & (dl == j))


def stick_counts(state, j, l, k) -> StickCounts:
    """Counts of observations sitting exactly at / strictly above stick k.

    For the diagonal these run over group j's observations with selector j;
    off the diagonal both orientations pool, mirroring the shared storage
    of w_jl and w_lj.
    """
    d_sel = state.d[_pair_mask(state, j, l)]
    return StickCounts(eq=int(np.sum(d_sel == k)), gt=int(np.sum(d_sel > k)))


def _count_arrays(state, j, l, m_max):
    d_sel = state.d[_pair_mask(state, j, l)]
    eq = np.bincount(d_sel, minlength=m_max)[:m_max]
    gt = d_sel.size - np.cumsum(eq)
    return eq, gt


def step_a_sample_sticks(state, rng) -> None:
    """Resample every stick fraction with the slice variables integrated out.

    Occupied indices (k < m_max) get beta(1 + eq, c + gt) posteriors; the
    remainder of each stored row is refreshed from the beta(1, c) prior,
    which keeps entries beyond the occupied prefix exchangeable with
    unrealized ones.
    """
    m_max = state.m_max
    c = state.cfg.c
    z = state.sticks.z
    width = z.shape[1]
    for q, (j, l) in enumerate(state.sticks.pair_list):
        eq, gt = _count_arrays(state, j, l, m_max)
        z[q, :m_max] = rng.beta(1.0 + eq, c + gt)
        if width > m_max:
            z[q, m_max:] = rng.beta(1.0, c, size=width - m_max)
    np.clip(z, _Z_LO, _Z_HI, out=z)
    state.sticks.recompute()


def _resample_table(table, d_sel, x_sel, m_max, prior, rng):
    """Vectorized conjugate scan for one atom table's occupied prefix."""
    n_k = np.bincount(d_sel, minlength=m_max)[:m_max].astype(float)
    sum_k = np.bincount(d_sel, weights=x_sel, minlength=m_max)[:m_max]
    lam = table.lam[:m_max]
    var_mu = 1.0 / (prior.s + lam * n_k)
    mu_new = lam * sum_k * var_mu + np.sqrt(var_mu) * rng.standard_normal(m_max)
    resid = x_sel - mu_new[d_sel]
    ss = np.bincount(d_sel, weights=resid * resid, minlength=m_max)[:m_max]
    lam_new = rng.gamma(prior.eps + 0.5 * n_k, 1.0 / (prior.eps + 0.5 * ss))
    table.mu[:m_max] = mu_new
    table.lam[:m_max] = np.maximum(lam_new, LAMBDA_FLOOR)
    rest = len(table) - m_max
    if rest > 0:
        table.mu[m_max:], table.lam[m_max:] = prior.sample(rest, rng)


def step_b_sample_atoms(state, rng) -> None:
    """Resample atoms from p0(theta) times the kernels of assigned data.

    Under CAPDDP the single table pools observations across all groups by
    component index; under PDDP each pair's table sees only observations
    attached to that pair. Atoms beyond the occupied prefix are prior
    draws either way.
    """
    m_max = state.m_max
    if state.cfg.variant is Variant.CAPDDP:
        _resample_table(state.atoms[0], state.d, state.x, m_max, state.prior, rng)
        return
    for q, (j, l) in enumerate(state.sticks.pair_list):
        mask = _pair_mask(state, j, l)
        _resample_table(state.atoms[q], state.d[mask], state.x[mask], m_max, state.prior, rng)


def step_c_sample_slices(state, rng) -> None:
    """u_ji ~ Uniform(0, w) at each observation's selected pair and component."""
    w_sel = state.selected_weight()
    if np.any(w_sel <= 0.0):
        raise ZeroMassError("selected stick weight is zero; state is corrupt")
    state.u = w_sel * rng.uniform(size=state.n_obs)


def step_d_truncate(state, rng) -> np.ndarray:
    """Fix the truncation level and realize sticks/atoms up to it.

    Every pair's threshold is the smallest slice variable seen by either
    of its groups; the pair's stick row is extended from the prior until
    its cumulative weight crosses 1 minus that threshold. The new global
    level N* is the largest crossing point, and all rows and atom tables
    are brought to exactly that length (prior draws beyond the occupied
    prefix are disposable, so shrinking is safe).
    """
    u_min = np.array([state.u[sl].min() for sl in state.group_slices])
    c = state.cfg.c
    n_pairs = state.sticks.n_pairs
    n_jl = np.empty(n_pairs, dtype=int)
    rows = []
    for q, (j, l) in enumerate(state.sticks.pair_list):
        u_star = u_min[j] if j == l else min(u_min[j], u_min[l])
        n_q, z_q = truncation_index(state.sticks.z[q], u_star, c, rng)
        n_jl[q] = n_q
        rows.append(z_q)
    n_star = int(n_jl.max())
    z_new = np.empty((n_pairs, n_star))
    for q, z_q in enumerate(rows):
        if z_q.size >= n_star:
            z_new[q] = z_q[:n_star]
        else:
            z_new[q] = np.concatenate(
                [z_q, rng.beta(1.0, c, size=n_star - z_q.size)]
            )
    np.clip(z_new, _Z_LO, _Z_HI, out=z_new)
    state.sticks.replace(z_new)
    for table in state.atoms:
        table.resize(n_star, state.prior, rng)
    if n_star < state.m_max:
        raise AssertionError("truncation dropped occupied components")
    return n_jl


def allocation_probabilities(state, j, i):
    """Joint block probabilities for observation i of group j.

    Returns a list of ((l, k), probability) over every selector row l and
    every component k in that row's slice set, normalized over the whole
    joint support. Raises ZeroMassError when the support carries no mass.
    """
    sl = state.group_slices[j]
    x = state.x[sl][i]
    u = state.u[sl][i]
    out = []
    logs = []
    for l in range(state.m):
        q = state.sticks.pair_index(j, l)
        table = state.atom_table_for_pair(q)
        ks = np.flatnonzero(state.sticks.w[q] > u)
        logp = np.log(state.p[j, l]) if state.p[j, l] > 0 else -np.inf
        for k in ks:
            lk = logp + 0.5 * (np.log(table.lam[k]) - np.log(2 * np.pi)) \
                - 0.5 * table.lam[k] * (x - table.mu[k]) ** 2
            out.append((l, int(k)))
            logs.append(lk)
    logs = np.asarray(logs)
    if logs.size == 0 or not np.isfinite(logs.max()):
        raise ZeroMassError(
            "observation (%d, %d): block allocation support carries no mass" % (j, i)
        )
    mass = np.exp(logs - logs.max())
    mass /= mass.sum()
    return list(zip(out, mass))


def step_e_sample_allocations(state, rng) -> None:
    """Block-sample (d_ji, delta_ji) from the joint slice-restricted support.

    The unnormalized mass of (l, k) is p_jl * K(x_ji | theta at (pair, k))
    whenever k lies in the slice set of row l; kernels are handled in log
    space with the per-observation maximum subtracted so distant atoms do
    not underflow the categorical.
    """
    n_star = state.n_star
    m = state.m
    w = state.sticks.w
    capddp = state.cfg.variant is Variant.CAPDDP
    with np.errstate(divide="ignore"):
        logp = np.log(state.p)
    for j, sl in enumerate(state.group_slices):
        x = state.x[sl]
        u = state.u[sl]
        n_g = x.size
        if capddp:
            table = state.atoms[0]
            log_k_shared = log_kernel_matrix(table.mu, table.lam, x)
        log_mass = np.full((m, n_star, n_g), -np.inf)
        for l in range(m):
            q = state.sticks.pair_index(j, l)
            if capddp:
                log_k = log_k_shared
            else:
                table = state.atoms[q]
                log_k = log_kernel_matrix(table.mu, table.lam, x)
            in_slice = w[q][:, None] > u[None, :]
            log_mass[l] = np.where(in_slice, logp[j, l] + log_k, -np.inf)
        flat = log_mass.reshape(m * n_star, n_g)
        top = flat.max(axis=0)
        if not np.all(np.isfinite(top)):
            i_bad = int(np.flatnonzero(~np.isfinite(top))[0])
            raise ZeroMassError(
                "observation (%d, %d): block allocation support carries no mass"
                % (j, i_bad)
            )
        mass = np.exp(flat - top)
        cum = np.cumsum(mass, axis=0)
        r = rng.uniform(size=n_g) * cum[-1]
        idx = np.minimum((cum < r).sum(axis=0), m * n_star - 1)
        l_new, d_new = np.divmod(idx, n_star)
        state.delta[sl] = l_new
        state.d[sl] = d_new


def step_f_sample_selection(state, rng) -> None:
    """Dirichlet update of each group's selection probabilities."""
    a = state.cfg.dirichlet_hyper
    for j, sl in enumerate(state.group_slices):
        counts = np.bincount(state.delta[sl], minlength=state.m)
        state.p[j] = rng.dirichlet(a[j] + counts)


def sweep(state, rng) -> SweepReport:
    """One full Gibbs sweep in the fixed order A, B, C, D, E, F."""
    t0 = time.perf_counter()
    step_a_sample_sticks(state, rng)
    step_b_sample_atoms(state, rng)
    step_c_sample_slices(state, rng)
    n_jl = step_d_truncate(state, rng)
    step_e_sample_allocations(state, rng)
    step_f_sample_selection(state, rng)
    state.sweep_count += 1
    return SweepReport(
        m_max=state.m_max,
        n_star=state.n_star,
        n_jl=n_jl,
        n_clusters=int(np.unique(state.d).size),
        seconds=time.perf_counter() - t0,
    )


def sweep_pddp(state, rng) -> SweepReport:
    """The uncommon-atoms sweep; identical skeleton, per-pair atom tables."""
    if state.cfg.variant is not Variant.PDDP:
        raise ValueError("sweep_pddp requires a PDDP state")
    return sweep(state, rng)


def _categorical_with_tail(state, q, rng):
    """Draw a component index from pair q's full weight sequence.

    Extends the realization from the prior whenever the drawn uniform
    lands past the realized mass, so the infinite mixture is sampled
    exactly.
    """
    v = rng.uniform()
    cum = np.cumsum(state.sticks.w[q])
    while v >= cum[-1]:
        extend_to(state, state.n_star + 16, rng)
        cum = np.cumsum(state.sticks.w[q])
    return int(np.searchsorted(cum, v, side="right"))


def resimulate_observations(state, rng) -> None:
    """Redraw (delta, d, x, u) from the model given the current parameters.

    This is the data half of a successive-conditional (joint-distribution)
    correctness check: alternating this with ``sweep`` leaves the
    prior-times-likelihood joint invariant, so parameter marginals must
    match their priors.
    """
    for j, sl in enumerate(state.group_slices):
        for i in range(sl.stop - sl.start):
            l = int(np.searchsorted(np.cumsum(state.p[j]), rng.uniform(), side="right"))
            l = min(l, state.m - 1)
            q = state.sticks.pair_index(j, l)
            k = _categorical_with_tail(state, q, rng)
            table = state.atom_table_for_pair(q)
            pos = sl.start + i
            state.delta[pos] = l
            state.d[pos] = k
            state.x[pos] = rng.normal(table.mu[k], 1.0 / np.sqrt(table.lam[k]))
            state.u[pos] = state.sticks.w[q, k] * rng.uniform()
