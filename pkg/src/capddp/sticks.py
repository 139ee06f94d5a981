"""Stick-breaking arithmetic: weights, slice sets, truncation, prior extension.

Weights follow w_1 = z_1, w_k = z_k * prod_{r<k} (1 - z_r), so the mass not
covered by the first N weights is exactly prod_{k<=N} (1 - z_k). That product
identity is what makes slice truncation cheap: the smallest prefix whose
cumulative weight exceeds 1 - u is the first index where the running product
of (1 - z_k) drops below u.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Growth guard: a pathologically small slice minimum turns a hang into a
# reportable error instead.
STICK_CAP = 1_000_000

_EXTEND_BLOCK = 16


class TruncationLimitError(RuntimeError):
    """Stick extension exceeded the hard cap."""


@dataclass
class WeightVector:
    """Realized prefix of an infinite stick-breaking weight sequence."""

    w: np.ndarray
    tail_mass: float

    def __len__(self):
        return self.w.size


def stick_weights(z: np.ndarray):
    """Weights and tail mass from stick fractions, along the last axis.

    Returns ``(w, tail)`` where ``w`` has the shape of ``z`` and ``tail``
    drops the last axis.
    """
    z = np.asarray(z, dtype=float)
    cp = np.cumprod(1.0 - z, axis=-1)
    w = np.empty_like(z)
    w[..., 0] = z[..., 0]
    w[..., 1:] = z[..., 1:] * cp[..., :-1]
    return w, cp[..., -1]


def weights_from_sticks(z) -> WeightVector:
    """Build a WeightVector from stick fractions z_k in (0, 1)."""
    z = np.asarray(z, dtype=float)
    if z.ndim != 1 or z.size == 0:
        raise ValueError("z must be a non-empty 1-d array")
    if np.any(z <= 0.0) or np.any(z >= 1.0):
        raise ValueError("stick fractions must lie strictly in (0, 1)")
    w, tail = stick_weights(z)
    return WeightVector(w=w, tail_mass=float(tail))


def slice_set(wv: WeightVector, u: float) -> np.ndarray:
    """Indices k with u < w_k, in increasing order (0-based).

    The caller must have extended the realization until the tail mass is
    at most ``u`` (see :func:`truncation_index`); otherwise an index beyond
    the realized prefix could still qualify and the set would be incomplete.
    An empty result is a legal value.
    """
    if not 0.0 < u < 1.0:
        raise ValueError("u must lie in (0, 1)")
    if wv.tail_mass > u:
        raise ValueError(
            "tail mass %.3g exceeds u=%.3g: realization too short for a "
            "complete slice set" % (wv.tail_mass, u)
        )
    return np.flatnonzero(wv.w > u)


def truncation_index(z, u_star: float, c: float, rng, cap: int = STICK_CAP):
    """Smallest N with sum_{k<=N} w_k > 1 - u_star, extending z as needed.

    ``z`` is an existing (possibly empty) 1-d array of stick fractions; new
    fractions are drawn from beta(1, c) when the realized prefix does not
    yet cross the threshold. Returns ``(n, z_out)`` with ``z_out`` the
    possibly extended stick array (never shortened).
    """
    if not 0.0 < u_star < 1.0:
        raise ValueError("u_star must lie in (0, 1)")
    z = np.asarray(z, dtype=float)
    if z.size:
        cp = np.cumprod(1.0 - z)
        hit = np.flatnonzero(cp < u_star)
        if hit.size:
            return int(hit[0]) + 1, z
        prod = cp[-1]
    else:
        prod = 1.0
    pieces = [z]
    n = z.size
    while True:
        block = rng.beta(1.0, c, size=_EXTEND_BLOCK)
        cp = prod * np.cumprod(1.0 - block)
        hit = np.flatnonzero(cp < u_star)
        if hit.size:
            take = int(hit[0]) + 1
            pieces.append(block[:take])
            return n + take, np.concatenate(pieces)
        pieces.append(block)
        n += _EXTEND_BLOCK
        prod = cp[-1]
        if n > cap:
            raise TruncationLimitError(
                "stick extension passed %d entries without covering "
                "u*=%.3g (c=%.3g)" % (cap, u_star, c)
            )


def extend_to(state, n_star: int, rng) -> None:
    """Grow every stick row and atom table of ``state`` to length n_star.

    New stick fractions come from beta(1, c) and new atoms from the prior;
    a no-op when the state already has that length.
    """
    current = state.n_star
    if n_star < current:
        raise ValueError("extend_to cannot shrink (%d < %d)" % (n_star, current))
    if n_star == current:
        return
    if n_star > STICK_CAP:
        raise TruncationLimitError("requested truncation %d exceeds cap" % n_star)
    extra = n_star - current
    z_new = rng.beta(1.0, state.cfg.c, size=(state.sticks.n_pairs, extra))
    state.sticks.replace(np.concatenate([state.sticks.z, z_new], axis=1))
    for table in state.atoms:
        table.extend(extra, state.prior, rng)
