"""Model configuration and dataset containers."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class Variant(str, enum.Enum):
    """Which prior the sampler targets: shared atoms or per-pair atoms."""

    CAPDDP = "capddp"
    PDDP = "pddp"


@dataclass(frozen=True)
class ModelConfig:
    """Hyperparameters shared by both sampler variants.

    Parameters
    ----------
    m : int
        Number of density groups, at least 2.
    c : float
        Concentration of every stick-breaking process (beta(1, c) sticks).
    s : float
        Prior precision of atom means, mu ~ N(0, 1/s).
    eps : float
        Shape and rate of the gamma prior on atom precisions.
    dirichlet_hyper : ndarray of shape (m, m)
        Row j holds the Dirichlet parameters of the selection
        probabilities (p_j1, ..., p_jm). All entries positive.
    seed : int
        Seed for the run-owning random generator.
    variant : Variant
        CAPDDP (one shared atom table) or PDDP (one table per pair).
    """

    m: int
    c: float = 1.0
    s: float = 0.001
    eps: float = 0.001
    dirichlet_hyper: np.ndarray = None
    seed: int = 0
    variant: Variant = Variant.CAPDDP

    def __post_init__(self):
        if self.dirichlet_hyper is None:
            object.__setattr__(self, "dirichlet_hyper", np.ones((self.m, self.m)))
        else:
            object.__setattr__(
                self, "dirichlet_hyper", np.asarray(self.dirichlet_hyper, dtype=float)
            )
        if not isinstance(self.variant, Variant):
            object.__setattr__(self, "variant", Variant(str(self.variant).lower()))


def validate_config(cfg: ModelConfig) -> ModelConfig:
    """Check positivity and shape constraints; return ``cfg`` unchanged.

    Raises ``ValueError`` naming the first violated constraint.
    """
    if cfg.m < 2:
        raise ValueError("m must be >= 2 (got %d)" % cfg.m)
    if not cfg.c > 0:
        raise ValueError("c must be positive (got %r)" % cfg.c)
    if not cfg.s > 0:
        raise ValueError("s must be positive (got %r)" % cfg.s)
    if not cfg.eps > 0:
        raise ValueError("eps must be positive (got %r)" % cfg.eps)
    a = cfg.dirichlet_hyper
    if a.shape != (cfg.m, cfg.m):
        raise ValueError(
            "dirichlet_hyper must have shape (%d, %d), got %s" % (cfg.m, cfg.m, a.shape)
        )
    if not np.all(a > 0):
        j, l = np.argwhere(~(a > 0))[0]
        raise ValueError("dirichlet_hyper[%d, %d] must be positive" % (j, l))
    if cfg.seed < 0:
        raise ValueError("seed must be a nonnegative integer")
    return cfg


@dataclass
class Dataset:
    """Observations for ``m`` groups, group j holding ``n_j`` real values."""

    groups: list = field(default_factory=list)

    def __post_init__(self):
        self.groups = [np.asarray(g, dtype=float).ravel() for g in self.groups]
        for j, g in enumerate(self.groups):
            if g.size < 1:
                raise ValueError("group %d is empty" % j)
            if not np.all(np.isfinite(g)):
                raise ValueError("group %d contains non-finite values" % j)

    @property
    def m(self) -> int:
        return len(self.groups)

    @property
    def sizes(self) -> tuple:
        return tuple(g.size for g in self.groups)

    @property
    def n_total(self) -> int:
        return sum(self.sizes)

    def concatenated(self):
        """Return (values, group labels) as flat arrays, group-major order."""
        x = np.concatenate(self.groups)
        labels = np.repeat(np.arange(self.m), [g.size for g in self.groups])
        return x, labels
