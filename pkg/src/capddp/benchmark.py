"""Sweep-cost comparison between the shared-atoms and per-pair-atoms samplers.

The per-pair variant must realize and resample m(m+1)/2 atom tables where
the shared variant keeps one, so its sweep cost carries an extra term
proportional to (m(m+1)/2 - 1) * N* * sum(n_j). The benchmark times both
variants on identical data and seeds so the truncation traces line up.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .config import Dataset, ModelConfig, Variant, validate_config
from .gibbs import sweep
from .state import init_state


@dataclass
class VariantTiming:
    variant: str
    seconds: np.ndarray
    n_star: np.ndarray
    median_seconds: float
    mean_seconds: float


@dataclass
class BenchmarkReport:
    m: int
    sweeps: int
    warmup: int
    n_total: int
    predicted_multiplier: float
    capddp: VariantTiming = None
    pddp: VariantTiming = None

    @property
    def median_delta_seconds(self) -> float:
        return self.pddp.median_seconds - self.capddp.median_seconds

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "sweeps": self.sweeps,
            "warmup": self.warmup,
            "n_total": self.n_total,
            "predicted_multiplier": self.predicted_multiplier,
            "median_delta_seconds": self.median_delta_seconds,
            "capddp": {
                "median_seconds": self.capddp.median_seconds,
                "mean_seconds": self.capddp.mean_seconds,
                "n_star_mean": float(self.capddp.n_star.mean()),
            },
            "pddp": {
                "median_seconds": self.pddp.median_seconds,
                "mean_seconds": self.pddp.mean_seconds,
                "n_star_mean": float(self.pddp.n_star.mean()),
            },
        }


def _time_variant(cfg: ModelConfig, data: Dataset, sweeps: int, warmup: int):
    rng = np.random.default_rng(cfg.seed)
    state = init_state(cfg, data, rng)
    seconds = np.empty(sweeps)
    n_star = np.empty(sweeps, dtype=int)
    for t in range(sweeps):
        t0 = time.perf_counter()
        report = sweep(state, rng)
        seconds[t] = time.perf_counter() - t0
        n_star[t] = report.n_star
    kept = seconds[warmup:]
    return VariantTiming(
        variant=cfg.variant.value,
        seconds=seconds,
        n_star=n_star,
        median_seconds=float(np.median(kept)),
        mean_seconds=float(kept.mean()),
    )


def benchmark_delta_t(cfg: ModelConfig, data: Dataset, sweeps: int) -> BenchmarkReport:
    """Time both variants on the same data and seed.

    Medians exclude a short warmup so allocator and cache effects do not
    leak into the comparison. The report carries the per-sweep truncation
    traces for regressing the cost difference against its predicted
    scaling.
    """
    cfg = validate_config(cfg)
    if sweeps < 2:
        raise ValueError("need at least two sweeps to benchmark")
    warmup = min(10, sweeps // 10)
    report = BenchmarkReport(
        m=cfg.m,
        sweeps=sweeps,
        warmup=warmup,
        n_total=data.n_total,
        predicted_multiplier=cfg.m * (cfg.m + 1) / 2.0 - 1.0,
    )
    for variant in (Variant.CAPDDP, Variant.PDDP):
        vcfg = ModelConfig(
            m=cfg.m,
            c=cfg.c,
            s=cfg.s,
            eps=cfg.eps,
            dirichlet_hyper=cfg.dirichlet_hyper,
            seed=cfg.seed,
            variant=variant,
        )
        timing = _time_variant(vcfg, data, sweeps, warmup)
        if variant is Variant.CAPDDP:
            report.capddp = timing
        else:
            report.pddp = timing
    return report
