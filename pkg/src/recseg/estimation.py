"""Rate updates and the alternating fit loop."""
from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import (LambdaTensor, LevelMapping, Model, Partition, Segmentation, TemporalGraph, block_counts,
                   edge_levels, level_durations, model_loglik, pair_matrix)
from .grouping import find_groups
from .segmentation import find_segments

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FitConfig:
    R: int
    K: int
    H: int
    theta: float = 1e-3
    eta: float = 1e-3
    max_iters: int = 100
    tol: float = 1e-7
    seed: int = 0
    restarts: int = 5
    lambda_init_range: tuple[float, float] = (0.5, 1.5)
    engine: str = "smawk"
    floor: float = 0.0

    def __post_init__(self):
        if self.R < 1:
            raise ValueError("R must be at least 1")
        if not 1 <= self.H <= self.K:
            raise ValueError(f"need 1 <= H <= K, got H={self.H}, K={self.K}")
        if self.theta < 0 or self.eta < 0:
            raise ValueError("theta and eta must be non-negative")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1 or self.restarts < 1:
            raise ValueError("max_iters and restarts must be at least 1")
        lo, hi = self.lambda_init_range
        if not 0 < lo <= hi:
            raise ValueError("lambda_init_range must satisfy 0 < lo <= hi")
        if self.engine not in ("smawk", "naive", "smawk-py"):
            raise ValueError(f"unknown engine {self.engine!r}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda_init_range"] = list(self.lambda_init_range)
        return d


@dataclass
class FitTrace:
    seed: int
    steps: list[tuple[str, float]] = field(default_factory=list)
    iterations: int = 0
    wall_time: float = 0.0

    def record(self, kind: str, loglik: float) -> None:
        self.steps.append((kind, loglik))

    @property
    def logliks(self) -> list[float]:
        return [ll for _, ll in self.steps]


def update_lambda(G: TemporalGraph, P: Partition, T: Segmentation, g: LevelMapping,
                  theta: float = 0.0, eta: float = 0.0, floor: float = 0.0) -> LambdaTensor:
    """Smoothed per-block MLE ``(count + theta) / (pairs * duration + eta)``.

    Blocks without exposure (no node pairs or an unused level) get
    ``theta / eta`` when ``eta > 0`` and 0 otherwise.  ``floor`` is a lower
    bound applied last.
    """
    counts = block_counts(G, P.assign, P.R, edge_levels(T, g), g.H)
    exposure = pair_matrix(P.sizes)[:, :, None] * level_durations(T, g)[None, None, :]
    num = counts + theta
    den = exposure + eta
    with np.errstate(divide="ignore", invalid="ignore"):
        rates = np.where(den > 0, num / den, 0.0)
    if floor > 0:
        rates = np.maximum(rates, floor)
    return LambdaTensor(rates)


def random_init(G: TemporalGraph, cfg: FitConfig, rng: np.random.Generator) -> tuple[Partition, LambdaTensor]:
    P = Partition(rng.integers(0, cfg.R, size=G.n), cfg.R)
    base = G.m / (G.n * (G.n - 1) / 2 * G.duration)
    lo, hi = cfg.lambda_init_range
    L = LambdaTensor.from_upper(rng.uniform(lo, hi, size=(cfg.R, cfg.R, cfg.H)) * base)
    return P, L


def _converged(prev: float, cur: float, tol: float) -> bool:
    if not np.isfinite(cur) or not np.isfinite(prev):
        return False
    return abs(cur - prev) < tol * max(1.0, abs(cur))


def fit(G: TemporalGraph, cfg: FitConfig, seed: int | None = None) -> tuple[Model, FitTrace]:
    """Alternate groups, rates and segmentation from a random start."""
    seed = cfg.seed if seed is None else seed
    if G.duration <= 0:
        raise ValueError("degenerate time window: zero duration")
    rng = np.random.default_rng(seed)
    trace = FitTrace(seed)
    start = time.perf_counter()

    def lam_of(P, T, g):
        return update_lambda(G, P, T, g, cfg.theta, cfg.eta, cfg.floor)

    P, L = random_init(G, cfg, rng)
    T, g, _ = find_segments(G, P, L, cfg.K, cfg.H, engine=cfg.engine)
    trace.record("segments", model_loglik(G, P, T, g, L))
    L = lam_of(P, T, g)
    ll = model_loglik(G, P, T, g, L)
    trace.record("lambda", ll)

    converged = False
    it = 0
    while it < cfg.max_iters:
        it += 1
        prev = ll
        P = find_groups(G, P, L, T, g)
        trace.record("groups", model_loglik(G, P, T, g, L))
        L = lam_of(P, T, g)
        trace.record("lambda", model_loglik(G, P, T, g, L))
        T, g, _ = find_segments(G, P, L, cfg.K, cfg.H, engine=cfg.engine)
        trace.record("segments", model_loglik(G, P, T, g, L))
        L = lam_of(P, T, g)
        ll = model_loglik(G, P, T, g, L)
        trace.record("lambda", ll)
        if _converged(prev, ll, cfg.tol):
            converged = True
            break

    trace.iterations = it
    trace.wall_time = time.perf_counter() - start
    log.debug("seed %d: loglik %.6f after %d iterations", seed, ll, it)
    return Model.build(G, P, T, g, L, iterations=it, converged=converged), trace


def _threads(restarts: int) -> int:
    cap = os.environ.get("RECSEG_THREADS")
    if cap:
        return max(1, min(restarts, int(cap)))
    return max(1, min(restarts, os.cpu_count() or 1))


def fit_restarts(G: TemporalGraph, cfg: FitConfig) -> tuple[Model, list[FitTrace]]:
    """Best of ``cfg.restarts`` fits seeded ``seed, seed + 1, ...``; ties go to the lowest index."""
    seeds = [cfg.seed + i for i in range(cfg.restarts)]
    workers = _threads(cfg.restarts)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda s: fit(G, cfg, s), seeds))
    else:
        results = [fit(G, cfg, s) for s in seeds]
    best = 0
    for i, (model, _) in enumerate(results):
        if model.loglik > results[best][0].loglik:
            best = i
    return results[best][0], [tr for _, tr in results]
