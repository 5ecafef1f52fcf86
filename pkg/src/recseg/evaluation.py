"""Synthetic ground truth, comparison metrics and experiment drivers."""
from __future__ import annotations

import dataclasses
import statistics
import time
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import LambdaTensor, LevelMapping, Model, Partition, Segmentation, TemporalGraph
from .estimation import FitConfig, fit, fit_restarts


@dataclass(frozen=True, eq=False)
class GroundTruth:
    graph: TemporalGraph
    model: Model
    gen_params: dict


def _draw(n, R, K, H, rate_lo, rate_hi, seg_duration, rng):
    assign = rng.integers(0, R, size=n)
    if np.bincount(assign, minlength=R).min() == 0:
        return None
    rates = LambdaTensor.from_upper(rng.uniform(rate_lo, rate_hi, size=(R, R, H)))
    g = np.concatenate([np.arange(H), rng.integers(0, H, size=K - H)])

    u, w = np.triu_indices(n, 1)
    lam = rates.rates[assign[u], assign[w]][:, g]  # pairs x K
    counts = rng.poisson(lam * seg_duration)
    total = int(counts.sum())
    if total == 0:
        return None
    flat = counts.ravel()
    pair_idx = np.repeat(np.repeat(np.arange(u.size), K), flat)
    seg_idx = np.repeat(np.tile(np.arange(K), u.size), flat)
    t = seg_idx * seg_duration + rng.uniform(0.0, seg_duration, size=total)

    G = TemporalGraph.from_arrays(u[pair_idx], w[pair_idx], t, n=n)
    if G.breakpoints.size < K:
        return None
    try:
        T = Segmentation.from_times(G, [k * seg_duration for k in range(1, K)])
    except ValueError:
        return None
    return G, Model.build(G, Partition(assign, R), T, LevelMapping(g, H), rates)


def generate(n: int, R: int, K: int, H: int, rate_lo: float, rate_hi: float, seg_duration: float,
             seed: int = 0, max_retries: int = 10) -> GroundTruth:
    """Sample a temporal SBM with recurring segment levels.

    Groups are i.i.d. uniform, rates i.i.d. Uniform(rate_lo, rate_hi), the
    first H segments get levels 0..H-1 and the rest uniform levels.  Every
    node pair draws a Poisson count per segment and places its events
    uniformly inside that segment.  True cut points sit at multiples of
    ``seg_duration`` and are snapped to the last edge at or before them.
    """
    if not 1 <= H <= K:
        raise ValueError("need 1 <= H <= K")
    if R < 1 or n < 2 or n < R:
        raise ValueError("need n >= max(2, R) and R >= 1")
    if not 0 < rate_lo <= rate_hi:
        raise ValueError("need 0 < rate_lo <= rate_hi")
    if seg_duration <= 0:
        raise ValueError("seg_duration must be positive")
    for offset in range(max_retries + 1):
        drawn = _draw(n, R, K, H, rate_lo, rate_hi, seg_duration, np.random.default_rng(seed + offset))
        if drawn is not None:
            G, model = drawn
            params = dict(n=n, R=R, K=K, H=H, rate_lo=rate_lo, rate_hi=rate_hi,
                          seg_duration=seg_duration, seed=seed, seed_used=seed + offset)
            return GroundTruth(G, model, params)
    raise RuntimeError(f"could not draw a well-posed instance in {max_retries + 1} attempts")


def _labels(P) -> np.ndarray:
    return P.assign if isinstance(P, Partition) else np.asarray(P)


def rand_index(P1, P2) -> float:
    a, b = _labels(P1), _labels(P2)
    if a.size != b.size:
        raise ValueError("partitions cover different node counts")
    n = a.size
    if n < 2:
        raise ValueError("Rand index needs at least two nodes")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)

    def pairs(x):
        return int(np.sum(x * (x - 1) // 2))

    total = n * (n - 1) // 2
    together_both = pairs(table)
    agree = total + 2 * together_both - pairs(table.sum(axis=1)) - pairs(table.sum(axis=0))
    return agree / total


def intensity_trace(M: Model, i: int, j: int, n_points: int = 1000) -> np.ndarray:
    """Rate between groups i and j on a uniform grid over the window; rows are (t, lambda)."""
    lo = M.segmentation.intervals[0].lo
    ends = np.array([T.hi for T in M.segmentation.intervals])
    grid = np.linspace(lo, ends[-1], n_points)
    seg = np.minimum(np.searchsorted(ends, grid, side="left"), M.K - 1)
    return np.column_stack([grid, M.lam.rates[i, j, M.levels.g[seg]]])


def match_groups(fitted: Partition, truth: Partition) -> np.ndarray:
    """perm[a] = true group best matched to fitted group a (maximum overlap)."""
    table = np.zeros((fitted.R, truth.R), dtype=np.int64)
    np.add.at(table, (fitted.assign, truth.assign), 1)
    rows, cols = linear_sum_assignment(-table)
    perm = np.empty(fitted.R, dtype=np.int64)
    perm[rows] = cols
    return perm


def trace_gap(fitted: Model, truth: Model, n_points: int = 1000) -> float:
    """Largest |fitted rate - true rate| over all group pairs and grid times."""
    if fitted.R != truth.R:
        raise ValueError("models have different group counts")
    inv = np.argsort(match_groups(fitted.partition, truth.partition))
    gap = 0.0
    for i in range(truth.R):
        for j in range(i, truth.R):
            true_tr = intensity_trace(truth, i, j, n_points)
            fit_tr = intensity_trace(fitted, inv[i], inv[j], n_points)
            gap = max(gap, float(np.max(np.abs(true_tr[:, 1] - fit_tr[:, 1]))))
    return gap


@dataclass
class RecoveryReport:
    rand_index: float
    norm_ll_fit: float
    norm_ll_truth: float
    max_gap: float
    iterations: int
    seconds: float
    model: Model


def recover(gt: GroundTruth, cfg: FitConfig, n_points: int = 1000) -> RecoveryReport:
    start = time.perf_counter()
    model, _ = fit_restarts(gt.graph, cfg)
    secs = time.perf_counter() - start
    return RecoveryReport(
        rand_index=rand_index(model.partition, gt.model.partition),
        norm_ll_fit=model.normalized_loglik,
        norm_ll_truth=gt.model.normalized_loglik,
        max_gap=trace_gap(model, gt.model, n_points),
        iterations=model.iterations,
        seconds=secs,
        model=model,
    )


def sweep_h(G: TemporalGraph, R: int, K: int, H_list: Iterable[int], cfg: FitConfig) -> list[tuple[int, float]]:
    """Best-of-restarts normalized log-likelihood for each number of levels."""
    curve = []
    for h in H_list:
        model, _ = fit_restarts(G, dataclasses.replace(cfg, R=R, K=K, H=h))
        curve.append((h, model.normalized_loglik))
    return curve


def subsample(G: TemporalGraph, m: int, rng: np.random.Generator) -> TemporalGraph:
    keep = np.sort(rng.choice(G.m, size=m, replace=False))
    return TemporalGraph.from_arrays(G.src[keep], G.dst[keep], G.t[keep], n=G.n, labels=G.labels)


def bench_graphs(sizes: Sequence[int], seed: int = 0, n: int = 30, R: int = 3, K: int = 3,
                 rate_lo: float = 0.05, rate_hi: float = 0.7) -> list[TemporalGraph]:
    """Edge subsamples of one synthetic network, one per requested size."""
    need = max(sizes)
    mean_rate = (rate_lo + rate_hi) / 2
    seg = 1.3 * need / (n * (n - 1) / 2 * K * mean_rate)
    while True:
        base = generate(n, R, K, K, rate_lo, rate_hi, seg, seed=seed).graph
        if base.m >= need:
            break
        seg *= 1.5
    rng = np.random.default_rng(seed)
    return [subsample(base, m, rng) for m in sizes]


def bench_scaling(sizes: Sequence[int], cfg: FitConfig, engines: Sequence[str] = ("smawk", "naive"),
                  repeats: int = 3, seed: int = 0) -> list[tuple[str, int, float]]:
    """Wall-clock seconds of one fit (max_iters as configured) per engine and size.

    Each entry is the median of ``repeats`` runs; ingestion and JIT warm-up
    are excluded.
    """
    sizes = sorted(set(sizes))
    graphs = bench_graphs(sizes, seed=seed)
    rows = []
    for engine in engines:
        ecfg = dataclasses.replace(cfg, engine=engine)
        fit(subsample(graphs[0], min(200, graphs[0].m), np.random.default_rng(0)), ecfg)
        for G in graphs:
            times = []
            for _ in range(repeats):
                start = time.perf_counter()
                fit(G, ecfg)
                times.append(time.perf_counter() - start)
            rows.append((engine, G.m, statistics.median(times)))
    return rows


def loglog_slope(ms: Sequence[float], secs: Sequence[float]) -> float:
    x = np.log(np.asarray(ms, dtype=float))
    y = np.log(np.asarray(secs, dtype=float))
    return float(np.polyfit(x, y, 1)[0])

