"""Optimal K-segmentation and level mapping for fixed groups and rates.

The dynamic program runs over runs of equal timestamps (the admissible
breakpoints).  For each k and level h the best start of the last segment is
found with SMAWK on the lazily evaluated score

    x(s, e; h) = o[s, k-1] + f[e, h] - f[s, h],

which is totally monotone in (s, e).  ``find_segments_naive`` solves the same
program with the quadratic double loop and serves as a reference.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._jit import jit
from .core import (NEG_INF, LambdaTensor, LevelMapping, Partition, Segmentation, TemporalGraph,
                   pair_matrix)
from .smawk import MatrixOracle, column_argmax


class SegmentationError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PrefixScores:
    """Log-likelihood of ``[a, t(e)]`` under each level, for every edge.

    ``f[e, h] = beta[e, h] - alpha[h] * (t(e) - a)`` where ``beta`` is the
    running sum of ``log lambda`` over edges and ``alpha[h]`` the total rate of
    level ``h`` over all node pairs.  A zero rate at an observed edge makes
    ``f`` fall to ``-inf``; ``zeros`` counts such edges so that differences
    ``f[e] - f[s]`` stay well defined.
    """

    f: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    zeros: np.ndarray
    anchor: float
    t: np.ndarray

    def segment_loglik(self, s: int, e: int, h: int) -> float:
        """Log-likelihood of the half-open segment (t(s), t(e)] under level h."""
        if self.zeros[e, h] > self.zeros[s, h]:
            return NEG_INF
        return float(self.beta[e, h] - self.beta[s, h] - self.alpha[h] * (self.t[e] - self.t[s]))


def precompute_prefix(G: TemporalGraph, P: Partition, L: LambdaTensor, H: int | None = None) -> PrefixScores:
    H = L.H if H is None else H
    rates = L.rates[:, :, :H]
    upper = np.triu(pair_matrix(P.sizes))
    alpha = np.einsum("ij,ijh->h", upper, rates)

    per_edge = rates[P.assign[G.src], P.assign[G.dst]]  # m x H
    zero = per_edge == 0.0
    logs = np.log(np.where(zero, 1.0, per_edge))
    beta = np.cumsum(logs, axis=0)
    zeros = np.cumsum(zero, axis=0, dtype=np.int64)
    a = G.window[0]
    f = beta - alpha[None, :] * (G.t - a)[:, None]
    f = np.where(zeros > 0, NEG_INF, f)
    return PrefixScores(f, alpha, beta, zeros, a, G.t)


def _run_scores(G: TemporalGraph, ps: PrefixScores):
    """Finite prefix scores and zero counts restricted to run ends.

    The last run is stretched to the window end so that the final segment
    pays for the trailing gap.
    """
    idx = G.run_end
    tau = G.t[idx].copy()
    tau[-1] = G.window[1]
    fin = ps.beta[idx] - ps.alpha[None, :] * (tau - ps.anchor)[:, None]
    zc = ps.zeros[idx]
    return np.ascontiguousarray(fin), np.ascontiguousarray(zc)


# --------------------------------------------------------------------------
# kernels


@jit
def _x(s, e, o, fin, zc):
    if s >= e or o[s] == -np.inf or zc[s] != zc[e]:
        return -np.inf
    return (o[s] - fin[s]) + fin[e]


@jit
def _smawk_dp(o, fin, zc, out, stack_buf, stack_val, pos):
    """Column argmax of x(s, e) = (o[s] - fin[s]) + fin[e] (s < e) via SMAWK.

    The row term is formed first so every column orders rows identically
    under rounding, which keeps the matrix exactly totally monotone.

    Iterative form of the recursion: level l works on the columns
    ``2**l - 1, 2**(l+1) - 1, ...`` and the rows surviving REDUCE at level
    l - 1.  ``stack_buf`` stores the surviving rows of every level back to back.
    """
    M = o.shape[0]
    # downward pass: REDUCE per level
    n_levels = 0
    offsets = np.empty(64, dtype=np.int64)
    sizes = np.empty(64, dtype=np.int64)
    offset = 0
    prev_off = -1
    prev_size = M
    step = 1
    while True:
        first = step - 1
        if first >= M:
            break
        ncols = (M - first + step - 1) // step
        top = 0
        for idx in range(prev_size):
            r = idx if prev_off < 0 else stack_buf[prev_off + idx]
            while top > 0:
                c = first + (top - 1) * step
                v = _x(r, c, o, fin, zc)
                if stack_val[offset + top - 1] < v:
                    top -= 1
                else:
                    break
            if top < ncols:
                stack_buf[offset + top] = r
                stack_val[offset + top] = _x(r, first + top * step, o, fin, zc)
                top += 1
        offsets[n_levels] = offset
        sizes[n_levels] = top
        n_levels += 1
        prev_off = offset
        prev_size = top
        offset += top
        step *= 2

    # upward pass: INTERPOLATE the even columns of each level
    for lv in range(n_levels - 1, -1, -1):
        step = 1 << lv
        first = step - 1
        ncols = (M - first + step - 1) // step
        off = offsets[lv]
        size = sizes[lv]
        for p in range(size):
            pos[stack_buf[off + p]] = p
        start = 0
        for ci in range(0, ncols, 2):
            c = first + ci * step
            if ci + 1 < ncols:
                stop = pos[out[first + (ci + 1) * step]]
            else:
                stop = size - 1
            best = stack_buf[off + start]
            bv = _x(best, c, o, fin, zc)
            for p in range(start + 1, stop + 1):
                r = stack_buf[off + p]
                v = _x(r, c, o, fin, zc)
                if v > bv:
                    best = r
                    bv = v
            out[c] = best
            start = stop


@jit
def _dp_smawk(fin, zc, K, first):
    M, H = fin.shape
    o = np.full((M, K), -np.inf)
    q = np.zeros((M, K), dtype=np.int64)
    r = np.zeros((M, K), dtype=np.int64)
    for e in range(M):
        best = -np.inf
        bh = 0
        for h in range(H):
            v = fin[e, h] if zc[e, h] == 0 and e >= first else -np.inf
            if v > best:
                best = v
                bh = h
        o[e, 0] = best
        r[e, 0] = bh
    z = np.zeros((H, M), dtype=np.int64)
    stack_buf = np.empty(2 * M + 2, dtype=np.int64)
    stack_val = np.empty(2 * M + 2)
    pos = np.zeros(M, dtype=np.int64)
    prev = np.empty(M)
    for k in range(1, K):
        for s in range(M):
            prev[s] = o[s, k - 1]
        for h in range(H):
            fh = np.ascontiguousarray(fin[:, h])
            zh = np.ascontiguousarray(zc[:, h])
            _smawk_dp(prev, fh, zh, z[h], stack_buf, stack_val, pos)
        for e in range(M):
            best = -np.inf
            bh = 0
            for h in range(H):
                v = _x(z[h, e], e, prev, fin[:, h], zc[:, h])
                if v > best:
                    best = v
                    bh = h
            o[e, k] = best
            r[e, k] = bh
            q[e, k] = z[bh, e]
    return o, q, r


@jit
def _dp_naive(fin, zc, K, first):
    M, H = fin.shape
    o = np.full((M, K), -np.inf)
    q = np.zeros((M, K), dtype=np.int64)
    r = np.zeros((M, K), dtype=np.int64)
    for e in range(M):
        best = -np.inf
        bh = 0
        for h in range(H):
            v = fin[e, h] if zc[e, h] == 0 and e >= first else -np.inf
            if v > best:
                best = v
                bh = h
        o[e, 0] = best
        r[e, 0] = bh
    for k in range(1, K):
        for e in range(M):
            best = -np.inf
            bh = 0
            bs = 0
            for h in range(H):
                hv = -np.inf
                hs = 0
                for s in range(e):
                    if o[s, k - 1] == -np.inf or zc[s, h] != zc[e, h]:
                        continue
                    v = (o[s, k - 1] - fin[s, h]) + fin[e, h]
                    if v > hv:
                        hv = v
                        hs = s
                if hv > best:
                    best = hv
                    bh = h
                    bs = hs
            o[e, k] = best
            r[e, k] = bh
            q[e, k] = bs
    return o, q, r


def _dp_smawk_py(fin, zc, K, first):
    """Same program driven by the generic closure-based SMAWK."""
    M, H = fin.shape
    o = np.full((M, K), NEG_INF)
    q = np.zeros((M, K), dtype=np.int64)
    r = np.zeros((M, K), dtype=np.int64)
    base = np.where(zc == 0, fin, NEG_INF)
    base[:first] = NEG_INF
    o[:, 0] = base.max(axis=1)
    r[:, 0] = base.argmax(axis=1)
    for k in range(1, K):
        prev = o[:, k - 1]
        vals = np.full((H, M), NEG_INF)
        z = np.zeros((H, M), dtype=np.int64)
        for h in range(H):
            fh, zh = fin[:, h], zc[:, h]

            def x(s, e, fh=fh, zh=zh):
                if s >= e or prev[s] == NEG_INF or zh[s] != zh[e]:
                    return NEG_INF
                return (prev[s] - fh[s]) + fh[e]

            z[h] = column_argmax(MatrixOracle(x, M, M))
            vals[h] = [x(int(z[h, e]), e) for e in range(M)]
        r[:, k] = vals.argmax(axis=0)
        o[:, k] = vals.max(axis=0)
        q[:, k] = z[r[:, k], np.arange(M)]
    return o, q, r


_ENGINES = {"smawk": _dp_smawk, "naive": _dp_naive, "smawk-py": _dp_smawk_py}


def dp_tables(G: TemporalGraph, P: Partition, L: LambdaTensor, K: int, H: int | None = None,
              engine: str = "smawk"):
    """Fill the o, q, r tables (indexed by run) with the chosen engine."""
    H = L.H if H is None else H
    if K < 1:
        raise SegmentationError("K must be positive")
    admissible = G.breakpoints.size
    if K > admissible:
        raise SegmentationError(f"K too large for input: K={K} but only {admissible} admissible breakpoints "
                                f"(distinct timestamps after the window start)")
    if engine not in _ENGINES:
        raise ValueError(f"unknown engine {engine!r}")
    ps = precompute_prefix(G, P, L, H)
    fin, zc = _run_scores(G, ps)
    first = G.n_runs - admissible  # 1 when the first run sits on the window start
    return _ENGINES[engine](fin, zc, K, first)


def find_segments(G: TemporalGraph, P: Partition, L: LambdaTensor, K: int, H: int | None = None,
                  engine: str = "smawk") -> tuple[Segmentation, LevelMapping, float]:
    H = L.H if H is None else H
    o, q, r = dp_tables(G, P, L, K, H, engine)
    M = G.n_runs
    e = M - 1
    runs = np.empty(K, dtype=np.int64)
    g = np.empty(K, dtype=np.int64)
    for k in range(K - 1, 0, -1):
        runs[k] = e
        g[k] = r[e, k]
        e = int(q[e, k])
    runs[0] = e
    g[0] = r[e, 0]
    T = Segmentation.from_boundaries(G, G.run_end[runs])
    return T, LevelMapping(g, H), float(o[M - 1, K - 1])


def find_segments_naive(G: TemporalGraph, P: Partition, L: LambdaTensor, K: int, H: int | None = None):
    return find_segments(G, P, L, K, H, engine="naive")
