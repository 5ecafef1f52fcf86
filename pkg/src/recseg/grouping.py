"""Greedy node reassignment for fixed rates, segmentation and level mapping.

Moving node ``u`` from group ``b`` to ``a`` changes the log-likelihood by,
up to a term that does not depend on ``a``::

    sum_h  lam[b, a, h] d[h]
         + sum_j ( c[j, h] log lam[a, j, h] - |P_j| lam[a, j, h] d[h] )

where ``c[j, h]`` counts the edges between ``u`` and group ``j`` inside level
``h`` and ``d[h]`` is the total duration of level ``h``.  The non-count part
is kept per candidate group (``lamd[b, a] - expo[a]``) and patched in O(R) after each move,
and only the non-zero ``c`` entries are visited.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._jit import jit
from .core import (LambdaTensor, LevelMapping, Partition, Segmentation, TemporalGraph,
                   edge_levels, level_durations)


@dataclass(frozen=True, eq=False)
class LevelAggregates:
    d: np.ndarray
    seg_of_edge: np.ndarray
    level_of_edge: np.ndarray

    @classmethod
    def build(cls, T: Segmentation, g: LevelMapping) -> "LevelAggregates":
        return cls(level_durations(T, g), T.segment_of_edges(), edge_levels(T, g))


def neighbour_counts(u: int, G: TemporalGraph, P: Partition, agg: LevelAggregates, H: int) -> np.ndarray:
    """c[j, h]: edges between ``u`` and group ``j`` within level ``h``."""
    pos = G.neighbors(u)
    other = np.where(G.src[pos] == u, G.dst[pos], G.src[pos])
    c = np.zeros((P.R, H), dtype=np.int64)
    np.add.at(c, (P.assign[other], agg.level_of_edge[pos]), 1)
    return c


def node_gains(u: int, G: TemporalGraph, P: Partition, L: LambdaTensor, agg: LevelAggregates) -> np.ndarray:
    """Gain of moving ``u`` into each group, up to a common constant.

    Candidates whose rate is zero on a block where ``u`` has edges get ``-inf``.
    """
    lam = L.rates
    d = agg.d
    b = P.assign[u]
    sizes = P.sizes
    c = neighbour_counts(u, G, P, agg, L.H)
    with np.errstate(divide="ignore"):
        loglam = np.log(lam)
    gains = np.empty(P.R)
    for a in range(P.R):
        stay = np.sum(lam[b, a] * d)
        expo = np.sum(sizes[:, None] * lam[a] * d[None, :])
        nz = c > 0
        obs = np.sum(c[nz] * loglam[a][nz]) if nz.any() else 0.0
        gains[a] = stay + obs - expo
    return gains


@jit
def _sweep(n, R, H, assign, sizes, lam, loglam, d, indptr, incident, src, dst, lvl):
    # lamd[a, j] = sum_h lam[a, j, h] d[h]
    lamd = np.zeros((R, R))
    for a in range(R):
        for j in range(R):
            acc = 0.0
            for h in range(H):
                acc += lam[a, j, h] * d[h]
            lamd[a, j] = acc
    # expo[a] = sum_j |P_j| lamd[a, j]
    expo = np.zeros(R)
    for a in range(R):
        for j in range(R):
            expo[a] += sizes[j] * lamd[a, j]

    c = np.zeros((R, H), dtype=np.int64)
    nz_j = np.empty(R * H, dtype=np.int64)
    nz_h = np.empty(R * H, dtype=np.int64)
    touched = 0
    for u in range(n):
        b = assign[u]
        nnz = 0
        for p in range(indptr[u], indptr[u + 1]):
            e = incident[p]
            w = dst[e] if src[e] == u else src[e]
            j = assign[w]
            h = lvl[e]
            if c[j, h] == 0:
                nz_j[nnz] = j
                nz_h[nnz] = h
                nnz += 1
            c[j, h] += 1
            touched += 1
        best = -np.inf
        best_a = b
        for a in range(R):
            x = lamd[b, a] - expo[a]
            for q in range(nnz):
                j = nz_j[q]
                h = nz_h[q]
                x += c[j, h] * loglam[a, j, h]
            if x > best:
                best = x
                best_a = a
        for q in range(nnz):
            c[nz_j[q], nz_h[q]] = 0
        if best_a != b:
            assign[u] = best_a
            sizes[b] -= 1
            sizes[best_a] += 1
            for a in range(R):
                expo[a] += lamd[a, best_a] - lamd[a, b]
    return touched


def sweep_groups(G: TemporalGraph, P: Partition, L: LambdaTensor, T: Segmentation,
                 g: LevelMapping) -> tuple[Partition, int]:
    """One pass over the nodes in index order; also returns the number of c-increments."""
    agg = LevelAggregates.build(T, g)
    assign = P.assign.copy()
    sizes = P.sizes.astype(np.int64)
    lam = np.ascontiguousarray(L.rates)
    with np.errstate(divide="ignore"):
        loglam = np.log(lam)
    touched = _sweep(G.n, P.R, L.H, assign, sizes, lam, loglam, agg.d.astype(np.float64),
                     G.indptr, G.incident, G.src, G.dst, agg.level_of_edge.astype(np.int64))
    return Partition(assign, P.R), int(touched)


def find_groups(G: TemporalGraph, P: Partition, L: LambdaTensor, T: Segmentation, g: LevelMapping) -> Partition:
    if P.R == 1:
        return P
    return sweep_groups(G, P, L, T, g)[0]

