"""Domain types, edge-list ingestion and the Poisson likelihood primitives.

Every other module builds on the arrays held by :class:`TemporalGraph` and on
:func:`block_counts` / :func:`model_loglik` defined here.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

NEG_INF = float("-inf")


class IngestError(ValueError):
    """Raised for malformed edge-list input."""


class DimensionError(ValueError):
    """Raised when model structures disagree on n, R, K or H."""


@dataclass(frozen=True)
class Edge:
    u: int
    v: int
    t: float

    def __post_init__(self):
        if self.u == self.v:
            raise ValueError(f"self-loop on node {self.u}")


@dataclass(frozen=True)
class TimeInterval:
    lo: float
    hi: float
    closed_lo: bool = False

    @property
    def duration(self) -> float:
        return self.hi - self.lo

    def __contains__(self, t: float) -> bool:
        if self.closed_lo:
            return self.lo <= t <= self.hi
        return self.lo < t <= self.hi


@dataclass(frozen=True, eq=False)
class TemporalGraph:
    """Immutable, chronologically sorted temporal multigraph.

    Edges are kept as three parallel arrays ``src``, ``dst`` and ``t`` sorted by
    ``(t, u, v, input position)``.  ``indptr``/``incident`` is a CSR index of
    the edge positions incident to each node.  ``run_end`` holds the position
    of the last edge of every run of equal timestamps; these are the only
    admissible segment breakpoints.
    """

    n: int
    src: np.ndarray
    dst: np.ndarray
    t: np.ndarray
    window: tuple[float, float]
    labels: tuple[str, ...]
    indptr: np.ndarray = field(repr=False)
    incident: np.ndarray = field(repr=False)
    run_end: np.ndarray = field(repr=False)

    @classmethod
    def from_arrays(cls, src, dst, t, n: Optional[int] = None, labels: Optional[Sequence[str]] = None,
                    window: Optional[tuple[float, float]] = None) -> "TemporalGraph":
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        t = np.asarray(t, dtype=np.float64)
        if not (src.shape == dst.shape == t.shape) or src.ndim != 1:
            raise ValueError("src, dst and t must be 1-d arrays of equal length")
        if src.size == 0:
            raise ValueError("a temporal graph needs at least one edge")
        if np.any(src == dst):
            raise ValueError("self-loops are not allowed")
        if not np.all(np.isfinite(t)):
            raise ValueError("timestamps must be finite")
        if n is None:
            n = int(max(src.max(), dst.max())) + 1
        if src.min() < 0 or max(src.max(), dst.max()) >= n:
            raise ValueError("node index out of range")
        if n < 2:
            raise ValueError("a temporal graph needs at least two nodes")
        if labels is None:
            labels = tuple(str(i) for i in range(n))
        labels = tuple(labels)
        if len(labels) != n:
            raise ValueError("labels must have one entry per node")

        order = np.lexsort((np.arange(src.size), dst, src, t))
        src, dst, t = src[order], dst[order], t[order]
        lo, hi = float(t[0]), float(t[-1])
        if window is None:
            window = (lo, hi)
        else:
            window = (float(window[0]), float(window[1]))
            if window[0] > lo or window[1] < hi:
                raise ValueError(f"window {window} does not cover the edges [{lo}, {hi}]")

        m = src.size
        ends = np.concatenate([src, dst])
        pos = np.concatenate([np.arange(m), np.arange(m)])
        by_node = np.argsort(ends, kind="stable")
        incident = pos[by_node]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(ends, minlength=n), out=indptr[1:])

        run_end = np.flatnonzero(np.append(t[1:] != t[:-1], True))

        for arr in (src, dst, t, incident, indptr, run_end):
            arr.setflags(write=False)
        return cls(int(n), src, dst, t, window, labels, indptr, incident, run_end)

    @property
    def m(self) -> int:
        return int(self.src.size)

    @property
    def duration(self) -> float:
        return self.window[1] - self.window[0]

    @property
    def n_runs(self) -> int:
        return int(self.run_end.size)

    @property
    def breakpoints(self) -> np.ndarray:
        """Run ends that may close a segment.

        A run sitting exactly at the window start cannot end the first
        segment, since that segment would have zero duration.
        """
        keep = self.t[self.run_end] > self.window[0]
        keep[-1] = True
        return self.run_end[keep]

    def edges(self) -> list[Edge]:
        return [Edge(int(u), int(v), float(t)) for u, v, t in zip(self.src, self.dst, self.t)]

    def neighbors(self, u: int) -> np.ndarray:
        """Positions of the edges incident to ``u`` (the set N(u))."""
        return self.incident[self.indptr[u]:self.indptr[u + 1]]

    def index_of(self, label: str) -> int:
        return self.labels.index(label)


_SPLIT = {
    "csv": re.compile(r"\s*,\s*"),
    "whitespace": re.compile(r"\s+"),
}


def ingest(lines: Iterable[str], format: str = "auto",
           window: Optional[tuple[float, float]] = None) -> TemporalGraph:
    """Parse ``u v t`` records into a :class:`TemporalGraph`.

    Labels are opaque strings mapped to dense indices in order of first
    appearance.  ``format`` is ``"csv"``, ``"whitespace"`` or ``"auto"``
    (comma if the record contains one).  Lines starting with ``#`` and blank
    lines are skipped.
    """
    if format not in ("auto", "csv", "whitespace"):
        raise ValueError(f"unknown format {format!r}")
    index: dict[str, int] = {}
    src, dst, ts = [], [], []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fmt = format
        if fmt == "auto":
            fmt = "csv" if "," in line else "whitespace"
        parts = _SPLIT[fmt].split(line)
        if len(parts) != 3:
            raise IngestError(f"line {lineno}: expected 3 fields, got {len(parts)}")
        a, b, tt = parts
        if a == b:
            raise IngestError(f"line {lineno}: self-loop on {a!r}")
        try:
            t = float(tt)
        except ValueError:
            raise IngestError(f"line {lineno}: cannot parse timestamp {tt!r}") from None
        if not math.isfinite(t):
            raise IngestError(f"line {lineno}: timestamp must be finite")
        for lab in (a, b):
            if lab not in index:
                index[lab] = len(index)
        src.append(index[a])
        dst.append(index[b])
        ts.append(t)
    if not src:
        raise IngestError("empty input: no edges")
    try:
        return TemporalGraph.from_arrays(src, dst, ts, n=len(index), labels=list(index), window=window)
    except ValueError as exc:
        raise IngestError(str(exc)) from None


def read_edges(path, format: str = "auto", window=None) -> TemporalGraph:
    with open(path) as fh:
        return ingest(fh, format=format, window=window)


def write_edges(G: TemporalGraph, path) -> None:
    with open(path, "w", newline="\n") as fh:
        for u, v, t in zip(G.src, G.dst, G.t):
            fh.write(f"{G.labels[u]} {G.labels[v]} {float(t)!r}\n")


# --------------------------------------------------------------------------
# structures


@dataclass(frozen=True, eq=False)
class Partition:
    assign: np.ndarray
    R: int

    def __post_init__(self):
        a = np.asarray(self.assign, dtype=np.int64)
        if a.ndim != 1:
            raise ValueError("assign must be 1-d")
        if self.R < 1:
            raise ValueError("R must be positive")
        if a.size and (a.min() < 0 or a.max() >= self.R):
            raise ValueError("group index out of range")
        object.__setattr__(self, "assign", a)

    @property
    def n(self) -> int:
        return int(self.assign.size)

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.assign, minlength=self.R)

    def __eq__(self, other):
        return (isinstance(other, Partition) and self.R == other.R
                and np.array_equal(self.assign, other.assign))


@dataclass(frozen=True, eq=False)
class LevelMapping:
    g: np.ndarray
    H: int

    def __post_init__(self):
        g = np.asarray(self.g, dtype=np.int64)
        if g.ndim != 1 or g.size == 0:
            raise ValueError("level mapping needs at least one segment")
        if self.H < 1 or g.min() < 0 or g.max() >= self.H:
            raise ValueError("level index out of range")
        object.__setattr__(self, "g", g)

    @property
    def K(self) -> int:
        return int(self.g.size)

    def is_surjective(self) -> bool:
        return np.unique(self.g).size == self.H

    def __eq__(self, other):
        return (isinstance(other, LevelMapping) and self.H == other.H
                and np.array_equal(self.g, other.g))


@dataclass(frozen=True, eq=False)
class Segmentation:
    """K contiguous intervals tiling the window.

    ``boundaries[k]`` is the position of the last edge in segment ``k``; the
    final boundary is always ``m - 1``.  Every boundary must be the last edge
    of a run of equal timestamps.
    """

    boundaries: np.ndarray
    intervals: tuple[TimeInterval, ...]

    @classmethod
    def from_boundaries(cls, G: TemporalGraph, boundaries) -> "Segmentation":
        b = np.asarray(boundaries, dtype=np.int64)
        if b.ndim != 1 or b.size == 0:
            raise ValueError("need at least one segment")
        if b[-1] != G.m - 1:
            raise ValueError("last boundary must be the last edge")
        if np.any(np.diff(b) <= 0):
            raise ValueError("boundaries must be strictly increasing")
        if not np.all(np.isin(b, G.run_end)):
            raise ValueError("boundaries must end a run of equal timestamps")
        if not np.all(np.isin(b, G.breakpoints)):
            raise ValueError("first segment would have zero duration")
        a, e = G.window
        cuts = [float(G.t[i]) for i in b[:-1]]
        los = [a] + cuts
        his = cuts + [e]
        intervals = tuple(TimeInterval(lo, hi, closed_lo=(k == 0)) for k, (lo, hi) in enumerate(zip(los, his)))
        b.setflags(write=False)
        return cls(b, intervals)

    @classmethod
    def from_times(cls, G: TemporalGraph, times: Sequence[float]) -> "Segmentation":
        """Build from the K-1 inner cut timestamps (each snapped to the last edge at or before it)."""
        times = np.asarray(times, dtype=np.float64)
        b = np.searchsorted(G.t, times, side="right") - 1
        if np.any(b < 0):
            raise ValueError("cut before the first edge")
        return cls.from_boundaries(G, np.append(b, G.m - 1))

    @property
    def K(self) -> int:
        return int(self.boundaries.size)

    @property
    def durations(self) -> np.ndarray:
        return np.array([T.duration for T in self.intervals])

    def segment_of_edges(self) -> np.ndarray:
        m = int(self.boundaries[-1]) + 1
        return np.searchsorted(self.boundaries, np.arange(m), side="left")

    def __eq__(self, other):
        return (isinstance(other, Segmentation) and np.array_equal(self.boundaries, other.boundaries)
                and self.intervals == other.intervals)


@dataclass(frozen=True, eq=False)
class LambdaTensor:
    """Symmetric R x R x H array of non-negative Poisson rates."""

    rates: np.ndarray

    def __post_init__(self):
        r = np.array(self.rates, dtype=np.float64)
        if r.ndim != 3 or r.shape[0] != r.shape[1]:
            raise ValueError("rates must have shape (R, R, H)")
        if np.any(r < 0) or not np.all(np.isfinite(r)):
            raise ValueError("rates must be finite and non-negative")
        if not np.array_equal(r, r.transpose(1, 0, 2)):
            raise ValueError("rates must be symmetric in the group indices")
        r.setflags(write=False)
        object.__setattr__(self, "rates", r)

    @classmethod
    def from_upper(cls, rates) -> "LambdaTensor":
        """Symmetrize by copying the upper triangle (i <= j) onto the lower one."""
        r = np.array(rates, dtype=np.float64)
        iu = np.triu_indices(r.shape[0], 1)
        r[iu[1], iu[0]] = r[iu]
        return cls(r)

    @property
    def R(self) -> int:
        return int(self.rates.shape[0])

    @property
    def H(self) -> int:
        return int(self.rates.shape[2])

    def __eq__(self, other):
        return isinstance(other, LambdaTensor) and np.array_equal(self.rates, other.rates)


@dataclass(frozen=True, eq=False)
class Model:
    partition: Partition
    segmentation: Segmentation
    levels: LevelMapping
    lam: LambdaTensor
    loglik: float
    normalized_loglik: float
    iterations: int = 0
    converged: bool = False

    @property
    def R(self) -> int:
        return self.partition.R

    @property
    def K(self) -> int:
        return self.segmentation.K

    @property
    def H(self) -> int:
        return self.levels.H

    @classmethod
    def build(cls, G: TemporalGraph, P: Partition, T: Segmentation, g: LevelMapping, L: LambdaTensor,
              iterations: int = 0, converged: bool = False) -> "Model":
        ll = model_loglik(G, P, T, g, L)
        return cls(P, T, g, L, ll, normalized_loglik(G, ll), iterations, converged)


# --------------------------------------------------------------------------
# likelihood primitives


def count_edges(G: TemporalGraph, u: int, v: int, T: TimeInterval) -> int:
    pair = ((G.src == u) & (G.dst == v)) | ((G.src == v) & (G.dst == u))
    ts = G.t[pair]
    inside = (ts <= T.hi) & ((ts >= T.lo) if T.closed_lo else (ts > T.lo))
    return int(np.count_nonzero(inside))


def poisson_loglik(c, lam, delta):
    """``c log(lam) - lam * delta`` with 0 log 0 = 0 and -inf when c > 0, lam = 0.

    Works elementwise on arrays as well as on scalars.
    """
    c = np.asarray(c, dtype=np.float64)
    lam = np.asarray(lam, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        logterm = np.where(c > 0, c * np.log(lam), 0.0)
    out = logterm - lam * np.asarray(delta, dtype=np.float64)
    return float(out) if out.ndim == 0 else out


def pair_count(P: Partition, i: int, j: int) -> int:
    s = P.sizes
    if i == j:
        return int(s[i] * (s[i] - 1) // 2)
    return int(s[i] * s[j])


def pair_matrix(sizes: np.ndarray) -> np.ndarray:
    """Full R x R matrix of unordered node-pair counts between groups."""
    s = np.asarray(sizes, dtype=np.int64)
    pm = np.outer(s, s)
    np.fill_diagonal(pm, s * (s - 1) // 2)
    return pm


def level_durations(T: Segmentation, g: LevelMapping) -> np.ndarray:
    """Total duration d[h] of the segments mapped to each level."""
    return np.bincount(g.g, weights=T.durations, minlength=g.H)


def edge_levels(T: Segmentation, g: LevelMapping) -> np.ndarray:
    return g.g[T.segment_of_edges()]


def block_counts(G: TemporalGraph, assign: np.ndarray, R: int, lvl: np.ndarray, H: int) -> np.ndarray:
    """Symmetric R x R x H tally of edges per (group, group, level)."""
    gu = assign[G.src]
    gv = assign[G.dst]
    lo = np.minimum(gu, gv)
    hi = np.maximum(gu, gv)
    flat = np.bincount((lo * R + hi) * H + lvl, minlength=R * R * H).reshape(R, R, H)
    iu = np.triu_indices(R, 1)
    flat[iu[1], iu[0]] = flat[iu]
    return flat


def _check_dims(G, P, T, g, L):
    if P.n != G.n:
        raise DimensionError(f"partition has {P.n} nodes, graph has {G.n}")
    if L.R != P.R:
        raise DimensionError(f"rates have R={L.R}, partition has R={P.R}")
    if g.K != T.K:
        raise DimensionError(f"level mapping has K={g.K}, segmentation has K={T.K}")
    if L.H != g.H:
        raise DimensionError(f"rates have H={L.H}, level mapping has H={g.H}")
    if int(T.boundaries[-1]) != G.m - 1:
        raise DimensionError("segmentation does not match the graph")


def model_loglik(G: TemporalGraph, P: Partition, T: Segmentation, g: LevelMapping, L: LambdaTensor) -> float:
    """Log-likelihood of the (K, H, R) model, aggregated per block and level."""
    _check_dims(G, P, T, g, L)
    counts = block_counts(G, P.assign, P.R, edge_levels(T, g), g.H)
    exposure = pair_matrix(P.sizes)[:, :, None] * level_durations(T, g)[None, None, :]
    terms = poisson_loglik(counts, L.rates, exposure)
    iu = np.triu_indices(P.R)
    return float(np.sum(terms[iu]))


def baseline_loglik(G: TemporalGraph) -> float:
    """Log-likelihood of the single-group, single-segment model at its MLE rate."""
    if G.duration <= 0:
        raise ValueError("degenerate time window: zero duration")
    pairs = G.n * (G.n - 1) / 2
    lam = G.m / (pairs * G.duration)
    return G.m * math.log(lam) - G.m


def normalized_loglik(G: TemporalGraph, loglik: float) -> float:
    """Ratio to the baseline; below 1 beats the baseline (when both are negative)."""
    return loglik / baseline_loglik(G)
