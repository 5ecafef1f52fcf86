"""Column maxima of implicitly defined totally monotone matrices (SMAWK).

The matrix is never materialized: callers hand over a :class:`MatrixOracle`
whose ``eval(i, j)`` is called lazily.  Entries may be ``-inf``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass
class MatrixOracle:
    eval: Callable[[int, int], float]
    nrows: int
    ncols: int

    def materialize(self) -> np.ndarray:
        X = np.empty((self.nrows, self.ncols))
        for i in range(self.nrows):
            for j in range(self.ncols):
                X[i, j] = self.eval(i, j)
        return X


class CountingOracle(MatrixOracle):
    """Wraps an oracle and counts how many entries were evaluated."""

    def __init__(self, inner: MatrixOracle):
        self.calls = 0

        def counted(i, j):
            self.calls += 1
            return inner.eval(i, j)

        super().__init__(counted, inner.nrows, inner.ncols)


def _reduce(rows, cols, x):
    # Keep at most len(cols) rows that can still hold a column maximum.
    # vals[p] caches x(stack[p], cols[p]).
    stack, vals = [], []
    for r in rows:
        while stack:
            v = x(r, cols[len(stack) - 1])
            if vals[-1] < v:
                stack.pop()
                vals.pop()
            else:
                break
        if len(stack) < len(cols):
            stack.append(r)
            vals.append(x(r, cols[len(stack) - 1]))
    return stack


def _smawk(rows, cols, x, out):
    if not cols:
        return
    rows = _reduce(rows, cols, x)
    _smawk(rows, cols[1::2], x, out)

    pos = {r: p for p, r in enumerate(rows)}
    start = 0
    for ci in range(0, len(cols), 2):
        c = cols[ci]
        stop = pos[out[cols[ci + 1]]] if ci + 1 < len(cols) else len(rows) - 1
        best, bv = rows[start], x(rows[start], c)
        for p in range(start + 1, stop + 1):
            v = x(rows[p], c)
            if v > bv:
                best, bv = rows[p], v
        out[c] = best
        start = stop


def column_argmax(M: MatrixOracle) -> list[int]:
    """Row index of the maximum of every column.

    Ties go to the smallest row.  Uses O(nrows + ncols) evaluations of
    ``M.eval`` provided the matrix is totally monotone; on other matrices the
    result is unspecified.
    """
    if M.nrows < 1 or M.ncols < 1:
        raise ValueError("matrix must have at least one row and one column")
    out: dict[int, int] = {}
    _smawk(list(range(M.nrows)), list(range(M.ncols)), M.eval, out)
    return [out[j] for j in range(M.ncols)]


def column_argmax_brute(M: MatrixOracle) -> list[int]:
    X = M.materialize()
    return [int(np.argmax(X[:, j])) for j in range(M.ncols)]


def check_totally_monotone(M: MatrixOracle) -> bool:
    """Exhaustive test of the 2 x 2 condition.

    For all i1 < i2 and j1 < j2: x(i2, j1) > x(i1, j1) implies
    x(i2, j2) >= x(i1, j2).
    """
    X = M.materialize()
    for i1 in range(M.nrows - 1):
        for i2 in range(i1 + 1, M.nrows):
            strict = np.flatnonzero(X[i2] > X[i1])
            weak_fail = np.flatnonzero(~(X[i2] >= X[i1]))
            if strict.size and weak_fail.size and strict[0] < weak_fail[-1]:
                return False
    return True
