"""Visibility graphs of a sampled series.

Node ``i`` is sample ``i``; the time coordinate is the sample index.

Natural visibility (NVG): samples ``a < b`` are linked when every sample
``c`` strictly between them lies strictly below the straight segment joining
``(a, y[a])`` and ``(b, y[b])``.  Equal or collinear intermediates block the
view.  No tolerance is applied, so series with near-collinear triples may
flip edges under tiny perturbations.

Horizontal visibility (HVG): ``a`` and ``b`` are linked when every
intermediate sample is strictly below ``min(y[a], y[b])``.  Every HVG edge
is also an NVG edge.

Three builders are provided:

``nvg_naive``
    For each left endpoint, sweep rightwards keeping the steepest slope seen
    so far; a node is visible exactly when its slope beats that maximum.
    Always O(n^2).
``nvg_fast``
    Divide and conquer on the segment maximum (first index on ties).  No
    edge can cross the maximum, so it is linked to what it sees on either
    side and both halves are solved independently.  A sparse table answers
    range-maximum queries in O(1), which both locates each segment maximum
    and lets the outward sweeps skip runs of hidden samples, so the cost is
    roughly O((n + E) log n) for E edges.
``hvg``
    Single-pass monotone stack, O(n).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numba
import numpy as np

from .errors import NonFiniteValue

NVG = "NVG"
HVG = "HVG"


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected simple graph in compressed sparse row form.

    ``indices[indptr[i]:indptr[i + 1]]`` are the neighbours of ``i`` in
    ascending order.
    """

    node_count: int
    indptr: np.ndarray
    indices: np.ndarray

    @classmethod
    def from_edges(cls, n: int, edges, **kwargs) -> "Graph":
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= n):
            raise ValueError("edge endpoint out of range")
        if np.any(e[:, 0] == e[:, 1]):
            raise ValueError("self-loops are not allowed")
        lo = np.minimum(e[:, 0], e[:, 1])
        hi = np.maximum(e[:, 0], e[:, 1])
        key = np.unique(lo * n + hi)
        lo, hi = key // n, key % n
        return cls(n, *_csr(n, lo, hi), **kwargs)

    @property
    def edge_count(self) -> int:
        return int(self.indices.size // 2)

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i] : self.indptr[i + 1]]

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def edges(self) -> np.ndarray:
        """``(E, 2)`` array of ``u < v`` pairs in lexicographic order."""
        src = np.repeat(np.arange(self.node_count), self.degrees())
        keep = src < self.indices
        return np.column_stack([src[keep], self.indices[keep]])

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(u), int(v)) for u, v in self.edges()}

    def adjacency_matrix(self) -> np.ndarray:
        a = np.zeros((self.node_count, self.node_count), dtype=np.uint8)
        src = np.repeat(np.arange(self.node_count), self.degrees())
        a[src, self.indices] = 1
        return a

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.node_count == other.node_count
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
        )


@dataclass(frozen=True, eq=False)
class VisibilityGraph(Graph):
    kind: str = NVG


def _csr(n: int, lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    src = np.concatenate([lo, hi])
    dst = np.concatenate([hi, lo])
    order = np.lexsort((dst, src))
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
    return indptr, dst[order].astype(np.int64)


def _as_samples(samples) -> np.ndarray:
    y = np.ascontiguousarray(samples, dtype=np.float64).ravel()
    if y.size == 0:
        raise ValueError("cannot build a visibility graph from an empty series")
    if not np.all(np.isfinite(y)):
        raise NonFiniteValue("visibility graphs need finite samples")
    return y


def _wrap(y: np.ndarray, lo: np.ndarray, hi: np.ndarray, kind: str) -> VisibilityGraph:
    n = y.size
    return VisibilityGraph(n, *_csr(n, lo, hi), kind=kind)


@numba.njit(cache=True)
def _push(buf_lo, buf_hi, count, u, v):
    if count == buf_lo.size:
        grow_lo = np.empty(2 * buf_lo.size, np.int64)
        grow_hi = np.empty(2 * buf_hi.size, np.int64)
        grow_lo[:count] = buf_lo
        grow_hi[:count] = buf_hi
        buf_lo, buf_hi = grow_lo, grow_hi
    buf_lo[count] = u
    buf_hi[count] = v
    return buf_lo, buf_hi, count + 1


@numba.njit(cache=True)
def _nvg_naive_edges(y):
    n = y.size
    lo = np.empty(max(4 * n, 4), np.int64)
    hi = np.empty(max(4 * n, 4), np.int64)
    count = 0
    for a in range(n):
        steepest = -np.inf
        for b in range(a + 1, n):
            slope = (y[b] - y[a]) / (b - a)
            if slope > steepest:
                lo, hi, count = _push(lo, hi, count, a, b)
                steepest = slope
    return lo[:count], hi[:count]


@numba.njit(cache=True)
def _argmax_table(y):
    # sparse table of first-index maxima over power-of-two spans
    n = y.size
    levels = 1
    while (1 << levels) <= n:
        levels += 1
    table = np.empty((levels, n), np.int64)
    for i in range(n):
        table[0, i] = i
    for k in range(1, levels):
        half = 1 << (k - 1)
        for i in range(n - (1 << k) + 1):
            a = table[k - 1, i]
            b = table[k - 1, i + half]
            table[k, i] = a if y[a] >= y[b] else b
    return table


@numba.njit(cache=True)
def _argmax(table, y, left, right):
    k = 0
    while (2 << k) <= right - left + 1:
        k += 1
    a = table[k, left]
    b = table[k, right - (1 << k) + 1]
    if y[a] > y[b] or (y[a] == y[b] and a < b):
        return a
    return b


@numba.njit(cache=True)
def _nvg_fast_edges(y):
    n = y.size
    lo = np.empty(max(4 * n, 4), np.int64)
    hi = np.empty(max(4 * n, 4), np.int64)
    count = 0
    table = _argmax_table(y)
    stack = np.empty((n + 1, 2), np.int64)
    stack[0, 0] = 0
    stack[0, 1] = n - 1
    top = 1
    while top > 0:
        top -= 1
        left = stack[top, 0]
        right = stack[top, 1]
        if left >= right:
            continue
        m = _argmax(table, y, left, right)
        ym = y[m]
        # Descent rate from the peak: a node is seen when its rate undercuts
        # every rate nearer the peak.  Blocks whose highest sample cannot
        # undercut at the block's far end are skipped with galloping sizes;
        # by monotone rounding no computed rate inside such a block can.
        shallowest = np.inf
        i = m - 1
        span = 1
        while i >= left:
            first = max(left, i - span + 1)
            peak = y[_argmax(table, y, first, i)]
            if (ym - peak) / (m - first) >= shallowest:
                i = first - 1
                span *= 2
            elif first == i:
                lo, hi, count = _push(lo, hi, count, i, m)
                shallowest = (ym - y[i]) / (m - i)
                i -= 1
                span = 1
            else:
                span = max(1, span // 2)
        shallowest = np.inf
        j = m + 1
        span = 1
        while j <= right:
            last = min(right, j + span - 1)
            peak = y[_argmax(table, y, j, last)]
            if (ym - peak) / (last - m) >= shallowest:
                j = last + 1
                span *= 2
            elif last == j:
                lo, hi, count = _push(lo, hi, count, m, j)
                shallowest = (ym - y[j]) / (j - m)
                j += 1
                span = 1
            else:
                span = max(1, span // 2)
        stack[top, 0] = left
        stack[top, 1] = m - 1
        stack[top + 1, 0] = m + 1
        stack[top + 1, 1] = right
        top += 2
    return lo[:count], hi[:count]


@numba.njit(cache=True)
def _hvg_edges(y):
    n = y.size
    lo = np.empty(max(2 * n, 4), np.int64)
    hi = np.empty(max(2 * n, 4), np.int64)
    count = 0
    stack = np.empty(n, np.int64)
    top = 0
    for j in range(n):
        while top > 0 and y[stack[top - 1]] < y[j]:
            lo, hi, count = _push(lo, hi, count, stack[top - 1], j)
            top -= 1
        if top > 0:
            lo, hi, count = _push(lo, hi, count, stack[top - 1], j)
            if y[stack[top - 1]] == y[j]:
                top -= 1
        stack[top] = j
        top += 1
    return lo[:count], hi[:count]


def nvg_naive(samples) -> VisibilityGraph:
    y = _as_samples(samples)
    return _wrap(y, *_nvg_naive_edges(y), kind=NVG)


def nvg_fast(samples) -> VisibilityGraph:
    y = _as_samples(samples)
    return _wrap(y, *_nvg_fast_edges(y), kind=NVG)


def hvg(samples) -> VisibilityGraph:
    y = _as_samples(samples)
    return _wrap(y, *_hvg_edges(y), kind=HVG)


BUILDERS = {"nvg": nvg_fast, "nvg_fast": nvg_fast, "nvg_naive": nvg_naive, "hvg": hvg}


def build_graph(samples, kind: Optional[str] = "nvg") -> VisibilityGraph:
    try:
        builder = BUILDERS[kind]
    except KeyError:
        raise ValueError(f"unknown graph kind {kind!r}; choose from {sorted(BUILDERS)}") from None
    return builder(samples)
