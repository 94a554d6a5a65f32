"""Network features of an unweighted undirected graph.

All distances are hop counts.  Disconnected graphs are handled totally:
path statistics range over connected ordered pairs only, efficiency treats
unreachable pairs as contributing zero, and the diameter is taken over the
largest component.  Visibility graphs are always connected, so these
conventions only matter for hand-built graphs.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numba
import numpy as np

from .errors import BadNode
from .rng import SplitMix64, derive_seed
from .visibility import Graph


@numba.njit(cache=True)
def _bfs(indptr, indices, source, dist, queue):
    dist[:] = -1
    dist[source] = 0
    head = 0
    tail = 1
    queue[0] = source
    while head < tail:
        u = queue[head]
        head += 1
        du = dist[u] + 1
        for p in range(indptr[u], indptr[u + 1]):
            v = indices[p]
            if dist[v] < 0:
                dist[v] = du
                queue[tail] = v
                tail += 1
    return tail


@numba.njit(cache=True)
def _path_sums(indptr, indices):
    n = indptr.size - 1
    dist = np.empty(n, np.int64)
    queue = np.empty(n, np.int64)
    ecc = np.zeros(n, np.int64)
    total = 0
    pairs = 0
    inverse = 0.0
    for s in range(n):
        _bfs(indptr, indices, s, dist, queue)
        for t in range(n):
            d = dist[t]
            if d > 0:
                total += d
                pairs += 1
                inverse += 1.0 / d
                if d > ecc[s]:
                    ecc[s] = d
    return total, pairs, inverse, ecc


@numba.njit(cache=True)
def _triangles(indptr, indices):
    # per-node triangle counts by merging sorted neighbour lists
    n = indptr.size - 1
    tri = np.zeros(n, np.int64)
    for u in range(n):
        for p in range(indptr[u], indptr[u + 1]):
            v = indices[p]
            if v <= u:
                continue
            a = indptr[u]
            b = indptr[v]
            while a < indptr[u + 1] and b < indptr[v + 1]:
                x = indices[a]
                w = indices[b]
                if x < w:
                    a += 1
                elif w < x:
                    b += 1
                else:
                    if x > v:
                        tri[u] += 1
                        tri[v] += 1
                        tri[x] += 1
                    a += 1
                    b += 1
    return tri


@numba.njit(cache=True)
def _component_labels(indptr, indices):
    n = indptr.size - 1
    comp = np.full(n, -1, np.int64)
    queue = np.empty(n, np.int64)
    label = 0
    for s in range(n):
        if comp[s] >= 0:
            continue
        comp[s] = label
        head = 0
        tail = 1
        queue[0] = s
        while head < tail:
            u = queue[head]
            head += 1
            for p in range(indptr[u], indptr[u + 1]):
                v = indices[p]
                if comp[v] < 0:
                    comp[v] = label
                    queue[tail] = v
                    tail += 1
        label += 1
    return comp


def average_degree(g: Graph) -> float:
    if g.node_count == 0:
        return 0.0
    return 2.0 * g.edge_count / g.node_count


def triangle_counts(g: Graph) -> np.ndarray:
    return _triangles(g.indptr, g.indices)


def local_clustering(g: Graph) -> np.ndarray:
    deg = g.degrees().astype(np.float64)
    pairs = deg * (deg - 1.0) / 2.0
    tri = triangle_counts(g).astype(np.float64)
    out = np.zeros(g.node_count)
    np.divide(tri, pairs, out=out, where=pairs > 0)
    return out


def average_clustering(g: Graph) -> float:
    """Mean local clustering; nodes of degree < 2 count as zero."""
    if g.node_count == 0:
        return 0.0
    return float(local_clustering(g).mean())


def transitivity(g: Graph) -> float:
    deg = g.degrees()
    triplets = int(np.sum(deg * (deg - 1) // 2))
    if triplets == 0:
        return 0.0
    triangles = int(triangle_counts(g).sum()) // 3
    return 3.0 * triangles / triplets


def density(g: Graph) -> float:
    n = g.node_count
    if n <= 1:
        return 0.0
    return 2.0 * g.edge_count / (n * (n - 1))


def shortest_path_lengths(g: Graph, source: int) -> np.ndarray:
    """Hop distance from ``source`` to every node, ``inf`` where unreachable."""
    if not 0 <= source < g.node_count:
        raise BadNode(f"node {source} not in graph of {g.node_count} nodes")
    dist = np.empty(g.node_count, np.int64)
    _bfs(g.indptr, g.indices, int(source), dist, np.empty(g.node_count, np.int64))
    return np.where(dist < 0, np.inf, dist.astype(np.float64))


def connected_components(g: Graph) -> list[np.ndarray]:
    """Node sets ordered by their smallest member; members ascending."""
    comp = _component_labels(g.indptr, g.indices)
    order = np.argsort(comp, kind="stable")
    bounds = np.cumsum(np.bincount(comp))[:-1]
    return np.split(order, bounds)


@dataclass(frozen=True)
class PathStats:
    diameter: int
    avg_shortest_path: float
    global_efficiency: float
    connected: bool
    disconnected_pairs: int


def path_stats(g: Graph) -> PathStats:
    n = g.node_count
    if n <= 1:
        return PathStats(0, 0.0, 0.0, True, 0)
    total, pairs, inverse, ecc = _path_sums(g.indptr, g.indices)
    components = connected_components(g)
    largest = max(components, key=len)
    ordered = n * (n - 1)
    return PathStats(
        diameter=int(ecc[largest].max()),
        avg_shortest_path=total / pairs if pairs else 0.0,
        global_efficiency=inverse / ordered,
        connected=len(components) == 1,
        disconnected_pairs=(ordered - pairs) // 2,
    )


def diameter(g: Graph) -> int:
    return path_stats(g).diameter


def average_shortest_path(g: Graph) -> float:
    return path_stats(g).avg_shortest_path


def global_efficiency(g: Graph) -> float:
    return path_stats(g).global_efficiency


@numba.njit(cache=True)
def _propagate(indptr, indices, order, labels):
    # one asynchronous sweep; returns whether any label changed
    changed = False
    for v in order:
        lo, hi = indptr[v], indptr[v + 1]
        if hi == lo:
            continue
        nbr = np.sort(labels[indices[lo:hi]])
        best = nbr[0]
        best_count = 0
        run = 0
        for i in range(nbr.size):
            run = run + 1 if i > 0 and nbr[i] == nbr[i - 1] else 1
            # strictly greater keeps the smallest label among ties
            if run > best_count:
                best_count = run
                best = nbr[i]
        if best != labels[v]:
            labels[v] = best
            changed = True
    return changed


def communities(g: Graph, seed: int = 0, max_sweeps: int = 100) -> list[np.ndarray]:
    """Asynchronous label propagation.

    Every node starts with its own index as label.  Each sweep visits the
    nodes in an order drawn from ``SplitMix64(derive_seed(seed, sweep))``;
    a visited node takes the label held by most of its neighbours, the
    smallest such label on ties, and isolated nodes keep theirs.  Sweeps
    stop when one changes nothing (or after ``max_sweeps``).  Groups are
    returned ordered by smallest member.
    """
    n = g.node_count
    labels = np.arange(n, dtype=np.int64)
    for sweep in range(max_sweeps):
        order = SplitMix64(derive_seed(seed, sweep)).permutation(n).astype(np.int64)
        if not _propagate(g.indptr, g.indices, order, labels):
            break
    _, canon = np.unique(labels, return_inverse=True)
    groups: dict[int, list[int]] = {}
    for node, lab in enumerate(canon):
        groups.setdefault(int(lab), []).append(node)
    return sorted((np.array(m) for m in groups.values()), key=lambda m: m[0])


@dataclass(frozen=True)
class MetricReport:
    avg_degree: float
    avg_clustering: float
    transitivity: float
    density: float
    diameter: int
    global_efficiency: float
    avg_shortest_path: float
    component_count: int
    community_count: int
    node_count: int
    edge_count: int

    def to_dict(self) -> dict:
        return asdict(self)


def metric_report(g: Graph, seed: int = 0) -> MetricReport:
    paths = path_stats(g)
    return MetricReport(
        avg_degree=average_degree(g),
        avg_clustering=average_clustering(g),
        transitivity=transitivity(g),
        density=density(g),
        diameter=paths.diameter,
        global_efficiency=paths.global_efficiency,
        avg_shortest_path=paths.avg_shortest_path,
        component_count=len(connected_components(g)),
        community_count=len(communities(g, seed)),
        node_count=g.node_count,
        edge_count=g.edge_count,
    )
