"""Random-graph generators and topology analytics.

Graphs are plain undirected snapshots (no self-loops, no multi-edges).
Generators take a ``random.Random`` so callers control the stream.
"""

from __future__ import annotations

import math
import random
import statistics
from collections import Counter, deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .errors import DegenerateFit, DomainError, EmptyGraph, InvalidParams


def _norm(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class TopologySnapshot:
    nodes: tuple[int, ...]
    edges: frozenset[tuple[int, int]]

    def __post_init__(self):
        members = set(self.nodes)
        if len(members) != len(self.nodes):
            raise InvalidParams("duplicate node in snapshot")
        for u, v in self.edges:
            if u == v:
                raise InvalidParams(f"self-loop on {u}")
            if u > v:
                raise InvalidParams(f"edge {(u, v)} not normalized (u < v)")
            if u not in members or v not in members:
                raise InvalidParams(f"edge {(u, v)} references unknown node")

    @classmethod
    def from_edges(cls, nodes: Iterable[int], edges: Iterable[tuple[int, int]]) -> TopologySnapshot:
        return cls(tuple(sorted(set(nodes))), frozenset(_norm(u, v) for u, v in edges if u != v))

    @classmethod
    def from_adjacency(cls, adj: dict[int, Iterable[int]]) -> TopologySnapshot:
        edges = {_norm(u, v) for u, nbrs in adj.items() for v in nbrs if u != v}
        return cls(tuple(sorted(adj)), frozenset(edges))

    def adjacency(self) -> dict[int, set[int]]:
        adj: dict[int, set[int]] = {n: set() for n in self.nodes}
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return adj

    def degrees(self) -> dict[int, int]:
        deg = dict.fromkeys(self.nodes, 0)
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg


@dataclass(frozen=True)
class TopologyMetrics:
    degree_histogram: dict[int, int]
    clustering_coefficient: float
    avg_connected_distance: float
    diameter: int
    component_count: int

    @property
    def mean_degree(self) -> float:
        n = sum(self.degree_histogram.values())
        return sum(k * c for k, c in self.degree_histogram.items()) / n


@dataclass(frozen=True)
class ErParams:
    n: int
    alpha: float

    @property
    def p(self) -> float:
        return self.alpha / (self.n - 1) if self.n > 1 else 0.0


@dataclass(frozen=True)
class WsParams:
    n: int
    k_ring: int
    p_rewire: float


@dataclass(frozen=True)
class BaParams:
    n: int
    m_attach: int
    n0: int | None = None

    @property
    def seed_size(self) -> int:
        return self.m_attach if self.n0 is None else self.n0


@dataclass(frozen=True)
class PowerLawFit:
    tau: float
    c: float
    fit_range: tuple[int, int]


# generators

def generate_er(params: ErParams, rng: random.Random) -> TopologySnapshot:
    """G(n, p) with p = alpha / (n - 1).

    Uses geometric skipping over the pair sequence, which is equivalent to an
    independent Bernoulli(p) draw per unordered pair but costs O(n + edges).
    """
    n, p = params.n, params.p
    if n < 0:
        raise InvalidParams("n must be non-negative")
    if not 0.0 <= p <= 1.0:
        raise InvalidParams(f"edge probability {p} outside [0, 1]")
    nodes = tuple(range(n))
    if p == 0.0 or n < 2:
        return TopologySnapshot(nodes, frozenset())
    if p == 1.0:
        return TopologySnapshot(nodes, frozenset((u, v) for v in range(n) for u in range(v)))
    edges = set()
    log_q = math.log1p(-p)
    v, w = 1, -1
    while v < n:
        w += 1 + int(math.log1p(-rng.random()) / log_q)
        while w >= v and v < n:
            w -= v
            v += 1
        if v < n:
            edges.add((w, v))
    return TopologySnapshot(nodes, frozenset(edges))


def ring_lattice(n: int, k_ring: int) -> TopologySnapshot:
    if k_ring % 2 or k_ring < 0 or (n > 0 and k_ring >= n):
        raise InvalidParams(f"ring lattice needs even K < n, got K={k_ring}, n={n}")
    edges = {_norm(u, (u + j) % n) for u in range(n) for j in range(1, k_ring // 2 + 1)}
    return TopologySnapshot(tuple(range(n)), frozenset(edges))


def generate_ws(params: WsParams, rng: random.Random) -> TopologySnapshot:
    """Watts-Strogatz rewiring of a ring lattice.

    Lattice edges are visited in (node, offset) order.  A rewired edge keeps
    its near endpoint and moves the far one to a uniform node, redrawing on
    self-loops and duplicates, so node and edge counts are preserved.
    """
    n, k, p = params.n, params.k_ring, params.p_rewire
    if not 0.0 <= p <= 1.0:
        raise InvalidParams(f"p_rewire {p} outside [0, 1]")
    if k % 2 or k < 0 or k >= n:
        raise InvalidParams(f"K must be even and < n, got K={k}, n={n}")
    adj: dict[int, set[int]] = {u: set() for u in range(n)}
    for u in range(n):
        for j in range(1, k // 2 + 1):
            v = (u + j) % n
            adj[u].add(v)
            adj[v].add(u)
    for u in range(n):
        for j in range(1, k // 2 + 1):
            v = (u + j) % n
            if v not in adj[u]:
                continue  # already moved away by an earlier rewiring
            if rng.random() >= p:
                continue
            if len(adj[u]) >= n - 1:
                continue
            while True:
                w = rng.randrange(n)
                if w != u and w not in adj[u]:
                    break
            adj[u].discard(v)
            adj[v].discard(u)
            adj[u].add(w)
            adj[w].add(u)
    return TopologySnapshot.from_adjacency(adj)


def generate_ba(params: BaParams, rng: random.Random) -> TopologySnapshot:
    """Barabasi-Albert growth from a complete seed graph of n0 nodes.

    Each newcomer attaches ``m_attach`` edges to distinct existing nodes with
    probability proportional to their current degree.
    """
    n, m = params.n, params.m_attach
    n0 = params.seed_size
    if not (1 <= m <= n0 < n):
        raise InvalidParams(f"need 1 <= m <= n0 < n, got m={m}, n0={n0}, n={n}")
    edges = {(u, v) for v in range(n0) for u in range(v)}
    # every node appears once per incident edge end: uniform draws are degree-proportional
    ends: list[int] = []
    for u, v in edges:
        ends.extend((u, v))
    if not ends:
        # a single-node seed has no degree to attach to; fall back to uniform for that step
        ends = [0]
        bootstrap = True
    else:
        bootstrap = False
    for new in range(n0, n):
        targets: set[int] = set()
        while len(targets) < m:
            targets.add(ends[rng.randrange(len(ends))])
        if bootstrap:
            ends = []
            bootstrap = False
        for t in sorted(targets):
            edges.add((t, new))
            ends.extend((t, new))
    return TopologySnapshot(tuple(range(n)), frozenset(edges))


# analytics

def _bfs(adj: dict[int, set[int]], source: int) -> dict[int, int]:
    dist = {source: 0}
    frontier = deque([source])
    while frontier:
        u = frontier.popleft()
        du = dist[u] + 1
        for v in adj[u]:
            if v not in dist:
                dist[v] = du
                frontier.append(v)
    return dist


def components(adj: dict[int, set[int]]) -> list[list[int]]:
    seen: set[int] = set()
    out = []
    for node in sorted(adj):
        if node in seen:
            continue
        comp = sorted(_bfs(adj, node))
        seen.update(comp)
        out.append(comp)
    return out


def local_clustering(adj: dict[int, set[int]]) -> dict[int, float]:
    """Per-node clustering; 0 for nodes with fewer than two neighbours."""
    out = {}
    for node, nbrs in adj.items():
        k = len(nbrs)
        if k < 2:
            out[node] = 0.0
            continue
        links = sum(len(adj[u] & nbrs) for u in nbrs) // 2
        out[node] = links / (k * (k - 1) / 2)
    return out


def metrics(snapshot: TopologySnapshot, *, paths: bool = True) -> TopologyMetrics:
    """Degree histogram, clustering, mean connected distance, diameter.

    Mean distance averages over all connected ordered pairs; the diameter is
    taken over the largest component.  ``paths=False`` skips the all-pairs BFS
    and reports both path statistics as 0.
    """
    if not snapshot.nodes:
        raise EmptyGraph("metrics of a graph with no nodes")
    adj = snapshot.adjacency()
    hist = Counter(len(nbrs) for nbrs in adj.values())
    cc = statistics.fmean(local_clustering(adj).values())
    comps = components(adj)
    largest = max(comps, key=len)
    total = pairs = 0
    diameter = 0
    if paths:
        in_largest = set(largest)
        for comp in comps:
            if len(comp) < 2:
                continue
            for node in comp:
                dist = _bfs(adj, node)
                total += sum(dist.values())
                pairs += len(dist) - 1
                if node in in_largest:
                    diameter = max(diameter, max(dist.values()))
    avg = total / pairs if pairs else 0.0
    return TopologyMetrics(dict(sorted(hist.items())), cc, avg, diameter, len(comps))


def fit_power_law(hist: dict[int, int], k_range: tuple[int, int]) -> PowerLawFit:
    """Least-squares line through log P(k) versus log k on ``k_range``.

    P(k) is normalised by the total node count of the histogram.  Empty
    degrees are skipped.  A fit with fewer than three points, or one whose
    exponent does not exceed 1, is rejected as not a power law.
    """
    lo, hi = k_range
    total = sum(hist.values())
    pts = [(k, c) for k, c in sorted(hist.items()) if lo <= k <= hi and k > 0 and c > 0]
    if len(pts) < 3:
        raise DegenerateFit(f"only {len(pts)} distinct degrees in range {k_range}")
    xs = [math.log(k) for k, _ in pts]
    ys = [math.log(c / total) for _, c in pts]
    slope, intercept = statistics.linear_regression(xs, ys)
    tau = -slope
    if not tau > 1:
        raise DegenerateFit(f"fitted exponent {tau:.3f} is not a power law (tau <= 1)")
    return PowerLawFit(tau, math.exp(intercept), (lo, hi))


def ba_reference(m: int, k: int) -> float:
    """Stationary BA degree probability 2m(m+1) / (k(k+1)(k+2)), k >= m."""
    if k < m:
        raise DomainError(f"k={k} below m={m}")
    return 2 * m * (m + 1) / (k * (k + 1) * (k + 2))


def exponential_growth_reference(m: int, k: int) -> float:
    """Degree law of growth with uniform (non-preferential) attachment, k >= m."""
    if k < m:
        raise DomainError(f"k={k} below m={m}")
    return (1 - math.exp(-1 / m)) * math.exp(1 - k / m)


# edge-list I/O

def dumps_edge_list(snapshot: TopologySnapshot) -> str:
    """``u v`` per edge; isolated nodes are written as a lone ``u``."""
    lines = [f"{u} {v}" for u, v in sorted(snapshot.edges)]
    touched = {x for e in snapshot.edges for x in e}
    lines.extend(str(n) for n in snapshot.nodes if n not in touched)
    return "".join(line + "\n" for line in lines)


def loads_edge_list(text: str) -> TopologySnapshot:
    nodes: set[int] = set()
    edges = []
    for raw in text.splitlines():
        parts = raw.split("#", 1)[0].split()
        if not parts:
            continue
        if len(parts) == 1:
            nodes.add(int(parts[0]))
        elif len(parts) == 2:
            u, v = int(parts[0]), int(parts[1])
            nodes.update((u, v))
            edges.append((u, v))
        else:
            raise ValueError(f"bad edge-list line: {raw!r}")
    return TopologySnapshot.from_edges(nodes, edges)


def write_edge_list(snapshot: TopologySnapshot, path: str | Path) -> None:
    Path(path).write_text(dumps_edge_list(snapshot), encoding="utf-8")


def read_edge_list(path: str | Path) -> TopologySnapshot:
    return loads_edge_list(Path(path).read_text(encoding="utf-8"))
