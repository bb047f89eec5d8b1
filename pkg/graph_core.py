"""
Graph Core
Immutable weighted graphs with deterministic shortest-path, ball and
induced-subgraph distance queries
"""

import heapq
import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import networkx as nx
import numpy as np

from errors import InstanceError, PreconditionError

logger = logging.getLogger(__name__)

INF = math.inf

Edge = Tuple[int, int, float]
VertexSet = Tuple[int, ...]


def vertex_set(vertices: Iterable[int]) -> VertexSet:
    """Sorted, duplicate-free tuple of vertex ids"""
    return tuple(sorted(set(int(v) for v in vertices)))


def format_weight(w: float) -> str:
    """Shortest text that parses back to exactly ``w``"""
    if float(w).is_integer():
        return str(int(w))
    return repr(float(w))


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected graph on vertices 0..n-1 with nonnegative edge weights.

    Build instances with :meth:`from_edges`; it canonicalizes the edge list
    (sorted, u < v, parallel edges collapsed to the lightest one) so that two
    graphs with the same edge set compare equal.
    """

    vertex_count: int
    edges: Tuple[Edge, ...]
    adjacency: Tuple[Tuple[Tuple[int, float], ...], ...]

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[float]]) -> "WeightedGraph":
        """
        Build a graph from an edge iterable

        Args:
            n: Number of vertices
            edges: Iterable of (u, v, w) triples with 0-based ids

        Returns:
            Canonical WeightedGraph
        """
        if n < 0:
            raise InstanceError(f"Vertex count must be nonnegative, got {n}")

        lightest: Dict[Tuple[int, int], float] = {}
        for edge in edges:
            u, v, w = int(edge[0]), int(edge[1]), float(edge[2])
            if not (0 <= u < n and 0 <= v < n):
                raise InstanceError(f"Edge ({u}, {v}) out of range for n={n}")
            if u == v:
                raise InstanceError(f"Self-loop at vertex {u}")
            if math.isnan(w) or w < 0:
                raise InstanceError(f"Edge ({u}, {v}) has invalid weight {w}")
            key = (min(u, v), max(u, v))
            if key not in lightest or w < lightest[key]:
                lightest[key] = w

        canonical = tuple(sorted((u, v, w) for (u, v), w in lightest.items()))
        adj: List[List[Tuple[int, float]]] = [[] for _ in range(n)]
        for u, v, w in canonical:
            adj[u].append((v, w))
            adj[v].append((u, w))
        return cls(n, canonical, tuple(tuple(sorted(a)) for a in adj))

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def vertices(self) -> range:
        return range(self.vertex_count)

    def neighbors(self, v: int) -> Tuple[Tuple[int, float], ...]:
        return self.adjacency[v]

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    @cached_property
    def _weights(self) -> Dict[Tuple[int, int], float]:
        return {(u, v): w for u, v, w in self.edges}

    def weight(self, u: int, v: int) -> Optional[float]:
        """Weight of edge {u, v}, or None when absent"""
        return self._weights.get((min(u, v), max(u, v)))

    def min_weight(self) -> float:
        return min((w for _, _, w in self.edges), default=INF)

    def total_weight(self) -> float:
        return float(sum(w for _, _, w in self.edges))

    def with_extra(self, extra_vertices: int, extra_edges: Iterable[Sequence[float]]) -> "WeightedGraph":
        """Graph with ``extra_vertices`` appended (ids n..n+k-1) and the extra edges added"""
        return WeightedGraph.from_edges(self.vertex_count + extra_vertices,
                                        list(self.edges) + list(extra_edges))

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.vertex_count))
        graph.add_weighted_edges_from(self.edges)
        return graph

    def is_tree(self) -> bool:
        return self.vertex_count >= 1 and self.edge_count == self.vertex_count - 1 and is_connected(self)


@dataclass(frozen=True)
class DistanceTable:
    """Single-source distances with the shortest-path tree that realizes them"""

    source: int
    dist: Tuple[float, ...]
    parent: Tuple[Optional[int], ...]

    def path_to(self, v: int) -> List[int]:
        """Vertices of the tree path source -> v"""
        if self.dist[v] == INF:
            raise PreconditionError(f"Vertex {v} unreachable from {self.source}")
        path = [v]
        while path[-1] != self.source:
            path.append(self.parent[path[-1]])
        path.reverse()
        return path


@dataclass(frozen=True)
class PortalForest:
    """Shortest-path forest grown from several sources at once.

    ``origin[v]`` is the nearest source of v (smallest id on ties) and the
    parent pointers lead from v to it. The forest is suffix-closed: the path
    of any vertex on ``path_from(v)`` is the remaining suffix.
    """

    sources: VertexSet
    dist: Tuple[float, ...]
    parent: Tuple[Optional[int], ...]
    origin: Tuple[Optional[int], ...]

    def path_from(self, v: int) -> List[int]:
        """Vertices of the forest path v -> origin[v]"""
        if self.origin[v] is None:
            raise PreconditionError(f"Vertex {v} cannot reach any source")
        path = [v]
        while self.parent[path[-1]] is not None:
            path.append(self.parent[path[-1]])
        return path


def _search(g: WeightedGraph, sources: Iterable[int], allowed: Optional[Set[int]] = None,
            limit: float = INF, target: Optional[int] = None):
    # Keys are (dist, origin, parent) compared lexicographically, which makes
    # every tie resolve towards the smaller id.
    n = g.vertex_count
    dist = [INF] * n
    parent = [-1] * n
    origin = [-1] * n
    done = [False] * n

    heap = []
    for s in sorted(set(sources)):
        if not 0 <= s < n:
            raise PreconditionError(f"Source {s} out of range for n={n}")
        if allowed is not None and s not in allowed:
            raise PreconditionError(f"Source {s} not inside the allowed vertex set")
        dist[s] = 0.0
        origin[s] = s
        heap.append((0.0, s, s))
    heapq.heapify(heap)

    while heap:
        d, o, u = heapq.heappop(heap)
        if done[u] or d != dist[u] or o != origin[u]:
            continue
        done[u] = True
        if u == target:
            break
        for v, w in g.adjacency[u]:
            if done[v] or (allowed is not None and v not in allowed):
                continue
            nd = d + w
            if nd > limit:
                continue
            if (nd < dist[v] or (nd == dist[v] and (o < origin[v] or (o == origin[v] and u < parent[v])))):
                dist[v] = nd
                origin[v] = o
                parent[v] = u
                heapq.heappush(heap, (nd, o, v))

    return dist, parent, origin


def shortest_paths(g: WeightedGraph, source: int) -> DistanceTable:
    """
    Exact single-source distances

    Args:
        g: Graph
        source: Source vertex

    Returns:
        DistanceTable; unreachable vertices get +inf and no parent
    """
    dist, parent, _ = _search(g, [source])
    return DistanceTable(source, tuple(dist), tuple(p if p >= 0 else None for p in parent))


def multi_source_paths(g: WeightedGraph, sources: Iterable[int]) -> PortalForest:
    """Distances to the nearest of ``sources`` with the forest realizing them"""
    srcs = vertex_set(sources)
    if not srcs:
        raise PreconditionError("multi_source_paths needs at least one source")
    dist, parent, origin = _search(g, srcs)
    return PortalForest(
        srcs,
        tuple(dist),
        tuple(p if p >= 0 else None for p in parent),
        tuple(o if o >= 0 else None for o in origin),
    )


def bounded_distances(g: WeightedGraph, source: int, limit: float = INF) -> List[float]:
    """Distances from ``source``; vertices farther than ``limit`` report +inf"""
    dist, _, _ = _search(g, [source], limit=limit)
    return dist


def distances_to_set(g: WeightedGraph, targets: Iterable[int]) -> List[float]:
    """d_G(v, targets) for every vertex v"""
    dist, _, _ = _search(g, targets)
    return dist


def induced_distances(g: WeightedGraph, inside: Iterable[int], source: int) -> List[float]:
    """Distances from ``source`` inside G[inside]; +inf for everything else"""
    allowed = inside if isinstance(inside, (set, frozenset)) else set(inside)
    dist, _, _ = _search(g, [source], allowed=allowed)
    return dist


def induced_distance(g: WeightedGraph, inside: Iterable[int], u: int, v: int) -> float:
    """
    Shortest-path distance between u and v using only vertices of ``inside``

    Args:
        g: Graph
        inside: Vertex set the path must stay within
        u, v: Endpoints, both members of ``inside``

    Returns:
        Distance, or +inf when G[inside] separates u from v
    """
    allowed = inside if isinstance(inside, (set, frozenset)) else set(inside)
    if u not in allowed or v not in allowed:
        raise PreconditionError(f"Endpoints ({u}, {v}) must both lie inside the vertex set")
    dist, _, _ = _search(g, [u], allowed=allowed, target=v)
    return dist[v]


def induced_ball(g: WeightedGraph, inside: Iterable[int], center: int, radius: float) -> VertexSet:
    """Vertices within ``radius`` of ``center`` measured inside G[inside]"""
    allowed = inside if isinstance(inside, (set, frozenset)) else set(inside)
    dist, _, _ = _search(g, [center], allowed=allowed, limit=radius)
    return tuple(v for v in range(g.vertex_count) if dist[v] <= radius)


def strong_diameter(g: WeightedGraph, cluster: Iterable[int]) -> float:
    """Diameter of G[cluster]; +inf when the induced subgraph is disconnected"""
    members = set(cluster)
    if not members:
        raise PreconditionError("strong_diameter of an empty cluster")
    diameter = 0.0
    for s in sorted(members):
        dist, _, _ = _search(g, [s], allowed=members)
        for v in members:
            if dist[v] > diameter:
                diameter = dist[v]
        if diameter == INF:
            break
    return diameter


def weak_diameter(g: WeightedGraph, cluster: Iterable[int]) -> float:
    """Largest d_G distance between two cluster members"""
    members = sorted(set(cluster))
    if not members:
        raise PreconditionError("weak_diameter of an empty cluster")
    diameter = 0.0
    for s in members:
        dist, _, _ = _search(g, [s])
        diameter = max(diameter, max(dist[v] for v in members))
    return diameter


def ball(g: WeightedGraph, center: int, radius: float) -> VertexSet:
    """Closed ball B_G(center, radius)"""
    if radius < 0:
        return ()
    dist, _, _ = _search(g, [center], limit=radius)
    return tuple(v for v in range(g.vertex_count) if dist[v] <= radius)


def is_connected(g: WeightedGraph, subset: Optional[Iterable[int]] = None) -> bool:
    """Whether G (or G[subset]) is connected; the empty graph counts as connected"""
    members = set(range(g.vertex_count)) if subset is None else set(subset)
    if not members:
        return True
    dist, _, _ = _search(g, [min(members)], allowed=members)
    return all(dist[v] < INF for v in members)


def distance_matrix(g: WeightedGraph) -> np.ndarray:
    """All-pairs distances (n x n array); intended for small graphs"""
    n = g.vertex_count
    matrix = np.full((n, n), np.inf)
    for s in range(n):
        dist, _, _ = _search(g, [s])
        matrix[s, :] = dist
    return matrix


def write_graph(g: WeightedGraph) -> str:
    """Text format: ``n m`` then one ``u v w`` line per edge, lexicographic"""
    lines = [f"{g.vertex_count} {g.edge_count}"]
    lines.extend(f"{u} {v} {format_weight(w)}" for u, v, w in g.edges)
    return "\n".join(lines) + "\n"


def read_graph(text: str) -> WeightedGraph:
    """Parse the text format produced by :func:`write_graph`"""
    rows = [line.split() for line in text.splitlines() if line.strip()]
    if not rows or len(rows[0]) != 2:
        raise InstanceError("Graph text must start with a 'n m' header line")
    n, m = int(rows[0][0]), int(rows[0][1])
    if len(rows) - 1 != m:
        raise InstanceError(f"Header announces {m} edges, found {len(rows) - 1}")
    edges = []
    for row in rows[1:]:
        if len(row) != 3:
            raise InstanceError(f"Malformed edge line: {' '.join(row)}")
        edges.append((int(row[0]), int(row[1]), float(row[2])))
    return WeightedGraph.from_edges(n, edges)
