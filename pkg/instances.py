"""
Instances
Partitions, cluster-aggregation instances, assignments and path
decompositions, with JSON I/O and seeded generators
"""

import hashlib
import json
import logging
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse.csgraph import minimum_spanning_tree
from scipy.spatial import cKDTree
from scipy.spatial.distance import squareform, pdist

from errors import ConnectivityError, InstanceError, PreconditionError, SolverInvariantError
from graph_core import (
    INF,
    PortalForest,
    VertexSet,
    WeightedGraph,
    distances_to_set,
    induced_ball,
    is_connected,
    multi_source_paths,
    strong_diameter,
    vertex_set,
)

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
CONNECTIVITY_RETRIES = 100
TOLERANCE = 1e-9


@dataclass(frozen=True)
class Partition:
    """Clustering of the vertex set with a recorded strong-diameter bound"""

    cluster_of: Tuple[int, ...]
    clusters: Tuple[VertexSet, ...]
    delta: float

    @classmethod
    def from_clusters(cls, n: int, clusters: Iterable[Iterable[int]], delta: float) -> "Partition":
        """
        Build a partition, checking that the clusters cover every vertex once

        Args:
            n: Number of vertices
            clusters: Vertex collections; empty ones are rejected
            delta: Strong-diameter bound to record

        Returns:
            Partition keeping the given cluster order
        """
        cluster_of = [-1] * n
        normalized = []
        for index, members in enumerate(clusters):
            members = vertex_set(members)
            if not members:
                raise InstanceError(f"Cluster {index} is empty")
            for v in members:
                if not 0 <= v < n:
                    raise InstanceError(f"Cluster {index} names vertex {v} outside [0, {n})")
                if cluster_of[v] != -1:
                    raise InstanceError(f"Vertex {v} appears in clusters {cluster_of[v]} and {index}")
                cluster_of[v] = index
            normalized.append(members)
        missing = [v for v in range(n) if cluster_of[v] == -1]
        if missing:
            raise InstanceError(f"Vertices not covered by any cluster: {missing[:10]}")
        return cls(tuple(cluster_of), tuple(normalized), float(delta))

    @classmethod
    def singletons(cls, n: int, delta: float = 0.0) -> "Partition":
        return cls.from_clusters(n, [[v] for v in range(n)], delta)

    @property
    def num_clusters(self) -> int:
        return len(self.clusters)

    def violations(self, g: WeightedGraph) -> List[str]:
        """Clusters that are disconnected or exceed the recorded diameter"""
        problems = []
        if len(self.cluster_of) != g.vertex_count:
            return [f"Partition covers {len(self.cluster_of)} vertices, graph has {g.vertex_count}"]
        for index, members in enumerate(self.clusters):
            diameter = strong_diameter(g, members)
            if diameter == INF:
                problems.append(f"Cluster {index} induces a disconnected subgraph")
            elif diameter > self.delta + TOLERANCE:
                problems.append(f"Cluster {index} has strong diameter {diameter} > {self.delta}")
        return problems


@dataclass(frozen=True)
class PathDecomposition:
    """Ordered bags; width is the largest bag size minus one"""

    bags: Tuple[VertexSet, ...]

    @classmethod
    def from_bags(cls, bags: Iterable[Iterable[int]]) -> "PathDecomposition":
        return cls(tuple(vertex_set(b) for b in bags))

    @property
    def width(self) -> int:
        return max((len(b) for b in self.bags), default=0) - 1


@dataclass
class DecompositionReport:
    """Outcome of :func:`validate_path_decomposition`"""

    ok: bool
    width: int
    message: str = ""
    edge: Optional[Tuple[int, int]] = None
    vertex: Optional[int] = None


@dataclass(frozen=True)
class ClusterAggInstance:
    """Graph, Δ-partition and portal set of a cluster-aggregation problem.

    ``dropped_portals`` holds portals removed by normalization; detours are
    measured against ``portals`` unless a caller explicitly asks for raw
    figures.
    """

    graph: WeightedGraph
    partition: Partition
    portals: VertexSet
    dropped_portals: VertexSet = ()
    path_decomposition: Optional[PathDecomposition] = None

    @property
    def delta(self) -> float:
        return self.partition.delta

    @property
    def num_clusters(self) -> int:
        return self.partition.num_clusters

    @cached_property
    def forest(self) -> PortalForest:
        """Nearest-portal shortest-path forest"""
        return multi_source_paths(self.graph, self.portals)

    @property
    def portal_distance(self) -> Tuple[float, ...]:
        """d_G(v, P) per vertex"""
        return self.forest.dist

    @cached_property
    def raw_portal_distance(self) -> Tuple[float, ...]:
        """d_G(v, P) counting dropped duplicate portals too"""
        if not self.dropped_portals:
            return self.forest.dist
        return tuple(distances_to_set(self.graph, self.portals + self.dropped_portals))

    @cached_property
    def portal_cluster(self) -> Dict[int, int]:
        """cluster index -> the (unique after normalization) portal it holds"""
        held: Dict[int, int] = {}
        for p in self.portals:
            held.setdefault(self.partition.cluster_of[p], p)
        return held


@dataclass(frozen=True)
class Assignment:
    """Cluster -> portal map f together with helpers for its pre-images"""

    portal_of_cluster: Tuple[int, ...]

    def portal_of(self, inst: ClusterAggInstance, v: int) -> int:
        return self.portal_of_cluster[inst.partition.cluster_of[v]]

    def preimages(self, inst: ClusterAggInstance) -> Dict[int, VertexSet]:
        """portal -> f^{-1}(portal) as a vertex set (nonempty ones only)"""
        members: Dict[int, List[int]] = {}
        for index, cluster in enumerate(inst.partition.clusters):
            members.setdefault(self.portal_of_cluster[index], []).extend(cluster)
        return {p: vertex_set(vs) for p, vs in sorted(members.items())}

    def preimage(self, inst: ClusterAggInstance, p: int) -> VertexSet:
        return self.preimages(inst).get(p, ())

    def coarse(self, inst: ClusterAggInstance) -> Partition:
        """Partition whose clusters are the nonempty pre-images"""
        groups = list(self.preimages(inst).values())
        delta = max((strong_diameter(inst.graph, c) for c in groups), default=0.0)
        return Partition.from_clusters(inst.graph.vertex_count, groups, delta)


def normalize_instance(inst: ClusterAggInstance) -> ClusterAggInstance:
    """
    Keep at most one portal per cluster (the smallest id)

    Args:
        inst: Instance that may hold several portals in one cluster

    Returns:
        Instance with the surplus portals moved to ``dropped_portals``
    """
    if not inst.portals:
        raise InstanceError("no portals")
    kept: Dict[int, int] = {}
    dropped = list(inst.dropped_portals)
    for p in sorted(inst.portals):
        cluster = inst.partition.cluster_of[p]
        if cluster in kept:
            dropped.append(p)
        else:
            kept[cluster] = p
    if len(dropped) == len(inst.dropped_portals):
        return inst
    logger.warning(
        "Normalization dropped %d duplicate portal(s); detours may shift by up to Δ=%g",
        len(dropped) - len(inst.dropped_portals), inst.delta,
    )
    return replace(inst, portals=vertex_set(kept.values()), dropped_portals=vertex_set(dropped))


def validate_path_decomposition(g: WeightedGraph, pd: PathDecomposition) -> DecompositionReport:
    """Check the vertex, connected-occurrence and edge properties of a decomposition"""
    positions: List[List[int]] = [[] for _ in range(g.vertex_count)]
    for index, bag in enumerate(pd.bags):
        for v in bag:
            if not 0 <= v < g.vertex_count:
                return DecompositionReport(False, pd.width, f"Bag {index} names unknown vertex {v}", vertex=v)
            positions[v].append(index)

    for v, occurrences in enumerate(positions):
        if not occurrences:
            return DecompositionReport(False, pd.width, f"Vertex {v} is in no bag", vertex=v)
        if occurrences[-1] - occurrences[0] + 1 != len(occurrences):
            return DecompositionReport(False, pd.width, f"Bags containing vertex {v} are not consecutive", vertex=v)

    for u, v, _ in g.edges:
        if max(positions[u][0], positions[v][0]) > min(positions[u][-1], positions[v][-1]):
            return DecompositionReport(False, pd.width, f"No bag contains edge ({u}, {v})", edge=(u, v))

    return DecompositionReport(True, pd.width)


def extend_decomposition(pd: PathDecomposition, matching: Iterable[Sequence[float]]) -> PathDecomposition:
    """
    Decomposition of G+N from one of G

    Each dangling vertex t with base vertex v gets its own copy of the first
    bag holding v, inserted right after it, so the width grows by at most one.
    """
    extra: Dict[int, List[int]] = {}
    first_bag: Dict[int, int] = {}
    for index, bag in enumerate(pd.bags):
        for v in bag:
            first_bag.setdefault(v, index)
    for t, v, _ in matching:
        extra.setdefault(first_bag[int(v)], []).append(int(t))

    bags: List[VertexSet] = []
    for index, bag in enumerate(pd.bags):
        bags.append(bag)
        for t in extra.get(index, []):
            bags.append(vertex_set(bag + (t,)))
    return PathDecomposition(tuple(bags))


# ---------------------------------------------------------------- generators

def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(int(seed))


def _weights(rng: np.random.Generator, count: int, max_weight: int) -> np.ndarray:
    if max_weight <= 1:
        return np.ones(count)
    return rng.integers(1, max_weight + 1, size=count).astype(float)


def gen_grid(side: int, seed: int, max_weight: int = 1) -> WeightedGraph:
    """side x side grid, vertex r*side+c, integer weights in [1, max_weight]"""
    if side < 1:
        raise PreconditionError(f"Grid side must be positive, got {side}")
    pairs = []
    for r in range(side):
        for c in range(side):
            v = r * side + c
            if c + 1 < side:
                pairs.append((v, v + 1))
            if r + 1 < side:
                pairs.append((v, v + side))
    weights = _weights(_rng(seed), len(pairs), max_weight)
    return WeightedGraph.from_edges(side * side, [(u, v, w) for (u, v), w in zip(pairs, weights)])


def gen_random_tree(n: int, seed: int, max_weight: int = 1) -> WeightedGraph:
    """Random recursive tree on n vertices with shuffled labels"""
    if n < 1:
        raise PreconditionError(f"Tree size must be positive, got {n}")
    rng = _rng(seed)
    labels = rng.permutation(n)
    weights = _weights(rng, n - 1, max_weight)
    edges = []
    for v in range(1, n):
        parent = int(rng.integers(0, v))
        edges.append((int(labels[v]), int(labels[parent]), weights[v - 1]))
    return WeightedGraph.from_edges(n, edges)


def gen_er(n: int, p: float, seed: int, max_weight: int = 1) -> WeightedGraph:
    """Connected Erdős–Rényi graph; resamples until connected"""
    if n < 1 or not 0 < p <= 1:
        raise PreconditionError(f"gen_er needs n >= 1 and p in (0, 1], got n={n}, p={p}")
    rng = _rng(seed)
    rows, cols = np.triu_indices(n, k=1)
    for attempt in range(CONNECTIVITY_RETRIES):
        keep = rng.random(len(rows)) < p
        weights = _weights(rng, int(keep.sum()), max_weight)
        g = WeightedGraph.from_edges(n, zip(rows[keep].tolist(), cols[keep].tolist(), weights.tolist()))
        if is_connected(g):
            logger.debug("gen_er connected after %d attempt(s)", attempt + 1)
            return g
    raise ConnectivityError(f"gen_er(n={n}, p={p}) stayed disconnected after {CONNECTIVITY_RETRIES} attempts")


def _dyadic(x: float) -> float:
    return max(round(x * 64) / 64, 1 / 64)


def gen_geometric(n: int, dims: int, radius: float, seed: int) -> WeightedGraph:
    """
    Random geometric graph in [0, n^(1/dims)]^dims

    Points closer than ``radius`` are joined; the Euclidean minimum spanning
    tree is added so the graph is always connected. Weights are Euclidean
    lengths rounded to multiples of 1/64.
    """
    if n < 1 or dims < 1 or radius <= 0:
        raise PreconditionError(f"gen_geometric needs positive n, dims and radius")
    rng = _rng(seed)
    points = rng.random((n, dims)) * n ** (1.0 / dims)

    pairs = set(cKDTree(points).query_pairs(radius))
    if n > 1:
        mst = minimum_spanning_tree(squareform(pdist(points))).tocoo()
        pairs.update((min(u, v), max(u, v)) for u, v in zip(mst.row.tolist(), mst.col.tolist()))
    edges = [(u, v, _dyadic(float(np.linalg.norm(points[u] - points[v])))) for u, v in sorted(pairs)]
    return WeightedGraph.from_edges(n, edges)


def gen_pathwidth(pw: int, length: int, seed: int, max_weight: int = 1) -> Tuple[WeightedGraph, PathDecomposition]:
    """
    Interval graph over a sliding window of pw+1 live vertices

    Vertex i is always joined to i+1 and to each of i+2..i+pw with
    probability 1/2; bags are the windows {j, ..., j+pw}.
    """
    if pw < 0 or length < 1:
        raise PreconditionError(f"gen_pathwidth needs pw >= 0 and length >= 1")
    if pw == 0 and length > 1:
        raise PreconditionError("A connected graph of pathwidth 0 has a single vertex")
    rng = _rng(seed)
    pairs = []
    for i in range(length):
        for k in range(1, pw + 1):
            if i + k < length and (k == 1 or rng.random() < 0.5):
                pairs.append((i, i + k))
    weights = _weights(rng, len(pairs), max_weight)
    g = WeightedGraph.from_edges(length, [(u, v, w) for (u, v), w in zip(pairs, weights)])

    window = min(pw + 1, length)
    bags = [range(j, j + window) for j in range(length - window + 1)]
    return g, PathDecomposition.from_bags(bags)


def gen_partition(g: WeightedGraph, delta: float, seed: int) -> Partition:
    """
    Seeded ball carving into connected clusters of strong diameter <= delta

    Centers are visited in a random order; each unclustered center takes the
    ball of radius delta/2 around it inside the still-unclustered subgraph.
    """
    if delta <= 0:
        raise PreconditionError(f"gen_partition needs delta > 0, got {delta}")
    order = _rng(seed).permutation(g.vertex_count)
    remaining = set(range(g.vertex_count))
    clusters = []
    for center in order.tolist():
        if center not in remaining:
            continue
        cluster = induced_ball(g, remaining, center, delta / 2)
        remaining.difference_update(cluster)
        clusters.append(cluster)

    partition = Partition.from_clusters(g.vertex_count, clusters, delta)
    problems = partition.violations(g)
    if problems:
        raise SolverInvariantError("gen_partition produced an invalid partition", {"problems": problems})
    return partition


def gen_portals(g: WeightedGraph, count: int, seed: int) -> VertexSet:
    """``count`` distinct portals chosen uniformly"""
    count = max(1, min(count, g.vertex_count))
    return vertex_set(_rng(seed).choice(g.vertex_count, size=count, replace=False).tolist())


def gen_instance(g: WeightedGraph, delta: float, num_portals: int, seed: int,
                 pd: Optional[PathDecomposition] = None) -> ClusterAggInstance:
    """Random partition plus random portals, normalized"""
    child = np.random.SeedSequence(int(seed)).generate_state(2)
    partition = gen_partition(g, delta, int(child[0]))
    portals = gen_portals(g, num_portals, int(child[1]))
    return normalize_instance(ClusterAggInstance(g, partition, portals, path_decomposition=pd))


# ------------------------------------------------------------------ fixtures

def fixture_trivial_lower_bound(delta: float) -> ClusterAggInstance:
    """
    Centre cluster of diameter Δ between two portals

    Vertices 0 and 3 are portals; {1, 2} is the centre cluster joined by an
    edge of weight Δ. Whichever side the centre joins, the far endpoint pays
    detour Δ.
    """
    g = WeightedGraph.from_edges(4, [(0, 1, 1), (1, 2, delta), (2, 3, 1)])
    partition = Partition.from_clusters(4, [[0], [1, 2], [3]], delta)
    return ClusterAggInstance(g, partition, (0, 3))


def fixture_tree_tight(D: float, delta: float, eps: float) -> Tuple[ClusterAggInstance, int]:
    """
    Tree on which the three-pass tree solver pays 4Δ - 2ε

    Root 0 and vertex 1 (the apex) form a monotone cluster whose portal 6
    hangs at distance D + 2Δ - 2ε. Cluster {2, 3} is bitone: its path of
    length D + Δ - ε climbs to 1 and descends to portal 5. Vertex 3 has its
    own portal 4 at distance D but is routed through the root to 6.

    Returns:
        (instance, witness vertex)
    """
    if not 0 < eps < delta:
        raise PreconditionError("fixture_tree_tight needs 0 < eps < delta")
    c = eps / 4
    edges = [
        (0, 1, delta - c),
        (1, 2, c),
        (2, 3, delta),
        (3, 4, D),
        (1, 5, D + delta - eps - c),
        (0, 6, D + 2 * delta - 2 * eps),
    ]
    g = WeightedGraph.from_edges(7, edges)
    partition = Partition.from_clusters(7, [[0, 1], [2, 3], [4], [5], [6]], delta)
    return ClusterAggInstance(g, partition, (4, 5, 6)), 3


# ---------------------------------------------------------------------- JSON

def instance_to_dict(inst: ClusterAggInstance) -> Dict[str, Any]:
    data: Dict[str, Any] = {
        "schema": SCHEMA_VERSION,
        "graph": {"n": inst.graph.vertex_count, "edges": [[u, v, w] for u, v, w in inst.graph.edges]},
        "partition": {"delta": inst.delta, "clusters": [list(c) for c in inst.partition.clusters]},
        "portals": list(inst.portals),
    }
    if inst.dropped_portals:
        data["dropped_portals"] = list(inst.dropped_portals)
    if inst.path_decomposition is not None:
        data["path_decomposition"] = {"bags": [list(b) for b in inst.path_decomposition.bags]}
    return data


def instance_from_dict(data: Dict[str, Any]) -> ClusterAggInstance:
    try:
        graph = WeightedGraph.from_edges(int(data["graph"]["n"]), data["graph"]["edges"])
        partition = Partition.from_clusters(graph.vertex_count, data["partition"]["clusters"],
                                            float(data["partition"]["delta"]))
        portals = vertex_set(data["portals"])
    except (KeyError, TypeError) as exc:
        raise InstanceError(f"Malformed instance JSON: missing or invalid field {exc}") from exc
    if any(not 0 <= p < graph.vertex_count for p in portals):
        raise InstanceError("Portal id out of range")
    pd = None
    if data.get("path_decomposition"):
        pd = PathDecomposition.from_bags(data["path_decomposition"]["bags"])
    return ClusterAggInstance(graph, partition, portals,
                              vertex_set(data.get("dropped_portals", [])), pd)


def canonical_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def content_hash(data: Any) -> str:
    """Git blob SHA-1 of the canonical JSON encoding"""
    payload = canonical_json(data).encode("utf-8")
    return hashlib.sha1(b"blob %d\0" % len(payload) + payload).hexdigest()


def save_instance(inst: ClusterAggInstance, path: Path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst), indent=2, sort_keys=True) + "\n")


def load_instance(path: Path) -> ClusterAggInstance:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{path} is not valid JSON: {exc}") from exc
    return instance_from_dict(data)


def assignment_to_dict(asg: Assignment) -> Dict[str, Any]:
    return {"schema": SCHEMA_VERSION, "portal_of_cluster": list(asg.portal_of_cluster)}
