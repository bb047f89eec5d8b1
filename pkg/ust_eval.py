"""
UST Evaluation
Spanning trees as universal Steiner trees: induced subtree weights, exact
and approximate Steiner optima, and seeded ratio scans
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from errors import InstanceError, PreconditionError, SolverInvariantError
from graph_core import INF, VertexSet, WeightedGraph, distance_matrix, shortest_paths, vertex_set

logger = logging.getLogger(__name__)

EXACT_TERMINAL_LIMIT = 12
TOLERANCE = 1e-9


@dataclass(frozen=True)
class SpanningTree:
    """Rooted spanning tree of a host graph, stored as parent pointers"""

    root: int
    parent: Tuple[Optional[int], ...]
    weight: Tuple[float, ...]

    @property
    def vertex_count(self) -> int:
        return len(self.parent)

    def total_weight(self) -> float:
        return float(sum(self.weight))

    def depth_order(self) -> List[int]:
        """Vertices sorted so every parent precedes its children"""
        children: Dict[int, List[int]] = {}
        for v, p in enumerate(self.parent):
            if p is not None:
                children.setdefault(p, []).append(v)
        order = [self.root]
        for v in order:
            order.extend(children.get(v, []))
        return order

    def to_graph(self) -> WeightedGraph:
        edges = [(v, p, w) for v, (p, w) in enumerate(zip(self.parent, self.weight)) if p is not None]
        return WeightedGraph.from_edges(self.vertex_count, edges)


def tree_from_parent(g: WeightedGraph, root: int, parent: Sequence[Optional[int]]) -> SpanningTree:
    """
    Validate a parent array against its host graph

    Args:
        g: Host graph
        root: Root vertex (its parent must be None)
        parent: parent[v] for every vertex

    Returns:
        SpanningTree with weights taken from the host graph
    """
    n = g.vertex_count
    if len(parent) != n:
        raise InstanceError(f"Parent array has {len(parent)} entries for {n} vertices")
    if parent[root] is not None:
        raise InstanceError(f"Root {root} must not have a parent")
    weights = []
    for v, p in enumerate(parent):
        if v == root:
            weights.append(0.0)
            continue
        w = g.weight(v, p) if p is not None else None
        if w is None:
            raise InstanceError(f"Tree edge ({v}, {p}) is not an edge of the host graph")
        weights.append(w)

    tree = SpanningTree(root, tuple(parent), tuple(weights))
    if len(tree.depth_order()) != n:
        raise InstanceError("Parent array does not describe a tree spanning every vertex")
    return tree


def shortest_path_tree(g: WeightedGraph, root: int) -> SpanningTree:
    """Deterministic shortest-path tree from root"""
    table = shortest_paths(g, root)
    if any(d == INF for d in table.dist):
        raise PreconditionError("shortest_path_tree needs a connected graph")
    return tree_from_parent(g, root, table.parent)


def tree_distance(t: SpanningTree, u: int, v: int) -> float:
    """Weight of the tree path between u and v"""
    up: Dict[int, float] = {}
    x, acc = u, 0.0
    while x is not None:
        up[x] = acc
        acc += t.weight[x]
        x = t.parent[x]
    x, acc = v, 0.0
    while x not in up:
        acc += t.weight[x]
        x = t.parent[x]
    return acc + up[x]


def induced_subtree_weight(t: SpanningTree, s: Iterable[int]) -> float:
    """
    Weight of the minimal subtree T{S} connecting S

    Args:
        t: Spanning tree
        s: Terminal set; must contain the root

    Returns:
        Sum of the edges on the union of terminal-to-root paths
    """
    terminals = vertex_set(s)
    if t.root not in terminals:
        raise PreconditionError(f"Terminal set must contain the root {t.root}")
    marked = {t.root}
    total = 0.0
    for v in terminals:
        while v not in marked:
            marked.add(v)
            total += t.weight[v]
            v = t.parent[v]
    return total


def exact_steiner(g: WeightedGraph, s: Iterable[int], dist: Optional[np.ndarray] = None) -> float:
    """
    Optimal Steiner tree weight by the terminal-subset dynamic program

    Args:
        g: Graph
        s: Terminals, at most 12
        dist: Precomputed all-pairs distance matrix (optional)

    Returns:
        OPT_S, +inf when the terminals are disconnected
    """
    terminals = list(vertex_set(s))
    k = len(terminals)
    if k > EXACT_TERMINAL_LIMIT:
        raise PreconditionError(
            f"exact_steiner handles at most {EXACT_TERMINAL_LIMIT} terminals, got {k}; use approx_steiner"
        )
    if k <= 1:
        return 0.0
    dist = distance_matrix(g) if dist is None else dist
    full = (1 << k) - 1
    # dp[mask, v]: lightest tree spanning the terminals in mask plus v
    dp = np.full((full + 1, g.vertex_count), np.inf)
    for i, t in enumerate(terminals):
        dp[1 << i] = dist[t]
    for mask in range(1, full + 1):
        if mask & (mask - 1) == 0:
            continue
        low = mask & -mask
        best = dp[mask]
        sub = (mask - 1) & mask
        while sub:
            if sub & low:
                np.minimum(best, dp[sub] + dp[mask ^ sub], out=best)
            sub = (sub - 1) & mask
        dp[mask] = (best[:, None] + dist).min(axis=0)
    return float(dp[full, terminals[0]])


def approx_steiner(g: WeightedGraph, s: Iterable[int]) -> float:
    """
    Factor-2 Steiner estimate: MST weight of the metric closure over S

    Returns:
        Value between OPT_S and 2·OPT_S
    """
    terminals = list(vertex_set(s))
    if len(terminals) <= 1:
        return 0.0
    closure = nx.Graph()
    closure.add_nodes_from(terminals)
    for i, a in enumerate(terminals):
        dist = shortest_paths(g, a).dist
        for b in terminals[i + 1:]:
            if dist[b] == INF:
                return INF
            closure.add_edge(a, b, weight=dist[b])
    mst = nx.minimum_spanning_tree(closure, weight="weight")
    return float(mst.size(weight="weight"))


@dataclass
class UstScanReport:
    worst_ratio: float
    witness: VertexSet
    exact_used: bool
    trials: int
    ratios: List[float] = field(default_factory=list)

    def to_dict(self) -> Dict:
        return {
            "schema": 1,
            "worst_ratio": self.worst_ratio,
            "witness": list(self.witness),
            "exact_used": self.exact_used,
            "trials": self.trials,
        }


def ust_ratio_scan(g: WeightedGraph, t: SpanningTree, root: Optional[int] = None, trials: int = 100,
                   max_terminals: int = 6, seed: int = 0) -> UstScanReport:
    """
    Sample terminal sets containing the root and report the worst w(T{S}) / OPT_S

    Args:
        g: Host graph
        t: Spanning tree of g
        root: Root of the terminal sets (default: the tree root)
        trials: Number of sampled sets
        max_terminals: Largest terminal set size, root included
        seed: Sampling seed

    Returns:
        UstScanReport; exact optima are used whenever |S| <= 12
    """
    root = t.root if root is None else root
    if root != t.root:
        raise PreconditionError(f"Scan root {root} differs from the tree root {t.root}")
    if max_terminals < 2:
        raise PreconditionError(f"max_terminals must be at least 2, got {max_terminals}")
    n = g.vertex_count
    report = UstScanReport(worst_ratio=1.0, witness=(root,), exact_used=True, trials=trials)
    if n < 2:
        return report

    rng = np.random.default_rng(int(seed))
    others = [v for v in range(n) if v != root]
    dist = distance_matrix(g) if n <= 2000 and max_terminals <= EXACT_TERMINAL_LIMIT else None
    for _ in range(trials):
        size = int(rng.integers(1, min(max_terminals - 1, len(others)) + 1))
        terminals = vertex_set([root] + rng.choice(others, size=size, replace=False).tolist())
        tree_weight = induced_subtree_weight(t, terminals)
        if len(terminals) <= EXACT_TERMINAL_LIMIT:
            opt = exact_steiner(g, terminals, dist)
        else:
            opt = approx_steiner(g, terminals)
            report.exact_used = False
        if tree_weight < opt - TOLERANCE:
            raise SolverInvariantError(
                f"Tree subtree {tree_weight} is lighter than the Steiner optimum {opt}",
                {"terminals": list(terminals)},
            )
        if opt <= TOLERANCE:
            ratio = 1.0 if tree_weight <= TOLERANCE else INF
        else:
            ratio = tree_weight / opt
        report.ratios.append(ratio)
        if ratio > report.worst_ratio:
            report.worst_ratio, report.witness = ratio, terminals
    logger.info("UST scan: worst ratio %.4f over %d trials", report.worst_ratio, trials)
    return report
