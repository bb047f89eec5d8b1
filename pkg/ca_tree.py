"""
Tree Cluster Aggregation
Deterministic 4-distortion aggregation on trees via the monotone / bitone /
reflective classification of clusters
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from errors import PreconditionError, SolverInvariantError
from graph_core import WeightedGraph
from instances import Assignment, ClusterAggInstance, Partition, normalize_instance
from ca_general import detours

logger = logging.getLogger(__name__)

ROOT = 0
TOLERANCE = 1e-9

PORTAL = "portal"
MONOTONE = "monotone"
BITONE = "bitone"

# detour caps in units of Δ
CLASS_CAPS = {"portal": 0.0, "monotone": 2.0, "reflective": 2.0, "non_reflective": 4.0}


@dataclass
class Leafified:
    """Instance whose portals are all leaves in singleton clusters"""

    instance: ClusterAggInstance
    original: ClusterAggInstance
    back_map: Dict[int, int]
    added: int

    def lift(self, asg: Assignment) -> Assignment:
        """Map a solution of the leafified instance back to the original one"""
        k = self.original.num_clusters
        return Assignment(tuple(self.back_map.get(p, p) for p in asg.portal_of_cluster[:k]))


@dataclass
class TreeClassification:
    """Per-cluster root, nearest portal, path, kind, apex and reflective flag"""

    root: int
    cluster_root: List[int]
    preferred: List[int]
    paths: List[List[int]]
    kind: List[str]
    apex: List[Optional[int]]
    reflective: List[bool]

    def class_of(self, c: int) -> str:
        if self.kind[c] != BITONE:
            return self.kind[c]
        return "reflective" if self.reflective[c] else "non_reflective"


@dataclass
class TreeReport:
    classification: TreeClassification
    per_class_max: Dict[str, float] = field(default_factory=dict)
    unused_portals: Tuple[int, ...] = ()
    added_leaves: int = 0
    max_detour: float = 0.0

    def to_dict(self) -> Dict:
        kinds = [self.classification.class_of(c) for c in range(len(self.classification.kind))]
        return {
            "per_class_max": self.per_class_max,
            "class_counts": {name: kinds.count(name) for name in CLASS_CAPS},
            "unused_portals": list(self.unused_portals),
            "added_leaves": self.added_leaves,
            "max_detour": self.max_detour,
        }


def _require_tree(g: WeightedGraph) -> None:
    if not g.is_tree():
        raise PreconditionError(
            f"Tree solver needs a tree, got n={g.vertex_count} with {g.edge_count} edges"
        )


def leafify_portals(inst: ClusterAggInstance) -> Leafified:
    """
    Hang a zero-weight auxiliary portal off every portal that is not already
    a leaf in a singleton cluster

    Args:
        inst: Instance on a tree

    Returns:
        Leafified instance with the auxiliary-to-original portal map
    """
    _require_tree(inst.graph)
    g = inst.graph
    n = g.vertex_count
    partition = inst.partition

    extra_edges = []
    portals = []
    back_map: Dict[int, int] = {}
    for p in inst.portals:
        if g.degree(p) <= 1 and len(partition.clusters[partition.cluster_of[p]]) == 1:
            portals.append(p)
            continue
        aux = n + len(extra_edges)
        extra_edges.append((p, aux, 0.0))
        portals.append(aux)
        back_map[aux] = p

    if not extra_edges:
        return Leafified(inst, inst, {}, 0)

    clusters = list(partition.clusters) + [(aux,) for _, aux, _ in extra_edges]
    graph = g.with_extra(len(extra_edges), extra_edges)
    leafy = ClusterAggInstance(
        graph,
        Partition.from_clusters(graph.vertex_count, clusters, partition.delta),
        tuple(sorted(portals)),
    )
    logger.debug("Leafified %d portal(s)", len(extra_edges))
    return Leafified(leafy, inst, back_map, len(extra_edges))


def _euler(g: WeightedGraph, root: int) -> Tuple[List[int], List[int], List[int]]:
    # hop depth plus entry / exit times of an iterative DFS
    n = g.vertex_count
    depth = [-1] * n
    tin = [0] * n
    tout = [0] * n
    depth[root] = 0
    clock = 0
    stack = [(root, iter(g.neighbors(root)))]
    tin[root] = clock
    while stack:
        u, children = stack[-1]
        advanced = False
        for v, _ in children:
            if depth[v] == -1:
                depth[v] = depth[u] + 1
                clock += 1
                tin[v] = clock
                stack.append((v, iter(g.neighbors(v))))
                advanced = True
                break
        if not advanced:
            tout[u] = clock
            stack.pop()
    return depth, tin, tout


def classify_tree(inst: ClusterAggInstance, root: int = ROOT) -> TreeClassification:
    """
    Classify every cluster of a leafified tree instance

    A cluster is monotone when its nearest portal lies below its root and
    bitone otherwise; a bitone cluster's apex is the highest vertex of its
    portal path. Clusters containing some other cluster's apex are reflective.
    """
    _require_tree(inst.graph)
    partition = inst.partition
    forest = inst.forest
    depth, tin, tout = _euler(inst.graph, root)

    def below(a: int, b: int) -> bool:
        return tin[b] <= tin[a] and tout[a] <= tout[b]

    k = partition.num_clusters
    cluster_root, preferred, paths = [], [], []
    kind: List[str] = []
    apex: List[Optional[int]] = []
    for c, members in enumerate(partition.clusters):
        r = min(members, key=lambda v: (depth[v], v))
        path = forest.path_from(r)
        p = path[-1]
        cluster_root.append(r)
        preferred.append(p)
        paths.append(path)
        if c in inst.portal_cluster:
            kind.append(PORTAL)
            apex.append(None)
        elif below(p, r):
            kind.append(MONOTONE)
            apex.append(None)
        else:
            kind.append(BITONE)
            apex.append(min(path, key=lambda v: (depth[v], v)))

    reflective = [False] * k
    for c in range(k):
        if kind[c] == BITONE:
            reflective[partition.cluster_of[apex[c]]] = True
    return TreeClassification(root, cluster_root, preferred, paths, kind, apex, reflective)


def _assign(inst: ClusterAggInstance, cls: TreeClassification) -> Assignment:
    partition = inst.partition
    k = partition.num_clusters
    f: List[Optional[int]] = [None] * k

    for c in range(k):
        if cls.kind[c] in (PORTAL, MONOTONE):
            f[c] = cls.preferred[c]

    holders: Dict[int, List[int]] = {}
    for j in range(k):
        if cls.kind[j] == BITONE:
            holders.setdefault(partition.cluster_of[cls.apex[j]], []).append(j)
    for c in range(k):
        if cls.kind[c] == BITONE and cls.reflective[c]:
            f[c] = cls.preferred[min(holders[c])]

    for c in range(k):
        if f[c] is None:
            host = partition.cluster_of[cls.apex[c]]
            if f[host] is None:
                raise SolverInvariantError(
                    f"Bitone cluster {c} points at unassigned cluster {host}",
                    {"cluster": c, "host": host},
                )
            f[c] = f[host]
    return Assignment(tuple(f))


def solve_tree(inst: ClusterAggInstance) -> Tuple[Assignment, TreeReport]:
    """
    Three-pass tree aggregation: monotone, reflective bitone, then the
    remaining bitone clusters

    Args:
        inst: Instance on a tree

    Returns:
        (assignment of the original instance, report with per-class detours)

    Raises:
        PreconditionError: the graph is not a tree
        SolverInvariantError: a per-class detour cap failed
    """
    _require_tree(inst.graph)
    inst = normalize_instance(inst)
    leafy = leafify_portals(inst)
    work = leafy.instance
    cls = classify_tree(work)
    asg = _assign(work, cls)

    values = detours(work, asg)
    per_class: Dict[str, float] = {}
    for v, value in enumerate(values):
        name = cls.class_of(work.partition.cluster_of[v])
        per_class[name] = max(per_class.get(name, 0.0), value)
    for name, value in per_class.items():
        cap = CLASS_CAPS[name] * work.delta
        if value > cap + TOLERANCE:
            raise SolverInvariantError(
                f"{name} clusters reach detour {value} above {cap}",
                {"class": name, "detour": value, "cap": cap},
            )

    lifted = leafy.lift(asg)
    used = set(lifted.portal_of_cluster)
    report = TreeReport(
        classification=cls,
        per_class_max=per_class,
        unused_portals=tuple(p for p in inst.portals if p not in used),
        added_leaves=leafy.added,
        max_detour=max(values, default=0.0),
    )
    if report.unused_portals:
        logger.info("Tree solver left portal(s) %s without clusters", list(report.unused_portals))
    return lifted, report
