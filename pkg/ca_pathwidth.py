"""
Pathwidth Cluster Aggregation
Deterministic 8(pw+1)-distortion aggregation driven by a path
decomposition: pw+1 phases of group formation, each split into an odd and
an even subphase
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set, Tuple

import pandas as pd

from errors import InstanceError, PreconditionError, SolverInvariantError
from graph_core import INF, induced_distances
from instances import (
    Assignment,
    ClusterAggInstance,
    PathDecomposition,
    normalize_instance,
    validate_path_decomposition,
)

logger = logging.getLogger(__name__)

TOLERANCE = 1e-9
PHASE_DETOUR_FACTOR = 8


@dataclass
class Group:
    """Clusters that aggregate towards one preferred portal in a phase"""

    portal: int
    first_bag: int
    last_bag: int
    clusters: List[int]

    @property
    def span(self) -> int:
        return self.last_bag - self.first_bag + 1


@dataclass
class PhaseAudit:
    """What happened in one phase"""

    phase: int
    partial_bags: int
    groups: List[Group] = field(default_factory=list)
    odd_conflicts: int = 0
    left_right_violations: List[int] = field(default_factory=list)
    group_overlaps: List[int] = field(default_factory=list)
    path_conflicts: List[Tuple[int, int]] = field(default_factory=list)
    assigned_clusters: int = 0
    max_detour: float = 0.0

    def to_dict(self) -> Dict:
        return {
            "phase": self.phase,
            "partial_bags": self.partial_bags,
            "groups": [[g.portal, g.first_bag, g.last_bag, len(g.clusters)] for g in self.groups],
            "odd_conflicts": self.odd_conflicts,
            "left_right_violations": self.left_right_violations,
            "group_overlaps": self.group_overlaps,
            "path_conflicts": [list(pair) for pair in self.path_conflicts],
            "assigned_clusters": self.assigned_clusters,
            "max_detour": self.max_detour,
        }


class PathwidthAggregator:
    """Phased aggregation over a path decomposition"""

    def __init__(self, inst: ClusterAggInstance, decomposition: Optional[PathDecomposition] = None):
        """
        Initialize the phase state

        Args:
            inst: Cluster-aggregation instance
            decomposition: Path decomposition of inst.graph (defaults to the
                one stored on the instance)
        """
        decomposition = decomposition or inst.path_decomposition
        if decomposition is None:
            raise PreconditionError("Pathwidth solver needs a path decomposition")
        report = validate_path_decomposition(inst.graph, decomposition)
        if not report.ok:
            raise InstanceError(f"Invalid path decomposition: {report.message}")

        self.inst = normalize_instance(inst)
        self.decomposition = decomposition
        self.width = decomposition.width
        self.partition = self.inst.partition
        self.forest = self.inst.forest

        self.portal_of: List[Optional[int]] = [None] * self.partition.num_clusters
        for c, p in self.inst.portal_cluster.items():
            self.portal_of[c] = p
        self.audits: List[PhaseAudit] = []

    # ---------------------------------------------------------------- state

    def assigned(self, v: int) -> bool:
        return self.portal_of[self.partition.cluster_of[v]] is not None

    def portal_at(self, v: int) -> Optional[int]:
        return self.portal_of[self.partition.cluster_of[v]]

    def first_assigned(self, path: Sequence[int]) -> Optional[int]:
        """Position of the first assigned node on a path, None if there is none"""
        for pos, v in enumerate(path):
            if self.assigned(v):
                return pos
        return None

    def preferred(self, v: int) -> int:
        """f(x) for the first assigned x on the nearest-portal path of v"""
        path = self.forest.path_from(v)
        pos = self.first_assigned(path)
        return self.portal_at(path[pos]) if pos is not None else path[-1]

    def partial_bags(self) -> List[Tuple[int, Tuple[int, ...]]]:
        """(bag index, unassigned nodes) for every bag that still has some"""
        result = []
        for index, bag in enumerate(self.decomposition.bags):
            rest = tuple(v for v in bag if not self.assigned(v))
            if rest:
                result.append((index, rest))
        return result

    # --------------------------------------------------------------- groups

    def build_groups(self, bags: List[Tuple[int, Tuple[int, ...]]],
                     audit: Optional[PhaseAudit] = None) -> List[Group]:
        """
        Greedy left-to-right grouping by longest runs of a shared portal

        Args:
            bags: Nonempty partial bags in decomposition order
            audit: Receives clusters that would join two groups

        Returns:
            Groups whose bag runs cover every partial bag once
        """
        cluster_of = self.partition.cluster_of
        cluster_portals: Dict[int, Set[int]] = {}
        bag_clusters: List[Set[int]] = []
        for _, rest in bags:
            touched = {cluster_of[v] for v in rest}
            for c in touched:
                if c not in cluster_portals:
                    cluster_portals[c] = {self.preferred(v) for v in self.partition.clusters[c]}
            bag_clusters.append(touched)
        bag_portals = [set().union(*(cluster_portals[c] for c in touched)) for touched in bag_clusters]

        groups: List[Group] = []
        placed: Set[int] = set()
        i = 0
        while i < len(bags):
            best_portal, best_len = None, 0
            for p in sorted(bag_portals[i]):
                length = 0
                while i + length < len(bags) and p in bag_portals[i + length]:
                    length += 1
                if length > best_len:
                    best_portal, best_len = p, length
            members = set()
            for j in range(i, i + best_len):
                members.update(c for c in bag_clusters[j] if best_portal in cluster_portals[c])
            overlaps = sorted(members & placed)
            if overlaps:
                logger.warning("Clusters %s meet two groups; keeping them in the first", overlaps)
                if audit is not None:
                    audit.group_overlaps.extend(overlaps)
            members -= placed
            placed |= members
            groups.append(Group(best_portal, bags[i][0], bags[i + best_len - 1][0], sorted(members)))
            i += best_len
        return groups

    def conflict_path(self, c: int, portal: int) -> List[int]:
        """
        Unassigned prefix of the nearest-portal path of the smallest node
        of cluster c that prefers ``portal``
        """
        for v in self.partition.clusters[c]:
            if self.preferred(v) == portal:
                path = self.forest.path_from(v)
                pos = self.first_assigned(path)
                return path if pos is None else path[:pos]
        return []

    # ------------------------------------------------------------ assigning

    def assign_segments(self, path: Sequence[int], tail: int) -> Set[int]:
        """
        Assign every unassigned cluster on ``path``

        Each maximal run of unassigned nodes joins the portal of the assigned
        node right after it; ``tail`` is the portal of the node that follows
        the whole path.

        Returns:
            Portals that the runs were attached to
        """
        cluster_of = self.partition.cluster_of
        used: Set[int] = set()
        while True:
            end = len(path)
            while end > 0 and self.assigned(path[end - 1]):
                end -= 1
            if end == 0:
                break
            start = end
            while start > 0 and not self.assigned(path[start - 1]):
                start -= 1
            # the run path[start:end] is followed by path[end] or by the tail
            target = tail if end == len(path) else self.portal_at(path[end])
            for c in sorted({cluster_of[v] for v in path[start:end]}):
                if self.portal_of[c] is None:
                    self.portal_of[c] = target
            used.add(target)
            if start == 0:
                break
            path = path[:start]
            tail = target
        return used

    def _bags_meeting(self, c: int, group: Group) -> List[int]:
        members = set(self.partition.clusters[c])
        return [index for index in range(group.first_bag, group.last_bag + 1)
                if members.intersection(self.decomposition.bags[index])]

    def _even_group(self, k: int, groups: List[Group], paths: Dict[int, List[int]],
                    audit: PhaseAudit) -> None:
        group = groups[k]
        left = groups[k - 1].portal if k >= 1 else None
        right = groups[k + 1].portal if k + 1 < len(groups) else None

        classes: Dict[int, List[int]] = {1: [], 2: [], 3: []}
        cut: Dict[int, List[int]] = {}
        tails: Dict[int, int] = {}
        for c in group.clusters:
            path = paths[c]
            pos = self.first_assigned(path)
            if pos is None:
                classes[1].append(c)
                cut[c] = path
                tails[c] = group.portal
                continue
            cut[c] = path[:pos]
            tails[c] = self.portal_at(path[pos])
            if tails[c] == left:
                classes[2].append(c)
            elif tails[c] == right:
                classes[3].append(c)
            else:
                audit.left_right_violations.append(c)
                logger.warning("Cluster %d hit portal %d, neither neighbouring group's", c, tails[c])
                classes[2].append(c)

        for c in classes[1]:
            self.assign_segments(cut[c], tails[c])

        if classes[2]:
            anchor = max(max(self._bags_meeting(c, group), default=-1) for c in classes[2])
            chosen = min(c for c in classes[2] if anchor in self._bags_meeting(c, group))
            self.assign_segments(cut[chosen], tails[chosen])

        if classes[3]:
            anchor = min(min(self._bags_meeting(c, group), default=INF) for c in classes[3])
            chosen = min(c for c in classes[3] if anchor in self._bags_meeting(c, group))
            self.assign_segments(cut[chosen], tails[chosen])

    def run_phase(self, phase: int) -> PhaseAudit:
        """One phase: groups, odd subphase, even subphase, then the checks"""
        bags = self.partial_bags()
        audit = PhaseAudit(phase=phase, partial_bags=len(bags))
        groups = self.build_groups(bags, audit)
        audit.groups = groups
        before = sum(1 for p in self.portal_of if p is None)

        paths = {c: self.conflict_path(c, g.portal) for g in groups for c in g.clusters}
        self._record_path_conflicts(groups, paths, audit)

        for k in range(0, len(groups), 2):
            group = groups[k]
            for c in group.clusters:
                used = self.assign_segments(paths[c], group.portal)
                audit.odd_conflicts += len(used - {group.portal})
        if audit.odd_conflicts:
            logger.warning("Phase %d: %d odd-subphase run(s) joined a foreign portal",
                           phase, audit.odd_conflicts)

        for k in range(1, len(groups), 2):
            self._even_group(k, groups, paths, audit)

        for index, rest in bags:
            if all(not self.assigned(v) for v in rest):
                raise SolverInvariantError(
                    f"Phase {phase} assigned no node of bag {index}",
                    {"phase": phase, "bag": index, "audit": audit.to_dict()},
                )

        audit.assigned_clusters = before - sum(1 for p in self.portal_of if p is None)
        audit.max_detour = self._check_detours(PHASE_DETOUR_FACTOR * phase, audit)
        logger.debug("Phase %d: %d groups, %d clusters assigned", phase, len(groups),
                     audit.assigned_clusters)
        return audit

    def _record_path_conflicts(self, groups: List[Group], paths: Dict[int, List[int]],
                               audit: PhaseAudit) -> None:
        cluster_of = self.partition.cluster_of
        touched = [{cluster_of[v] for c in g.clusters for v in paths[c]} for g in groups]
        for i in range(len(groups)):
            for j in range(i + 2, len(groups)):
                if touched[i] & touched[j]:
                    audit.path_conflicts.append((i, j))
        if audit.path_conflicts:
            logger.warning("Phase %d: non-adjacent groups share path clusters %s",
                           audit.phase, audit.path_conflicts)

    def _check_detours(self, factor: int, audit: PhaseAudit) -> float:
        values = partial_detours(self.inst, self.portal_of)
        worst = max((d for d in values if d is not None), default=0.0)
        bound = factor * self.inst.delta
        if worst > bound + TOLERANCE:
            raise SolverInvariantError(
                f"Detour {worst} exceeds {bound} after phase {audit.phase}",
                {"phase": audit.phase, "detour": worst, "bound": bound, "audit": audit.to_dict()},
            )
        return worst

    def solve(self) -> Tuple[Assignment, List[PhaseAudit]]:
        """
        Run phases until every cluster is assigned (at most pw+1)

        Returns:
            (assignment, per-phase audits)
        """
        phase = 0
        while any(p is None for p in self.portal_of):
            phase += 1
            if phase > self.width + 1:
                raise SolverInvariantError(
                    f"Clusters remain after {self.width + 1} phases",
                    {"unassigned": [c for c, p in enumerate(self.portal_of) if p is None]},
                )
            self.audits.append(self.run_phase(phase))

        asg = Assignment(tuple(self.portal_of))
        logger.info("Pathwidth aggregation finished in %d phase(s)", phase)
        return asg, self.audits


def partial_detours(inst: ClusterAggInstance, portal_of: Sequence[Optional[int]]) -> List[Optional[float]]:
    """Detour of every assigned vertex under a partial cluster -> portal map"""
    members: Dict[int, Set[int]] = {}
    for c, p in enumerate(portal_of):
        if p is not None:
            members.setdefault(p, set()).update(inst.partition.clusters[c])
    values: List[Optional[float]] = [None] * inst.graph.vertex_count
    for p, vertices in members.items():
        if p not in vertices:
            for v in vertices:
                values[v] = INF
            continue
        dist = induced_distances(inst.graph, vertices, p)
        for v in vertices:
            values[v] = dist[v] - inst.portal_distance[v]
    return values


def solve_pathwidth(inst: ClusterAggInstance,
                    decomposition: Optional[PathDecomposition] = None) -> Tuple[Assignment, List[PhaseAudit]]:
    """
    Aggregate with the phased pathwidth algorithm

    Args:
        inst: Instance (normalized on entry)
        decomposition: Valid path decomposition of inst.graph

    Returns:
        (assignment with max detour <= 8(pw+1)Δ, per-phase audits)
    """
    solver = PathwidthAggregator(inst, decomposition)
    asg, audits = solver.solve()
    bound = PHASE_DETOUR_FACTOR * (solver.width + 1) * solver.inst.delta
    worst = audits[-1].max_detour if audits else 0.0
    if worst > bound + TOLERANCE:
        raise SolverInvariantError(f"Final detour {worst} exceeds {bound}", {"bound": bound})
    return asg, audits


def audit_frame(audits: Sequence[PhaseAudit]) -> pd.DataFrame:
    """One row per phase"""
    return pd.DataFrame([
        {
            "phase": a.phase,
            "partial_bags": a.partial_bags,
            "groups": len(a.groups),
            "assigned_clusters": a.assigned_clusters,
            "odd_conflicts": a.odd_conflicts,
            "left_right_violations": len(a.left_right_violations),
            "group_overlaps": len(a.group_overlaps),
            "max_detour": a.max_detour,
        }
        for a in audits
    ])
