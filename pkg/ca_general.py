"""
General Cluster Aggregation
Round-robin geometric expansion of portal regions along maximal
internally disjoint prefixes of nearest-portal paths
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from errors import ConnectivityError, InstanceError, SolverInvariantError
from graph_core import INF, induced_distance, induced_distances, is_connected
from instances import Assignment, ClusterAggInstance, normalize_instance

logger = logging.getLogger(__name__)

DEFAULT_ROUNDS_FACTOR = 10
TOLERANCE = 1e-9


@dataclass
class GeneralStats:
    """Run record of :class:`GeneralAggregator`"""

    draws_per_portal: Dict[int, int]
    rounds_scheduled: int
    rounds_used: int = 0
    overrun: bool = False
    expansions: int = 0
    max_detour: float = 0.0
    ledger_ok: bool = True
    unassigned_after_schedule: int = 0
    history: List[int] = field(default_factory=list)

    def to_dict(self) -> Dict:
        return {
            "draws_per_portal": {str(p): g for p, g in self.draws_per_portal.items()},
            "rounds_scheduled": self.rounds_scheduled,
            "rounds_used": self.rounds_used,
            "overrun": self.overrun,
            "expansions": self.expansions,
            "max_detour": self.max_detour,
            "ledger_ok": self.ledger_ok,
            "unassigned_after_schedule": self.unassigned_after_schedule,
        }


class GeneralAggregator:
    """Randomized O(log κ)-distortion aggregation for arbitrary graphs"""

    def __init__(self, inst: ClusterAggInstance, seed: int = 0,
                 rounds_factor: int = DEFAULT_ROUNDS_FACTOR):
        """
        Initialize the expansion state

        Args:
            inst: Cluster-aggregation instance (normalized on entry)
            seed: Seed of the geometric draws
            rounds_factor: Scheduled rounds are rounds_factor * ceil(log2 |C|)
        """
        if not inst.portals:
            raise InstanceError("no portals")
        if not is_connected(inst.graph):
            raise ConnectivityError("solve_general needs a connected graph")
        self.inst = normalize_instance(inst)
        self.rng = np.random.default_rng(int(seed))
        self.rounds_factor = rounds_factor

        partition = self.inst.partition
        forest = self.inst.forest
        k = partition.num_clusters

        self.portal_of: List[Optional[int]] = [None] * k
        for c, p in self.inst.portal_cluster.items():
            self.portal_of[c] = p

        # pi_i runs from the representative (smallest id) to its nearest portal
        self.paths: List[List[int]] = [forest.path_from(cluster[0]) for cluster in partition.clusters]
        self.stop = [len(path) - 1 for path in self.paths]
        self.occurrences: Dict[int, List[Tuple[int, int]]] = {}
        for i, path in enumerate(self.paths):
            for pos, v in enumerate(path):
                self.occurrences.setdefault(partition.cluster_of[v], []).append((i, pos))
        for c, p in enumerate(self.portal_of):
            if p is not None:
                self._shorten(c)

        self.stats = GeneralStats(
            draws_per_portal={p: 0 for p in self.inst.portals},
            rounds_scheduled=max(1, rounds_factor * math.ceil(math.log2(max(k, 1)))),
        )

    def _shorten(self, c: int) -> None:
        # cluster c just got assigned: every prefix through it now ends there
        for i, pos in self.occurrences.get(c, ()):
            if pos < self.stop[i]:
                self.stop[i] = pos

    def final(self, i: int) -> int:
        """Final node of the current MID prefix of cluster i"""
        return self.paths[i][self.stop[i]]

    def mid_prefix(self, i: int) -> List[int]:
        return self.paths[i][: self.stop[i] + 1]

    def unassigned(self) -> List[int]:
        return [c for c, p in enumerate(self.portal_of) if p is None]

    def expand(self, p: int) -> int:
        """
        One expansion iteration of portal p

        Returns:
            Number of clusters newly assigned to p
        """
        cluster_of = self.inst.partition.cluster_of
        claim_from = [i for i in self.unassigned()
                      if self.portal_of[cluster_of[self.final(i)]] == p]
        claimed = sorted({
            cluster_of[v]
            for i in claim_from
            for v in self.mid_prefix(i)
            if self.portal_of[cluster_of[v]] is None
        })
        for c in claimed:
            self.portal_of[c] = p
        for c in claimed:
            self._shorten(c)
        self.stats.expansions += 1
        return len(claimed)

    def run_round(self) -> None:
        for p in self.inst.portals:
            draws = int(self.rng.geometric(0.5))
            self.stats.draws_per_portal[p] += draws
            for _ in range(draws):
                self.expand(p)
        self.stats.rounds_used += 1
        self.stats.history.append(len(self.unassigned()))

    def solve(self) -> Tuple[Assignment, GeneralStats]:
        """
        Run the scheduled rounds, then extra rounds until every cluster is assigned

        Returns:
            (assignment, stats)
        """
        while self.stats.rounds_used < self.stats.rounds_scheduled and self.unassigned():
            self.run_round()

        remaining = len(self.unassigned())
        self.stats.unassigned_after_schedule = remaining
        if remaining:
            self.stats.overrun = True
            logger.info("%d cluster(s) unassigned after %d scheduled rounds; running extra rounds",
                        remaining, self.stats.rounds_scheduled)
        while self.unassigned():
            self.run_round()

        asg = Assignment(tuple(self.portal_of))
        self._check(asg)
        logger.info("General aggregation finished in %d round(s), max detour %g",
                    self.stats.rounds_used, self.stats.max_detour)
        return asg, self.stats

    def _check(self, asg: Assignment) -> None:
        inst = self.inst
        for p, members in asg.preimages(inst).items():
            if p not in members or not is_connected(inst.graph, members):
                raise SolverInvariantError(f"Pre-image of portal {p} is not connected to it",
                                           {"portal": p})
        values = detours(inst, asg)
        self.stats.max_detour = max(values, default=0.0)
        for v, value in enumerate(values):
            p = asg.portal_of(inst, v)
            # the portal's own cluster contributes up to one Δ before any expansion
            budget = (2 * self.stats.draws_per_portal[p] + 1) * inst.delta
            if value > budget + TOLERANCE:
                self.stats.ledger_ok = False
                raise SolverInvariantError(
                    f"Vertex {v} has detour {value} above the ledger bound {budget}",
                    {"vertex": v, "portal": p, "detour": value, "bound": budget},
                )


def solve_general(inst: ClusterAggInstance, seed: int = 0,
                  rounds_factor: int = DEFAULT_ROUNDS_FACTOR) -> Tuple[Assignment, GeneralStats]:
    """Convenience wrapper around :class:`GeneralAggregator`"""
    return GeneralAggregator(inst, seed, rounds_factor).solve()


def detour(inst: ClusterAggInstance, asg: Assignment, v: int) -> float:
    """
    Detour of v under asg

    Args:
        inst: Instance the assignment belongs to
        asg: Cluster -> portal map
        v: Vertex

    Returns:
        d inside f^-1(f(v)) from v to f(v), minus d_G(v, P); +inf when the
        pre-image separates them
    """
    p = asg.portal_of(inst, v)
    members = asg.preimage(inst, p)
    if p not in members:
        return INF
    return induced_distance(inst.graph, members, v, p) - inst.portal_distance[v]


def detours(inst: ClusterAggInstance, asg: Assignment, raw: bool = False) -> List[float]:
    """
    Detour of every vertex, one induced search per used portal

    Args:
        inst: Instance
        asg: Assignment
        raw: Measure against portals plus dropped duplicate portals

    Returns:
        Detours indexed by vertex
    """
    base = inst.raw_portal_distance if raw else inst.portal_distance
    values = [INF] * inst.graph.vertex_count
    for p, members in asg.preimages(inst).items():
        if p not in members:
            continue
        dist = induced_distances(inst.graph, members, p)
        for v in members:
            values[v] = dist[v] - base[v]
    return values
