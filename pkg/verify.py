"""
Verification
Checkers that certify solver, net and hierarchy outputs, plus a brute-force
cluster-aggregation oracle for tiny instances
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

from errors import PreconditionError
from graph_core import INF, WeightedGraph, is_connected, strong_diameter
from instances import Assignment, ClusterAggInstance, Partition
from dangling_net import DanglingNet, check_sparsity, covering_distances
from ca_general import detours
from hierarchy import Hierarchy, audit_level

logger = logging.getLogger(__name__)

ORACLE_BUDGET = 10 ** 6
EXHAUSTIVE_LIMIT = 2000
TOLERANCE = 1e-9


@dataclass
class AssignmentReport:
    """Validity and detour figures of an assignment"""

    valid: bool
    violations: List[str] = field(default_factory=list)
    max_detour: float = 0.0
    realized_beta: float = 0.0
    max_raw_detour: float = 0.0
    connectivity_ok: bool = True
    portal_clusters_fixed: bool = True
    unused_portals: Tuple[int, ...] = ()
    per_class: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict:
        return {
            "valid": self.valid,
            "violations": self.violations,
            "max_detour": self.max_detour,
            "realized_beta": self.realized_beta,
            "max_raw_detour": self.max_raw_detour,
            "connectivity_ok": self.connectivity_ok,
            "portal_clusters_fixed": self.portal_clusters_fixed,
            "unused_portals": list(self.unused_portals),
            "per_class": self.per_class,
        }


def _preimage_problems(inst: ClusterAggInstance, asg: Assignment) -> List[str]:
    problems = []
    for p, members in asg.preimages(inst).items():
        if p not in members:
            problems.append(f"pre-image of portal {p} does not contain it")
        elif not is_connected(inst.graph, members):
            problems.append(f"pre-image of portal {p} is disconnected")
    return problems


def check_assignment(inst: ClusterAggInstance, asg: Assignment,
                     classes: Optional[Sequence[str]] = None) -> AssignmentReport:
    """
    Validate an assignment and measure its detours

    An assignment is valid when it names a portal for every cluster and
    every nonempty pre-image is connected and contains its portal.

    Args:
        inst: Instance
        asg: Assignment to check
        classes: Optional label per cluster for per-class detour maxima

    Returns:
        AssignmentReport (never raises)
    """
    report = AssignmentReport(valid=True)
    portals = set(inst.portals)
    if len(asg.portal_of_cluster) != inst.num_clusters:
        report.valid = False
        report.violations.append(
            f"assignment covers {len(asg.portal_of_cluster)} clusters, instance has {inst.num_clusters}"
        )
        return report
    strays = [c for c, p in enumerate(asg.portal_of_cluster) if p not in portals]
    if strays:
        report.valid = False
        report.violations.append(f"clusters {strays[:10]} are not mapped to a portal")
        return report

    problems = _preimage_problems(inst, asg)
    if problems:
        report.valid = False
        report.connectivity_ok = False
        report.violations.extend(problems)

    for c, p in inst.portal_cluster.items():
        if asg.portal_of_cluster[c] != p:
            report.portal_clusters_fixed = False
    used = set(asg.portal_of_cluster)
    report.unused_portals = tuple(p for p in inst.portals if p not in used)

    values = detours(inst, asg)
    report.max_detour = max(values, default=0.0)
    report.max_raw_detour = max(detours(inst, asg, raw=True), default=0.0)
    report.realized_beta = report.max_detour / inst.delta if inst.delta > 0 else report.max_detour
    if classes is not None:
        for v, value in enumerate(values):
            name = classes[inst.partition.cluster_of[v]]
            report.per_class[name] = max(report.per_class.get(name, 0.0), value)
    return report


def oracle_min_distortion(inst: ClusterAggInstance,
                          budget: int = ORACLE_BUDGET) -> Tuple[float, Optional[Assignment]]:
    """
    Exhaustive optimum of the max detour over every valid assignment

    Args:
        inst: Tiny instance
        budget: Largest |P|^|C| the search accepts

    Returns:
        (optimal max detour, first assignment attaining it)
    """
    k = inst.num_clusters
    portals = inst.portals
    if len(portals) ** k > budget:
        raise PreconditionError(f"Oracle search space {len(portals)}^{k} exceeds the budget {budget}")
    best, argmin = INF, None
    for choice in itertools.product(portals, repeat=k):
        asg = Assignment(tuple(choice))
        if _preimage_problems(inst, asg):
            continue
        value = max(detours(inst, asg), default=0.0)
        if value < best - TOLERANCE:
            best, argmin = value, asg
    logger.debug("Oracle optimum %g over %d assignments", best, len(portals) ** k)
    return best, argmin


@dataclass
class HierarchyReport:
    ok: bool
    violations: List[str] = field(default_factory=list)
    coarsening_ok: bool = True
    coarsening_vertex: Optional[int] = None
    singletons_ok: bool = True
    single_top_ok: bool = True
    diameters_ok: bool = True
    diameters_checked: bool = True
    sparsity_ok: bool = True

    def to_dict(self) -> Dict:
        return dict(self.__dict__)


def check_hierarchy(g: WeightedGraph, h: Union[Hierarchy, Sequence[Partition]],
                    gamma: Optional[float] = None) -> HierarchyReport:
    """
    Replay the hierarchy invariants

    Checks that C_0 is singletons, the last level one cluster, each level
    coarsens the previous, strong diameters stay within γ^i and (for
    audited levels) balls meet no more clusters than the net certified.

    Args:
        g: Base graph
        h: Hierarchy, or a bare list of level partitions
        gamma: Growth factor, read from the hierarchy when omitted. A bare
            list without it fails the report

    Returns:
        HierarchyReport (never raises)
    """
    report = HierarchyReport(ok=True)
    levels = list(h.levels) if isinstance(h, Hierarchy) else list(h)
    if gamma is None and isinstance(h, Hierarchy):
        gamma = h.params.gamma

    def fail(message: str) -> None:
        report.ok = False
        report.violations.append(message)

    if not levels:
        fail("hierarchy has no levels")
        return report
    if any(len(c) != 1 for c in levels[0].clusters) or levels[0].num_clusters != g.vertex_count:
        report.singletons_ok = False
        fail("level 0 is not the singleton partition")
    if levels[-1].num_clusters != 1:
        report.single_top_ok = False
        fail(f"top level has {levels[-1].num_clusters} clusters")

    for i in range(len(levels) - 1):
        upper = levels[i + 1].cluster_of
        for members in levels[i].clusters:
            home = upper[members[0]]
            for v in members:
                if upper[v] != home:
                    report.coarsening_ok = False
                    if report.coarsening_vertex is None:
                        report.coarsening_vertex = v
                    fail(f"vertex {v} leaves its level-{i} cluster at level {i + 1}")
                    break

    if gamma is None:
        report.diameters_checked = False
        fail("no growth factor given; strong diameters left unchecked")
    else:
        for i, level in enumerate(levels):
            for index, members in enumerate(level.clusters):
                diameter = strong_diameter(g, members)
                if diameter > gamma ** i + TOLERANCE:
                    report.diameters_ok = False
                    fail(f"level {i} cluster {index} has strong diameter {diameter} > {gamma ** i}")

    if isinstance(h, Hierarchy) and h.params.solver != "doubling":
        exhaustive = g.vertex_count <= EXHAUSTIVE_LIMIT
        for level, audit in zip(levels, h.audits):
            if audit.net_max_count is None:
                continue
            _, _, sparsity, witness = audit_level(g, level, audit.scale, h.params.ball_divisor, exhaustive)
            if sparsity > audit.net_max_count:
                report.sparsity_ok = False
                fail(f"level {audit.level}: ball at {witness} meets {sparsity} > {audit.net_max_count} clusters")
    return report


@dataclass
class NetReport:
    ok: bool
    violations: List[str] = field(default_factory=list)
    covering_ok: bool = True
    covering_witness: Optional[int] = None
    max_cover_distance: float = 0.0
    leaves_ok: bool = True
    weights_ok: bool = True
    sparsity_count: int = 0
    sparsity_ok: bool = True

    def to_dict(self) -> Dict:
        return dict(self.__dict__)


def check_net(gN: WeightedGraph, net: DanglingNet) -> NetReport:
    """
    Replay the dangling-net invariants on G+N

    Returns:
        NetReport covering the covering radius, net-leaf structure, matching
        weights and the additive sparsity count (never raises)
    """
    report = NetReport(ok=True)

    def fail(message: str) -> None:
        report.ok = False
        report.violations.append(message)

    cover = covering_distances(gN, net)
    report.max_cover_distance = max(cover, default=0.0)
    for v, d in enumerate(cover):
        if d > net.cover_radius + TOLERANCE:
            report.covering_ok = False
            report.covering_witness = v
            fail(f"vertex {v} is {d} from the net, above {net.cover_radius}")
            break

    for t, v, w in net.matching:
        if gN.neighbors(t) != ((v, w),):
            report.leaves_ok = False
            fail(f"net vertex {t} is not a leaf hanging off {v}")
        shift = net.shifts[v]
        if not 0 <= shift <= net.delta + TOLERANCE or abs(w - (net.delta - shift)) > TOLERANCE:
            report.weights_ok = False
            fail(f"matching edge ({v}, {t}) has weight {w}, expected Δ - δ = {net.delta - shift}")

    count, witness = check_sparsity(gN, net)
    report.sparsity_count = count
    if count != net.max_count:
        fail(f"sparsity count {count} differs from the certified {net.max_count}")
    if count > net.tau_target:
        report.sparsity_ok = False
        fail(f"vertex {witness} sees {count} > {net.tau_target} net vertices")
    return report
