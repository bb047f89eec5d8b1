"""
Doubling Cluster Aggregation
Iterated truncated-exponential shift clustering with contraction of the
absorbed regions, completed by Moser-Tardos resampling
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from errors import PreconditionError, RetryBudgetError, SolverInvariantError
from graph_core import INF, WeightedGraph, bounded_distances, distances_to_set, induced_distances, shortest_paths
from ca_general import detours
from instances import Assignment, ClusterAggInstance, normalize_instance

logger = logging.getLogger(__name__)

TOLERANCE = 1e-9
PACKING_AUDIT_LIMIT = 2000
RESAMPLE_BUDGET_FACTOR = 10


@dataclass
class DoublingParams:
    """
    Constants of the doubling solver

    Args:
        d: Doubling dimension the bounds are stated for
        delta: Cluster diameter Δ
        c_lambda: Relative portal separation c_Λ in (0, 1)
        lam: λ in Λ = λ·d³·log2(max(d, 2))·Δ
        c_s: Factor of the iteration count s
        s_min: Lower bound on s
        resample_budget: Moser-Tardos budget (default 10·|C|)
    """

    d: float
    delta: float
    c_lambda: float = 0.5
    lam: float = 8.0
    c_s: float = 1.0
    s_min: int = 8
    resample_budget: Optional[int] = None

    def __post_init__(self):
        if self.d <= 0:
            raise PreconditionError(f"Doubling dimension must be positive, got {self.d}")
        if not 0 < self.c_lambda < 1:
            raise PreconditionError(f"c_lambda must lie in (0, 1), got {self.c_lambda}")
        if self.delta < 0:
            raise PreconditionError(f"delta must be nonnegative, got {self.delta}")
        if self.big_lambda < self.c_top * self.delta - TOLERANCE:
            raise PreconditionError(
                f"Net scale {self.big_lambda} is below c_top·Δ = {self.c_top * self.delta}; raise lam"
            )

    @property
    def log_d(self) -> float:
        return math.log2(max(self.d, 2))

    @property
    def big_lambda(self) -> float:
        """Portal net scale Λ"""
        return self.lam * self.d ** 3 * self.log_d * self.delta

    @property
    def c_top(self) -> float:
        return math.log(math.ceil(4 / self.c_lambda)) + 3

    @property
    def s(self) -> int:
        return max(math.ceil(self.c_s * self.d * self.log_d), self.s_min)

    @property
    def resample_radius(self) -> float:
        return 8 * self.s * self.big_lambda

    @property
    def step(self) -> float:
        """Per-iteration growth (c_top·d + 2)·Δ of the distance to the portals"""
        return (self.c_top * self.d + 2) * self.delta

    @property
    def detour_bound(self) -> float:
        return self.s * self.step + self.delta

    def to_dict(self) -> Dict:
        return {
            "d": self.d,
            "delta": self.delta,
            "c_lambda": self.c_lambda,
            "lam": self.lam,
            "c_s": self.c_s,
            "s_min": self.s_min,
            "Lambda": self.big_lambda,
            "c_top": self.c_top,
            "s": self.s,
            "resample_radius": self.resample_radius,
            "detour_bound": self.detour_bound,
        }


@dataclass
class PreconditionReport:
    ok: bool
    violations: List[str] = field(default_factory=list)
    witnesses: List[Tuple[int, int]] = field(default_factory=list)
    covering_radius: float = 0.0
    portal_separation: float = INF
    center_separation: float = INF


@dataclass
class IterationTrace:
    iteration: int
    assigned: int
    unassigned: int


@dataclass
class ResampleEntry:
    """One Moser-Tardos step: the event cluster and the portals resampled"""

    cluster: int
    resampled_portals: int
    residual: int


@dataclass
class DoublingResult:
    assignment: Assignment
    params: DoublingParams
    shifts: np.ndarray
    resample_log: List[ResampleEntry]
    trace: List[IterationTrace]
    preconditions: PreconditionReport
    distance_violations: int = 0
    packing_warnings: int = 0
    max_detour: float = 0.0

    def to_dict(self, dump_shifts: bool = False) -> Dict:
        data = {
            "params": self.params.to_dict(),
            "preconditions_ok": self.preconditions.ok,
            "precondition_violations": self.preconditions.violations,
            "resamples": len(self.resample_log),
            "resample_log": [[e.cluster, e.resampled_portals, e.residual] for e in self.resample_log],
            "distance_violations": self.distance_violations,
            "packing_warnings": self.packing_warnings,
            "max_detour": self.max_detour,
        }
        if dump_shifts:
            data["shifts"] = self.shifts.tolist()
        return data


def default_centers(inst: ClusterAggInstance) -> List[int]:
    """Smallest vertex of every cluster"""
    return [cluster[0] for cluster in inst.partition.clusters]


def _min_pair(g: WeightedGraph, points: Sequence[int]) -> Tuple[float, Optional[Tuple[int, int]]]:
    best, pair = INF, None
    for i, a in enumerate(points):
        dist = shortest_paths(g, a).dist
        for b in points[i + 1:]:
            if dist[b] < best:
                best, pair = dist[b], (a, b)
    return best, pair


def check_preconditions(inst: ClusterAggInstance, params: DoublingParams,
                        centers: Optional[Sequence[int]] = None) -> PreconditionReport:
    """
    Check the portal-net and center-separation conditions

    Returns:
        Report naming every violated condition with its witness pair
    """
    g = inst.graph
    report = PreconditionReport(ok=True)
    portals = list(inst.portals)

    report.covering_radius = max(distances_to_set(g, portals), default=0.0)
    if report.covering_radius > params.big_lambda + TOLERANCE:
        report.ok = False
        far = int(np.argmax(distances_to_set(g, portals)))
        report.violations.append(
            f"portal covering radius {report.covering_radius} exceeds Λ={params.big_lambda} at vertex {far}"
        )
        report.witnesses.append((far, far))

    separation, pair = _min_pair(g, portals)
    report.portal_separation = separation
    if pair is not None and separation < params.c_lambda * params.big_lambda - TOLERANCE:
        report.ok = False
        report.violations.append(
            f"portals {pair[0]} and {pair[1]} at distance {separation} < c_Λ·Λ={params.c_lambda * params.big_lambda}"
        )
        report.witnesses.append(pair)

    centers = list(centers) if centers is not None else default_centers(inst)
    separation, pair = _min_pair(g, centers)
    report.center_separation = separation
    if pair is not None and separation < params.c_lambda / 3 * params.delta - TOLERANCE:
        report.ok = False
        report.violations.append(
            f"centers {pair[0]} and {pair[1]} at distance {separation} < c_Λ·Δ/3={params.c_lambda / 3 * params.delta}"
        )
        report.witnesses.append(pair)
    return report


def sample_shift_matrix(rng: np.random.Generator, params: DoublingParams, portals: int) -> np.ndarray:
    """s x |P| matrix of shifts min(Exp(1), c_top·d)·Δ"""
    raw = rng.exponential(1.0, size=(params.s, portals))
    return np.minimum(raw, params.c_top * params.d) * params.delta


class ContractionState:
    """Absorbed regions A_p and the contracted graph built from them"""

    def __init__(self, inst: ClusterAggInstance):
        self.inst = inst
        self.portal_of: List[Optional[int]] = [None] * inst.num_clusters
        self.absorbed: Dict[int, Set[int]] = {p: set() for p in inst.portals}
        for c, p in inst.portal_cluster.items():
            self.assign(c, p)

    def assign(self, c: int, p: int) -> None:
        self.portal_of[c] = p
        self.absorbed[p].update(self.inst.partition.clusters[c])

    def unassigned(self) -> List[int]:
        return [c for c, p in enumerate(self.portal_of) if p is None]

    def inside_distances(self) -> Dict[int, List[float]]:
        """d_{G[A_p]}(p, ·) per portal"""
        return {p: induced_distances(self.inst.graph, members, p) for p, members in self.absorbed.items()}

    def contracted(self, inside: Optional[Dict[int, List[float]]] = None) -> WeightedGraph:
        """
        G_i on the base ids: unassigned vertices keep their edges, every
        region A_p collapses onto p, other absorbed vertices become isolated

        Args:
            inside: Precomputed inside_distances() of the current regions
        """
        g = self.inst.graph
        owner: Dict[int, int] = {}
        for p, members in self.absorbed.items():
            for v in members:
                owner[v] = p
        if inside is None:
            inside = self.inside_distances()
        edges = []
        for u, v, w in g.edges:
            pu, pv = owner.get(u), owner.get(v)
            if pu is None and pv is None:
                edges.append((u, v, w))
            elif pu is None:
                edges.append((u, pv, inside[pv][v] + w))
            elif pv is None:
                edges.append((v, pu, inside[pu][u] + w))
        return WeightedGraph.from_edges(g.vertex_count, edges)


def _iteration(state: ContractionState, shifts: np.ndarray, graph: WeightedGraph) -> Dict[int, int]:
    """One clustering step on the contracted graph of the current state; returns cluster -> portal"""
    inst = state.inst
    partition = inst.partition
    portals = list(inst.portals)
    open_clusters = state.unassigned()
    open_vertices = [v for c in open_clusters for v in partition.clusters[c]]

    dist = {p: shortest_paths(graph, p).dist for p in portals}
    g_value = {p: {v: shifts[k] - dist[p][v] for v in open_vertices} for k, p in enumerate(portals)}
    best = {v: max(g_value[p][v] for p in portals) for v in open_vertices}

    chooses: Dict[int, Set[int]] = {}
    for c in open_clusters:
        chooses[c] = {
            p for p in portals
            if all(g_value[p][u] >= best[u] - TOLERANCE for u in partition.clusters[c])
        }

    satisfied: Dict[int, int] = {}
    for p in portals:
        dp = dist[p]
        good = {p}
        for v in sorted(open_vertices, key=lambda x: (dp[x], x)):
            if dp[v] == INF or p not in chooses[partition.cluster_of[v]]:
                continue
            if any(y in good and abs(dp[y] + w - dp[v]) <= TOLERANCE for y, w in graph.neighbors(v)):
                good.add(v)
                c = partition.cluster_of[v]
                satisfied.setdefault(c, p)
    return satisfied


def run_iterations(inst: ClusterAggInstance, params: DoublingParams,
                   shifts: np.ndarray) -> Tuple[List[Optional[int]], List[int], List[IterationTrace], int]:
    """
    Deterministic s-iteration pass for a fixed shift matrix

    Returns:
        (partial cluster -> portal map, unassigned clusters, per-iteration
        trace, number of distance-bound violations)
    """
    state = ContractionState(inst)
    base = inst.portal_distance
    trace: List[IterationTrace] = []
    violations = 0
    # one contraction per iteration: the graph left by step i is the input of step i + 1
    graph = state.contracted()
    for i in range(params.s):
        if not state.unassigned():
            break
        satisfied = _iteration(state, shifts[i], graph)
        for c, p in sorted(satisfied.items()):
            state.assign(c, p)
        trace.append(IterationTrace(i + 1, len(satisfied), len(state.unassigned())))
        inside = state.inside_distances()
        graph = state.contracted(inside)
        violations += _distance_violations(state, base, (i + 1) * params.step + params.delta, graph, inside)
    return state.portal_of, state.unassigned(), trace, violations


def _distance_violations(state: ContractionState, base: Sequence[float], slack: float,
                         graph: WeightedGraph, inside: Dict[int, List[float]]) -> int:
    # d_{G_j}(P, v) for open vertices and d_{G[A_p]}(v, p) for absorbed ones
    # may exceed d_G(v, P) by at most j·(c_top·d + 2)·Δ + Δ
    count = 0
    for p, dist in inside.items():
        count += sum(1 for v in state.absorbed[p] if dist[v] > base[v] + slack + TOLERANCE)
    open_vertices = [v for c in state.unassigned() for v in state.inst.partition.clusters[c]]
    if open_vertices:
        to_portals = distances_to_set(graph, state.inst.portals)
        count += sum(1 for v in open_vertices if to_portals[v] > base[v] + slack + TOLERANCE)
    return count


def packing_warnings(inst: ClusterAggInstance, params: DoublingParams) -> int:
    """
    Vertices with more nearby portals than the packing bound allows

    Counts portals within R = d(v, P) + (c_top·d + 2)·Δ and compares with
    (2R / r)^d for r = c_Λ·Λ.
    """
    g = inst.graph
    if g.vertex_count > PACKING_AUDIT_LIMIT:
        return 0
    separation = params.c_lambda * params.big_lambda
    if separation <= 0:
        return 0
    portals = inst.portals
    warnings = 0
    for v in range(g.vertex_count):
        radius = inst.portal_distance[v] + params.step
        dist = bounded_distances(g, v, radius)
        count = sum(1 for p in portals if dist[p] <= radius)
        if count > max(1.0, 2 * radius / separation) ** params.d:
            warnings += 1
    if warnings:
        logger.warning("%d vertices exceed the portal packing bound for d=%g; the dimension may be understated",
                       warnings, params.d)
    return warnings


def _event_portals(inst: ClusterAggInstance, c: int, radius: float) -> List[int]:
    dist = distances_to_set(inst.graph, inst.partition.clusters[c])
    return [k for k, p in enumerate(inst.portals) if dist[p] <= radius + TOLERANCE]


def solve_doubling(inst: ClusterAggInstance, params: DoublingParams, seed: int = 0,
                   centers: Optional[Sequence[int]] = None, strict: bool = True) -> DoublingResult:
    """
    Sample shifts, run the s iterations and resample around residual clusters

    Args:
        inst: Instance (normalized on entry)
        params: Solver constants
        seed: Seed of the shift stream
        centers: Cluster centers for the precondition check
        strict: Refuse to run when the preconditions fail

    Returns:
        DoublingResult with the full assignment and the resample log

    Raises:
        PreconditionError: strict mode and a precondition failed
        RetryBudgetError: clusters remain after the resample budget
        SolverInvariantError: the detour bound failed although the
            preconditions held
    """
    inst = normalize_instance(inst)
    report = check_preconditions(inst, params, centers)
    if not report.ok:
        if strict:
            raise PreconditionError("; ".join(report.violations),
                                    {"witnesses": report.witnesses})
        for message in report.violations:
            logger.warning("Doubling precondition violated: %s", message)

    rng = np.random.default_rng(int(seed))
    shifts = sample_shift_matrix(rng, params, len(inst.portals))
    budget = params.resample_budget if params.resample_budget is not None else RESAMPLE_BUDGET_FACTOR * inst.num_clusters
    log: List[ResampleEntry] = []

    portal_of, residual, trace, violations = run_iterations(inst, params, shifts)
    while residual:
        if len(log) >= budget:
            raise RetryBudgetError(
                f"{len(residual)} cluster(s) unassigned after {budget} resamples",
                details={"residual": residual, "trace": [[t.iteration, t.assigned, t.unassigned] for t in trace]},
            )
        event = residual[0]
        columns = _event_portals(inst, event, params.resample_radius)
        shifts[:, columns] = sample_shift_matrix(rng, params, len(columns))
        portal_of, residual, trace, violations = run_iterations(inst, params, shifts)
        log.append(ResampleEntry(event, len(columns), len(residual)))
        logger.debug("Resampled %d portal(s) around cluster %d; %d residual", len(columns), event, len(residual))
    if log:
        logger.info("Doubling solver needed %d resample(s)", len(log))

    asg = Assignment(tuple(portal_of))
    result = DoublingResult(asg, params, shifts, log, trace, report, violations,
                            packing_warnings(inst, params))
    result.max_detour = max(detours(inst, asg), default=0.0)
    if report.ok:
        if violations:
            raise SolverInvariantError(f"{violations} vertices broke the per-iteration distance bound",
                                       {"violations": violations})
        if result.max_detour > params.detour_bound + TOLERANCE:
            raise SolverInvariantError(
                f"Detour {result.max_detour} exceeds {params.detour_bound}",
                {"detour": result.max_detour, "bound": params.detour_bound},
            )
    elif violations:
        logger.warning("%d per-iteration distance-bound violations under violated preconditions", violations)
    return result

