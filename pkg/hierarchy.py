"""
Hierarchy Builder
Bottom-up γ-hierarchy of strong sparse partitions, alternating dangling
nets with cluster aggregation on the augmented graph
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from errors import PreconditionError, RetryBudgetError, SolverInvariantError, UstError
from graph_core import INF, WeightedGraph, ball, is_connected, strong_diameter
from instances import (
    Assignment,
    ClusterAggInstance,
    Partition,
    PathDecomposition,
    extend_decomposition,
    validate_path_decomposition,
)
from dangling_net import DanglingNet, default_alpha, default_tau, greedy_net, sample_net
from ca_general import detours, solve_general
from ca_tree import solve_tree
from ca_pathwidth import solve_pathwidth
from ca_doubling import DoublingParams, solve_doubling

logger = logging.getLogger(__name__)

SOLVERS = ("general", "tree", "pathwidth", "doubling")
DEFAULT_RETRIES = 5
EXHAUSTIVE_LIMIT = 2000
SAMPLE_SIZE = 200
EXTRA_LEVEL_CAP = 10
GENERAL_BETA_FACTOR = 80
TREE_BETA = 4
TOLERANCE = 1e-9


@dataclass
class HierarchyParams:
    """
    Parameters of :func:`build_hierarchy`

    Args:
        alpha: Net sparsity parameter α >= 1
        beta: Distortion β the solver is held to
        tau_target: Target sparsity of each net
        solver: One of general, tree, pathwidth, doubling
        retries: Net and solver reseeds per level on detour overshoot
        d: Declared doubling dimension (doubling solver only)
    """

    alpha: float
    beta: float
    tau_target: int = 1
    solver: str = "general"
    retries: int = DEFAULT_RETRIES
    d: Optional[float] = None
    c_lambda: float = 0.5
    lam: float = 8.0
    c_s: float = 1.0
    s_min: int = 8
    rounds_factor: int = 10

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise PreconditionError(f"Unknown solver: {self.solver}")
        if self.alpha < 1:
            raise PreconditionError(f"alpha must be at least 1, got {self.alpha}")
        if self.beta < 1:
            raise PreconditionError(f"beta must be at least 1, got {self.beta}")
        if self.solver == "doubling" and (self.d is None or self.d <= 0):
            raise PreconditionError("The doubling solver needs a positive doubling dimension d")
        if self.gamma <= 1:
            raise PreconditionError(f"gamma must exceed 1, got {self.gamma}")

    @classmethod
    def for_graph(cls, g: WeightedGraph, solver: str = "general", alpha: Optional[float] = None,
                  tau_target: Optional[int] = None, pd: Optional[PathDecomposition] = None,
                  d: Optional[float] = None, **kwargs) -> "HierarchyParams":
        """Defaults for a graph: α = log2 n, τ = 4⌈log2 n⌉ and the solver's own β"""
        n = g.vertex_count
        alpha = default_alpha(n) if alpha is None else alpha
        tau_target = default_tau(n) if tau_target is None else tau_target
        if solver == "general":
            # κ counts base clusters plus net singletons, at most 2n
            beta = GENERAL_BETA_FACTOR * math.log2(max(2 * n, 2))
        elif solver == "tree":
            beta = TREE_BETA
        elif solver == "pathwidth":
            if pd is None:
                raise PreconditionError("The pathwidth solver needs a path decomposition")
            beta = 8 * (pd.width + 2)
        elif solver == "doubling":
            if d is None:
                raise PreconditionError("The doubling solver needs a doubling dimension")
            beta = 1.0
        else:
            raise PreconditionError(f"Unknown solver: {solver}")
        params = cls(alpha=alpha, beta=beta, tau_target=tau_target, solver=solver, d=d, **kwargs)
        if solver == "doubling":
            params.beta = params.doubling_params(1.0).detour_bound
        return params

    @property
    def d_prime(self) -> float:
        """Dimension of the augmented graph, d·(1 + log2(8/c_Λ))"""
        return self.d * (1 + math.log2(8 / self.c_lambda))

    @property
    def lambda_ratio(self) -> float:
        """Λ_i / γ^i in doubling mode"""
        d = self.d_prime
        return self.lam * d ** 3 * math.log2(max(d, 2))

    @property
    def gamma(self) -> float:
        if self.solver == "doubling":
            return 2 * self.lambda_ratio + 2 * self.doubling_params(1.0).detour_bound
        return 2 * self.beta * (2 * self.alpha + 1)

    @property
    def ball_divisor(self) -> float:
        return 12 * self.alpha if self.solver == "doubling" else 8 * self.alpha + 4

    def net_scale(self, level: int) -> float:
        """Net scale at a level: 2αβγ^i, or Λ_i/2 in doubling mode"""
        if self.solver == "doubling":
            return self.lambda_ratio * self.gamma ** level / 2
        return 2 * self.alpha * self.beta * self.gamma ** level

    def doubling_params(self, delta: float) -> DoublingParams:
        """Doubling solver constants for an instance of diameter delta"""
        return DoublingParams(d=self.d_prime, delta=delta, c_lambda=self.c_lambda, lam=self.lam,
                              c_s=self.c_s, s_min=self.s_min)

    def to_dict(self) -> Dict:
        data = {
            "alpha": self.alpha,
            "beta": self.beta,
            "tau_target": self.tau_target,
            "solver": self.solver,
            "gamma": self.gamma,
            "ball_divisor": self.ball_divisor,
            "retries": self.retries,
        }
        if self.solver == "doubling":
            data.update({"d": self.d, "d_prime": self.d_prime, "c_lambda": self.c_lambda,
                         "lam": self.lam, "c_s": self.c_s, "s_min": self.s_min})
        return data


@dataclass
class LevelAudit:
    """Measured figures of one hierarchy level"""

    level: int
    scale: float
    clusters: int
    max_diameter: float
    diameter_witness: int
    ball_radius: float
    max_ball_sparsity: int
    sparsity_witness: int
    exhaustive: bool
    net_scale: Optional[float] = None
    net_max_count: Optional[int] = None
    net_sparsity_ok: Optional[bool] = None
    net_retries: Optional[int] = None
    max_detour: Optional[float] = None
    attempts: int = 0
    center_violations: int = 0

    def to_dict(self) -> Dict:
        return asdict(self)


@dataclass
class Hierarchy:
    """Levels C_0 (singletons) ... C_k (one cluster) with their audits"""

    levels: List[Partition]
    params: HierarchyParams
    audits: List[LevelAudit] = field(default_factory=list)
    level_bound: int = 0
    level_bound_ok: bool = True

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def to_dict(self) -> Dict:
        return {
            "schema": 1,
            "params": self.params.to_dict(),
            "level_bound": self.level_bound,
            "level_bound_ok": self.level_bound_ok,
            "levels": [
                {"clusters": [list(c) for c in level.clusters], "audit": audit.to_dict()}
                for level, audit in zip(self.levels, self.audits)
            ],
        }

    def level_frame(self) -> pd.DataFrame:
        """Per-level audit table"""
        return pd.DataFrame([audit.to_dict() for audit in self.audits])


def audit_level(g: WeightedGraph, partition: Partition, scale: float, alpha_eff: float,
                exhaustive: Optional[bool] = None, seed: int = 0) -> Tuple[float, int, int, int]:
    """
    Measure the strong diameter and ball sparsity of a level

    Args:
        g: Base graph
        partition: Level partition
        scale: Diameter scale of the level
        alpha_eff: Ball radius divisor (8α+4, or 12α in doubling mode)
        exhaustive: Check every vertex; default when n <= 2000
        seed: Seed of the vertex sample otherwise

    Returns:
        (max strong diameter, its cluster, max clusters met by a ball, its center)
    """
    diameter, diameter_witness = 0.0, 0
    for index, members in enumerate(partition.clusters):
        value = strong_diameter(g, members)
        if value > diameter:
            diameter, diameter_witness = value, index

    n = g.vertex_count
    exhaustive = n <= EXHAUSTIVE_LIMIT if exhaustive is None else exhaustive
    if exhaustive:
        centers = range(n)
    else:
        centers = sorted(np.random.default_rng(int(seed)).choice(n, size=min(SAMPLE_SIZE, n), replace=False).tolist())
    radius = scale / alpha_eff
    sparsity, sparsity_witness = 0, 0
    for v in centers:
        count = len({partition.cluster_of[u] for u in ball(g, v, radius)})
        if count > sparsity:
            sparsity, sparsity_witness = count, v
    return diameter, diameter_witness, sparsity, sparsity_witness


def _weighted_diameter(g: WeightedGraph) -> float:
    if g.vertex_count <= 1:
        return 0.0
    return strong_diameter(g, range(g.vertex_count))


def level_bound(diameter: float, gamma: float) -> int:
    """max(0, ⌈log_γ diameter⌉) + 2"""
    if diameter <= 1:
        return 2
    return max(0, math.ceil(math.log(diameter) / math.log(gamma) - TOLERANCE)) + 2


class HierarchyBuilder:
    """Runs the net / aggregate / strip loop level by level"""

    def __init__(self, g: WeightedGraph, params: HierarchyParams, seed: int = 0,
                 pd: Optional[PathDecomposition] = None):
        """
        Initialize the builder

        Args:
            g: Connected graph with edge weights >= 1
            params: Hierarchy parameters
            seed: Root seed; every level and attempt derives its own stream
            pd: Path decomposition of g (pathwidth solver only)
        """
        if g.vertex_count < 1:
            raise PreconditionError("build_hierarchy needs a nonempty graph")
        if not is_connected(g):
            raise PreconditionError("build_hierarchy needs a connected graph")
        if g.edge_count and g.min_weight() < 1:
            raise PreconditionError(f"Edge weights must be at least 1, got {g.min_weight()}")
        if params.solver == "tree" and not g.is_tree():
            raise PreconditionError("The tree solver needs a tree")
        if params.solver == "pathwidth":
            if pd is None:
                raise PreconditionError("The pathwidth solver needs a path decomposition")
            report = validate_path_decomposition(g, pd)
            if not report.ok:
                raise PreconditionError(f"Invalid path decomposition: {report.message}")
        self.g = g
        self.params = params
        self.seed = int(seed)
        self.pd = pd
        self.centers: List[int] = list(range(g.vertex_count))

    def _streams(self, level: int, attempt: int) -> Tuple[int, int]:
        state = np.random.SeedSequence([self.seed, level, attempt]).generate_state(2)
        return int(state[0]), int(state[1])

    def _net(self, level: int, net_seed: int) -> Tuple[DanglingNet, WeightedGraph]:
        params = self.params
        scale = params.net_scale(level)
        kwargs = {}
        if params.solver == "doubling":
            centers = greedy_net(self.g, scale)
            kwargs = {"centers": centers, "center_radius": scale}
        try:
            return sample_net(self.g, scale, params.alpha, params.tau_target, net_seed, **kwargs)
        except RetryBudgetError as exc:
            net, gN = exc.best
            logger.warning("Level %d: accepting net with sparsity %d > %d", level, net.max_count,
                           params.tau_target)
            return net, gN

    def _solve(self, inst: ClusterAggInstance, level: int, solver_seed: int,
               net: DanglingNet, current: Partition) -> Tuple[Assignment, int]:
        params = self.params
        if params.solver == "general":
            asg, _ = solve_general(inst, solver_seed, params.rounds_factor)
            return asg, 0
        if params.solver == "tree":
            asg, _ = solve_tree(inst)
            return asg, 0
        if params.solver == "pathwidth":
            asg, _ = solve_pathwidth(inst, inst.path_decomposition)
            return asg, 0
        centers = [self.centers[c] for c in range(current.num_clusters)] + list(net.net_vertices)
        result = solve_doubling(inst, params.doubling_params(params.gamma ** level), solver_seed, centers, strict=False)
        return result.assignment, len(result.preconditions.violations)

    def _instance(self, current: Partition, net: DanglingNet, gN: WeightedGraph,
                  level: int) -> ClusterAggInstance:
        clusters = list(current.clusters) + [(t,) for t in net.net_vertices]
        partition = Partition.from_clusters(gN.vertex_count, clusters, self.params.gamma ** level)
        pd = None
        if self.params.solver == "pathwidth":
            pd = extend_decomposition(self.pd, net.matching)
        return ClusterAggInstance(gN, partition, net.net_vertices, path_decomposition=pd)

    def step(self, current: Partition, level: int) -> Tuple[Partition, LevelAudit]:
        """
        Build C_{level+1} from C_level

        Returns:
            (next partition, its audit)

        Raises:
            RetryBudgetError: every attempt overshot the detour bound β·γ^level
        """
        params = self.params
        budget = params.beta * params.gamma ** level
        worst = INF
        for attempt in range(params.retries + 1):
            net_seed, solver_seed = self._streams(level, attempt)
            net, gN = self._net(level, net_seed)
            inst = self._instance(current, net, gN, level)
            try:
                asg, center_violations = self._solve(inst, level, solver_seed, net, current)
            except UstError as exc:
                exc.details.setdefault("level", level)
                raise
            max_detour = max(detours(inst, asg), default=0.0)
            if max_detour <= budget + TOLERANCE:
                break
            worst = min(worst, max_detour)
            logger.info("Level %d attempt %d: detour %g above %g, reseeding", level, attempt,
                        max_detour, budget)
        else:
            raise RetryBudgetError(
                f"Level {level}: detour stayed above {budget} for {params.retries} retries",
                details={"level": level, "best_detour": worst, "bound": budget},
            )

        nxt, centers = self._strip(asg, inst, net, level + 1)
        audit = self._audit(nxt, level + 1)
        audit.net_scale = net.delta
        audit.net_max_count = net.max_count
        audit.net_sparsity_ok = net.sparsity_ok
        audit.net_retries = net.retries
        audit.max_detour = max_detour
        audit.attempts = attempt + 1
        audit.center_violations = center_violations
        self._check_level(audit, level + 1, net)
        self.centers = centers
        return nxt, audit

    def _strip(self, asg: Assignment, inst: ClusterAggInstance, net: DanglingNet,
               level: int) -> Tuple[Partition, List[int]]:
        # net vertices are leaves, so removing them keeps every cluster connected
        n = self.g.vertex_count
        clusters, centers = [], []
        for t, members in asg.preimages(inst).items():
            base = [v for v in members if v < n]
            if base:
                clusters.append(base)
                centers.append(net.base_of(t))
        clusters, centers = zip(*sorted(zip(clusters, centers), key=lambda pair: pair[0][0]))
        return Partition.from_clusters(n, clusters, self.params.gamma ** level), list(centers)

    def _audit(self, partition: Partition, level: int) -> LevelAudit:
        scale = self.params.gamma ** level
        diameter, d_witness, sparsity, s_witness = audit_level(
            self.g, partition, scale, self.params.ball_divisor, seed=self.seed + level,
        )
        return LevelAudit(
            level=level,
            scale=scale,
            clusters=partition.num_clusters,
            max_diameter=diameter,
            diameter_witness=d_witness,
            ball_radius=scale / self.params.ball_divisor,
            max_ball_sparsity=sparsity,
            sparsity_witness=s_witness,
            exhaustive=self.g.vertex_count <= EXHAUSTIVE_LIMIT,
        )

    def _check_level(self, audit: LevelAudit, level: int, net: DanglingNet) -> None:
        if audit.max_diameter > audit.scale + TOLERANCE:
            raise SolverInvariantError(
                f"Level {level}: cluster {audit.diameter_witness} has strong diameter "
                f"{audit.max_diameter} > {audit.scale}",
                {"level": level, "cluster": audit.diameter_witness},
            )
        if audit.max_ball_sparsity > net.max_count:
            if self.params.solver == "doubling":
                logger.warning("Level %d: ball at %d meets %d clusters, net certified %d",
                               level, audit.sparsity_witness, audit.max_ball_sparsity, net.max_count)
                return
            raise SolverInvariantError(
                f"Level {level}: ball at vertex {audit.sparsity_witness} meets "
                f"{audit.max_ball_sparsity} clusters, more than the net's {net.max_count}",
                {"level": level, "vertex": audit.sparsity_witness},
            )

    def build(self) -> Hierarchy:
        g = self.g
        params = self.params
        current = Partition.singletons(g.vertex_count, 1.0)
        hierarchy = Hierarchy([current], params, [self._audit(current, 0)])
        hierarchy.level_bound = level_bound(_weighted_diameter(g), params.gamma)

        level = 0
        while current.num_clusters > 1:
            if level >= hierarchy.level_bound + EXTRA_LEVEL_CAP:
                raise SolverInvariantError(
                    f"No single cluster after {level} levels",
                    {"clusters": current.num_clusters, "level_bound": hierarchy.level_bound},
                )
            current, audit = self.step(current, level)
            hierarchy.levels.append(current)
            hierarchy.audits.append(audit)
            level += 1
            logger.info("Level %d built: %d clusters, max diameter %g", level, current.num_clusters,
                        audit.max_diameter)

        if hierarchy.depth > hierarchy.level_bound:
            hierarchy.level_bound_ok = False
            logger.warning("Hierarchy used %d levels, above the bound %d", hierarchy.depth,
                           hierarchy.level_bound)
        return hierarchy


def build_hierarchy(g: WeightedGraph, params: HierarchyParams, seed: int = 0,
                    pd: Optional[PathDecomposition] = None) -> Hierarchy:
    """
    Build a γ-hierarchy of strong sparse partitions

    Args:
        g: Connected graph with edge weights >= 1
        params: Hierarchy parameters
        seed: Root seed
        pd: Path decomposition (pathwidth solver only)

    Returns:
        Hierarchy from singletons to a single cluster
    """
    return HierarchyBuilder(g, params, seed, pd).build()
