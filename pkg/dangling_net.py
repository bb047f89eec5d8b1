"""
Dangling Net
Sample exponential-shift dangling nets and build the augmented graph G+N
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from errors import PreconditionError, RetryBudgetError
from graph_core import INF, VertexSet, WeightedGraph, bounded_distances, distances_to_set, vertex_set

logger = logging.getLogger(__name__)

DEFAULT_MAX_RETRIES = 5
TOLERANCE = 1e-9


def default_alpha(n: int) -> float:
    """α = log2 n, at least 1"""
    return max(1.0, math.log2(max(n, 2)))


def default_tau(n: int) -> int:
    """τ = 4·⌈log2 n⌉, at least 1"""
    return max(1, 4 * math.ceil(math.log2(max(n, 2))))


@dataclass(frozen=True)
class DanglingNet:
    """Net vertices n..n+k-1, each hanging off one center by a matching edge.

    ``shifts`` is indexed by base vertex; vertices that are not centers keep a
    zero shift. ``cover_radius`` is Δ for the all-vertex net and center
    radius + Δ when centers are restricted to a sparse net.
    """

    base_n: int
    net_vertices: VertexSet
    matching: Tuple[Tuple[int, int, float], ...]
    shifts: Tuple[float, ...]
    delta: float
    alpha: float
    tau_target: int
    centers: VertexSet
    cover_radius: float
    max_count: int = 0
    argmax_vertex: int = 0
    retries: int = 0
    sparsity_ok: bool = True

    @property
    def slack(self) -> float:
        """Additive sparsity window cover_radius / α"""
        return self.cover_radius / self.alpha

    def base_of(self, t: int) -> int:
        return self.matching[t - self.base_n][1]

    def to_dict(self) -> Dict:
        return {
            "delta": self.delta,
            "alpha": self.alpha,
            "tau_target": self.tau_target,
            "cover_radius": self.cover_radius,
            "shifts": list(self.shifts),
            "matching": [[t, v, w] for t, v, w in self.matching],
            "max_count": self.max_count,
            "retries": self.retries,
            "sparsity_ok": self.sparsity_ok,
        }


def sample_shifts(rng: np.random.Generator, count: int, delta: float, n: int) -> np.ndarray:
    """Exponential shifts with mean Δ/(4 ln n), truncated at Δ/2"""
    scale = delta / (4 * math.log(max(n, 2)))
    return np.minimum(rng.exponential(1.0, size=count) * scale, delta / 2)


def build_net(g: WeightedGraph, delta: float, shifts: Sequence[float],
              centers: Optional[Iterable[int]] = None, alpha: Optional[float] = None,
              tau_target: Optional[int] = None, center_radius: float = 0.0) -> Tuple[DanglingNet, WeightedGraph]:
    """
    Deterministic net construction from given shifts

    Args:
        g: Base graph
        delta: Net scale Δ
        shifts: One shift per center, in center order, each in [0, Δ]
        centers: Base vertices receiving a net vertex (default: all)
        alpha: Sparsity parameter (default log2 n)
        tau_target: Target sparsity bound (default 4⌈log2 n⌉)
        center_radius: Covering radius of ``centers`` in G

    Returns:
        (net without a certified count, augmented graph G+N)
    """
    n = g.vertex_count
    centers = vertex_set(range(n) if centers is None else centers)
    if len(shifts) != len(centers):
        raise PreconditionError(f"Got {len(shifts)} shifts for {len(centers)} centers")
    if any(s < 0 or s > delta for s in shifts):
        raise PreconditionError("Shifts must lie in [0, Δ]")

    matching = tuple((n + k, c, float(delta - s)) for k, (c, s) in enumerate(zip(centers, shifts)))
    per_vertex = [0.0] * n
    for c, s in zip(centers, shifts):
        per_vertex[c] = float(s)

    net = DanglingNet(
        base_n=n,
        net_vertices=tuple(range(n, n + len(centers))),
        matching=matching,
        shifts=tuple(per_vertex),
        delta=float(delta),
        alpha=float(alpha if alpha is not None else default_alpha(n)),
        tau_target=int(tau_target if tau_target is not None else default_tau(n)),
        centers=centers,
        cover_radius=float(center_radius + delta),
    )
    return net, g.with_extra(len(centers), matching)


def check_sparsity(gN: WeightedGraph, net: DanglingNet) -> Tuple[int, int]:
    """
    Exact additive-sparsity maximum over base vertices

    Args:
        gN: Augmented graph G+N
        net: The net it was built from

    Returns:
        (max count of net vertices within d(v, N) + Δ/α, smallest vertex attaining it)
    """
    best, argmax = 0, 0
    net_ids = net.net_vertices
    for v in range(net.base_n):
        dist = bounded_distances(gN, v, net.cover_radius + net.slack + TOLERANCE)
        nearest = min(dist[t] for t in net_ids)
        if nearest == INF:
            # covering failed for v, fall back to an unbounded search
            dist = bounded_distances(gN, v)
            nearest = min(dist[t] for t in net_ids)
        count = sum(1 for t in net_ids if dist[t] <= nearest + net.slack + TOLERANCE)
        if count > best:
            best, argmax = count, v
    return best, argmax


def sample_net(g: WeightedGraph, delta: float, alpha: Optional[float] = None,
               tau_target: Optional[int] = None, seed: int = 0,
               max_retries: int = DEFAULT_MAX_RETRIES, centers: Optional[Iterable[int]] = None,
               center_radius: float = 0.0) -> Tuple[DanglingNet, WeightedGraph]:
    """
    Sample a Δ-covering net and certify its additive sparsity

    Every center draws a shift; the net is rebuilt from a fresh child seed
    whenever the sparsity count exceeds ``tau_target``.

    Returns:
        (certified net, augmented graph)

    Raises:
        RetryBudgetError: all attempts exceeded the target; ``best`` holds the
            least sparse-violating (net, graph) pair
    """
    if delta <= 0:
        raise PreconditionError(f"Net scale must be positive, got {delta}")
    n = g.vertex_count
    alpha = default_alpha(n) if alpha is None else alpha
    if alpha < 1:
        raise PreconditionError(f"alpha must be at least 1, got {alpha}")
    tau_target = default_tau(n) if tau_target is None else tau_target
    centers = vertex_set(range(n) if centers is None else centers)

    best = None
    worst_count = 0
    children = np.random.SeedSequence(int(seed)).spawn(max_retries + 1)
    for attempt, child in enumerate(children):
        shifts = sample_shifts(np.random.default_rng(child), len(centers), delta, n)
        net, gN = build_net(g, delta, shifts.tolist(), centers, alpha, tau_target, center_radius)
        count, witness = check_sparsity(gN, net)
        worst_count = max(worst_count, count)
        net = _certify(net, count, witness, attempt, count <= tau_target)
        if count <= tau_target:
            logger.info("Net at Δ=%g accepted after %d retr%s (sparsity %d <= %d)",
                        delta, attempt, "y" if attempt == 1 else "ies", count, tau_target)
            return net, gN
        logger.debug("Net attempt %d rejected: sparsity %d > %d at vertex %d",
                     attempt, count, tau_target, witness)
        if best is None or count < best[0].max_count:
            best = (net, gN)

    raise RetryBudgetError(
        f"No net with sparsity <= {tau_target} after {max_retries} retries",
        best=best,
        details={"best_count": best[0].max_count, "worst_count": worst_count},
    )


def _certify(net: DanglingNet, count: int, witness: int, retries: int, ok: bool) -> DanglingNet:
    return replace(net, max_count=count, argmax_vertex=witness, retries=retries, sparsity_ok=ok)


def greedy_net(g: WeightedGraph, radius: float) -> VertexSet:
    """
    Farthest-point traversal until every vertex is within ``radius``

    The first center is vertex 0; each later one is the vertex farthest from
    the current centers (smallest id on ties), so centers are pairwise more
    than ``radius`` apart.
    """
    if g.vertex_count == 0:
        return ()
    centers = [0]
    dist = np.asarray(distances_to_set(g, centers))
    while True:
        far = int(np.argmax(dist))
        if dist[far] <= radius:
            break
        centers.append(far)
        dist = np.minimum(dist, np.asarray(bounded_distances(g, far)))
    return vertex_set(centers)


def covering_distances(gN: WeightedGraph, net: DanglingNet) -> List[float]:
    """d_{G+N}(v, N) for every base vertex"""
    return distances_to_set(gN, net.net_vertices)[: net.base_n]
