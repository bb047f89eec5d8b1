"""
Tests for dangling_net
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from errors import PreconditionError, RetryBudgetError
from graph_core import WeightedGraph, shortest_paths
from instances import gen_grid
from dangling_net import (
    build_net,
    check_sparsity,
    covering_distances,
    default_alpha,
    default_tau,
    greedy_net,
    sample_net,
    sample_shifts,
)
from strategies import connected_graphs


def path_graph(n):
    return WeightedGraph.from_edges(n, [(i, i + 1, 1) for i in range(n - 1)])


def test_defaults():
    assert default_alpha(1024) == 10
    assert default_tau(1024) == 40
    assert default_alpha(1) == 1
    assert default_tau(1) == 4


def test_shifts_are_truncated():
    shifts = sample_shifts(np.random.default_rng(0), 1000, 8.0, 64)
    assert shifts.min() >= 0
    assert shifts.max() <= 4.0


def test_build_net_structure():
    g = path_graph(3)
    net, gN = build_net(g, 2.0, [0.0, 0.5, 1.0], alpha=4)
    assert net.net_vertices == (3, 4, 5)
    assert gN.vertex_count == 6
    assert gN.neighbors(4) == ((1, 1.5),)
    assert net.base_of(5) == 2
    assert net.shifts == (0.0, 0.5, 1.0)
    assert net.cover_radius == 2.0


def test_zero_shift_sparsity_count():
    net, gN = build_net(path_graph(3), 2.0, [0.0, 0.0, 0.0], alpha=4)
    assert check_sparsity(gN, net) == (1, 0)
    net, gN = build_net(path_graph(3), 2.0, [0.0, 0.0, 0.0], alpha=1)
    assert check_sparsity(gN, net) == (3, 0)


def test_build_net_rejects_bad_shifts():
    with pytest.raises(PreconditionError):
        build_net(path_graph(2), 1.0, [0.0])
    with pytest.raises(PreconditionError):
        build_net(path_graph(2), 1.0, [0.0, 1.5])


def test_sample_net_rejects_bad_parameters():
    with pytest.raises(PreconditionError):
        sample_net(path_graph(3), 0.0)
    with pytest.raises(PreconditionError):
        sample_net(path_graph(3), 1.0, alpha=0.5)


def test_sample_net_on_grid():
    g = gen_grid(8, seed=0)
    net, gN = sample_net(g, 4.0, seed=11)
    assert net.sparsity_ok
    assert net.max_count <= default_tau(64)
    assert max(covering_distances(gN, net)) <= 4.0
    assert check_sparsity(gN, net) == (net.max_count, net.argmax_vertex)


def test_sample_net_is_seeded():
    g = gen_grid(5, seed=0)
    assert sample_net(g, 3.0, seed=5)[0] == sample_net(g, 3.0, seed=5)[0]


def test_retry_budget_keeps_best_attempt():
    with pytest.raises(RetryBudgetError) as info:
        sample_net(path_graph(3), 2.0, alpha=1, tau_target=1, seed=0, max_retries=2)
    net, gN = info.value.best
    assert not net.sparsity_ok
    assert net.max_count == info.value.details["best_count"]
    assert gN.vertex_count == 6


def test_centre_restricted_net_covers_with_centre_radius():
    g = path_graph(10)
    centers = greedy_net(g, 3)
    net, gN = sample_net(g, 2.0, seed=1, centers=centers, center_radius=3, tau_target=10)
    assert net.cover_radius == 5.0
    assert len(net.net_vertices) == len(centers)
    assert max(covering_distances(gN, net)) <= 5.0


def test_greedy_net_on_path():
    assert greedy_net(path_graph(10), 3) == (0, 4, 9)
    assert greedy_net(path_graph(1), 1) == (0,)


@settings(max_examples=40, deadline=None)
@given(connected_graphs(min_n=2), st.floats(1.0, 8.0), st.integers(0, 2 ** 32 - 1))
def test_net_covers_within_delta(g, delta, seed):
    net, gN = sample_net(g, delta, tau_target=g.vertex_count, seed=seed)
    assert all(d <= delta + 1e-9 for d in covering_distances(gN, net))
    for t, v, w in net.matching:
        assert gN.degree(t) == 1
        assert 0 <= w <= delta


@settings(max_examples=30, deadline=None)
@given(connected_graphs(min_n=2), st.floats(0.5, 6.0))
def test_greedy_net_separates_and_covers(g, radius):
    centers = greedy_net(g, radius)
    for i, a in enumerate(centers):
        dist = shortest_paths(g, a).dist
        assert all(dist[b] > radius for b in centers[i + 1:])
    assert all(min(shortest_paths(g, c).dist[v] for c in centers) <= radius for v in range(g.vertex_count))
