"""
Tests for ust_eval
"""

import itertools

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from errors import InstanceError, PreconditionError
from graph_core import WeightedGraph
from instances import gen_grid, gen_random_tree
from ust_eval import (
    approx_steiner,
    exact_steiner,
    induced_subtree_weight,
    shortest_path_tree,
    tree_distance,
    tree_from_parent,
    ust_ratio_scan,
)
from strategies import connected_graphs


def path_graph(n, weights=None):
    weights = weights or [1] * (n - 1)
    return WeightedGraph.from_edges(n, [(i, i + 1, w) for i, w in enumerate(weights)])


def brute_steiner(g, terminals):
    """Lightest connected subgraph spanning the terminals, by subset enumeration"""
    terminals = set(terminals)
    others = [v for v in range(g.vertex_count) if v not in terminals]
    best = float("inf")
    for r in range(len(others) + 1):
        for extra in itertools.combinations(others, r):
            keep = terminals | set(extra)
            sub = nx.Graph()
            sub.add_nodes_from(keep)
            sub.add_weighted_edges_from((u, v, w) for u, v, w in g.edges if u in keep and v in keep)
            if nx.is_connected(sub):
                best = min(best, nx.minimum_spanning_tree(sub).size(weight="weight"))
    return best


def test_tree_from_parent():
    g = path_graph(3, [2, 5])
    t = tree_from_parent(g, 0, [None, 0, 1])
    assert t.weight == (0.0, 2.0, 5.0)
    assert t.total_weight() == 7.0
    assert t.depth_order() == [0, 1, 2]
    assert t.to_graph() == g


@pytest.mark.parametrize("parent", [
    [None, 0],
    [1, 0, 1],
    [None, 0, 0],
])
def test_tree_from_parent_rejects(parent):
    with pytest.raises(InstanceError):
        tree_from_parent(path_graph(3), 0, parent)


def test_tree_from_parent_rejects_cycle():
    triangle = WeightedGraph.from_edges(3, [(0, 1, 1), (1, 2, 1), (0, 2, 1)])
    with pytest.raises(InstanceError):
        tree_from_parent(triangle, 0, [None, 2, 1])


def test_tree_distance():
    t = tree_from_parent(path_graph(4, [1, 2, 3]), 0, [None, 0, 1, 2])
    assert tree_distance(t, 3, 1) == 5.0
    assert tree_distance(t, 2, 2) == 0.0


def test_induced_subtree_weight():
    t = tree_from_parent(path_graph(4, [1, 2, 3]), 0, [None, 0, 1, 2])
    assert induced_subtree_weight(t, [0, 2]) == 3.0
    assert induced_subtree_weight(t, [0]) == 0.0
    with pytest.raises(PreconditionError):
        induced_subtree_weight(t, [1, 2])


def test_exact_steiner_small_cases():
    star = WeightedGraph.from_edges(4, [(0, 1, 1), (0, 2, 1), (0, 3, 1)])
    assert exact_steiner(star, [1, 2, 3]) == 3.0
    assert exact_steiner(gen_grid(3, seed=0), [0, 2, 6, 8]) == 6.0
    assert exact_steiner(star, [2]) == 0.0


def test_exact_steiner_terminal_limit():
    with pytest.raises(PreconditionError):
        exact_steiner(path_graph(20), range(13))


@settings(max_examples=40, deadline=None)
@given(connected_graphs(min_n=2, max_n=7), st.data())
def test_exact_matches_enumeration(g, data):
    terminals = data.draw(st.sets(st.integers(0, g.vertex_count - 1), min_size=2, max_size=5))
    opt = exact_steiner(g, terminals)
    assert opt == pytest.approx(brute_steiner(g, terminals))
    approx = approx_steiner(g, terminals)
    assert opt - 1e-9 <= approx <= 2 * opt + 1e-9


def test_scan_on_tree_host_is_exact():
    g = gen_random_tree(15, seed=2, max_weight=3)
    t = shortest_path_tree(g, 0)
    report = ust_ratio_scan(g, t, trials=20, seed=1)
    assert report.worst_ratio == pytest.approx(1.0)
    assert report.exact_used


def test_scan_on_grid():
    g = gen_grid(4, seed=0)
    t = shortest_path_tree(g, 5)
    report = ust_ratio_scan(g, t, trials=30, max_terminals=5, seed=3)
    assert len(report.ratios) == 30
    assert all(r >= 1 - 1e-9 for r in report.ratios)
    assert report.worst_ratio == max(report.ratios + [1.0])
    assert 5 in report.witness
    assert report.to_dict()["trials"] == 30


def test_scan_is_seeded():
    g = gen_grid(4, seed=0)
    t = shortest_path_tree(g, 0)
    assert ust_ratio_scan(g, t, trials=10, seed=7).ratios == ust_ratio_scan(g, t, trials=10, seed=7).ratios


def test_scan_parameters():
    g = gen_grid(3, seed=0)
    t = shortest_path_tree(g, 0)
    with pytest.raises(PreconditionError):
        ust_ratio_scan(g, t, root=4)
    with pytest.raises(PreconditionError):
        ust_ratio_scan(g, t, max_terminals=1)
