"""
Tests for graph_core
"""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from errors import InstanceError, PreconditionError
from graph_core import (
    INF,
    WeightedGraph,
    ball,
    bounded_distances,
    distance_matrix,
    induced_ball,
    induced_distance,
    is_connected,
    multi_source_paths,
    read_graph,
    shortest_paths,
    strong_diameter,
    weak_diameter,
    write_graph,
)
from instances import gen_grid
from strategies import connected_graphs


def path_graph(n, w=1.0):
    return WeightedGraph.from_edges(n, [(i, i + 1, w) for i in range(n - 1)])


def test_grid_corner_distance():
    g = gen_grid(4, seed=0)
    assert shortest_paths(g, 0).dist[15] == 6


def test_grid_ball_around_corner():
    g = gen_grid(4, seed=0)
    assert ball(g, 0, 2) == (0, 1, 2, 4, 5, 8)


def test_small_grid_counts():
    g = gen_grid(2, seed=0)
    assert g.vertex_count == 4
    assert g.edge_count == 4


def test_parallel_edges_keep_lightest():
    g = WeightedGraph.from_edges(2, [(1, 0, 3), (0, 1, 2)])
    assert g.edges == ((0, 1, 2.0),)
    assert g.weight(1, 0) == 2.0
    assert g.weight(0, 0) is None


@pytest.mark.parametrize("edges", [[(0, 0, 1)], [(0, 5, 1)], [(0, 1, -1)], [(0, 1, float("nan"))]])
def test_invalid_edges(edges):
    with pytest.raises(InstanceError):
        WeightedGraph.from_edges(2, edges)


def test_ties_resolve_to_smaller_parent():
    g = WeightedGraph.from_edges(4, [(0, 1, 1), (0, 2, 1), (1, 3, 1), (2, 3, 1)])
    table = shortest_paths(g, 0)
    assert table.parent[3] == 1
    assert table.path_to(3) == [0, 1, 3]


def test_unreachable_vertex():
    g = WeightedGraph.from_edges(3, [(0, 1, 1)])
    table = shortest_paths(g, 0)
    assert table.dist[2] == INF
    assert table.parent[2] is None
    with pytest.raises(PreconditionError):
        table.path_to(2)


def test_multi_source_prefers_smaller_source():
    g = path_graph(5)
    forest = multi_source_paths(g, [4, 0])
    assert forest.origin[2] == 0
    assert forest.path_from(2) == [2, 1, 0]
    assert forest.origin[3] == 4
    assert forest.dist == (0, 1, 2, 1, 0)


def test_multi_source_needs_sources():
    with pytest.raises(PreconditionError):
        multi_source_paths(path_graph(3), [])


def test_induced_distance_detours_around_removed_vertex():
    g = WeightedGraph.from_edges(3, [(0, 1, 1), (1, 2, 1), (0, 2, 5)])
    assert induced_distance(g, range(3), 0, 2) == 2
    assert induced_distance(g, {0, 2}, 0, 2) == 5
    with pytest.raises(PreconditionError):
        induced_distance(g, {0, 1}, 0, 2)


def test_induced_ball_stays_inside():
    g = path_graph(5)
    assert induced_ball(g, {0, 1, 3, 4}, 0, 10) == (0, 1)


def test_strong_and_weak_diameter():
    g = path_graph(3)
    assert strong_diameter(g, [0, 2]) == INF
    assert weak_diameter(g, [0, 2]) == 2
    assert strong_diameter(g, [0, 1, 2]) == 2
    with pytest.raises(PreconditionError):
        strong_diameter(g, [])


def test_is_connected():
    g = WeightedGraph.from_edges(4, [(0, 1, 1), (2, 3, 1)])
    assert not is_connected(g)
    assert is_connected(g, [0, 1])
    assert is_connected(g, [])
    assert is_connected(WeightedGraph.from_edges(0, []))


def test_bounded_distances_cut_off():
    dist = bounded_distances(path_graph(4), 0, limit=2)
    assert dist[:3] == [0, 1, 2]
    assert dist[3] == INF


def test_is_tree():
    assert path_graph(4).is_tree()
    assert not gen_grid(2, seed=0).is_tree()


def test_graph_text_format():
    g = WeightedGraph.from_edges(3, [(0, 1, 1.5), (1, 2, 2)])
    text = write_graph(g)
    assert text == "3 2\n0 1 1.5\n1 2 2\n"
    assert read_graph(text) == g


def test_graph_text_header_mismatch():
    with pytest.raises(InstanceError):
        read_graph("3 5\n0 1 1\n")


def test_with_extra_appends_vertices():
    g = path_graph(2).with_extra(1, [(1, 2, 0.5)])
    assert g.vertex_count == 3
    assert g.neighbors(2) == ((1, 0.5),)


def test_to_networkx_weights():
    nxg = path_graph(3, 2.0).to_networkx()
    assert nxg.number_of_nodes() == 3
    assert nxg[0][1]["weight"] == 2.0


@settings(max_examples=60, deadline=None)
@given(connected_graphs())
def test_edge_relaxation_holds(g):
    dist = shortest_paths(g, 0).dist
    for u, v, w in g.edges:
        assert dist[v] <= dist[u] + w
        assert dist[u] <= dist[v] + w


@settings(max_examples=60, deadline=None)
@given(connected_graphs(min_n=2), st.data())
def test_restriction_never_shortens(g, data):
    inside = set(data.draw(st.sets(st.integers(0, g.vertex_count - 1), min_size=2)))
    u, v = sorted(inside)[:2]
    full = shortest_paths(g, u).dist[v]
    assert induced_distance(g, inside, u, v) >= full


@settings(max_examples=40, deadline=None)
@given(connected_graphs(min_n=2), st.data())
def test_portal_forest_is_suffix_closed(g, data):
    sources = data.draw(st.sets(st.integers(0, g.vertex_count - 1), min_size=1))
    forest = multi_source_paths(g, sources)
    for v in range(g.vertex_count):
        path = forest.path_from(v)
        assert path[-1] == forest.origin[v]
        for i, x in enumerate(path):
            assert forest.path_from(x) == path[i:]


@settings(max_examples=30, deadline=None)
@given(connected_graphs())
def test_searches_are_deterministic(g):
    assert shortest_paths(g, 0) == shortest_paths(g, 0)
    matrix = distance_matrix(g)
    assert all(math.isclose(matrix[0, v], d) for v, d in enumerate(shortest_paths(g, 0).dist))
