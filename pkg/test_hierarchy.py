"""
Tests for hierarchy
"""

import math

import pytest

from errors import PreconditionError
from graph_core import WeightedGraph
from instances import Partition, gen_grid, gen_pathwidth, gen_random_tree
from hierarchy import HierarchyParams, audit_level, build_hierarchy, level_bound
from verify import check_hierarchy


def path_graph(n):
    return WeightedGraph.from_edges(n, [(i, i + 1, 1) for i in range(n - 1)])


def test_growth_factor_and_ball_divisor():
    params = HierarchyParams(alpha=2, beta=3)
    assert params.gamma == 30
    assert params.ball_divisor == 20
    assert params.net_scale(0) == 12
    assert params.net_scale(1) == 360


def test_invalid_parameters():
    with pytest.raises(PreconditionError):
        HierarchyParams(alpha=0.5, beta=3)
    with pytest.raises(PreconditionError):
        HierarchyParams(alpha=2, beta=3, solver="spanner")
    with pytest.raises(PreconditionError):
        HierarchyParams(alpha=2, beta=3, solver="doubling")


def test_solver_defaults():
    g = path_graph(8)
    general = HierarchyParams.for_graph(g)
    assert general.alpha == 3.0
    assert general.tau_target == 12
    assert general.beta == pytest.approx(80 * math.log2(16))

    assert HierarchyParams.for_graph(g, "tree").beta == 4

    _, pd = gen_pathwidth(2, 8, seed=0)
    assert HierarchyParams.for_graph(g, "pathwidth", pd=pd).beta == 8 * (pd.width + 2)
    with pytest.raises(PreconditionError):
        HierarchyParams.for_graph(g, "pathwidth")

    doubling = HierarchyParams.for_graph(g, "doubling", d=1)
    assert doubling.beta == doubling.doubling_params(1.0).detour_bound
    assert doubling.ball_divisor == 12 * doubling.alpha
    assert doubling.d_prime == pytest.approx(5.0)


def test_level_bound():
    assert level_bound(0, 30) == 2
    assert level_bound(1, 30) == 2
    assert level_bound(30, 30) == 3
    assert level_bound(31, 30) == 4
    assert level_bound(900, 30) == 4


def test_audit_level_on_path():
    g = path_graph(4)
    diameter, d_witness, sparsity, s_witness = audit_level(g, Partition.singletons(4, 1.0), 4.0, 4.0)
    assert (diameter, d_witness) == (0.0, 0)
    assert (sparsity, s_witness) == (3, 1)


def test_single_vertex_hierarchy():
    g = WeightedGraph.from_edges(1, [])
    h = build_hierarchy(g, HierarchyParams.for_graph(g))
    assert h.depth == 0
    assert h.level_bound == 2
    assert check_hierarchy(g, h).ok


@pytest.mark.parametrize("seed", range(3))
def test_general_solver_on_grid(seed):
    g = gen_grid(3, seed=seed)
    h = build_hierarchy(g, HierarchyParams.for_graph(g), seed=seed)
    report = check_hierarchy(g, h)
    assert report.ok, report.violations
    assert h.levels[-1].num_clusters == 1
    assert len(h.audits) == len(h.levels)


@pytest.mark.parametrize("seed", range(3))
def test_tree_solver_on_random_tree(seed):
    g = gen_random_tree(12, seed)
    h = build_hierarchy(g, HierarchyParams.for_graph(g, "tree"), seed=seed)
    assert check_hierarchy(g, h).ok
    for audit in h.audits[1:]:
        assert audit.max_detour <= 4 * h.params.gamma ** (audit.level - 1) + 1e-9


def test_pathwidth_solver_on_interval_graph():
    g, pd = gen_pathwidth(1, 6, seed=0)
    h = build_hierarchy(g, HierarchyParams.for_graph(g, "pathwidth", pd=pd), seed=0, pd=pd)
    assert check_hierarchy(g, h).ok


def test_same_seed_same_hierarchy():
    g = gen_grid(3, seed=0)
    params = HierarchyParams.for_graph(g)
    first = build_hierarchy(g, params, seed=4).to_dict()
    second = build_hierarchy(g, params, seed=4).to_dict()
    assert first == second


def test_level_frame():
    g = path_graph(3)
    h = build_hierarchy(g, HierarchyParams.for_graph(g), seed=1)
    frame = h.level_frame()
    assert list(frame["level"]) == list(range(h.depth + 1))
    assert {"scale", "clusters", "max_diameter", "max_ball_sparsity", "net_scale", "attempts"} <= set(frame.columns)
    assert frame["clusters"].iloc[0] == 3
    assert frame["clusters"].iloc[-1] == 1


@pytest.mark.parametrize("g, solver", [
    (WeightedGraph.from_edges(3, [(0, 1, 1)]), "general"),
    (WeightedGraph.from_edges(2, [(0, 1, 0.5)]), "general"),
    (WeightedGraph.from_edges(3, [(0, 1, 1), (1, 2, 1), (2, 0, 1)]), "tree"),
    (WeightedGraph.from_edges(0, []), "general"),
])
def test_preconditions(g, solver):
    params = HierarchyParams(alpha=1, beta=4, solver=solver)
    with pytest.raises(PreconditionError):
        build_hierarchy(g, params)


def test_pathwidth_needs_decomposition():
    g, _ = gen_pathwidth(1, 4, seed=0)
    params = HierarchyParams(alpha=1, beta=24, solver="pathwidth")
    with pytest.raises(PreconditionError):
        build_hierarchy(g, params)


@pytest.mark.parametrize("seed", range(3))
def test_unit_path_with_unit_parameters_has_intermediate_levels(seed):
    g = path_graph(8)
    params = HierarchyParams(alpha=1, beta=1, tau_target=8)
    assert params.gamma == 6
    h = build_hierarchy(g, params, seed=seed)
    report = check_hierarchy(g, h)
    assert report.ok, report.violations
    assert h.depth >= 2
    assert h.levels[1].num_clusters > 1
    for i, audit in enumerate(h.audits):
        assert audit.max_diameter <= 6 ** i


@pytest.mark.parametrize("seed", range(2))
def test_tree_solver_multilevel_on_long_path(seed):
    g = path_graph(40)
    params = HierarchyParams(alpha=1, beta=4, tau_target=40, solver="tree")
    assert params.gamma == 24
    h = build_hierarchy(g, params, seed=seed)
    assert check_hierarchy(g, h).ok
    assert h.depth >= 2
    assert h.levels[1].num_clusters > 1
    for audit in h.audits[1:]:
        assert audit.max_detour <= 4 * 24 ** (audit.level - 1) + 1e-9


def test_general_solver_multilevel_on_grid():
    g = gen_grid(16, seed=0)
    params = HierarchyParams(alpha=1, beta=4, tau_target=256)
    h = build_hierarchy(g, params, seed=0)
    report = check_hierarchy(g, h)
    assert report.ok, report.violations
    assert h.depth >= 2
    assert h.audits[1].max_diameter <= 24
    assert h.levels[1].num_clusters > 1
