"""
Tests for ca_pathwidth
"""

import pytest

from errors import InstanceError, PreconditionError
from graph_core import WeightedGraph
from instances import ClusterAggInstance, Partition, PathDecomposition, gen_instance, gen_pathwidth
from ca_pathwidth import Group, PathwidthAggregator, audit_frame, partial_detours, solve_pathwidth
from verify import check_assignment


def path_instance():
    g = WeightedGraph.from_edges(5, [(i, i + 1, 1) for i in range(4)])
    pd = PathDecomposition.from_bags([[0, 1], [1, 2], [2, 3], [3, 4]])
    return ClusterAggInstance(g, Partition.singletons(5), (0, 4), path_decomposition=pd)


def test_partial_bags_skip_assigned_nodes():
    solver = PathwidthAggregator(path_instance())
    assert solver.partial_bags() == [(0, (1,)), (1, (1, 2)), (2, (2, 3)), (3, (3,))]


def test_groups_follow_longest_runs():
    solver = PathwidthAggregator(path_instance())
    groups = solver.build_groups(solver.partial_bags())
    assert groups == [Group(0, 0, 2, [1, 2]), Group(4, 3, 3, [3])]
    assert groups[0].span == 3


def test_conflict_path_stops_before_assigned_node():
    solver = PathwidthAggregator(path_instance())
    assert solver.preferred(2) == 0
    assert solver.conflict_path(2, 0) == [2, 1]
    assert solver.conflict_path(1, 4) == []


def test_assign_segments_uses_following_portal():
    solver = PathwidthAggregator(path_instance())
    solver.portal_of[2] = 0
    used = solver.assign_segments([1, 2, 3], 4)
    assert used == {0, 4}
    assert solver.portal_of == [0, 0, 0, 4, 4]


def test_path_solves_in_one_phase():
    asg, audits = solve_pathwidth(path_instance())
    assert asg.portal_of_cluster == (0, 0, 0, 4, 4)
    assert len(audits) == 1
    assert audits[0].max_detour == 0
    frame = audit_frame(audits)
    assert list(frame["assigned_clusters"]) == [3]


def test_partial_detours_skip_unassigned():
    inst = path_instance()
    values = partial_detours(inst, [0, None, None, None, 4])
    assert values == [0.0, None, None, None, 0.0]


def test_decomposition_is_required_and_checked():
    inst = path_instance()
    bare = ClusterAggInstance(inst.graph, inst.partition, inst.portals)
    with pytest.raises(PreconditionError):
        solve_pathwidth(bare)
    with pytest.raises(InstanceError):
        solve_pathwidth(bare, PathDecomposition.from_bags([[0, 1], [3, 4]]))


@pytest.mark.parametrize("pw", [1, 2, 3])
@pytest.mark.parametrize("seed", range(5))
def test_generated_instances_within_bound(pw, seed):
    g, pd = gen_pathwidth(pw, 40, seed, max_weight=2)
    inst = gen_instance(g, 3.0, 4, seed, pd)
    asg, audits = solve_pathwidth(inst)
    check = check_assignment(inst, asg)
    assert check.valid
    assert check.realized_beta <= 8 * (pw + 1) + 1e-9
    assert len(audits) <= pw + 1
    assert sum(a.assigned_clusters for a in audits) == inst.num_clusters - len(inst.portal_cluster)


def five_bag_instance():
    g = WeightedGraph.from_edges(6, [(i, i + 1, 1) for i in range(5)])
    pd = PathDecomposition.from_bags([[0, 1], [1, 2], [2, 3], [3, 4], [4, 5]])
    partition = Partition.from_clusters(6, [[0], [1], [2, 3], [4], [5]], 1.0)
    return ClusterAggInstance(g, partition, (0, 5), path_decomposition=pd)


def test_five_bag_groups_share_split_cluster_once():
    solver = PathwidthAggregator(five_bag_instance())
    bags = solver.partial_bags()
    assert bags == [(0, (1,)), (1, (1, 2)), (2, (2, 3)), (3, (3, 4)), (4, (4,))]
    assert [solver.preferred(v) for v in range(1, 5)] == [0, 0, 5, 5]
    groups = solver.build_groups(bags)
    assert groups == [Group(0, 0, 3, [1, 2]), Group(5, 4, 4, [3])]
    assert [g.span for g in groups] == [4, 1]


def test_five_bag_instance_solves_within_bound():
    inst = five_bag_instance()
    asg, audits = solve_pathwidth(inst)
    check = check_assignment(inst, asg)
    assert check.valid
    assert check.realized_beta <= 8 * 2 + 1e-9
    assert 1 <= len(audits) <= 2


@pytest.mark.parametrize("n", [1, 2])
def test_pathwidth_zero_instances_need_no_phase(n):
    g = WeightedGraph.from_edges(n, [])
    pd = PathDecomposition.from_bags([[v] for v in range(n)])
    inst = ClusterAggInstance(g, Partition.singletons(n), tuple(range(n)), path_decomposition=pd)
    solver = PathwidthAggregator(inst)
    assert solver.width == 0
    assert solver.partial_bags() == []
    asg, audits = solve_pathwidth(inst)
    assert asg.portal_of_cluster == tuple(range(n))
    assert audits == []


def test_single_inner_portal_takes_everything():
    inst = path_instance()
    inst = ClusterAggInstance(inst.graph, inst.partition, (2,), path_decomposition=inst.path_decomposition)
    solver = PathwidthAggregator(inst)
    groups = solver.build_groups(solver.partial_bags())
    assert groups == [Group(2, 0, 3, [0, 1, 3, 4])]
    asg, audits = solve_pathwidth(inst)
    assert asg.portal_of_cluster == (2,) * 5
    assert audits[-1].max_detour == 0
    assert len(audits) <= 2
