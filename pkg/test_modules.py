#!/usr/bin/env python3
"""
Smoke run over the solver, net, hierarchy and UST modules
"""

import sys


def main():
    print("Testing UST toolkit modules...")
    print("=" * 50)

    print("\n1. Testing imports...")
    try:
        from instances import gen_grid, gen_instance, gen_pathwidth, gen_random_tree
        from ca_general import solve_general
        from ca_tree import solve_tree
        from ca_pathwidth import solve_pathwidth
        from dangling_net import sample_net
        from hierarchy import HierarchyParams, build_hierarchy
        from ust_eval import shortest_path_tree, ust_ratio_scan
        from verify import check_assignment, check_hierarchy, check_net
        print("✅ All modules imported successfully")
    except ImportError as e:
        print(f"❌ Import error: {e}")
        return 1

    print("\n2. Testing cluster aggregation...")
    try:
        inst = gen_instance(gen_grid(8, seed=0), 2.0, 4, seed=0)
        asg, stats = solve_general(inst, seed=0)
        print(f"✅ General solver: {inst.num_clusters} clusters, "
              f"realized β {check_assignment(inst, asg).realized_beta:.3f}")

        inst = gen_instance(gen_random_tree(60, seed=0, max_weight=3), 6.0, 6, seed=0)
        asg, report = solve_tree(inst)
        print(f"✅ Tree solver: realized β {check_assignment(inst, asg).realized_beta:.3f} (bound 4)")

        g, pd = gen_pathwidth(2, 30, seed=0)
        inst = gen_instance(g, 3.0, 3, seed=0, pd=pd)
        asg, audits = solve_pathwidth(inst)
        print(f"✅ Pathwidth solver: {len(audits)} phase(s), "
              f"realized β {check_assignment(inst, asg).realized_beta:.3f}")
    except Exception as e:
        print(f"❌ Cluster aggregation error: {e}")
        return 1

    print("\n3. Testing dangling nets...")
    try:
        net, gN = sample_net(gen_grid(8, seed=0), 4.0, seed=0)
        report = check_net(gN, net)
        print(f"✅ Net sparsity {net.max_count} <= {net.tau_target}: {report.ok}")
    except Exception as e:
        print(f"❌ Net error: {e}")
        return 1

    print("\n4. Testing hierarchy construction...")
    try:
        g = gen_grid(4, seed=0)
        h = build_hierarchy(g, HierarchyParams.for_graph(g), seed=0)
        print(f"✅ Hierarchy depth {h.depth} (bound {h.level_bound}), checks pass: {check_hierarchy(g, h).ok}")
        print(h.level_frame()[["level", "clusters", "max_diameter", "max_ball_sparsity"]].to_string(index=False))
    except Exception as e:
        print(f"❌ Hierarchy error: {e}")
        return 1

    print("\n5. Testing UST evaluation...")
    try:
        g = gen_grid(5, seed=0)
        scan = ust_ratio_scan(g, shortest_path_tree(g, 0), trials=20, seed=0)
        print(f"✅ Shortest-path tree worst ratio {scan.worst_ratio:.3f} over {scan.trials} sets")
    except Exception as e:
        print(f"❌ UST evaluation error: {e}")
        return 1

    print("\n" + "=" * 50)
    print("🎉 All module checks passed!")
    return 0


if __name__ == "__main__":
    sys.exit(main())
