"""
Tests for the command line
"""

import json

import pytest

from instances import load_instance
from cli import (
    KAPPA_RANGE,
    AcceptanceSuite,
    doubling_instance,
    general_instance,
    main,
    multilevel_builds,
    voronoi_partition,
)


def run_json(capsys, argv):
    code = main(argv + ["--json"])
    return code, json.loads(capsys.readouterr().out)


@pytest.fixture
def tree_file(tmp_path):
    path = tmp_path / "tree.json"
    assert main(["gen", "tree", "--n", "40", "--delta", "4", "--portals", "4", "--seed", "3",
                 "--out", str(path)]) == 0
    return path


def test_gen_prints_instance(capsys):
    assert main(["gen", "grid", "--n", "4", "--seed", "1"]) == 0
    first = capsys.readouterr().out
    assert main(["--seed", "1", "gen", "grid", "--n", "4"]) == 0
    assert capsys.readouterr().out == first
    data = json.loads(first)
    assert data["schema"] == 1
    assert data["graph"]["n"] == 16


def test_gen_writes_file(tree_file, capsys):
    assert capsys.readouterr().out == ""
    inst = load_instance(tree_file)
    assert inst.graph.vertex_count == 40
    assert inst.graph.is_tree()


def test_ca_tree(tree_file, capsys):
    code, report = run_json(capsys, ["ca", "tree", "--in", str(tree_file)])
    assert code == 0
    assert report["ok"]
    assert report["realized_beta"] <= 4 + 1e-9
    assert len(report["instance_hash"]) == 40


def test_ca_general_trials_sorted(tree_file, capsys):
    code, report = run_json(capsys, ["ca", "general", "--in", str(tree_file), "--trials", "3", "--seed", "5"])
    assert code == 0
    assert [run["seed"] for run in report["runs"]] == [5, 6, 7]
    assert all(run["check"]["valid"] for run in report["runs"])


def test_oracle_on_lower_bound(tmp_path, capsys):
    path = tmp_path / "lb.json"
    assert main(["gen", "lower-bound", "--delta", "5", "--out", str(path)]) == 0
    code, report = run_json(capsys, ["oracle", "--in", str(path)])
    assert code == 0
    assert report["optimum"] == 5.0


def test_net_and_scan_on_grid(capsys):
    code, report = run_json(capsys, ["net", "--grid", "4", "--delta", "2"])
    assert code == 0
    assert report["runs"][0]["check"]["covering_ok"]
    assert "shifts" not in report["runs"][0]["net"]
    code, report = run_json(capsys, ["ust-scan", "--grid", "3", "--trials", "5"])
    assert code == 0
    assert report["worst_ratio"] >= 1


def test_hierarchy_on_grid(capsys):
    code, report = run_json(capsys, ["hierarchy", "--grid", "3"])
    assert code == 0
    assert report["runs"][0]["check"]["ok"]
    assert report["params"]["solver"] == "general"


@pytest.mark.parametrize("argv", [
    ["ca", "tree"],
    ["frobnicate"],
    ["gen", "cube"],
    ["ca", "doubling", "--in", "x.json"],
])
def test_usage_errors(argv):
    assert main(argv) == 2


def test_runtime_errors(tmp_path):
    assert main(["ca", "tree", "--in", str(tmp_path / "missing.json")]) == 1
    grid = tmp_path / "grid.json"
    assert main(["gen", "grid", "--n", "3", "--out", str(grid)]) == 0
    assert main(["ca", "tree", "--in", str(grid)]) == 1


def test_voronoi_cells_cover_graph():
    inst, params, centers = doubling_instance(60, 1, 2.0, seed=0)
    assert inst.partition.num_clusters == len(centers)
    assert params.d == 1
    again = voronoi_partition(inst.graph, centers, 2.0)
    assert again == inst.partition


def test_suite_fixed_criteria():
    suite = AcceptanceSuite(seed=0, trials=1)
    assert suite.tree_tightness()[:2] == (1, 1)
    assert suite.lower_bound()[:2] == (1, 1)
    assert suite.seeds(3, 2) == AcceptanceSuite(seed=0).seeds(3, 2)


@pytest.mark.parametrize("k", range(4))
def test_general_instances_have_kappa_in_range(k):
    inst = general_instance(k, seed=k)
    low, high = KAPPA_RANGE
    assert low <= inst.num_clusters <= high
    if k % 2 == 0:
        assert 52 <= inst.num_clusters <= 256


def test_general_distortion_runs_in_range():
    runs, passed, detail = AcceptanceSuite(seed=0, trials=2).general_distortion()
    assert runs == 2
    assert passed == runs
    assert "ledger bound held in 2/2" in detail


def test_multilevel_builds_have_small_gamma():
    gammas = [params.gamma for _, _, params in multilevel_builds()]
    assert gammas == [6, 24]


def test_hierarchy_criterion_reaches_depth_two():
    runs, passed, detail = AcceptanceSuite(seed=0, trials=1).hierarchy()
    assert runs == 4
    assert passed == runs
    depths = json.loads(detail.split("depths ")[1])
    assert min(depths[2:]) >= 2


def test_determinism_replays_covered_criteria():
    suite = AcceptanceSuite(seed=0, trials=1)
    rows = suite.evaluate(suite.CRITERIA[:2])
    runs, passed, detail = suite.determinism(rows)
    assert passed == runs
    assert detail.startswith("report bytes identical")
    altered = [dict(rows[0], detail="tampered"), rows[1]]
    runs, passed, detail = suite.determinism(altered)
    assert passed == runs - 1
    assert "differs at [1]" in detail


def test_suite_json_is_byte_identical(capsys):
    argv = ["suite", "--seed", "1", "--trials", "1", "--json"]
    first_code = main(argv)
    first = capsys.readouterr().out
    second_code = main(argv)
    assert capsys.readouterr().out == first
    assert first_code == second_code
    criteria = {row["criterion"]: row for row in json.loads(first)["criteria"]}
    assert criteria[11]["passed"] == criteria[11]["runs"]
