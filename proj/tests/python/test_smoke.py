import os
import subprocess

import pytest

import manifail


def test_catalog():
    ids = manifail.task_ids()
    assert len(ids) == 16
    assert manifail.category_of("SpinStack") == "dynamic"
    plan = manifail.build_task("PickCube", 3)
    assert [s["name"] for s in plan["substages"]] == [
        "reach-above", "descend", "grasp", "lift", "move-to-target"]
    with pytest.raises(KeyError):
        manifail.build_task("Nope", 0)


def test_episode_outcomes():
    ok = manifail.episode("StackCube", 1)
    assert ok[-1]["outcome"] == "success"
    bad = manifail.episode("PickCube", 1, taxonomy="grasping_error")
    assert bad[-1]["outcome"] == "failure"


def test_scoring():
    assert manifail.judge_normalized(3, 4, 5) == 80.0
    assert manifail.score_mc("B", ["Yes", "No"], 1) == 1
    assert manifail.score_mc("gibberish", ["Yes", "No"], 1) == 0


def test_generate_evaluate(tmp_path):
    ds = tmp_path / "ds"
    s = manifail.generate(ds, seed=3, tasks=["PickCube", "PushCube"], failures_per_task=3,
                          successes_per_task=1)
    assert s["qa_items"] == 54
    st = manifail.stats(ds)
    assert sum(st["qa_by_type"].values()) == 54
    rep = manifail.evaluate(ds / "qa.jsonl", tmp_path / "ev")
    assert rep["overall"] == 100.0
    with pytest.raises(ValueError):
        manifail.generate(tmp_path / "x", seed=1, tasks=["PushCube"], taxonomy="grasping_error")


def test_tamper(tmp_path):
    ds = tmp_path / "ds"
    manifail.generate(ds, seed=1, tasks=["PickCube"], failures_per_task=1, successes_per_task=0)
    with open(ds / "qa.jsonl", "a") as f:
        f.write("\n")
    with pytest.raises(RuntimeError):
        manifail.verify_manifest(ds)


def test_loop(tmp_path):
    t = manifail.loop(tmp_path, tasks=["PushCube"], episodes=5, critics=["null", "oracle-low"])
    rows = {(r["critic"], r["row"]): r["average"] for r in t["rows"]}
    assert rows[("oracle-low", "5 attempts")] >= rows[("null", "5 attempts")]


def test_cli_help():
    cli = os.environ.get("MANIFAIL_CLI")
    if not cli:
        pytest.skip("CLI path not provided")
    assert subprocess.run([cli, "--help"], capture_output=True).returncode == 0
