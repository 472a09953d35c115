import json
import os
import subprocess

import pytest

CLI = os.environ.get("G2M_CLI")
pytestmark = pytest.mark.skipif(not CLI, reason="G2M_CLI not set")


def g2m(*args, check=True, stdin=None):
    proc = subprocess.run([CLI, *map(str, args)], capture_output=True, text=True, input=stdin)
    if check and proc.returncode != 0:
        raise AssertionError(f"g2m {' '.join(map(str, args))} exited {proc.returncode}: {proc.stderr}")
    return proc


def read_manifest(path):
    with open(path) as f:
        return [json.loads(line) for line in f if line.strip()]


def test_parse_and_exit_codes():
    ok = g2m("parse", "--h", 2, "--w", 2, stdin="```\n[[1,0],[0,1]]\n```")
    assert json.loads(ok.stdout) == {"ok": True, "stage": "strict", "matrix": [[1, 0], [0, 1]]}
    bad = g2m("parse", "--h", 2, "--w", 2, stdin="no idea", check=False)
    assert bad.returncode == 3
    assert json.loads(bad.stdout)["failure"] == "count-mismatch"
    assert g2m("gen", "--n", 0, "--colors", 3, "--out", "/tmp/unused", check=False).returncode == 2


def test_prompt_and_geometry():
    assert g2m("prompt", "--n", 12, "--colors", 3, "--budget").stdout.strip() == "866"
    assert "{White: 0, Red: 1, Blue: 2}" in g2m("prompt", "--n", 3, "--colors", 3).stdout
    hist = json.loads(g2m("geometry", "--n", 32).stdout)
    assert hist["Edg-Edg"] == 1024
    rows = g2m("geometry", "--n", 4, "--csv").stdout.strip().splitlines()
    assert rows[0] == "row,col,type,area_dominance" and len(rows) == 17


def test_gen_is_reproducible(tmp_path):
    g2m("gen", "--n", 4, "--colors", 3, "--count", 5, "--split", "test", "--seed", 3, "--out", tmp_path / "a")
    g2m("gen", "--n", 4, "--colors", 3, "--count", 5, "--split", "test", "--seed", 3, "--out", tmp_path / "b")
    assert (tmp_path / "a" / "test.jsonl").read_bytes() == (tmp_path / "b" / "test.jsonl").read_bytes()
    again = g2m("gen", "--n", 4, "--colors", 3, "--count", 5, "--split", "test", "--out", tmp_path / "a", check=False)
    assert again.returncode == 2


def test_replay_eval_and_report(tmp_path):
    g2m("gen", "--n", 5, "--colors", 4, "--count", 12, "--split", "test", "--seed", 9, "--out", tmp_path / "data")
    records = read_manifest(tmp_path / "data" / "test.jsonl")
    replay = tmp_path / "replay.jsonl"
    with open(replay, "w") as f:
        for i, rec in enumerate(records):
            text = json.dumps(rec["matrix"]) if i % 3 else "I am not sure."
            f.write(json.dumps({"id": rec["id"], "response": text}) + "\n")
    args = ["eval", "--manifest", tmp_path / "data" / "test.jsonl", "--adapter", "replay", "--replay", replay,
            "--model", "fixture"]
    first = json.loads(g2m(*args, "--out", tmp_path / "run1").stdout)
    assert first["count"] == 12 and first["parse_failures"] == 4
    assert first["exact_match"] == pytest.approx(8 / 12)
    g2m(*args, "--out", tmp_path / "run2", "--concurrency", 3)
    agg1 = (tmp_path / "run1" / "aggregate.json").read_bytes()
    assert agg1 == (tmp_path / "run2" / "aggregate.json").read_bytes()

    resumed = json.loads(g2m(*args, "--out", tmp_path / "run1").stdout)
    assert resumed["skipped"] == 12 and resumed["queried"] == 0

    out = g2m("report", "--run", tmp_path / "run1", "--out", tmp_path / "report").stdout
    assert "fixture n=5: 66.7 / " in out
    for name in ("summary.csv", "iou.csv", "interaction.csv", "heatmap.png"):
        assert (tmp_path / "report" / name).stat().st_size > 0


def test_probe_pipeline(tmp_path):
    data = tmp_path / "data"
    for split, count in (("train", 48), ("val", 12)):
        g2m("gen", "--n", 8, "--colors", 3, "--count", count, "--split", split, "--seed", 1, "--out", data)
        g2m("synth-features", "--manifest", data / f"{split}.jsonl", "--out", tmp_path / "feat", "--seed", 4)
    common = ["--features", tmp_path / "feat", "--n", 8, "--colors", 3]
    ckpt = tmp_path / "probe.g2mf"
    trained = json.loads(g2m("probe", "train", *common, "--manifest", data / "train.jsonl", "--val-manifest",
                             data / "val.jsonl", "--out", ckpt, "--hidden", 32, "--max-iters", 300,
                             "--batch", 16, "--eval-every", 25, "--target", 0.99).stdout)
    assert trained["best_val_cell_accuracy"] >= 0.99
    sidecar = json.loads((tmp_path / "probe.json").read_text())
    assert sidecar["n"] == 8 and sidecar["c"] == 3 and sidecar["hidden"] == 32
    ev = json.loads(g2m("probe", "eval", *common, "--manifest", data / "val.jsonl", "--checkpoint", ckpt,
                        "--out", tmp_path / "probe_run").stdout)
    assert ev["cell_accuracy"] >= 0.99
    g2m("report", "--run", tmp_path / "probe_run")
    assert (tmp_path / "probe_run" / "heatmap.png").exists()
