import json
import subprocess
import sys

import pytest

from fgfusion import load_affinity, load_embeddings, load_features, load_graph


def run_cli(*args, cwd=None):
    return subprocess.run(
        [sys.executable, "-m", "fgfusion.cli", *map(str, args)],
        capture_output=True,
        text=True,
        cwd=cwd,
    )


@pytest.fixture
def fixture_dir(tmp_path):
    proc = run_cli(
        "synth", "--classes", 4, "--per-class", 8, "--noise", 0.2,
        "--complementarity", 1.0, "--seed", 3, "--out-dir", tmp_path / "data",
    )
    assert proc.returncode == 0, proc.stderr
    return tmp_path / "data"


def test_synth_outputs_are_loadable_and_deterministic(tmp_path):
    for name in ("one", "two"):
        proc = run_cli(
            "synth", "--classes", 3, "--per-class", 5, "--seed", 11,
            "--out-dir", tmp_path / name, "--format", "binary",
        )
        assert proc.returncode == 0, proc.stderr
    a1 = load_features(tmp_path / "one" / "modality_a.bin", "binary")
    a2 = load_features(tmp_path / "two" / "modality_a.bin", "binary")
    assert a1.data.tobytes() == a2.data.tobytes()
    assert (tmp_path / "one" / "labels.txt").read_text().splitlines()[0] == "c00"


def test_stagewise_chain(fixture_dir, tmp_path):
    """build-graph -> fuse -> embed -> eval, all via files."""
    for name in ("a", "b"):
        proc = run_cli(
            "build-graph", "--features", fixture_dir / f"modality_{name}.csv",
            "--k", 5, "--out", tmp_path / f"g_{name}.csv",
        )
        assert proc.returncode == 0, proc.stderr
    graph = load_graph(tmp_path / "g_a.csv")
    assert graph.n == 32 and all(ids.size == 5 for ids in graph.neighbor_ids)

    proc = run_cli(
        "fuse", "--graphs", tmp_path / "g_a.csv", tmp_path / "g_b.csv",
        "--out", tmp_path / "aff.bin",
    )
    assert proc.returncode == 0, proc.stderr
    affinity = load_affinity(tmp_path / "aff.bin", "binary")
    assert affinity.n == 32

    proc = run_cli(
        "embed", "--affinity", tmp_path / "aff.bin", "--dim", 8,
        "--samples-per-node", 10, "--epochs", 4, "--seed", 1,
        "--out", tmp_path / "emb.bin", "--report", tmp_path / "report.json",
    )
    assert proc.returncode == 0, proc.stderr
    emb = load_embeddings(tmp_path / "emb.bin", "binary")
    assert emb.vectors.shape == (32, 8)
    report = json.loads((tmp_path / "report.json").read_text())
    assert len(report["epoch_loss"]) == 4

    proc = run_cli(
        "eval", "--embeddings", tmp_path / "emb.bin", "--format", "binary",
        "--labels", fixture_dir / "labels.txt", "--m", 3, "--repeats", 4,
        "--classify-metric", "cosine", "--out", tmp_path / "results.csv",
    )
    assert proc.returncode == 0, proc.stderr
    header = (tmp_path / "results.csv").read_text().splitlines()[0]
    assert header == "method,k,d,s-1,s-2,s-3,s-4,mean,std"


def test_pipeline_outputs(fixture_dir, tmp_path):
    config = {
        "features": [
            {"path": "data/modality_a.csv", "name": "rgb"},
            {"path": "data/modality_b.csv", "name": "depth"},
        ],
        "labels": "data/labels.txt",
        "k": [4, 6],
        "d": [4],
        "samples_per_node": 10,
        "epochs": 3,
        "m_or_fraction": 3,
        "repeats": 3,
        "seed": 5,
    }
    (tmp_path / "config.json").write_text(json.dumps(config))
    out_dir = tmp_path / "out"
    proc = run_cli("pipeline", "--config", tmp_path / "config.json", "--out-dir", out_dir)
    assert proc.returncode == 0, proc.stderr

    lines = (out_dir / "results.csv").read_text().strip().splitlines()
    assert len(lines) == 1 + 3 + 2  # header, three baselines, two fgf cells
    manifest = json.loads((out_dir / "manifest.json").read_text())
    assert manifest["config"]["seed"] == 5
    assert (out_dir / "embeddings_k4_d4.bin").exists()
    assert (out_dir / "embeddings_k6_d4.bin").exists()
    assert (out_dir / "sweep_k.csv").exists()
    assert not (out_dir / "sweep_d.csv").exists()  # single d value


def test_pipeline_cli_overrides(fixture_dir, tmp_path):
    config = {
        "features": [
            {"path": "data/modality_a.csv"},
            {"path": "data/modality_b.csv"},
        ],
        "labels": "data/labels.txt",
        "k": [4],
        "d": [4],
        "samples_per_node": 10,
        "epochs": 3,
        "m_or_fraction": 3,
        "repeats": 2,
        "seed": 5,
    }
    (tmp_path / "config.json").write_text(json.dumps(config))
    proc = run_cli(
        "pipeline", "--config", tmp_path / "config.json",
        "--out-dir", tmp_path / "out", "--k", 5, "--seed", 9,
    )
    assert proc.returncode == 0, proc.stderr
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert manifest["config"]["k"] == [5] and manifest["config"]["seed"] == 9


def test_exit_code_2_on_bad_flag(tmp_path):
    proc = run_cli("build-graph", "--features", "x.csv", "--k", 3,
                   "--out", "g.csv", "--metric", "hamming")
    assert proc.returncode == 2


def test_exit_code_2_on_unknown_config_key(fixture_dir, tmp_path):
    config = {
        "features": [{"path": "data/modality_a.csv"}, {"path": "data/modality_b.csv"}],
        "labels": "data/labels.txt",
        "turbo": True,
    }
    (tmp_path / "config.json").write_text(json.dumps(config))
    proc = run_cli("pipeline", "--config", tmp_path / "config.json", "--out-dir", tmp_path / "o")
    assert proc.returncode == 2
    assert "turbo" in proc.stderr


def test_exit_code_3_on_missing_file(tmp_path):
    proc = run_cli("build-graph", "--features", tmp_path / "absent.csv",
                   "--k", 3, "--out", tmp_path / "g.csv")
    assert proc.returncode == 3


def test_exit_code_3_on_malformed_data(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n3,oops\n")
    proc = run_cli("build-graph", "--features", bad, "--k", 1, "--out", tmp_path / "g.csv")
    assert proc.returncode == 3


def test_exit_code_4_on_divergence(fixture_dir, tmp_path):
    for name in ("a", "b"):
        run_cli("build-graph", "--features", fixture_dir / f"modality_{name}.csv",
                "--k", 5, "--out", tmp_path / f"g_{name}.csv")
    run_cli("fuse", "--graphs", tmp_path / "g_a.csv", tmp_path / "g_b.csv",
            "--out", tmp_path / "aff.bin")
    proc = run_cli(
        "embed", "--affinity", tmp_path / "aff.bin", "--dim", 4,
        "--samples-per-node", 50, "--epochs", 5, "--lr", 500.0, "--lr-end", 1.0,
        "--seed", 1, "--out", tmp_path / "emb.bin",
    )
    assert proc.returncode == 4
