import json
import socket
from pathlib import Path

import pytest
from click.testing import CliRunner

from themekit.cli import (
    EXIT_CONFIG_ERROR, EXIT_DECISIONS_EXHAUSTED, EXIT_PIPELINE_ERROR, main,
)
from themekit.fixtures import theme_fixture

from conftest import make_words


@pytest.fixture
def runner():
    return CliRunner()


def write_inputs(tmp_path, turn_words=(400, 500, 450)):
    config = {
        "background": "Parents of children in long-term cardiac care.",
        "goals": "Identify family coping themes.",
        "chunk_word_limit": 800,
    }
    (tmp_path / "config.json").write_text(json.dumps(config))
    tdir = tmp_path / "transcripts"
    tdir.mkdir()
    (tdir / "t1.json").write_text(json.dumps({
        "id": "t1", "title": "Focus group 1",
        "turns": [{"speaker": "participant", "text": make_words(n)}
                  for n in turn_words],
    }))
    return tmp_path / "config.json", tdir


def write_decisions(tmp_path, decisions):
    path = tmp_path / "decisions.json"
    path.write_text(json.dumps(decisions))
    return path


# ---------------------------------------------------------------------------
# run

def test_run_mock_end_to_end(runner, tmp_path):
    config, tdir = write_inputs(tmp_path)
    decisions = write_decisions(tmp_path, [
        {"kind": "continue_refinement"}, {"kind": "approve"}])
    result = runner.invoke(main, [
        "run", "--config", str(config), "--transcripts", str(tdir),
        "--auto-decisions", str(decisions),
        "--data-dir", str(tmp_path / "sessions"), "--session-id", "s1"])
    assert result.exit_code == 0, result.output
    assert "finalized session s1" in result.output
    root = tmp_path / "sessions" / "s1"
    assert (root / "artifacts" / "themes" / "v0.json").exists()
    assert (root / "artifacts" / "themes" / "v2.json").exists()
    state = json.loads((root / "session.json").read_text())
    assert state["phase"] == "finalized"


def test_run_decisions_exhausted(runner, tmp_path):
    config, tdir = write_inputs(tmp_path)
    decisions = write_decisions(tmp_path, [])
    result = runner.invoke(main, [
        "run", "--config", str(config), "--transcripts", str(tdir),
        "--auto-decisions", str(decisions),
        "--data-dir", str(tmp_path / "sessions")])
    assert result.exit_code == EXIT_DECISIONS_EXHAUSTED


def test_run_config_errors(runner, tmp_path):
    config, tdir = write_inputs(tmp_path)
    result = runner.invoke(main, [
        "run", "--config", str(tmp_path / "missing.json"),
        "--transcripts", str(tdir)])
    assert result.exit_code == EXIT_CONFIG_ERROR

    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"background": "b", "goals": "g",
                               "similarity_threshold": 2.0}))
    result = runner.invoke(main, [
        "run", "--config", str(bad), "--transcripts", str(tdir)])
    assert result.exit_code == EXIT_CONFIG_ERROR

    empty = tmp_path / "empty"
    empty.mkdir()
    result = runner.invoke(main, [
        "run", "--config", str(config), "--transcripts", str(empty)])
    assert result.exit_code == EXIT_CONFIG_ERROR


def test_run_interactive_prompt(runner, tmp_path):
    config, tdir = write_inputs(tmp_path)
    result = runner.invoke(main, [
        "run", "--config", str(config), "--transcripts", str(tdir),
        "--data-dir", str(tmp_path / "sessions"), "--session-id", "s1"],
        input="approve\n")
    assert result.exit_code == 0, result.output


def test_run_deterministic_time_trees_identical(runner, tmp_path):
    config, tdir = write_inputs(tmp_path)
    trees = []
    for name in ("a", "b"):
        decisions = write_decisions(tmp_path, [{"kind": "approve"}])
        result = runner.invoke(main, [
            "run", "--config", str(config), "--transcripts", str(tdir),
            "--auto-decisions", str(decisions), "--deterministic-time",
            "--data-dir", str(tmp_path / name), "--session-id", "s1"])
        assert result.exit_code == 0, result.output
        root = tmp_path / name / "s1"
        trees.append({str(p.relative_to(root)): p.read_text()
                      for p in sorted(root.rglob("*")) if p.is_file()})
    assert trees[0] == trees[1]


def test_run_txt_transcripts(runner, tmp_path):
    config, tdir = write_inputs(tmp_path)
    for p in tdir.iterdir():
        p.unlink()
    (tdir / "interview.txt").write_text(
        make_words(300) + "\n\n" + make_words(250))
    decisions = write_decisions(tmp_path, [{"kind": "approve"}])
    result = runner.invoke(main, [
        "run", "--config", str(config), "--transcripts", str(tdir),
        "--auto-decisions", str(decisions),
        "--data-dir", str(tmp_path / "sessions")])
    assert result.exit_code == 0, result.output


# ---------------------------------------------------------------------------
# metrics

def write_theme_sets(tmp_path):
    fx = theme_fixture()
    ref = tmp_path / "human.json"
    gen = tmp_path / "after.json"
    ref.write_text(json.dumps(fx["human"].to_dict()))
    gen.write_text(json.dumps(fx["after"].to_dict()))
    return ref, gen


def test_metrics_outputs(runner, tmp_path):
    ref, gen = write_theme_sets(tmp_path)
    out = tmp_path / "out"
    result = runner.invoke(main, [
        "metrics", "--reference", str(ref), "--generated", str(gen),
        "--theta", "0.6", "--out", str(out)])
    assert result.exit_code == 0, result.output
    lines = result.output.strip().splitlines()
    assert lines[0].startswith("jaccard 0.")
    assert lines[1].startswith("hit_rate 0.")
    report = json.loads((out / "report.json").read_text())
    assert len(report["matrix"]["row_labels"]) == 12
    assert len(report["matrix"]["col_labels"]) == 13
    csv_lines = (out / "heatmap.csv").read_text().strip().splitlines()
    assert len(csv_lines) == 13  # header + 12 rows
    heatmap = json.loads((out / "heatmap.json").read_text())
    assert heatmap == report["matrix"]


def test_metrics_with_vector_table(runner, tmp_path):
    ref, gen = write_theme_sets(tmp_path)
    fx = theme_fixture()
    vectors = {}
    for ts in (fx["human"], fx["after"]):
        for t in ts.themes:
            sentence = t.description.split(".")[0] + "."
            vectors[sentence] = [1.0, 0.0]
    vec_path = tmp_path / "vectors.json"
    vec_path.write_text(json.dumps(vectors))
    out = tmp_path / "out"
    result = runner.invoke(main, [
        "metrics", "--reference", str(ref), "--generated", str(gen),
        "--vectors", str(vec_path), "--out", str(out)])
    assert result.exit_code == 0, result.output
    # identical vectors for every theme: every pair is a hit
    assert "jaccard 1.000" in result.output
    assert "hit_rate 1.000" in result.output


def test_metrics_parse_error(runner, tmp_path):
    ref, _ = write_theme_sets(tmp_path)
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    result = runner.invoke(main, [
        "metrics", "--reference", str(ref), "--generated", str(bad)])
    assert result.exit_code == EXIT_CONFIG_ERROR


def test_metrics_embedder_failure(runner, tmp_path, monkeypatch):
    ref, gen = write_theme_sets(tmp_path)
    monkeypatch.setenv("THEMEKIT_BASE_URL", "http://127.0.0.1:9")
    monkeypatch.setenv("TAMA_API_KEY", "k")
    result = runner.invoke(main, [
        "metrics", "--reference", str(ref), "--generated", str(gen),
        "--embedder", "remote", "--out", str(tmp_path / "out")])
    assert result.exit_code == EXIT_PIPELINE_ERROR


# ---------------------------------------------------------------------------
# serve

def test_serve_bind_failure(runner, tmp_path):
    blocker = socket.socket()
    blocker.bind(("127.0.0.1", 0))
    port = blocker.getsockname()[1]
    blocker.listen(1)
    try:
        result = runner.invoke(main, [
            "serve", "--port", str(port),
            "--data-dir", str(tmp_path / "sessions")])
        assert result.exit_code == EXIT_CONFIG_ERROR
    finally:
        blocker.close()
    # the OpenAPI document is exported even when binding fails
    assert (tmp_path / "sessions" / "api" / "openapi.json").exists()
