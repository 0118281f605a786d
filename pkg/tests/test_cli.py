from __future__ import annotations

import zipfile
from io import BytesIO
from pathlib import Path

from click.testing import CliRunner

from graphloom import io as gio
from graphloom import pipeline
from graphloom.cli import main

from test_pipeline import movie_script, write_inputs


def write_script(tmp_path: Path) -> Path:
    script = movie_script(tmp_path)
    path = tmp_path / "movies.pipeline"
    path.write_bytes(pipeline.script_bytes(script))
    return path


def write_project(tmp_path: Path) -> Path:
    script_path = write_script(tmp_path)
    engine, _report = pipeline.run_script(pipeline.parse_script(script_path.read_bytes()), str(tmp_path))
    project = pipeline.project_document(engine)
    path = tmp_path / "movies.project"
    path.write_bytes(gio.canonical_bytes(project))
    return path


def test_run_command(tmp_path):
    script_path = write_script(tmp_path)
    result = CliRunner().invoke(main, ["run", str(script_path)])
    assert result.exit_code == 0, result.output
    report = gio.parse_document(result.output)
    assert len(report["ops"]) == 6
    assert (tmp_path / "out/network.json").exists()


def test_validate_command_accepts_good_script(tmp_path):
    script_path = write_script(tmp_path)
    result = CliRunner().invoke(main, ["validate", str(script_path)])
    assert result.exit_code == 0
    assert gio.parse_document(result.output)["valid"] is True


def test_validate_command_rejects_bad_script(tmp_path):
    write_inputs(tmp_path)
    script = movie_script(tmp_path)
    # forward reference: an op names a class no import or earlier op created
    script["ops"].insert(0, {"opName": "promote", "params": {"class": "c9", "attr": "genre"}})
    path = tmp_path / "broken.pipeline"
    path.write_bytes(pipeline.script_bytes(script))
    result = CliRunner().invoke(main, ["validate", str(path)])
    assert result.exit_code == 1
    error = gio.parse_document(result.stderr)
    assert error["error"] == "validation"
    # and run on the same script writes nothing
    run_result = CliRunner().invoke(main, ["run", str(path)])
    assert run_result.exit_code == 1
    assert not (tmp_path / "out").exists()


def test_missing_file_is_an_io_error(tmp_path):
    result = CliRunner().invoke(main, ["run", str(tmp_path / "nope.pipeline")])
    assert result.exit_code == 3


def test_inspect_command(tmp_path):
    project = write_project(tmp_path)
    result = CliRunner().invoke(main, ["inspect", str(project)])
    assert result.exit_code == 0, result.output
    assert "movies" in result.output and "[node]" in result.output
    scoped = CliRunner().invoke(main, ["inspect", str(project), "--class", "c2", "--head", "2"])
    assert scoped.exit_code == 0
    assert "cast" in scoped.output


def test_score_command(tmp_path):
    project = write_project(tmp_path)
    result = CliRunner().invoke(main, ["score", str(project), "--src", "c1", "--trg", "c2"])
    assert result.exit_code == 0, result.output
    scores = gio.parse_document(result.output)["scores"]
    assert scores[0]["srcKey"] == "pid" and scores[0]["trgKey"] == "pid"
    sampled = CliRunner().invoke(
        main, ["score", str(project), "--src", "c1", "--trg", "c2", "--sample", "3", "--seed", "5"]
    )
    assert sampled.exit_code == 0
    assert all(s["approximate"] for s in gio.parse_document(sampled.output)["scores"])


def test_sample_command_is_deterministic(tmp_path):
    project = write_project(tmp_path)
    args = ["sample", str(project), "--per-class", "2", "--seed", "7"]
    first = CliRunner().invoke(main, args)
    second = CliRunner().invoke(main, args)
    assert first.exit_code == 0
    assert first.output == second.output
    doc = gio.parse_document(first.output)
    ids = {n["id"] for n in doc["nodes"]}
    assert all(l["source"] in ids and l["target"] in ids for l in doc["links"])


def test_export_command(tmp_path):
    project = write_project(tmp_path)
    out = tmp_path / "dump.zip"
    result = CliRunner().invoke(
        main, ["export", str(project), "--format", "csvZip", "--out", str(out), "--classes", "c0"]
    )
    assert result.exit_code == 0, result.output
    names = zipfile.ZipFile(BytesIO(out.read_bytes())).namelist()
    assert names == ["movies.csv"]


def test_unknown_class_is_a_runtime_error(tmp_path):
    project = write_project(tmp_path)
    result = CliRunner().invoke(main, ["score", str(project), "--src", "zzz", "--trg", "c2"])
    assert result.exit_code == 2
    assert gio.parse_document(result.stderr)["error"] == "runtime"
