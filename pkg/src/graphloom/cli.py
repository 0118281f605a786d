"""Command-line interface: batch runs, inspection, scoring, sampling, serving.

Errors print as one machine-readable document line on stderr. Exit codes:
0 success, 1 validation failure, 2 runtime failure, 3 I/O failure.
"""

from __future__ import annotations

import logging
import sys
from pathlib import Path

import click

from graphloom import io as gio
from graphloom import pipeline, sampler
from graphloom.errors import GraphLoomError, ValidationError
from graphloom.heuristic import score_all_pairs, score_all_pairs_sampled
from graphloom.values import to_text

EXIT_VALIDATION = 1
EXIT_RUNTIME = 2
EXIT_IO = 3




def _fail(kind: str, message: str, code: int) -> None:
    sys.stderr.write(gio.canonical_dumps({"error": kind, "message": message}) + "\n")
    sys.exit(code)


def _guarded(fn):
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ValidationError as err:
            _fail("validation", str(err), EXIT_VALIDATION)
        except OSError as err:
            _fail("io", str(err), EXIT_IO)
        except GraphLoomError as err:
            _fail("runtime", str(err), EXIT_RUNTIME)

    wrapper.__name__ = fn.__name__
    return wrapper


def _load_engine(project_path: str, no_cache: bool):
    path = Path(project_path)
    document = gio.parse_document(path.read_text(encoding="utf-8"))
    workdir = str(path.parent)
    if "script" in document:
        engine = pipeline.load_project(document, workdir)
    else:
        script = dict(document)
        script["exports"] = []
        engine, _ = pipeline.run_script(script, workdir)
    engine.network.cache_enabled = not no_cache
    return engine


@click.group()
@click.option("--log-level", default="warning", show_default=True, help="logging threshold")
def main(log_level: str):
    logging.basicConfig(level=getattr(logging, log_level.upper(), logging.WARNING))


@main.command()
@click.argument("script_path", type=click.Path())
@click.option("--no-cache", is_flag=True, help="re-evaluate tables on every access")
@_guarded
def run(script_path: str, no_cache: bool):
    """Validate and execute a pipeline script."""
    path = Path(script_path)
    script = pipeline.parse_script(path.read_text(encoding="utf-8"))
    _engine, report = pipeline.run_script(script, workdir=str(path.parent), cache_enabled=not no_cache)
    click.echo(gio.canonical_dumps(report))


@main.command()
@click.argument("script_path", type=click.Path())
@_guarded
def validate(script_path: str):
    """Validate a pipeline script without executing it."""
    path = Path(script_path)
    script = pipeline.parse_script(path.read_text(encoding="utf-8"))
    known = pipeline.validate_script(script, workdir=str(path.parent))
    click.echo(gio.canonical_dumps({"valid": True, "classes": known}))


@main.command()
@click.argument("project_path", type=click.Path())
@click.option("--class", "class_id", default=None, help="show one class only")
@click.option("--head", default=5, show_default=True, help="rows to print per class")
@click.option("--no-cache", is_flag=True)
@_guarded
def inspect(project_path: str, class_id: str | None, head: int, no_cache: bool):
    """Print a model summary and the first rows of each table."""
    engine = _load_engine(project_path, no_cache)
    specs = engine.model.classes.values()
    if class_id is not None:
        specs = [engine.model.require(class_id)]
    for spec in specs:
        count = engine.model.count_instances(spec.id)
        click.echo(f"{spec.id}  {spec.label}  [{spec.interpretation.value}]  {count} instance(s)")
        names = engine.network.attribute_names(spec.table_id)
        click.echo("  attributes: " + ", ".join(names))
        for row in engine.network.evaluate(spec.table_id)[: max(0, head)]:
            click.echo("  " + " | ".join(to_text(row.get(n)) for n in names))


@main.command()
@click.argument("project_path", type=click.Path())
@click.option("--src", required=True)
@click.option("--trg", required=True)
@click.option("--sample", "sample_size", default=None, type=int, help="sampled scoring with this many rows")
@click.option("--seed", default=0, show_default=True)
@click.option("--no-cache", is_flag=True)
@_guarded
def score(project_path: str, src: str, trg: str, sample_size: int | None, seed: int, no_cache: bool):
    """Rank key combinations between two classes."""
    engine = _load_engine(project_path, no_cache)
    if sample_size:
        scores = score_all_pairs_sampled(engine.model, src, trg, sample_size, seed)
    else:
        scores = score_all_pairs(engine.model, src, trg)
    click.echo(gio.canonical_dumps({"scores": [s.as_map() for s in scores]}))


@main.command()
@click.argument("project_path", type=click.Path())
@click.option("--per-class", default=5, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", default=None, type=click.Path(), help="write the sample document here")
@click.option("--no-cache", is_flag=True)
@_guarded
def sample(project_path: str, per_class: int, seed: int, out: str | None, no_cache: bool):
    """Emit a class-balanced node-link sample of the network."""
    engine = _load_engine(project_path, no_cache)
    result = sampler.sample(engine.model, sampler.SampleSpec(per_class, (), seed))
    payload = gio.sample_document(engine, result)
    if out is None:
        click.echo(payload.decode("utf-8"), nl=False)
    else:
        Path(out).write_bytes(payload)


@main.command()
@click.argument("project_path", type=click.Path())
@click.option("--format", "format_name", default="nodeLink", show_default=True, type=click.Choice(pipeline.EXPORT_FORMATS))
@click.option("--out", required=True, type=click.Path())
@click.option("--classes", default=None, help="comma-separated class ids to export")
@click.option("--include-disconnected", is_flag=True)
@click.option("--no-cache", is_flag=True)
@_guarded
def export(project_path: str, format_name: str, out: str, classes: str | None, include_disconnected: bool, no_cache: bool):
    """Export the current network in one of the supported formats."""
    engine = _load_engine(project_path, no_cache)
    request = gio.ExportRequest(
        format=format_name,
        class_selection=tuple(classes.split(",")) if classes else None,
        include_disconnected_edges=include_disconnected,
    )
    Path(out).write_bytes(gio.export(engine, request))
    click.echo(gio.canonical_dumps({"written": out}))


@main.command()
@click.argument("project_path", type=click.Path())
@click.option("--port", default=8400, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--ui", "ui_dir", default=None, type=click.Path(), help="serve a built web client under /ui")
@click.option("--no-cache", is_flag=True)
@_guarded
def serve(project_path: str, port: int, host: str, ui_dir: str | None, no_cache: bool):
    """Serve the project over HTTP for the companion UI."""
    import uvicorn

    from graphloom.service import create_app

    engine = _load_engine(project_path, no_cache)
    uvicorn.run(create_app(engine, ui_dir=ui_dir), host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
