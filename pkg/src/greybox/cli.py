"""Command-line entry point.

Exit codes (stable; scripts may rely on them):

    0   success
    2   usage error (bad flags/arguments)
    3   document parse error
    4   unsupported schema or template version
    5   validation failed (error-severity findings, or a draft that fails them)
    6   session incomplete (pending or unanswered required items)
    7   answer rejected (unknown instance, type mismatch, inconsistent
        constraint flags, skip of a required item, empty reason, ...)
    10  file not found / IO error
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click

from . import checklist, experiment, problem, recommend
from .contopt import (
    InitRule,
    NMConfig,
    benchmark_init_rules,
    ellipsoid,
    rosenbrock,
    shifted_sphere,
    sphere,
)
from .serde import ParseError, VersionError, canonical_bytes

EXIT_PARSE = 3
EXIT_VERSION = 4
EXIT_VALIDATION = 5
EXIT_INCOMPLETE = 6
EXIT_REJECTED = 7
EXIT_IO = 10

_REJECTED = (
    checklist.UnknownInstance,
    checklist.AnswerTypeMismatch,
    checklist.QrakInconsistent,
    checklist.RequiredItem,
    checklist.EmptyReason,
    checklist.InstanceNotPending,
    checklist.EmptyParticipants,
    checklist.InvalidStageTransition,
)


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except checklist.IncompleteSession as exc:
            _fail(EXIT_INCOMPLETE, str(exc))
        except checklist.SpecInvalid as exc:
            _fail(EXIT_VALIDATION, str(exc))
        except _REJECTED as exc:
            _fail(EXIT_REJECTED, str(exc))
        except VersionError as exc:
            _fail(EXIT_VERSION, str(exc))
        except ParseError as exc:
            _fail(EXIT_PARSE, str(exc))
        except FileNotFoundError as exc:
            _fail(EXIT_IO, str(exc))
        except (checklist.ChecklistError, recommend.Unfinalized, experiment.ExperimentError, ValueError) as exc:
            _fail(EXIT_VALIDATION, str(exc))

    return wrapper


def _read_session(path: str) -> checklist.ChecklistSession:
    return checklist.load_session(Path(path).read_bytes())


def _write_session(path: str, session: checklist.ChecklistSession) -> None:
    Path(path).write_bytes(checklist.save_session(session))


def _parse_participants(raw: str) -> list[tuple[str, str]]:
    pairs = []
    for chunk in raw.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        name, sep, role = chunk.partition(":")
        pairs.append((name.strip(), role.strip() if sep else ""))
    return pairs


@click.group()
def main():
    """Intake, recommendation, and benchmarking toolkit for optimization projects."""


@main.group()
def intake():
    """Drive a checklist session against a session file."""


@intake.command("new")
@click.option("--participants", required=True, help="Comma-separated name:role pairs.")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--id", "session_id", default=None, help="Session id (random when omitted).")
@handle_errors
def intake_new(participants: str, out_path: str, session_id: str | None):
    """Open a session; the introductions item is answered from the roster."""
    session = checklist.new_session(
        checklist.default_template(), _parse_participants(participants), session_id=session_id
    )
    _write_session(out_path, session)
    click.echo(f"session {session.id} created at {out_path}")


@intake.command("resume")
@click.argument("session_file", type=click.Path(exists=True, dir_okay=False))
@handle_errors
def intake_resume(session_file: str):
    """Show progress and the next open question."""
    template = checklist.default_template()
    session = _read_session(session_file)
    counts = checklist.progress(template, session)
    click.echo(
        f"session {session.id} (revision {session.revision}, stage {session.stage.value}): "
        f"{counts['answered']} answered, {counts['skipped']} skipped, {counts['pending']} pending"
    )
    current = checklist.next_item(template, session)
    if current is None:
        click.echo("all instances resolved; ready to finalize")
    else:
        click.echo(f"next: {current.instance_id}")
        item = template.item(current.item_id)
        if current.bullet_id:
            bullet = next(b for b in item.bullets if b.id == current.bullet_id)
            click.echo(f"  [{current.entity_path}] {bullet.prompt}")
        else:
            click.echo(f"  {item.prompt}")


@intake.command("answer")
@click.argument("session_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--item", "instance_id", required=True)
@click.option("--answer", "answer_json", default=None, help="Answer payload as JSON.")
@click.option("--answer-file", type=click.Path(exists=True, dir_okay=False), default=None)
@handle_errors
def intake_answer(session_file: str, instance_id: str, answer_json: str | None, answer_file: str | None):
    """Record an answer for one item instance."""
    if (answer_json is None) == (answer_file is None):
        raise click.UsageError("provide exactly one of --answer or --answer-file")
    raw = answer_json if answer_json is not None else Path(answer_file).read_text("utf-8")
    try:
        payload = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError(f"answer is not valid JSON: {exc}") from exc
    session = checklist.answer(
        checklist.default_template(), _read_session(session_file), instance_id, payload
    )
    _write_session(session_file, session)
    click.echo(f"answered {instance_id} (revision {session.revision})")


@intake.command("skip")
@click.argument("session_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--item", "instance_id", required=True)
@click.option("--reason", required=True)
@handle_errors
def intake_skip(session_file: str, instance_id: str, reason: str):
    """Skip a pending instance, recording why."""
    session = checklist.skip(
        checklist.default_template(), _read_session(session_file), instance_id, reason
    )
    _write_session(session_file, session)
    click.echo(f"skipped {instance_id} (revision {session.revision})")


@intake.command("apply")
@click.argument("session_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--script", "script_file", required=True, type=click.Path(exists=True, dir_okay=False))
@handle_errors
def intake_apply(session_file: str, script_file: str):
    """Apply a JSON list of answer/skip steps, in order."""
    script = json.loads(Path(script_file).read_text("utf-8"))
    session = checklist.apply_script(
        checklist.default_template(), _read_session(session_file), script
    )
    _write_session(session_file, session)
    click.echo(f"applied {len(script)} steps (revision {session.revision})")


@intake.command("finalize")
@click.argument("session_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--spec-out", type=click.Path(dir_okay=False), default=None)
@handle_errors
def intake_finalize(session_file: str, spec_out: str | None):
    """Freeze the draft into a spec and advance the session stage."""
    spec, session = checklist.finalize(checklist.default_template(), _read_session(session_file))
    _write_session(session_file, session)
    if spec_out:
        Path(spec_out).write_bytes(problem.write_spec(spec))
        click.echo(f"spec written to {spec_out}")
    click.echo(f"finalized; session stage is {session.stage.value}")


@intake.command("export")
@click.argument("session_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@handle_errors
def intake_export(session_file: str, out_path: str):
    """Write the finalized spec without touching the session."""
    spec = checklist.export_spec(checklist.default_template(), _read_session(session_file))
    Path(out_path).write_bytes(problem.write_spec(spec))
    click.echo(f"spec written to {out_path}")


@main.command("validate")
@click.argument("spec_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["json", "md"]), default="md")
@handle_errors
def cmd_validate(spec_file: str, fmt: str):
    """Lint a spec file; exits nonzero when error findings are present."""
    spec = problem.parse_spec(Path(spec_file).read_bytes())
    findings = problem.validate_spec(spec)
    if fmt == "json":
        click.echo(json.dumps(problem.findings_payload(findings), indent=2, sort_keys=True))
    else:
        if not findings:
            click.echo("no findings")
        for finding in findings:
            click.echo(f"{finding.severity.value.upper():8} {finding.code:24} {finding.subject}: {finding.message}")
    if any(f.severity is problem.Severity.ERROR for f in findings):
        sys.exit(EXIT_VALIDATION)


@main.command("recommend")
@click.argument("spec_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["json", "md"]), default="md")
@handle_errors
def cmd_recommend(spec_file: str, fmt: str):
    """Rank algorithm families for a finalized spec, with rule traces."""
    spec = problem.parse_spec(Path(spec_file).read_bytes())
    recs = recommend.recommend(spec)
    if fmt == "json":
        click.echo(json.dumps(recommend.recommendations_payload(recs), indent=2, sort_keys=True))
    else:
        click.echo(recommend.recommendations_markdown(recs), nl=False)


def _function_from_config(entry: dict):
    kind = entry.get("name")
    n = int(entry.get("n", 2))
    if kind == "sphere":
        center = entry.get("center")
        return shifted_sphere(n, center) if center else sphere(n)
    if kind == "rosenbrock":
        return rosenbrock(n)
    if kind == "ellipsoid":
        return ellipsoid(n, float(entry.get("condition", 100.0)))
    raise ValueError(f"unknown test function '{kind}'")


def _rule_from_config(entry: dict) -> InitRule:
    kind = entry.get("kind")
    if kind == "pfeffer":
        return InitRule.pfeffer()
    if kind == "nash_optim":
        return InitRule.nash_optim()
    if kind == "region_of_interest":
        return InitRule.region_of_interest(float(entry["h"]))
    raise ValueError(f"unknown init rule '{kind}'")


@main.command("bench")
@click.option("--config", "config_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None)
@click.option("--format", "fmt", type=click.Choice(["csv", "md"]), default="csv")
@handle_errors
def cmd_bench(config_file: str, out_path: str | None, fmt: str):
    """Run the simplex-initialization benchmark described by a config file."""
    config = json.loads(Path(config_file).read_text("utf-8"))
    table = benchmark_init_rules(
        functions=[_function_from_config(e) for e in config["functions"]],
        starts=config["starts"],
        rules=[_rule_from_config(e) for e in config["rules"]],
        cfg=NMConfig(
            max_evals=int(config.get("max_evals", 500)),
            f_tol=float(config.get("f_tol", 1e-12)),
            x_tol=float(config.get("x_tol", 1e-12)),
        ),
        replicates=int(config.get("replicates", 1)),
        seed=int(config.get("seed", 0)),
        target_offset=float(config.get("target_offset", 1e-3)),
    )
    rendered = table.to_csv() if fmt == "csv" else table.to_markdown()
    if out_path:
        Path(out_path).write_text(rendered, encoding="utf-8")
        click.echo(f"wrote {out_path}")
    else:
        click.echo(rendered, nl=False)


@main.command("report")
@click.option("--design", "design_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--runs", "runs_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--response", required=True)
@click.option("--aggregation", type=click.Choice(["mean", "worst_case"]), default="mean")
@click.option("--direction", type=click.Choice(["minimize", "maximize"]), default="minimize")
@click.option("--metadata", "metadata_file", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None)
@handle_errors
def cmd_report(design_file, runs_file, response, aggregation, direction, metadata_file, out_path):
    """Run robust selection over recorded runs and render the report."""
    design_payload = json.loads(Path(design_file).read_text("utf-8"))
    factors = experiment.classify_factors(
        (f["name"], f["category"], f.get("levels", [])) for f in design_payload["factors"]
    )
    design = experiment.full_factorial(factors, int(design_payload.get("replicates", 1)))
    runs = experiment.runs_from_csv(design, Path(runs_file).read_text("utf-8"))
    selection = experiment.robust_select(design, runs, response, aggregation, direction)
    metadata = json.loads(Path(metadata_file).read_text("utf-8")) if metadata_file else {}
    skeleton = experiment.report_skeleton(metadata)
    rendered = experiment.render_report(skeleton, design, selection)
    if out_path:
        Path(out_path).write_text(rendered, encoding="utf-8")
        click.echo(f"wrote {out_path}")
    else:
        click.echo(rendered, nl=False)


@main.command("serve")
@click.option("--port", default=8000, type=int)
@click.option("--host", default="127.0.0.1")
@click.option("--data-dir", default=None, help="Defaults to $GREYBOX_DATA_DIR or ./.greybox")
@click.option("--ui-dir", default=None, type=click.Path(exists=True, file_okay=False))
@handle_errors
def cmd_serve(port: int, host: str, data_dir: str | None, ui_dir: str | None):
    """Serve the intake session API (and the UI when --ui-dir is given)."""
    from .service import serve

    serve(port=port, host=host, data_dir=data_dir, ui_dir=ui_dir)


if __name__ == "__main__":
    main()
