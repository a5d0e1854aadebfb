"""Command-line interface: pack validation, sessions, assessment, profiles, serving."""

from __future__ import annotations

import sys
from pathlib import Path

import click

from riskscope import packs
from riskscope.engine import EngineConfig, evaluate_session, render_markdown, report_to_json
from riskscope.errors import RiskscopeError
from riskscope.questionnaire import new_session, record_answer, session_from_json, session_to_json
from riskscope.taxonomy import EntityKind


@click.group()
@click.option(
    "--home",
    envvar="RISKSCOPE_HOME",
    type=click.Path(path_type=Path),
    default=Path(".riskscope"),
    show_default=True,
    help="Root directory for sessions and profiles.",
)
@click.pass_context
def main(ctx: click.Context, home: Path):
    """Identify potential AI risks for a use through staged questionnaires."""
    ctx.obj = {"home": home}


def _home(ctx: click.Context) -> Path:
    return ctx.obj["home"]


def _load_bundle(pack_file: Path | None = None, questionnaires_file: Path | None = None, rules_file: Path | None = None):
    return packs.load_bundled(pack_file, questionnaires_file, rules_file)


def _session_store(ctx: click.Context):
    from riskscope.service import SessionStore

    return SessionStore(_home(ctx) / "sessions")


def _current_session_path(ctx: click.Context) -> Path:
    return _home(ctx) / "current-session"


def _resolve_session(ctx: click.Context, session: str | None):
    store = _session_store(ctx)
    if session is None:
        pointer = _current_session_path(ctx)
        if not pointer.exists():
            raise click.ClickException("no session selected; create one with 'riskscope session new'")
        session = pointer.read_text(encoding="utf-8").strip()
    candidate = Path(session)
    if candidate.exists() and candidate.is_file():
        return session_from_json(candidate.read_text(encoding="utf-8")), None
    return store.load(session), store


@main.command()
@click.argument("pack_file", required=False, type=click.Path(exists=True, path_type=Path))
@click.argument("questionnaires_file", required=False, type=click.Path(exists=True, path_type=Path))
@click.argument("rules_file", required=False, type=click.Path(exists=True, path_type=Path))
def validate(pack_file: Path | None, questionnaires_file: Path | None, rules_file: Path | None):
    """Validate a taxonomy pack, questionnaires, and rules (bundled files by default)."""
    failed = False
    pack = questionnaires = rules = None
    try:
        from riskscope.taxonomy import load_pack

        pack = load_pack(pack_file or packs.pack_path())
    except RiskscopeError as exc:
        click.echo(f"pack: {exc.code}: {exc}", err=True)
        failed = True
    if pack is not None:
        try:
            from riskscope.questionnaire import load_questionnaires

            questionnaires = load_questionnaires(questionnaires_file or packs.questionnaires_path(), pack)
        except RiskscopeError as exc:
            click.echo(f"questionnaires: {exc.code}: {exc}", err=True)
            failed = True
    if pack is not None and questionnaires is not None:
        try:
            from riskscope.engine import load_rules

            rules = load_rules(rules_file or packs.rules_path(), pack, questionnaires)
        except RiskscopeError as exc:
            click.echo(f"rules: {exc.code}: {exc}", err=True)
            failed = True
    if failed:
        sys.exit(1)
    click.echo(
        f"{len(pack.risks)} risks, {len(questionnaires.questionnaires)} questionnaires, {len(rules)} rules OK"
    )


@main.group()
def session():
    """Create and fill assessment sessions."""


@session.command("new")
@click.option("--use-title", required=True, help="Short name of the use being assessed.")
@click.option("--id", "session_id", default=None, help="Explicit session id (random by default).")
@click.pass_context
def session_new(ctx: click.Context, use_title: str, session_id: str | None):
    bundle = _load_bundle()
    created = new_session(use_title, bundle.pack.content_hash, session_id)
    store = _session_store(ctx)
    store.save(created)
    pointer = _current_session_path(ctx)
    pointer.parent.mkdir(parents=True, exist_ok=True)
    pointer.write_text(created.session_id + "\n", encoding="utf-8")
    click.echo(created.session_id)


@session.command("answer")
@click.argument("question_id")
@click.argument("value")
@click.option("--session", "session_ref", default=None, help="Session id or session file path.")
@click.option("--role", default=None, help="Answering role (defaults to the questionnaire's role).")
@click.pass_context
def session_answer(ctx: click.Context, question_id: str, value: str, session_ref: str | None, role: str | None):
    bundle = _load_bundle()
    try:
        current, store = _resolve_session(ctx, session_ref)
        actor = role or bundle.questionnaires.find(question_id)[0].role
        updated = record_answer(current, bundle.questionnaires, question_id, value, actor)
    except RiskscopeError as exc:
        raise click.ClickException(f"{exc.code}: {exc}") from exc
    if store is not None:
        store.save(updated)
    else:
        Path(session_ref).write_text(session_to_json(updated), encoding="utf-8")
    click.echo(f"{question_id} = {updated.recorded_answers()[question_id].value}")


@session.command("show")
@click.option("--session", "session_ref", default=None, help="Session id or session file path.")
@click.pass_context
def session_show(ctx: click.Context, session_ref: str | None):
    from riskscope.questionnaire import completeness

    bundle = _load_bundle()
    try:
        current, _ = _resolve_session(ctx, session_ref)
    except RiskscopeError as exc:
        raise click.ClickException(f"{exc.code}: {exc}") from exc
    click.echo(f"session {current.session_id}: {current.use_title}")
    for questionnaire in bundle.questionnaires.questionnaires:
        part = completeness(questionnaire, current)
        click.echo(
            f"  {questionnaire.title}: answered {list(part.answered)}, "
            f"eligible {list(part.eligible_unanswered)}, withheld {list(part.withheld)}"
        )


@main.command()
@click.option("--session", "session_ref", default=None, help="Session id or session file path.")
@click.option("--format", "out_format", type=click.Choice(["json", "markdown"]), default="markdown", show_default=True)
@click.option("--out", type=click.Path(path_type=Path), default=None, help="Write the report here instead of stdout.")
@click.option("--reproducible", is_flag=True, help="Derive the report timestamp from the session history.")
@click.option("--figures", type=click.Path(path_type=Path), default=None, help="Also write a status chart and CSV into this directory.")
@click.option("--unknown-flags-default", type=bool, default=True, show_default=True, help="Whether undecided risks are surfaced as flagged.")
@click.option("--pack-file", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--questionnaires-file", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--rules-file", type=click.Path(exists=True, path_type=Path), default=None)
@click.pass_context
def assess(
    ctx: click.Context,
    session_ref: str | None,
    out_format: str,
    out: Path | None,
    reproducible: bool,
    figures: Path | None,
    unknown_flags_default: bool,
    pack_file: Path | None,
    questionnaires_file: Path | None,
    rules_file: Path | None,
):
    """Evaluate a session against the risk rules and render the report."""
    bundle = _load_bundle(pack_file, questionnaires_file, rules_file)
    try:
        current, _ = _resolve_session(ctx, session_ref)
        generated_at = None
        if reproducible:
            generated_at = current.history[-1].timestamp if current.history else "1970-01-01T00:00:00Z"
        report = evaluate_session(
            current,
            bundle.pack,
            bundle.questionnaires,
            bundle.rules,
            EngineConfig(unknown_flags_default=unknown_flags_default),
            generated_at=generated_at,
        )
    except RiskscopeError as exc:
        raise click.ClickException(f"{exc.code}: {exc}") from exc

    rendered = report_to_json(report) if out_format == "json" else render_markdown(report)
    if out is not None:
        out.write_text(rendered, encoding="utf-8")
        click.echo(f"wrote {out}")
    else:
        click.echo(rendered, nl=False)

    if figures is not None:
        from riskscope.engine import report_to_dict
        from riskscope.figures import write_report_figures

        for path in write_report_figures(report_to_dict(report), figures):
            click.echo(f"wrote {path}", err=True)


@main.group()
def profile():
    """Save, attach, and list reusable entity profiles."""


@profile.command("save")
@click.argument("entity_kind", type=click.Choice([kind.value for kind in EntityKind]))
@click.argument("entity_id")
@click.option("--session", "session_ref", default=None)
@click.option("--actor", default="", help="Role recorded as the profile's creator.")
@click.pass_context
def profile_save(ctx: click.Context, entity_kind: str, entity_id: str, session_ref: str | None, actor: str):
    from riskscope.profiles import ProfileStore, save_profile

    bundle = _load_bundle()
    try:
        current, _ = _resolve_session(ctx, session_ref)
        stored = save_profile(
            ProfileStore(_home(ctx) / "profiles"),
            current,
            bundle.pack,
            bundle.questionnaires,
            EntityKind(entity_kind),
            entity_id,
            actor=actor,
        )
    except RiskscopeError as exc:
        raise click.ClickException(f"{exc.code}: {exc}") from exc
    click.echo(stored.profile_hash)


@profile.command("attach")
@click.argument("entity_kind", type=click.Choice([kind.value for kind in EntityKind]))
@click.argument("entity_id")
@click.option("--hash", "profile_hash", default=None, help="Attach this revision instead of the latest.")
@click.option("--session", "session_ref", default=None)
@click.pass_context
def profile_attach(ctx: click.Context, entity_kind: str, entity_id: str, profile_hash: str | None, session_ref: str | None):
    from riskscope.profiles import ProfileStore, UnknownProfileError, attach_profile

    bundle = _load_bundle()
    store = ProfileStore(_home(ctx) / "profiles")
    try:
        current, session_store = _resolve_session(ctx, session_ref)
        if profile_hash:
            stored = store.load(EntityKind(entity_kind), entity_id, profile_hash)
        else:
            stored = store.latest(EntityKind(entity_kind), entity_id)
            if stored is None:
                raise UnknownProfileError(f"no stored profile for {entity_kind} {entity_id!r}")
        updated = attach_profile(current, stored, bundle.questionnaires)
    except RiskscopeError as exc:
        raise click.ClickException(f"{exc.code}: {exc}") from exc
    if session_store is not None:
        session_store.save(updated)
    else:
        Path(session_ref).write_text(session_to_json(updated), encoding="utf-8")
    click.echo(f"attached {stored.profile_hash}")


@profile.command("list")
@click.pass_context
def profile_list(ctx: click.Context):
    from riskscope.profiles import ProfileStore

    store = ProfileStore(_home(ctx) / "profiles")
    entries = store.list_entries()
    if not entries:
        click.echo("no profiles stored")
        return
    for entry in entries:
        click.echo(f"{entry['key']}: latest {entry['latest']} ({len(entry['profiles'])} revision(s))")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--ui-dir", type=click.Path(path_type=Path), default=None, help="Serve these static files under /ui.")
@click.pass_context
def serve(ctx: click.Context, host: str, port: int, ui_dir: Path | None):
    """Run the HTTP API (loopback by default)."""
    import uvicorn

    from riskscope.service import create_app, create_state

    if ui_dir is None and Path("frontend/dist").is_dir():
        ui_dir = Path("frontend/dist")
    app = create_app(create_state(_home(ctx)), ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
