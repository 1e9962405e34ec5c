"""Operator CLI: serve the API, ingest CSVs, rebuild indexes, run the demo."""

from __future__ import annotations

import json
import sys
from importlib import resources

import click

from .errors import StoryloomError
from .gateway import GatewayConfig, LlmGateway
from .session import Session


def demo_csv_text() -> str:
    ref = resources.files("storyloom.data").joinpath("demo_travel.csv")
    return ref.read_text(encoding="utf-8")


DEMO_SENTENCES = [
    # (content, show_view)
    ("Let me compare travel destinations for an affordable and safe trip.", False),
    ("Does the local street food scene matter for this choice?", False),
    ("Porto stands out for affordability.", True),
    ("Could Asia be cheaper overall?", False),
    ("Asia is cheaper but more crowded.", True),
    ("In 2024, Asia had the lowest cost at 59.7.", True),
]

DEMO_BRANCH_SENTENCES = [
    ("Safety matters more than crowding for me.", False),
    ("Cairo is an outlier in safety.", True),
    ("In 2024, Toronto had the highest safety at 90.0.", True),
    ("Overall, Porto balances cost and safety for this trip.", True),
]


def run_demo_session(gateway: LlmGateway | None = None) -> Session:
    """Scripted end-to-end scenario over the bundled travel dataset."""
    session = Session(gateway=gateway)
    session.dispatch("ingest_dataset", {
        "name": "travel",
        "csv_text": demo_csv_text(),
        "category_tags": ["travel"],
    })

    shown = []
    for content, show in DEMO_SENTENCES:
        sentence = session.dispatch("append_sentence",
                                    {"content": content, "mode": "fallback"})
        if show:
            view = session.dispatch("show_view", {
                "sentence_id": sentence["sentence_id"], "mode": "fallback"})
            shown.append(view)

    # side branch first: a short detour the explorer abandons
    fork_id = session.tree.cursor_id
    session.dispatch("create_branch", {"from_id": fork_id})
    side = session.dispatch("append_sentence", {
        "content": "Ratings rose across most destinations over time.",
        "mode": "fallback"})
    session.dispatch("show_view", {"sentence_id": side["sentence_id"],
                                   "mode": "fallback"})

    # main line of inquiry continues on a second branch from the same fork
    session.dispatch("create_branch", {"from_id": fork_id})
    last_view_id = None
    for content, show in DEMO_BRANCH_SENTENCES:
        sentence = session.dispatch("append_sentence",
                                    {"content": content, "mode": "fallback"})
        if show:
            view = session.dispatch("show_view", {
                "sentence_id": sentence["sentence_id"], "mode": "fallback"})
            shown.append(view)
            last_view_id = (view.get("view_id")
                            or view["views"][0]["view_id"])

    view = session.view_store.get(last_view_id)
    values = view.grammar_spec.get("data", {}).get("values", [])
    first_row = values[0] if values else {"value": 0}
    session.dispatch("record_event", {"event": {
        "elementId": last_view_id,
        "elementName": view.title,
        "elementType": "chart",
        "action": "hover",
        "dashboardConfig": {"title": "the safety overview"},
        "chartData": first_row,
        "timestamp": 0.0,
    }})
    suggestion = session.capture(use_llm=False)
    if suggestion["narrative_suggestion"] is not None:
        session.dispatch("accept_capture",
                         {"suggestion": suggestion, "mode": "fallback"})
    return session


@click.group()
def main():
    """Narrative-driven data exploration engine."""


@main.command()
@click.option("--port", default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--config", "config_path", default=None,
              help="JSON config with gateway settings.")
def serve(port, host, config_path):
    """Run the HTTP API."""
    import uvicorn

    from .service import create_app

    overrides = {}
    if config_path:
        with open(config_path, encoding="utf-8") as fh:
            overrides = json.load(fh)
    gateway_config = GatewayConfig.from_env(**overrides)
    app = create_app(gateway_config=gateway_config)
    try:
        uvicorn.run(app, host=host, port=port)
    except SystemExit as exc:
        raise exc
    except OSError as exc:
        click.echo(f"serve failed: {exc}", err=True)
        sys.exit(1)


@main.command()
@click.argument("csv_path", type=click.Path(exists=True))
@click.option("--name", required=True)
@click.option("--tag", "tags", multiple=True, help="Category tag (repeatable).")
def ingest(csv_path, name, tags):
    """Validate a CSV and print its inferred schema."""
    from .catalog import Catalog

    catalog = Catalog()
    with open(csv_path, "rb") as fh:
        payload = fh.read()
    try:
        schema = catalog.ingest_table(payload, name=name, category_tags=tags)
    except StoryloomError as exc:
        click.echo(f"ingest failed [{exc.code}]: {exc}", err=True)
        sys.exit(1)
    click.echo(json.dumps(schema.to_json(), indent=2))


@main.group()
def index():
    """Joint semantic index operations."""


@index.command("rebuild")
@click.argument("csv_path", type=click.Path(exists=True))
@click.option("--name", required=True)
@click.option("--out", "out_path", default=None,
              help="Write index entries as JSON lines.")
def index_rebuild(csv_path, name, out_path):
    """Build the proposition/chart index for a CSV and report its size."""
    session = Session()
    with open(csv_path, encoding="utf-8") as fh:
        csv_text = fh.read()
    try:
        session.dispatch("ingest_dataset", {"name": name, "csv_text": csv_text})
    except StoryloomError as exc:
        click.echo(f"index rebuild failed [{exc.code}]: {exc}", err=True)
        sys.exit(1)
    count = len(session.aligner.entries)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(session.aligner.dump_jsonl())
    click.echo(f"indexed {count} entries (digest {session.aligner.index_digest()[:12]})")


@main.command()
def demo():
    """Run the scripted offline scenario and print the compiled story."""
    try:
        session = run_demo_session()
        story = session.compile_story()
    except StoryloomError as exc:
        click.echo(f"demo failed [{exc.code}]: {exc}", err=True)
        sys.exit(1)

    click.echo("=== active narrative ===")
    for sentence in session.active_path_json():
        click.echo(f"  [{sentence['sentence_id']}] {sentence['content']}")
    click.echo(f"views: {len(session.view_store.all())}  "
               f"timeline nodes: {len(session.timeline)}")
    board = session.inquiry.board()
    for status, issues in board.items():
        for issue in issues:
            click.echo(f"  issue {issue['qid']} [{status}] {issue['title']}")
    click.echo("=== data story ===")
    for point in story.points:
        refs = point.ref_id if isinstance(point.ref_id, str) else ",".join(point.ref_id)
        click.echo(f"  - {point.data_story_sentence} ({refs})")


if __name__ == "__main__":
    main()
