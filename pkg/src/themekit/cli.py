"""Batch and operations entry point: headless runs, metrics, and the service."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .domain import Speaker, StudyConfig, ThemeSet, Transcript, Turn
from .errors import ThemekitError, ValidationFailed
from .fixtures import FixtureEmbedder
from .gateway import Gateway, ProviderConfig, ProviderKind, build_provider
from .metrics import (
    ComparisonBasis, build_matrix, export_heatmap_csv, export_heatmap_json,
    report,
)
from .orchestrator import (
    DecisionKind, ExpertDecision, FixedClock, Orchestrator, Phase,
)

EXIT_CONFIG_ERROR = 1
EXIT_PIPELINE_ERROR = 2
EXIT_DECISIONS_EXHAUSTED = 3

_BASIS_FLAGS = {
    "name": ComparisonBasis.NAME,
    "first-sentence": ComparisonBasis.FIRST_SENTENCE,
    "full": ComparisonBasis.FULL_DESCRIPTION,
}


@click.group()
def main():
    """Thematic-analysis engine: run sessions, score themes, serve the API."""


def _load_transcripts(directory: Path) -> list[Transcript]:
    out = []
    for path in sorted(directory.iterdir()):
        if path.suffix == ".json":
            data = json.loads(path.read_text())
            out.append(Transcript(
                id=data.get("id", path.stem),
                title=data.get("title", path.stem),
                turns=tuple(Turn(speaker=Speaker(t.get("speaker", "unknown")),
                                 text=t["text"])
                            for t in data["turns"]),
            ))
        elif path.suffix == ".txt":
            paragraphs = [p.strip() for p in path.read_text().split("\n\n")
                          if p.strip()]
            out.append(Transcript(
                id=path.stem, title=path.stem,
                turns=tuple(Turn(speaker=Speaker.UNKNOWN, text=p)
                            for p in paragraphs),
            ))
    return out


def _provider_config(provider: str) -> ProviderConfig:
    if provider == "mock":
        return ProviderConfig(kind=ProviderKind.MOCK)
    import os
    return ProviderConfig(
        kind=ProviderKind.REMOTE,
        base_url=os.environ.get("THEMEKIT_BASE_URL",
                                "https://api.openai.com/v1"),
    )


@main.command("run")
@click.option("--config", "config_path", required=True,
              type=click.Path(path_type=Path))
@click.option("--transcripts", "transcripts_dir", required=True,
              type=click.Path(path_type=Path))
@click.option("--provider", type=click.Choice(["mock", "remote"]),
              default="mock")
@click.option("--seed", type=int, default=0)
@click.option("--auto-decisions", "decisions_path",
              type=click.Path(path_type=Path), default=None,
              help="JSON list of recorded expert decisions to replay.")
@click.option("--data-dir", type=click.Path(path_type=Path),
              default=Path("sessions"))
@click.option("--session-id", default=None)
@click.option("--deterministic-time", is_flag=True,
              help="Normalize timestamps for artifact diffing.")
def cmd_run(config_path, transcripts_dir, provider, seed, decisions_path,
            data_dir, session_id, deterministic_time):
    """Run the full workflow, pausing for expert decisions."""
    try:
        config = StudyConfig.from_dict(json.loads(config_path.read_text()))
        if not transcripts_dir.is_dir():
            raise FileNotFoundError(f"{transcripts_dir} is not a directory")
        transcripts = _load_transcripts(transcripts_dir)
        if not transcripts:
            raise FileNotFoundError(f"no transcripts in {transcripts_dir}")
        script = None
        if decisions_path is not None:
            script = [ExpertDecision.from_dict(d)
                      for d in json.loads(decisions_path.read_text())]
    except (OSError, ValueError, KeyError, ValidationFailed) as e:
        click.echo(f"config error: {e}", err=True)
        sys.exit(EXIT_CONFIG_ERROR)

    clock = FixedClock() if deterministic_time else None
    orch = Orchestrator(data_dir, provider_config=_provider_config(provider),
                        seed=seed, clock=clock)
    sid = session_id or f"session-{seed:08d}"

    try:
        state = orch.create_session(config, transcripts, session_id=sid)
        click.echo(f"session {state.session_id}: {state.phase.value}")
        state = orch.run_generation(sid)
        click.echo(f"phase {state.phase.value}, "
                   f"themes v{state.current_theme_version}")
        while state.phase is not Phase.FINALIZED:
            if state.phase in (Phase.THEMES_GENERATED, Phase.EVALUATED):
                state = orch.run_evaluation_cycle(sid)
                click.echo(f"iteration {state.iteration}: "
                           f"themes v{state.current_theme_version}"
                           + (f" [{state.last_advisory}]"
                              if state.last_advisory else ""))
                continue
            # awaiting expert
            decision = _next_decision(script)
            if decision is None:
                click.echo("decision script exhausted before finalization",
                           err=True)
                sys.exit(EXIT_DECISIONS_EXHAUSTED)
            state = orch.apply_expert_decision(sid, decision)
            click.echo(f"decision {decision.kind.value}: {state.phase.value}")
            if decision.kind is DecisionKind.CONTINUE_REFINEMENT:
                state = orch.run_evaluation_cycle(sid)
                click.echo(f"iteration {state.iteration}: "
                           f"themes v{state.current_theme_version}")
    except ThemekitError as e:
        click.echo(f"pipeline error: {e}", err=True)
        sys.exit(EXIT_PIPELINE_ERROR)
    click.echo(f"finalized session {sid}")
    sys.exit(0)


def _next_decision(script):
    if script is not None:
        return script.pop(0) if script else None
    choice = click.prompt(
        "expert decision",
        type=click.Choice(["approve", "continue"]), default="approve")
    if choice == "approve":
        return ExpertDecision(kind=DecisionKind.APPROVE)
    return ExpertDecision(kind=DecisionKind.CONTINUE_REFINEMENT)


@main.command("metrics")
@click.option("--reference", "reference_path", required=True,
              type=click.Path(path_type=Path))
@click.option("--generated", "generated_path", required=True,
              type=click.Path(path_type=Path))
@click.option("--theta", type=float, default=0.60, show_default=True)
@click.option("--basis", type=click.Choice(sorted(_BASIS_FLAGS)),
              default="first-sentence")
@click.option("--embedder", type=click.Choice(["remote", "fixture"]),
              default="fixture")
@click.option("--vectors", "vectors_path",
              type=click.Path(path_type=Path), default=None,
              help="JSON object mapping text to embedding vector "
                   "(fixture embedder only).")
@click.option("--seed", type=int, default=0)
@click.option("--out", "out_dir", type=click.Path(path_type=Path),
              default=Path("metrics-out"))
def cmd_metrics(reference_path, generated_path, theta, basis, embedder,
                vectors_path, seed, out_dir):
    """Score a generated theme set against a reference theme set."""
    try:
        reference = ThemeSet.from_dict(json.loads(reference_path.read_text()))
        generated = ThemeSet.from_dict(json.loads(generated_path.read_text()))
    except (OSError, ValueError, KeyError, ValidationFailed) as e:
        click.echo(f"parse error: {e}", err=True)
        sys.exit(EXIT_CONFIG_ERROR)

    try:
        if embedder == "fixture":
            vectors = (json.loads(vectors_path.read_text())
                       if vectors_path else None)
            embed_fn = FixtureEmbedder(vectors, seed=seed)
            model = "fixture"
        else:
            cfg = _provider_config("remote")
            gateway = Gateway(build_provider(cfg), config=cfg)
            embed_fn = gateway.embed_matrix
            model = gateway.embed_model
        matrix = build_matrix(reference, generated, _BASIS_FLAGS[basis],
                              embed_fn, embedding_model=model)
    except ValidationFailed as e:
        click.echo(f"parse error: {e}", err=True)
        sys.exit(EXIT_CONFIG_ERROR)
    except Exception as e:
        click.echo(f"embedder failure: {e}", err=True)
        sys.exit(EXIT_PIPELINE_ERROR)

    rep = report(matrix, theta)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(
        json.dumps(rep.to_dict(), indent=1, sort_keys=True) + "\n")
    (out_dir / "heatmap.csv").write_text(export_heatmap_csv(matrix))
    (out_dir / "heatmap.json").write_text(export_heatmap_json(matrix) + "\n")
    click.echo(f"jaccard {rep.jaccard:.3f}")
    click.echo(f"hit_rate {rep.hit_rate:.3f}")
    sys.exit(0)


@main.command("serve")
@click.option("--port", type=int, default=8080, show_default=True)
@click.option("--host", default="127.0.0.1")
@click.option("--data-dir", type=click.Path(path_type=Path),
              default=Path("sessions"))
@click.option("--provider", type=click.Choice(["mock", "remote"]),
              default="mock")
@click.option("--seed", type=int, default=0)
@click.option("--ui-dir", type=click.Path(path_type=Path), default=None)
@click.option("--dev-cors", is_flag=True)
def cmd_serve(port, host, data_dir, provider, seed, ui_dir, dev_cors):
    """Serve the HTTP API (and UI assets, when built) until interrupted."""
    import uvicorn

    from .service import create_app

    orch = Orchestrator(data_dir, provider_config=_provider_config(provider),
                        seed=seed)
    ui = str(ui_dir) if ui_dir and Path(ui_dir).is_dir() else None
    app = create_app(orch, ui_dir=ui, dev_cors=dev_cors)

    api_dir = Path(data_dir) / "api"
    api_dir.mkdir(parents=True, exist_ok=True)
    (api_dir / "openapi.json").write_text(
        json.dumps(app.openapi(), indent=1) + "\n")

    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except (OSError, SystemExit) as e:
        click.echo(f"bind failure: {e}", err=True)
        sys.exit(EXIT_CONFIG_ERROR)
    sys.exit(0)


if __name__ == "__main__":
    main()
