"""Command-line interface: pipeline stage verbs, the ablation harness,
single-state recommendation and the HTTP server."""

from __future__ import annotations

import json
import sys
from dataclasses import replace
from pathlib import Path

import click

from .ablation import render_table, run_ablation, save_ablation
from .pipeline import PipelineConfig, load_manifest, run_pipeline
from .runtime import PipelineRuntime, StateValidationError, packet_core


@click.group()
@click.option("--manifest", "root", default="artifacts", show_default=True,
              help="artifact directory holding manifest.json")
@click.option("--seed", default=None, type=int, help="override pipeline seed")
@click.pass_context
def main(ctx, root, seed):
    """Interpretable sepsis decision-support pipeline."""
    ctx.ensure_object(dict)
    ctx.obj["root"] = Path(root)
    # reuse the config an existing manifest was built with so stage
    # fingerprints stay comparable across invocations
    config = PipelineConfig(**load_manifest(Path(root)).get("config", {}))
    if seed is not None:
        config = replace(config, seed=seed)
    ctx.obj["config"] = config


def _run_stage(ctx, stage):
    out = run_pipeline(ctx.obj["root"], ctx.obj["config"], stages=[stage])
    status = "executed" if stage in out["executed"] else "up to date"
    click.echo(f"{stage}: {status}")


def _stage_command(stage):
    @main.command(name=stage, help=f"Run the {stage} pipeline stage.")
    @click.pass_context
    def cmd(ctx):
        _run_stage(ctx, stage)
    return cmd


for _stage in ("simulate", "preprocess", "stratify", "augment", "train",
               "ensemble", "index"):
    _stage_command(_stage)


@main.command()
@click.option("--stages", default=None,
              help="comma-separated subset of stages (default: all)")
@click.pass_context
def pipeline(ctx, stages):
    """Run the full pipeline (or a subset) in order."""
    wanted = stages.split(",") if stages else None
    out = run_pipeline(ctx.obj["root"], ctx.obj["config"], stages=wanted)
    click.echo(f"executed: {', '.join(out['executed']) or '(none)'}")
    click.echo(f"skipped: {', '.join(out['skipped']) or '(none)'}")


@main.command()
@click.option("--seeds", default="0,1,2,3,4", show_default=True,
              help="comma-separated ablation seeds")
@click.option("--steps", default=None, type=int,
              help="override policy training steps per variant")
@click.pass_context
def ablation(ctx, seeds, steps):
    """Train and evaluate the policy variants across seeds."""
    seed_list = tuple(int(s) for s in seeds.split(","))
    report = run_ablation(ctx.obj["root"], seeds=seed_list, awr_steps=steps)
    save_ablation(ctx.obj["root"], report)
    click.echo(render_table(report))


@main.command()
@click.option("--state", "state_json", required=True,
              help="JSON object of the 30 raw clinical values, or @file")
@click.option("--force-recommend", is_flag=True,
              help="run the full blend even for Low/High tiers")
@click.option("--include-timings", is_flag=True,
              help="keep wall-clock timings in the output")
@click.pass_context
def recommend(ctx, state_json, force_recommend, include_timings):
    """Produce a decision packet for one raw clinical state."""
    if state_json.startswith("@"):
        state_json = Path(state_json[1:]).read_text(encoding="utf-8")
    state = json.loads(state_json)
    runtime = PipelineRuntime.load(ctx.obj["root"])
    try:
        packet = runtime.recommend(state, force=force_recommend)
    except StateValidationError as exc:
        click.echo(json.dumps({"error": "invalid state",
                               "fields": exc.field_errors}, indent=2))
        sys.exit(1)
    if not include_timings:
        packet = packet_core(packet)
    click.echo(json.dumps(packet, indent=2, sort_keys=True))


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.pass_context
def serve(ctx, host, port):
    """Serve the HTTP API over the trained artifacts."""
    import uvicorn

    from .http import create_app
    uvicorn.run(create_app(ctx.obj["root"]), host=host, port=port)


if __name__ == "__main__":
    main()
