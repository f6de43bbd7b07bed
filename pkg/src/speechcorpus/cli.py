"""Command-line entry points.

Exit codes: 0 success, 1 configuration error, 2 every recording failed.
"""

from __future__ import annotations

import dataclasses
import logging
import sys
from pathlib import Path

import click

from .config import ConfigError, load_config
from .model import compute_stats, parse_manifest
from .pipeline import AllRecordingsFailed, PipelineError, run as run_pipeline


@click.group()
def main():
    """Build a TTS-ready speech corpus from long-form narrated recordings."""
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")


@main.command("run")
@click.option("--config", "config_path", required=True, type=click.Path(exists=False))
@click.option("--workers", type=int, default=None, help="Override worker count.")
@click.option("--providers", type=click.Choice(["mock", "remote"]), default=None)
@click.option("--resume", is_flag=True, help="Reuse per-recording checkpoints.")
def run_command(config_path, workers, providers, resume):
    """Run the full pipeline and write manifests under the output directory."""
    try:
        config = load_config(config_path)
        overrides = {}
        if workers is not None:
            overrides["workers"] = workers
        if providers is not None:
            overrides["providers"] = providers
        if overrides:
            config = dataclasses.replace(config, **overrides)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(1)
    try:
        result = run_pipeline(config, resume=resume)
    except AllRecordingsFailed as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    except PipelineError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo((config.output_dir / "report.txt").read_text().rstrip())
    click.echo(f"manifest: {result.manifest_path}")
    click.echo(f"tts manifest: {result.tts_manifest_path}")
    if result.failed_recordings:
        click.echo(f"skipped {len(result.failed_recordings)} failed recording(s)", err=True)


@main.command("stats")
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True, path_type=Path))
def stats_command(manifest_path: Path):
    """Recompute and print statistics for an existing manifest."""
    manifest = parse_manifest(manifest_path.read_bytes())
    stats = compute_stats(manifest.segments)
    click.echo(f"segments: {stats.segment_count}")
    click.echo(f"total hours: {stats.total_hours:.4f}")
    click.echo(f"mean segment duration: {stats.mean_segment_duration_s:.2f} s")
    click.echo(f"trimmed hours: {stats.trimmed_hours:.4f}")
    click.echo(f"trimmed at start: {stats.pct_trimmed_start:.1f}%")
    click.echo(f"trimmed at end: {stats.pct_trimmed_end:.1f}%")
    click.echo(f"unique words: {stats.unique_words}")
    click.echo(f"total tokens: {stats.total_tokens}")
    click.echo(f"speakers: {stats.speaker_count}")


@main.command("validate-config")
@click.option("--config", "config_path", required=True, type=click.Path(exists=False))
def validate_config_command(config_path):
    """Check a config file; exit 1 with a message if it is invalid."""
    try:
        config = load_config(config_path)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(1)
    click.echo(f"ok (config hash {config.config_hash()[:12]})")


if __name__ == "__main__":
    main()
