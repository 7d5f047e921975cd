"""Command line entry points."""
from __future__ import annotations

import json
import sys

import click
import numpy as np

from . import demo as demo_mod
from .ballistics import generate_trajectory, write_trajectory_csv
from .model import (SimConfig, default_config, load_config, scene_from_json)
from .session import (InputScript, ReplayError, replay_log, run_script,
                      script_from_json, write_log)


def _load_cfg(path: str | None, fallback: SimConfig | None = None) -> SimConfig:
    if path is not None:
        return load_config(path)
    return fallback if fallback is not None else default_config()


def _load_scene(path: str | None):
    if path is None:
        return None
    with open(path, "r", encoding="utf-8") as fh:
        return scene_from_json(json.load(fh))


@click.group()
def main() -> None:
    """Deterministic slingshot-drone simulator."""


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="TOML config file; defaults to built-in values.")
@click.option("--scene", "scene_path", type=click.Path(exists=True), default=None,
              help="JSON scene file; defaults to the demo object.")
@click.option("--frontend", "frontend_dir", type=click.Path(exists=True), default=None,
              help="Directory of static browser files to serve at /.")
def serve(host: str, port: int, config_path: str | None, scene_path: str | None,
          frontend_dir: str | None) -> None:
    """Run the WebSocket service (endpoint at /ws)."""
    import uvicorn

    from .server import make_app
    cfg = _load_cfg(config_path, demo_mod.demo_config())
    scene = _load_scene(scene_path)
    if scene is None:
        scene = demo_mod.demo_scene()
    app = make_app(cfg, scene, pacing=True, frontend_dir=frontend_dir)
    uvicorn.run(app, host=host, port=port)


@main.command()
@click.option("--script", "script_path", type=click.Path(exists=True), default=None,
              help="JSON input script; mutually exclusive with --demo.")
@click.option("--demo", "use_demo", is_flag=True,
              help="Run the canonical pull-hold-release script.")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--scene", "scene_path", type=click.Path(exists=True), default=None)
@click.option("--out", "out_path", type=click.Path(), required=True,
              help="JSONL session log to write.")
@click.option("--max-time", default=120.0, show_default=True, type=float)
def sim(script_path: str | None, use_demo: bool, config_path: str | None,
        scene_path: str | None, out_path: str, max_time: float) -> None:
    """Run a scripted session headless and write its event log."""
    if use_demo == (script_path is not None):
        raise click.UsageError("pass exactly one of --demo or --script")
    if use_demo:
        script = demo_mod.canonical_script()
        cfg = _load_cfg(config_path, demo_mod.demo_config())
        scene = _load_scene(scene_path)
        if scene is None:
            scene = demo_mod.demo_scene()
    else:
        with open(script_path, "r", encoding="utf-8") as fh:
            script = script_from_json(json.load(fh))
        cfg = _load_cfg(config_path)
        scene = _load_scene(scene_path)
    session = run_script(script, cfg, scene, max_time=max_time)
    write_log(session, out_path, script)
    click.echo(f"final mode: {session.ctx.mode.value}")
    click.echo(f"ticks: {session.tick_index}  events: {len(session.events)}")
    click.echo(f"log: {out_path}")


@main.command()
@click.option("--log", "log_path", type=click.Path(exists=True), required=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="If given, the log must have been recorded under this config.")
def replay(log_path: str, config_path: str | None) -> None:
    """Re-run a session log and verify it tick by tick."""
    expected = load_config(config_path) if config_path else None
    try:
        report = replay_log(log_path, expected)
    except ReplayError as exc:
        click.echo(f"replay error: {exc}")
        sys.exit(1)
    if report.ok:
        click.echo(f"replay ok: {report.ticks_checked} ticks verified")
    else:
        click.echo(f"replay FAILED: {report.reason}")
        sys.exit(1)


@main.command()
@click.option("--dx", required=True, type=float)
@click.option("--dy", required=True, type=float)
@click.option("--dz", required=True, type=float)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--scene", "scene_path", type=click.Path(exists=True), default=None)
@click.option("--out", "out_path", type=click.Path(), required=True,
              help="CSV of samples; a JSON sidecar lands next to it.")
def trajectory(dx: float, dy: float, dz: float, config_path: str | None,
               scene_path: str | None, out_path: str) -> None:
    """Integrate one flight path for a given displacement and dump it."""
    cfg = _load_cfg(config_path)
    scene = _load_scene(scene_path) or []
    traj = generate_trajectory(np.array(cfg.setpoint), np.array([dx, dy, dz]),
                               scene, cfg)
    sidecar = write_trajectory_csv(traj, out_path)
    ex, ey, ez = traj.endpoint
    click.echo(f"termination: {traj.termination.value}")
    click.echo(f"endpoint: ({ex:.6f}, {ey:.6f}, {ez:.6f})  t={traj.duration:.6f}s")
    click.echo(f"samples: {traj.samples.shape[0]}  csv: {out_path}  meta: {sidecar}")


if __name__ == "__main__":
    main()
