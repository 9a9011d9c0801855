"""Command-line surface binding the modules into the deployment workflow.

Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.
"""

from __future__ import annotations

import logging
import sys
from pathlib import Path

import click

from . import __version__, background, evaluate as evaluate_mod, geometry
from .errors import (
    DegenerateConfiguration,
    DimensionMismatch,
    EmptyInput,
    NoConvergence,
    SchemaError,
    UnknownImageId,
)

VALIDATION_ERRORS = (
    DegenerateConfiguration,
    NoConvergence,
    DimensionMismatch,
    EmptyInput,
    SchemaError,
    UnknownImageId,
)


def _fail(exc, code):
    click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
    sys.exit(code)


@click.group()
@click.option("--log-level", default="warning",
              type=click.Choice(["debug", "info", "warning", "error"]))
@click.version_option(__version__)
def main(log_level):
    logging.basicConfig(level=log_level.upper())


@main.command()
@click.option("--landmarks", "landmarks_file", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--intrinsics", "intrinsics_file", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_file", required=True, type=click.Path(dir_okay=False))
def calibrate(landmarks_file, intrinsics_file, out_file):
    """Estimate a camera pose from a landmark file."""
    import json

    try:
        with open(intrinsics_file, "r", encoding="utf-8") as f:
            K = geometry.CameraIntrinsics(**json.load(f))
        _, corrs = geometry.load_landmarks(landmarks_file)
        solution = geometry.solve_pnp(K, corrs)
    except VALIDATION_ERRORS as e:
        _fail(e, 2)
    except ValueError as e:
        _fail(e, 2)
    geometry.save_pose(solution, out_file)
    for corr, err in zip(corrs, solution.per_landmark_error):
        click.echo(f"  {corr.name}: {err:.4f} px")
    click.echo(f"RMS reprojection error: {solution.rms_error:.6f} px")
    click.echo(f"pose written to {out_file}")


@main.command()
@click.option("--config", "config_file", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", default=None, type=int)
def generate(config_file, seed):
    """Generate a synthesized dataset from a TOML pipeline config."""
    from . import pipeline

    try:
        config = pipeline.load_config(config_file, seed_override=seed)
    except (pipeline.ConfigError, SchemaError) as e:
        _fail(e, 2)
    try:
        manifest_path = pipeline.generate(config, progress=click.echo)
    except VALIDATION_ERRORS as e:
        _fail(e, 2)
    except Exception as e:  # runtime failure after validation
        _fail(e, 1)
    click.echo(f"manifest written to {manifest_path}")


@main.command("evaluate")
@click.option("--manifest", "manifest_file", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--detections", "detections_file", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_file", required=True, type=click.Path(dir_okay=False))
def evaluate_cmd(manifest_file, detections_file, out_file):
    """Score a detection file against a dataset manifest."""
    from . import annotate, localize

    try:
        manifest = annotate.read_manifest(manifest_file)
        detections = localize.read_detections(detections_file)
        report = evaluate_mod.evaluate(manifest, detections)
    except VALIDATION_ERRORS as e:
        _fail(e, 2)
    evaluate_mod.write_report(report, out_file,
                              config={"manifest": manifest_file,
                                      "detections": detections_file})
    click.echo(f"mAP   {report.map:.4f}")
    click.echo(f"AP@20 {report.ap20:.4f}")
    click.echo(f"AP@50 {report.ap50:.4f}")
    click.echo(f"AR    {report.ar:.4f}")


@main.command("background")
@click.option("--frames", "frames_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_file", required=True, type=click.Path(dir_okay=False))
def background_cmd(frames_dir, out_file):
    """Estimate a background plate from a directory of PNG frames."""
    paths = sorted(Path(frames_dir).glob("*.png"))
    try:
        plate = background.median_background([background.read_image(p) for p in paths])
    except VALIDATION_ERRORS as e:
        _fail(e, 2)
    background.write_image(plate, out_file)
    click.echo(f"background plate from {len(paths)} frames written to {out_file}")


@main.command()
@click.option("--port", default=8000, type=int)
@click.option("--host", default="127.0.0.1")
@click.option("--ui", "ui_dir", default=None, type=click.Path(file_okay=False))
def serve(port, host, ui_dir):
    """Start the calibration HTTP service."""
    import uvicorn

    from .service import create_app

    if ui_dir is not None and not Path(ui_dir).is_dir():
        _fail(FileNotFoundError(f"UI dir {ui_dir} does not exist"), 2)
    app = create_app(ui_dir=ui_dir)
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except OSError as e:
        _fail(e, 2)


if __name__ == "__main__":
    main()
