"""Configuration-driven dataset generation: the end-to-end synthesis run.

For each camera view: sample backgrounds, simulate traffic, randomize and
collision-filter poses, render, enhance, annotate, and write a manifest.
Every output byte is determined by (config, seed).
"""

from __future__ import annotations

import hashlib
import math
import shutil
import subprocess
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import annotate, background, enhance, geometry, render, traffic
from .errors import RoadforgeError, SchemaError

WARMUP_STEPS = 20


class ConfigError(RoadforgeError):
    """Pipeline config failed validation; nothing was written."""


@dataclass
class CameraConfig:
    id: str
    intrinsics: geometry.CameraIntrinsics
    pose_file: str | None = None
    landmark_file: str | None = None


@dataclass
class PipelineConfig:
    cameras: list
    background_index: str
    background_plan: dict  # (weather, lighting) -> count
    network_file: str
    model_dir: str
    output_dir: str
    images_per_view: int = 10
    frame_stride: int = 4
    seed: int = 0
    enhancement: str = "baseline"  # off | baseline | external:DIR
    enhancement_command: str | None = None
    randomization: traffic.RandomizationParams = field(
        default_factory=traffic.RandomizationParams
    )
    config_hash: str = ""


def load_config(path, seed_override=None) -> PipelineConfig:
    """Parse and fully validate a TOML pipeline config before any side effects."""
    path = Path(path)
    raw = path.read_bytes()
    doc = tomllib.loads(raw.decode("utf-8"))
    base = path.parent

    def resolve(p):
        p = Path(p)
        return str(p if p.is_absolute() else base / p)

    try:
        cameras = []
        for cam in doc["cameras"]:
            intr = cam["intrinsics"]
            cameras.append(
                CameraConfig(
                    id=str(cam["id"]),
                    intrinsics=geometry.CameraIntrinsics(
                        fx=intr["fx"],
                        fy=intr["fy"],
                        cx=intr["cx"],
                        cy=intr["cy"],
                        width=intr["width"],
                        height=intr["height"],
                    ),
                    pose_file=resolve(cam["pose"]) if "pose" in cam else None,
                    landmark_file=resolve(cam["landmarks"]) if "landmarks" in cam else None,
                )
            )
        bg = doc["background"]
        plan = {}
        for entry in bg["plan"]:
            plan[(entry["weather"], entry["lighting"])] = int(entry["count"])
        rand = doc.get("randomization", {})
        config = PipelineConfig(
            cameras=cameras,
            background_index=resolve(bg["index"]),
            background_plan=plan,
            network_file=resolve(doc["network"]),
            model_dir=resolve(doc["model_dir"]),
            output_dir=resolve(doc["output_dir"]),
            images_per_view=int(doc.get("images_per_view", 10)),
            frame_stride=int(doc.get("frame_stride", 4)),
            seed=int(doc.get("seed", 0)) if seed_override is None else int(seed_override),
            enhancement=str(doc.get("enhancement", "baseline")),
            enhancement_command=doc.get("enhancement_command"),
            randomization=traffic.RandomizationParams(
                pos_variance=float(rand.get("pos_variance", 0.5)),
                heading_range=math.radians(float(rand.get("heading_deg", 5.0))),
            ),
            config_hash=hashlib.sha256(raw).hexdigest(),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"invalid config: {e}") from e
    validate_config(config)
    return config


def validate_config(config: PipelineConfig):
    if config.images_per_view < 1:
        raise ConfigError("images_per_view must be >= 1")
    if config.frame_stride < 1:
        raise ConfigError("frame_stride must be >= 1")
    if not (0 <= config.seed < 2**64):
        raise ConfigError("seed must be a 64-bit value")
    if not config.cameras:
        raise ConfigError("no cameras configured")
    for cam in config.cameras:
        if cam.pose_file is None and cam.landmark_file is None:
            raise ConfigError(f"camera {cam.id}: needs a pose or landmark file")
        for f in (cam.pose_file, cam.landmark_file):
            if f is not None and not Path(f).is_file():
                raise ConfigError(f"camera {cam.id}: missing file {f}")
    for name, p in (
        ("background index", config.background_index),
        ("network file", config.network_file),
    ):
        if not Path(p).is_file():
            raise ConfigError(f"missing {name}: {p}")
    if not Path(config.model_dir).is_dir():
        raise ConfigError(f"missing model dir: {config.model_dir}")
    if not list(Path(config.model_dir).glob("*.obj")):
        raise ConfigError(f"model dir has no .obj files: {config.model_dir}")
    mode = config.enhancement
    if mode not in ("off", "baseline") and not mode.startswith("external:"):
        raise ConfigError(f"unknown enhancement mode {mode!r}")
    out = Path(config.output_dir)
    if out.exists() and any(out.iterdir()):
        raise ConfigError(f"output dir {out} exists and is not empty")


def _camera_key(camera_id: str) -> int:
    return int.from_bytes(hashlib.sha256(camera_id.encode()).digest()[:8], "big")


def _frame_rng_seed(seed, camera_id, frame_index):
    return np.random.SeedSequence([seed, _camera_key(camera_id), frame_index])


def _enhance_frame(result, mode, command, frame_id):
    if mode == "off":
        return result.image
    crops = enhance.extract_crops(result, frame_id=frame_id)
    if mode == "baseline":
        out = []
        for crop in crops.crops:
            try:
                out.append(enhance.harmonize_crop(crop, result.image))
            except (enhance.EmptyMask, enhance.EmptyRing):
                out.append(crop)
        crops = enhance.CropSet(frame_id=frame_id, crops=tuple(out))
    else:
        exchange_dir = Path(mode.split(":", 1)[1])
        enhance.export_for_translation(crops, exchange_dir)
        if command:
            subprocess.run([command, str(exchange_dir)], check=True)
        translated = enhance.import_translated(exchange_dir, frame_id)
        enhance.verify_masks_unchanged(crops, translated)
        crops = translated
    return enhance.composite(result.image, crops)


def generate(config: PipelineConfig, progress=None) -> Path:
    """Run the full synthesis; returns the manifest path.

    Writes into a staging directory and renames on success, so a failed
    run leaves no partial output.
    """
    progress = progress or (lambda msg: None)
    out = Path(config.output_dir)
    staging = out.parent / (out.name + ".partial")
    if staging.exists():
        shutil.rmtree(staging)
    (staging / "images").mkdir(parents=True)

    try:
        library = background.load_library(config.background_index)
        net, flows = traffic.load_network(config.network_file)
        mesh_paths = sorted(Path(config.model_dir).glob("*.obj"))
        meshes = {p.stem: render.load_mesh(p) for p in mesh_paths}
        model_keys = sorted(meshes)

        manifest = annotate.DatasetManifest(
            metadata={
                "seed": config.seed,
                "tool_version": annotate.TOOL_VERSION,
                "config_hash": config.config_hash,
            }
        )
        for cam in config.cameras:
            if cam.pose_file:
                pose = geometry.load_pose(cam.pose_file)
            else:
                _, corrs = geometry.load_landmarks(cam.landmark_file)
                pose = geometry.solve_pnp(cam.intrinsics, corrs).pose

            cam_seed = _frame_rng_seed(config.seed, cam.id, 0)
            bgs = background.sample_backgrounds(
                library, config.background_plan, cam_seed
            )
            n_steps = WARMUP_STEPS + config.images_per_view * config.frame_stride
            sim_seed = np.random.SeedSequence([config.seed, _camera_key(cam.id)])
            scenes = traffic.simulate(
                net,
                flows,
                duration=n_steps * traffic.DT,
                seed=sim_seed,
                model_ids=model_keys,
            )
            for i in range(config.images_per_view):
                frame_index = WARMUP_STEPS + i * config.frame_stride
                scene = scenes[frame_index]
                frame_seed = int(
                    _frame_rng_seed(config.seed, cam.id, frame_index).generate_state(1)[0]
                )
                scene = traffic.randomize_poses(scene, config.randomization, frame_seed)
                scene = traffic.collision_filter(scene)
                instances = [
                    render.make_instance(v.id, v.model_id, meshes[v.model_id], v)
                    for v in scene.vehicles
                ]
                bg_entry = bgs[i % len(bgs)]
                result = render.render_scene(
                    bg_entry.image, instances, cam.intrinsics, pose
                )
                image_id = f"{cam.id}_{i:04d}"
                final = _enhance_frame(
                    result, config.enhancement, config.enhancement_command, image_id
                )
                rel_path = f"images/{image_id}.png"
                background.write_image(final, staging / rel_path)
                manifest.images.append(
                    annotate.ImageRecord(
                        id=image_id,
                        path=rel_path,
                        width=cam.intrinsics.width,
                        height=cam.intrinsics.height,
                        camera_id=cam.id,
                        weather=bg_entry.weather,
                        lighting=bg_entry.lighting,
                        source_background=bg_entry.path,
                    )
                )
                anns = annotate.annotate_frame(result, instances, cam.intrinsics, pose)
                # keep only labels whose liftable center is inside the image
                anns = [
                    a
                    for a in anns
                    if 0 <= a.bottom_center[0] < cam.intrinsics.width
                    and 0 <= a.bottom_center[1] < cam.intrinsics.height
                ]
                manifest.annotations[image_id] = anns
                progress(f"{image_id}: {len(anns)} annotations")
        annotate.write_manifest(manifest, staging / "manifest.json")
    except BaseException:
        shutil.rmtree(staging, ignore_errors=True)
        raise
    if out.exists():
        out.rmdir()  # validated empty
    staging.rename(out)
    return out / "manifest.json"
