"""Ground-truth label generation and the dataset manifest format.

The training target is the bottom-face box: the tight axis-aligned pixel
box around a vehicle's projected 3D footprint corners. Its center is the
pixel that the ground-plane homography lifts to road coordinates.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InconsistentInputs, SchemaError
from .geometry import PointBehindCamera, project_point
from .render import solo_mask

MANIFEST_SCHEMA = "roadforge-manifest/1"
TOOL_VERSION = "0.1.0"


@dataclass(frozen=True)
class Annotation:
    instance_id: int
    bottom_box: tuple  # (x, y, w, h) pixels, 2-decimal precision
    visible_fraction: float
    truncated: bool
    model_id: str
    ground_position: tuple  # (x, y) meters ENU
    heading: float  # rad

    @property
    def bottom_center(self) -> tuple:
        x, y, w, h = self.bottom_box
        return (x + w / 2, y + h / 2)


@dataclass(frozen=True)
class ImageRecord:
    id: str
    path: str
    width: int
    height: int
    camera_id: str = ""
    weather: str = ""
    lighting: str = ""
    source_background: str = ""


@dataclass
class DatasetManifest:
    images: list = field(default_factory=list)  # ImageRecord
    annotations: dict = field(default_factory=dict)  # image id -> [Annotation]
    metadata: dict = field(default_factory=dict)  # seed, tool_version, config_hash


def bottom_box(instance, K, pose, image_dims):
    """Project the 4 footprint corners; returns (box, truncated) or None.

    box is the tight axis-aligned (x, y, w, h) of the projections clipped
    to the image, rounded to 2 decimals. None when every corner is behind
    the camera or the clipped box is empty.
    """
    width, height = image_dims
    pts = []
    any_behind = False
    for corner in instance.world_footprint_corners():
        try:
            pts.append(project_point(K, pose, corner))
        except PointBehindCamera:
            any_behind = True
    if not pts:
        return None
    pts = np.asarray(pts)
    x0, y0 = pts.min(axis=0)
    x1, y1 = pts.max(axis=0)
    cx0, cy0 = max(x0, 0.0), max(y0, 0.0)
    cx1, cy1 = min(x1, float(width)), min(y1, float(height))
    if cx1 <= cx0 or cy1 <= cy0:
        return None
    truncated = any_behind or (cx0, cy0, cx1, cy1) != (x0, y0, x1, y1)
    box = (
        round(cx0, 2),
        round(cy0, 2),
        round(cx1 - cx0, 2),
        round(cy1 - cy0, 2),
    )
    return box, truncated


def annotate_frame(render, instances, K, pose, min_visible=0.25):
    """Build annotations for a rendered frame, accounting for occlusion.

    visible_fraction compares the instance's pixels in the shared render
    against a solo depth pass. Annotations below min_visible or without a
    usable box are dropped. Output order is ascending instance id and is
    independent of the input list order.
    """
    instances = sorted(instances, key=lambda i: i.instance_id)
    ids = {i.instance_id for i in instances}
    rendered_ids = set(np.unique(render.mask)) - {-1}
    if not rendered_ids <= ids:
        raise InconsistentInputs(f"mask ids {rendered_ids - ids} missing from instances")
    annotations = []
    for inst in instances:
        bb = bottom_box(inst, K, pose, (K.width, K.height))
        if bb is None:
            continue
        box, truncated = bb
        solo = solo_mask(inst, K, pose)
        solo_count = int(solo.sum())
        if solo_count == 0:
            continue
        visible = float((render.mask == inst.instance_id).sum()) / solo_count
        if visible < min_visible:
            continue
        annotations.append(
            Annotation(
                instance_id=inst.instance_id,
                bottom_box=box,
                visible_fraction=min(visible, 1.0),
                truncated=truncated,
                model_id=inst.mesh_key,
                ground_position=(float(inst.translation[0]), float(inst.translation[1])),
                heading=float(math.atan2(inst.rotation[1, 0], inst.rotation[0, 0])),
            )
        )
    return annotations


def write_manifest(manifest: DatasetManifest, path):
    image_ids = [im.id for im in manifest.images]
    if len(set(image_ids)) != len(image_ids):
        raise SchemaError("duplicate image ids", "/images")
    for image_id in manifest.annotations:
        if image_id not in set(image_ids):
            raise SchemaError(f"annotations reference unknown image {image_id!r}",
                              "/annotations")
    doc = {
        "schema": MANIFEST_SCHEMA,
        "images": [
            {
                "id": im.id,
                "path": im.path,
                "width": im.width,
                "height": im.height,
                "camera_id": im.camera_id,
                "weather": im.weather,
                "lighting": im.lighting,
                "source_background": im.source_background,
            }
            for im in manifest.images
        ],
        "annotations": {
            image_id: [
                {
                    "instance_id": a.instance_id,
                    "bottom_box": [round(v, 2) for v in a.bottom_box],
                    "bottom_center": [round(v, 2) for v in a.bottom_center],
                    "visible_fraction": a.visible_fraction,
                    "truncated": a.truncated,
                    "model_id": a.model_id,
                    "ground_position": list(a.ground_position),
                    "heading": a.heading,
                }
                for a in anns
            ]
            for image_id, anns in manifest.annotations.items()
        },
        "metadata": manifest.metadata,
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")


def read_manifest(path) -> DatasetManifest:
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    if doc.get("schema") != MANIFEST_SCHEMA:
        raise SchemaError(f"unsupported schema {doc.get('schema')!r}", "/schema")
    images = []
    try:
        for i, im in enumerate(doc["images"]):
            images.append(
                ImageRecord(
                    id=im["id"],
                    path=im["path"],
                    width=im["width"],
                    height=im["height"],
                    camera_id=im.get("camera_id", ""),
                    weather=im.get("weather", ""),
                    lighting=im.get("lighting", ""),
                    source_background=im.get("source_background", ""),
                )
            )
    except KeyError as e:
        raise SchemaError(f"missing {e}", f"/images/{i}") from e
    image_ids = {im.id for im in images}
    if len(image_ids) != len(images):
        raise SchemaError("duplicate image ids", "/images")
    annotations = {}
    for image_id, anns in doc.get("annotations", {}).items():
        if image_id not in image_ids:
            raise SchemaError(
                f"annotations reference unknown image {image_id!r}",
                f"/annotations/{image_id}",
            )
        parsed = []
        for j, a in enumerate(anns):
            try:
                parsed.append(
                    Annotation(
                        instance_id=a["instance_id"],
                        bottom_box=tuple(a["bottom_box"]),
                        visible_fraction=a["visible_fraction"],
                        truncated=a["truncated"],
                        model_id=a["model_id"],
                        ground_position=tuple(a["ground_position"]),
                        heading=a["heading"],
                    )
                )
            except KeyError as e:
                raise SchemaError(f"missing {e}", f"/annotations/{image_id}/{j}") from e
        annotations[image_id] = parsed
    return DatasetManifest(
        images=images, annotations=annotations, metadata=doc.get("metadata", {})
    )
