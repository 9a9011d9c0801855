"""Lift 2D detections to road-plane coordinates."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import PointAtInfinity, SchemaError
from .geometry import Homography, image_to_ground

# vertical shift from a full-body box center toward the bottom center,
# as a fraction of box height; adapter for external full-box detectors
CENTER_SHIFT_FACTOR = 0.35


@dataclass(frozen=True)
class Detection:
    image_id: str
    bottom_center: tuple  # (u, v) pixels
    score: float
    box: tuple | None = None  # optional (x, y, w, h)

    def __post_init__(self):
        if not (0.0 <= self.score <= 1.0):
            raise ValueError(f"score {self.score} outside [0, 1]")
        if not all(np.isfinite(self.bottom_center)):
            raise ValueError("bottom_center must be finite")


def shift_center(center, box_height, factor=CENTER_SHIFT_FACTOR):
    """Map a full-body box center down to an approximate bottom center."""
    if box_height < 0:
        raise ValueError("box height must be >= 0")
    x, y = center
    return (x, y + factor * box_height)


def localize(detections, H: Homography):
    """Apply the image->ground homography to each detection's bottom center.

    Returns (located, flagged): located is a list of (detection, ground
    2-vector); flagged holds detections whose center maps to infinity.
    """
    located = []
    flagged = []
    for det in detections:
        try:
            located.append((det, image_to_ground(H, det.bottom_center)))
        except PointAtInfinity:
            flagged.append(det)
    return located, flagged


def read_detections(path):
    """Read a JSON-lines detection file."""
    detections = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                d = json.loads(line)
                detections.append(
                    Detection(
                        image_id=str(d["image_id"]),
                        bottom_center=tuple(d["bottom_center"]),
                        score=float(d["score"]),
                        box=tuple(d["box"]) if d.get("box") is not None else None,
                    )
                )
            except (KeyError, TypeError, ValueError, json.JSONDecodeError) as e:
                raise SchemaError(str(e), f"line {lineno}") from e
    return detections


def write_detections(detections, path):
    with open(path, "w", encoding="utf-8") as f:
        for det in detections:
            doc = {
                "image_id": det.image_id,
                "bottom_center": list(det.bottom_center),
                "score": det.score,
            }
            if det.box is not None:
                doc["box"] = list(det.box)
            f.write(json.dumps(doc) + "\n")
