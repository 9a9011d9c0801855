"""Background plate estimation and the condition-tagged background library.

Images are numpy uint8 arrays of shape (height, width, 3), RGB.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DimensionMismatch, EmptyInput, InsufficientBackgrounds, SchemaError

WEATHER_TAGS = {"sunny", "cloudy", "rain", "snow", "fog", "overcast"}
LIGHTING_TAGS = {"day", "twilight", "night"}


@dataclass(frozen=True)
class BackgroundEntry:
    image: np.ndarray
    captured_at: str  # RFC 3339
    weather: str
    lighting: str
    path: str = ""

    def __post_init__(self):
        if self.weather not in WEATHER_TAGS:
            raise ValueError(f"unknown weather tag {self.weather!r}")
        if self.lighting not in LIGHTING_TAGS:
            raise ValueError(f"unknown lighting tag {self.lighting!r}")


def read_image(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def write_image(image: np.ndarray, path):
    Image.fromarray(np.asarray(image, dtype=np.uint8), "RGB").save(path, format="PNG")


def median_background(frames) -> np.ndarray:
    """Per-pixel, per-channel lower median across a stack of frames.

    The lower median (index (n-1)//2 of the sorted values) keeps output
    values drawn from actually observed pixels.
    """
    frames = list(frames)
    if not frames:
        raise EmptyInput("median_background needs >=1 frame")
    shape = frames[0].shape
    for i, f in enumerate(frames):
        if f.shape != shape:
            raise DimensionMismatch(f"frame {i} has shape {f.shape}, expected {shape}")
    stack = np.stack(frames).astype(np.uint8)
    stack.sort(axis=0, kind="stable")
    return stack[(len(frames) - 1) // 2]


def sample_backgrounds(library, plan, seed) -> list:
    """Seeded sample without replacement per (weather, lighting) bucket.

    plan: mapping {(weather, lighting): count}. Deterministic for a fixed
    seed; raises InsufficientBackgrounds naming any deficient bucket.
    """
    rng = np.random.default_rng(seed)
    chosen = []
    for (weather, lighting), count in sorted(plan.items()):
        bucket = [e for e in library if e.weather == weather and e.lighting == lighting]
        if count > len(bucket):
            raise InsufficientBackgrounds(
                f"bucket ({weather}, {lighting}) has {len(bucket)} entries, need {count}"
            )
        idx = rng.choice(len(bucket), size=count, replace=False)
        chosen.extend(bucket[i] for i in idx)
    return chosen


def load_library(index_path) -> list:
    """Read a library index JSON and the images it references."""
    index_path = Path(index_path)
    with open(index_path, "r", encoding="utf-8") as f:
        entries = json.load(f)
    if not isinstance(entries, list):
        raise SchemaError("library index must be a JSON list")
    library = []
    for i, e in enumerate(entries):
        try:
            img_path = index_path.parent / e["path"]
            library.append(
                BackgroundEntry(
                    image=read_image(img_path),
                    captured_at=e["captured_at"],
                    weather=e["weather"],
                    lighting=e["lighting"],
                    path=str(e["path"]),
                )
            )
        except (KeyError, ValueError) as err:
            raise SchemaError(str(err), f"/{i}") from err
    return library
