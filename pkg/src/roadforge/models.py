"""Helpers for building a minimal vehicle model library.

Real deployments point the pipeline at a directory of downloaded meshes;
these generators produce simple box-based stand-ins for tests and demos.
"""

from __future__ import annotations

import json
from pathlib import Path


def box_obj_text(length=4.5, width=1.8, height=1.5):
    """Wavefront text for an axis-aligned box with its bottom face at z=0."""
    hl, hw = length / 2, width / 2
    corners = [
        (-hl, -hw, 0.0),
        (hl, -hw, 0.0),
        (hl, hw, 0.0),
        (-hl, hw, 0.0),
        (-hl, -hw, height),
        (hl, -hw, height),
        (hl, hw, height),
        (-hl, hw, height),
    ]
    # quad faces, outward CCW winding
    quads = [
        (1, 4, 3, 2),  # bottom (-z)
        (5, 6, 7, 8),  # top (+z)
        (1, 2, 6, 5),  # -y side
        (2, 3, 7, 6),  # +x front
        (3, 4, 8, 7),  # +y side
        (4, 1, 5, 8),  # -x back
    ]
    lines = [f"v {x} {y} {z}" for x, y, z in corners]
    lines += [f"f {a} {b} {c} {d}" for a, b, c, d in quads]
    return "\n".join(lines) + "\n"


def write_box_model(path, length=4.5, width=1.8, height=1.5, base_color=(90, 90, 110)):
    """Write an OBJ box plus its metadata sidecar; returns the OBJ path."""
    path = Path(path)
    path.write_text(box_obj_text(length, width, height), encoding="utf-8")
    sidecar = {
        "forward": "+x",
        "up": "+z",
        "length_m": length,
        "base_color": list(base_color),
    }
    path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2), encoding="utf-8")
    return path


def make_model_library(directory, specs=None):
    """Populate a directory with a few box vehicles; returns the model keys."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    if specs is None:
        specs = {
            "sedan": dict(length=4.6, width=1.8, height=1.45, base_color=(140, 30, 30)),
            "suv": dict(length=4.9, width=1.95, height=1.75, base_color=(40, 60, 140)),
            "van": dict(length=5.4, width=2.0, height=2.2, base_color=(200, 200, 205)),
        }
    for key, kw in specs.items():
        write_box_model(directory / f"{key}.obj", **kw)
    return sorted(specs)
