"""Software rasterizer: composite 3D vehicle meshes over background plates.

Flat-shaded, z-buffered, hard-edged rendering through a calibrated pinhole
camera. Model convention: +x forward, +y left, +z up, origin at the bottom
center of the bounding box.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, EmptyMesh, ParseError
from .geometry import CameraIntrinsics, CameraPose

NEAR_PLANE = 0.1

_AXIS_VECTORS = {
    "+x": np.array([1.0, 0, 0]),
    "-x": np.array([-1.0, 0, 0]),
    "+y": np.array([0, 1.0, 0]),
    "-y": np.array([0, -1.0, 0]),
    "+z": np.array([0, 0, 1.0]),
    "-z": np.array([0, 0, -1.0]),
}


@dataclass(frozen=True)
class Mesh:
    vertices: np.ndarray  # Nx3 model frame, meters
    triangles: np.ndarray  # Mx3 int indices
    base_color: tuple = (128, 128, 128)
    normals: np.ndarray | None = None  # optional per-vertex

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        t = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if len(v) == 0 or len(t) == 0:
            raise EmptyMesh("mesh has no geometry")
        if t.min() < 0 or t.max() >= len(v):
            raise ParseError("face index out of range")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)

    @property
    def bounding_box(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    @property
    def length(self) -> float:
        lo, hi = self.bounding_box
        return float(hi[0] - lo[0])


@dataclass(frozen=True)
class VehicleInstance:
    instance_id: int
    mesh_key: str
    mesh: Mesh
    rotation: np.ndarray  # 3x3 model -> world
    translation: np.ndarray  # 3
    scale: float

    def world_vertices(self) -> np.ndarray:
        return self.scale * (self.mesh.vertices @ self.rotation.T) + self.translation

    def world_footprint_corners(self) -> np.ndarray:
        """The 4 bottom-face bbox corners, transformed to world space."""
        lo, hi = self.mesh.bounding_box
        corners = np.array(
            [
                [lo[0], lo[1], lo[2]],
                [hi[0], lo[1], lo[2]],
                [hi[0], hi[1], lo[2]],
                [lo[0], hi[1], lo[2]],
            ]
        )
        return self.scale * (corners @ self.rotation.T) + self.translation


@dataclass(frozen=True)
class RenderResult:
    image: np.ndarray  # HxWx3 uint8
    mask: np.ndarray  # HxW int32, -1 where background
    depth: np.ndarray  # HxW float64, inf where background


def make_instance(instance_id, mesh_key, mesh, state) -> VehicleInstance:
    """Place a mesh at a simulated VehicleState, scaled to the state's length."""
    c, s = math.cos(state.heading), math.sin(state.heading)
    R = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    return VehicleInstance(
        instance_id=instance_id,
        mesh_key=mesh_key,
        mesh=mesh,
        rotation=R,
        translation=np.array([state.position[0], state.position[1], 0.0]),
        scale=state.length / mesh.length,
    )


def load_mesh(path) -> Mesh:
    """Load the supported Wavefront subset; applies the JSON metadata sidecar.

    Recognized records: v, vn, f (polygon faces are fan-triangulated);
    vt, comments, and grouping records are ignored.
    """
    path = Path(path)
    vertices = []
    faces = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            tag = parts[0]
            if tag == "v":
                if len(parts) < 4:
                    raise ParseError("vertex needs 3 coordinates", lineno)
                try:
                    vertices.append([float(x) for x in parts[1:4]])
                except ValueError:
                    raise ParseError("bad vertex coordinate", lineno) from None
            elif tag == "f":
                if len(parts) < 4:
                    raise ParseError("face needs >=3 vertices", lineno)
                try:
                    idx = [int(p.split("/")[0]) for p in parts[1:]]
                except ValueError:
                    raise ParseError("bad face index", lineno) from None
                idx = [i - 1 if i > 0 else len(vertices) + i for i in idx]
                for i in range(1, len(idx) - 1):
                    faces.append([idx[0], idx[i], idx[i + 1]])
            elif tag in ("vn", "vt", "o", "g", "s", "usemtl", "mtllib"):
                continue
            else:
                raise ParseError(f"unsupported record {tag!r}", lineno)
    if not vertices or not faces:
        raise EmptyMesh(f"{path}: no geometry")
    verts = np.asarray(vertices, dtype=float)

    forward, up = "+x", "+z"
    length_m = None
    base_color = (128, 128, 128)
    sidecar = path.with_suffix(".json")
    if sidecar.exists():
        with open(sidecar, "r", encoding="utf-8") as f:
            meta = json.load(f)
        forward = meta.get("forward", forward)
        up = meta.get("up", up)
        length_m = meta.get("length_m", length_m)
        base_color = tuple(meta.get("base_color", base_color))

    fwd = _AXIS_VECTORS[forward]
    upv = _AXIS_VECTORS[up]
    left = np.cross(upv, fwd)
    verts = np.column_stack([verts @ fwd, verts @ left, verts @ upv])

    lo = verts.min(axis=0)
    hi = verts.max(axis=0)
    verts -= np.array([(lo[0] + hi[0]) / 2, (lo[1] + hi[1]) / 2, lo[2]])
    if length_m is not None:
        extent = verts[:, 0].max() - verts[:, 0].min()
        if extent > 1e-12:
            verts *= length_m / extent
    return Mesh(vertices=verts, triangles=np.asarray(faces), base_color=base_color)


def _clip_near(tri_cam):
    """Sutherland-Hodgman clip of one camera-space triangle against z >= NEAR_PLANE."""
    out = []
    n = len(tri_cam)
    for i in range(n):
        a, b = tri_cam[i], tri_cam[(i + 1) % n]
        a_in, b_in = a[2] >= NEAR_PLANE, b[2] >= NEAR_PLANE
        if a_in:
            out.append(a)
        if a_in != b_in:
            t = (NEAR_PLANE - a[2]) / (b[2] - a[2])
            out.append(a + t * (b - a))
    tris = []
    for i in range(1, len(out) - 1):
        tris.append((out[0], out[i], out[i + 1]))
    return tris


def _raster_instance(inst, K, pose, depth, mask, image=None, lighting=None):
    """Rasterize one instance into the shared buffers (in-place)."""
    h, w = depth.shape
    world = inst.world_vertices()
    cam = world @ pose.rotation.T + pose.translation
    if cam[:, 2].max() < NEAR_PLANE:
        return  # entirely behind the camera
    Kf = (K.fx, K.fy, K.cx, K.cy)
    if lighting is not None:
        sun = np.asarray(lighting["sun_dir"], dtype=float)
        sun = sun / np.linalg.norm(sun)
        ambient = float(lighting["ambient"])
        base = np.asarray(inst.mesh.base_color, dtype=float)
    for tri in inst.mesh.triangles:
        tri_cam = cam[tri]
        if lighting is not None:
            a, b, c = world[tri]
            n = np.cross(b - a, c - a)
            norm = np.linalg.norm(n)
            if norm < 1e-15:
                continue
            n /= norm
            intensity = ambient + (1 - ambient) * max(0.0, float(n @ sun))
            color = np.clip(base * intensity, 0, 255).astype(np.uint8)
        for clipped in _clip_near(tri_cam):
            pts = np.array(
                [
                    [Kf[0] * p[0] / p[2] + Kf[2], Kf[1] * p[1] / p[2] + Kf[3], p[2]]
                    for p in clipped
                ]
            )
            _fill_triangle(pts, inst.instance_id, depth, mask,
                           image, color if lighting is not None else None)


def _fill_triangle(pts, instance_id, depth, mask, image, color):
    h, w = depth.shape
    xs, ys, zs = pts[:, 0], pts[:, 1], pts[:, 2]
    area = (xs[1] - xs[0]) * (ys[2] - ys[0]) - (ys[1] - ys[0]) * (xs[2] - xs[0])
    if area == 0:
        return
    if area < 0:
        pts = pts[::-1]
        xs, ys, zs = pts[:, 0], pts[:, 1], pts[:, 2]
        area = -area
    x0 = max(int(math.floor(xs.min() - 0.5)), 0)
    x1 = min(int(math.ceil(xs.max() - 0.5)), w - 1)
    y0 = max(int(math.floor(ys.min() - 0.5)), 0)
    y1 = min(int(math.ceil(ys.max() - 0.5)), h - 1)
    if x0 > x1 or y0 > y1:
        return
    px, py = np.meshgrid(
        np.arange(x0, x1 + 1) + 0.5, np.arange(y0, y1 + 1) + 0.5
    )
    inside = np.ones(px.shape, dtype=bool)
    bary = []
    for i in range(3):
        ax, ay = xs[i], ys[i]
        bx, by = xs[(i + 1) % 3], ys[(i + 1) % 3]
        e = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
        # top-left fill rule so shared edges are drawn exactly once
        top_left = (by > ay) or (by == ay and bx < ax)
        inside &= (e > 0) | ((e == 0) & top_left)
        bary.append(e)
    if not inside.any():
        return
    # edge i spans v_i -> v_{i+1}; its function weights the opposite vertex v_{i+2}
    w0 = bary[1] / area
    w1 = bary[2] / area
    w2 = bary[0] / area
    inv_z = w0 / zs[0] + w1 / zs[1] + w2 / zs[2]
    z = np.where(inv_z > 0, 1.0 / np.maximum(inv_z, 1e-300), np.inf)
    sub_depth = depth[y0 : y1 + 1, x0 : x1 + 1]
    win = inside & (z < sub_depth)
    if not win.any():
        return
    sub_depth[win] = z[win]
    mask[y0 : y1 + 1, x0 : x1 + 1][win] = instance_id
    if image is not None:
        image[y0 : y1 + 1, x0 : x1 + 1][win] = color


def render_scene(background, instances, K: CameraIntrinsics, pose: CameraPose, lighting=None) -> RenderResult:
    """Rasterize vehicle instances over a background plate.

    Pixels without a vehicle keep exact background bytes. Depth ties are
    broken in favor of earlier instances (ascending instance id order).
    """
    background = np.asarray(background, dtype=np.uint8)
    if background.shape != (K.height, K.width, 3):
        raise DimensionMismatch(
            f"background {background.shape} vs camera {(K.height, K.width, 3)}"
        )
    if lighting is None:
        lighting = {"sun_dir": (0.3, 0.2, 0.9), "ambient": 0.45}
    image = background.copy()
    depth = np.full((K.height, K.width), np.inf)
    mask = np.full((K.height, K.width), -1, dtype=np.int32)
    for inst in sorted(instances, key=lambda i: i.instance_id):
        _raster_instance(inst, K, pose, depth, mask, image, lighting)
    return RenderResult(image=image, mask=mask, depth=depth)


def solo_mask(instance, K: CameraIntrinsics, pose: CameraPose) -> np.ndarray:
    """Mask the instance would occupy rendered alone (occlusion bookkeeping)."""
    depth = np.full((K.height, K.width), np.inf)
    mask = np.full((K.height, K.width), -1, dtype=np.int32)
    _raster_instance(instance, K, pose, depth, mask)
    return mask == instance.instance_id
