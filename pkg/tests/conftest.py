import json

import numpy as np
import pytest

from roadforge import background, geometry as g
from roadforge import models, render, traffic


def look_at_pose(camera_position, target=(0.0, 0.0, 0.0)):
    """World->camera pose for a camera at camera_position looking at target."""
    cam = np.asarray(camera_position, dtype=float)
    tgt = np.asarray(target, dtype=float)
    fwd = tgt - cam
    fwd /= np.linalg.norm(fwd)
    right = np.cross(fwd, [0.0, 0.0, 1.0])
    right /= np.linalg.norm(right)
    down = np.cross(fwd, right)
    R = np.vstack([right, down, fwd])
    return g.CameraPose(R, -R @ cam)


def random_oblique_pose(rng, height_range=(4.0, 10.0)):
    """Random elevated roadside-style camera looking toward the origin area."""
    cam = np.array(
        [
            rng.uniform(-20, 20),
            rng.uniform(-35, -15),
            rng.uniform(*height_range),
        ]
    )
    target = np.array([rng.uniform(-5, 5), rng.uniform(-5, 5), 0.0])
    return look_at_pose(cam, target)


def default_intrinsics():
    return g.CameraIntrinsics(fx=1000.0, fy=1000.0, cx=360.0, cy=240.0, width=720, height=480)


def landmarks_for(K, pose, world_points):
    return [
        g.LandmarkCorrespondence(f"P{i + 1}", p, g.project_point(K, pose, p))
        for i, p in enumerate(world_points)
    ]


def random_ground_points(rng, n):
    return np.column_stack(
        [rng.uniform(-12, 12, n), rng.uniform(-12, 12, n), np.zeros(n)]
    )


def random_volume_points(rng, n):
    return np.column_stack(
        [rng.uniform(-12, 12, n), rng.uniform(-12, 12, n), rng.uniform(0.0, 4.0, n)]
    )


@pytest.fixture
def camera():
    return default_intrinsics()


@pytest.fixture
def cube_mesh(tmp_path):
    path = models.write_box_model(tmp_path / "cube.obj", length=2.0, width=2.0, height=2.0)
    return render.load_mesh(path)


def make_pipeline_workspace(
    root,
    n_cameras=1,
    images_per_view=3,
    width=320,
    height=240,
    seed=7,
    enhancement="baseline",
):
    """Build a self-contained generation workspace; returns the config path.

    Straight two-way road through the origin, box vehicle models, synthetic
    background plates, one elevated camera per view with a saved pose.
    """
    root.mkdir(parents=True, exist_ok=True)
    models.make_model_library(root / "models")

    rng = np.random.default_rng(seed)
    bg_dir = root / "backgrounds"
    bg_dir.mkdir(exist_ok=True)
    index = []
    for i in range(3):
        img = rng.integers(40, 200, (height, width, 3), dtype=np.uint8)
        name = f"bg{i}.png"
        background.write_image(img, bg_dir / name)
        index.append(
            {
                "path": name,
                "captured_at": f"2024-06-0{i + 1}T12:00:00Z",
                "weather": "sunny",
                "lighting": "day",
            }
        )
    (bg_dir / "index.json").write_text(json.dumps(index))

    net = {
        "lanes": [
            {
                "id": "east",
                "polyline": [[-80.0, -2.0], [80.0, -2.0]],
                "width": 3.5,
                "speed_limit": 13.0,
            },
            {
                "id": "west",
                "polyline": [[80.0, 2.0], [-80.0, 2.0]],
                "width": 3.5,
                "speed_limit": 13.0,
            },
        ],
        "routes": [
            {"id": "re", "lanes": ["east"], "flow_veh_per_s": 0.25},
            {"id": "rw", "lanes": ["west"], "flow_veh_per_s": 0.25},
        ],
    }
    (root / "network.json").write_text(json.dumps(net))

    fx = width * 1.4
    camera_blocks = []
    for c in range(n_cameras):
        pose = look_at_pose([6.0 * c - 9.0, -22.0, 8.0], target=(0.0, 0.0, 0.0))
        doc = {
            "R": [[float(v) for v in row] for row in pose.rotation],
            "T": [float(v) for v in pose.translation],
            "rms_error": 0.0,
        }
        (root / f"pose{c}.json").write_text(json.dumps(doc))
        camera_blocks.append(
            f"""
[[cameras]]
id = "cam{c}"
pose = "pose{c}.json"

[cameras.intrinsics]
fx = {fx}
fy = {fx}
cx = {width / 2}
cy = {height / 2}
width = {width}
height = {height}
"""
        )
    config = f"""
network = "network.json"
model_dir = "models"
output_dir = "out"
images_per_view = {images_per_view}
frame_stride = 4
seed = {seed}
enhancement = "{enhancement}"

[background]
index = "backgrounds/index.json"
plan = [{{weather = "sunny", lighting = "day", count = 2}}]
{''.join(camera_blocks)}
"""
    config_path = root / "config.toml"
    config_path.write_text(config)
    return config_path


def cube_instance(mesh, instance_id=0, position=(0.0, 0.0), heading=0.0, length=2.0):
    state = traffic.VehicleState(
        id=instance_id,
        position=position,
        heading=heading,
        route_id="r",
        model_id="cube",
        length=length,
        width=length,
    )
    return render.make_instance(instance_id, "cube", mesh, state)
