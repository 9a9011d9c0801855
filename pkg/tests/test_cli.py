import json

import numpy as np
import pytest
from click.testing import CliRunner

from roadforge import annotate, background, cli, geometry as g, localize

from conftest import (
    default_intrinsics,
    look_at_pose,
    make_pipeline_workspace,
    random_volume_points,
)


@pytest.fixture
def runner():
    return CliRunner()


def write_intrinsics(path, K):
    path.write_text(json.dumps({"fx": K.fx, "fy": K.fy, "cx": K.cx, "cy": K.cy,
                                "width": K.width, "height": K.height}))


def write_landmarks(path, K, pose, n=8, seed=0):
    rng = np.random.default_rng(seed)
    landmarks = []
    for i, X in enumerate(random_volume_points(rng, n)):
        u, v = g.project_point(K, pose, X)
        landmarks.append({"name": f"L{i}", "world": [float(c) for c in X],
                          "pixel": [float(u), float(v)]})
    path.write_text(json.dumps({"landmarks": landmarks}))


class TestCalibrate:
    def test_recovers_pose(self, runner, tmp_path):
        K = default_intrinsics()
        pose = look_at_pose([3, -17, 6])
        write_intrinsics(tmp_path / "K.json", K)
        write_landmarks(tmp_path / "lm.json", K, pose)
        out = tmp_path / "pose.json"
        result = runner.invoke(cli.main, [
            "calibrate", "--landmarks", str(tmp_path / "lm.json"),
            "--intrinsics", str(tmp_path / "K.json"), "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        assert "RMS reprojection error" in result.output
        loaded = g.load_pose(out)
        assert np.allclose(loaded.rotation, pose.rotation, atol=1e-5)
        assert np.allclose(loaded.translation, pose.translation, atol=1e-4)

    def test_too_few_landmarks_exit_2(self, runner, tmp_path):
        K = default_intrinsics()
        write_intrinsics(tmp_path / "K.json", K)
        write_landmarks(tmp_path / "lm.json", K, look_at_pose([0, -15, 6]), n=3)
        result = runner.invoke(cli.main, [
            "calibrate", "--landmarks", str(tmp_path / "lm.json"),
            "--intrinsics", str(tmp_path / "K.json"),
            "--out", str(tmp_path / "pose.json"),
        ])
        assert result.exit_code == 2
        assert "error" in result.output.lower()

    def test_missing_file_exit_2(self, runner, tmp_path):
        result = runner.invoke(cli.main, [
            "calibrate", "--landmarks", str(tmp_path / "nope.json"),
            "--intrinsics", str(tmp_path / "nope.json"),
            "--out", str(tmp_path / "pose.json"),
        ])
        assert result.exit_code == 2


class TestGenerate:
    def test_small_run(self, runner, tmp_path):
        config = make_pipeline_workspace(tmp_path / "ws", images_per_view=2)
        result = runner.invoke(cli.main, ["generate", "--config", str(config)])
        assert result.exit_code == 0, result.output
        manifest = annotate.read_manifest(tmp_path / "ws" / "out" / "manifest.json")
        assert len(manifest.images) == 2
        for rec in manifest.images:
            img = background.read_image(tmp_path / "ws" / "out" / rec.path)
            assert img.shape == (rec.height, rec.width, 3)

    def test_invalid_config_exit_2_no_output(self, runner, tmp_path):
        config = make_pipeline_workspace(tmp_path / "ws", images_per_view=2)
        (tmp_path / "ws" / "network.json").unlink()
        result = runner.invoke(cli.main, ["generate", "--config", str(config)])
        assert result.exit_code == 2
        assert not (tmp_path / "ws" / "out").exists()

    def test_seed_override_changes_output(self, runner, tmp_path):
        config = make_pipeline_workspace(tmp_path / "ws", images_per_view=2)
        result = runner.invoke(
            cli.main, ["generate", "--config", str(config), "--seed", "99"]
        )
        assert result.exit_code == 0, result.output
        manifest = annotate.read_manifest(tmp_path / "ws" / "out" / "manifest.json")
        assert manifest.metadata["seed"] == 99


class TestEvaluateCommand:
    def test_scores_and_writes_report(self, runner, tmp_path):
        manifest = annotate.DatasetManifest(
            images=[annotate.ImageRecord(id="a", path="images/a.png",
                                         width=720, height=480)],
            annotations={"a": [annotate.Annotation(
                instance_id=0, bottom_box=(95.0, 95.0, 10.0, 10.0),
                visible_fraction=1.0, truncated=False, model_id="m",
                ground_position=(0.0, 0.0), heading=0.0)]},
            metadata={},
        )
        annotate.write_manifest(manifest, tmp_path / "manifest.json")
        localize.write_detections(
            [localize.Detection("a", (101.0, 100.0), 0.9)], tmp_path / "dets.jsonl"
        )
        out = tmp_path / "report.json"
        result = runner.invoke(cli.main, [
            "evaluate", "--manifest", str(tmp_path / "manifest.json"),
            "--detections", str(tmp_path / "dets.jsonl"), "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        assert "mAP" in result.output and "AP@50" in result.output
        doc = json.loads(out.read_text())
        assert doc["AP@50"] == 1.0

    def test_unknown_image_exit_2(self, runner, tmp_path):
        annotate.write_manifest(annotate.DatasetManifest(), tmp_path / "m.json")
        localize.write_detections(
            [localize.Detection("ghost", (1.0, 1.0), 0.5)], tmp_path / "d.jsonl"
        )
        result = runner.invoke(cli.main, [
            "evaluate", "--manifest", str(tmp_path / "m.json"),
            "--detections", str(tmp_path / "d.jsonl"),
            "--out", str(tmp_path / "r.json"),
        ])
        assert result.exit_code == 2


class TestBackgroundCommand:
    def test_median_plate(self, runner, tmp_path):
        rng = np.random.default_rng(0)
        frames_dir = tmp_path / "frames"
        frames_dir.mkdir()
        frames = [rng.integers(0, 256, (8, 8, 3), dtype=np.uint8) for _ in range(5)]
        for i, f in enumerate(frames):
            background.write_image(f, frames_dir / f"f{i}.png")
        out = tmp_path / "plate.png"
        result = runner.invoke(cli.main, [
            "background", "--frames", str(frames_dir), "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        assert np.array_equal(
            background.read_image(out), background.median_background(frames)
        )

    def test_empty_dir_exit_2(self, runner, tmp_path):
        frames_dir = tmp_path / "frames"
        frames_dir.mkdir()
        result = runner.invoke(cli.main, [
            "background", "--frames", str(frames_dir),
            "--out", str(tmp_path / "plate.png"),
        ])
        assert result.exit_code == 2


class TestServeCommand:
    def test_missing_ui_dir_exit_2(self, runner, tmp_path):
        result = runner.invoke(cli.main, [
            "serve", "--ui", str(tmp_path / "missing"),
        ])
        assert result.exit_code == 2


class TestTopLevel:
    def test_version(self, runner):
        result = runner.invoke(cli.main, ["--version"])
        assert result.exit_code == 0

    def test_help_lists_commands(self, runner):
        result = runner.invoke(cli.main, ["--help"])
        assert result.exit_code == 0
        for cmd in ("calibrate", "generate", "evaluate", "background", "serve"):
            assert cmd in result.output
