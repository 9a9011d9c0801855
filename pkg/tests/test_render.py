import numpy as np
import pytest

from roadforge import geometry as g
from roadforge import render
from roadforge.errors import DimensionMismatch, EmptyMesh, ParseError

from conftest import cube_instance, default_intrinsics, look_at_pose, random_oblique_pose


def random_background(rng, K):
    return rng.integers(0, 256, (K.height, K.width, 3), dtype=np.uint8)


class TestLoadMesh:
    def test_unit_cube(self, cube_mesh):
        assert cube_mesh.vertices.shape == (8, 3)
        assert cube_mesh.triangles.shape == (12, 3)
        lo, hi = cube_mesh.bounding_box
        assert lo[2] == pytest.approx(0.0, abs=1e-6)
        assert (lo[0] + hi[0]) / 2 == pytest.approx(0.0, abs=1e-9)

    def test_quad_faces_fan_triangulated(self, tmp_path):
        obj = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n"
        path = tmp_path / "quad.obj"
        path.write_text(obj)
        mesh = render.load_mesh(path)
        assert len(mesh.triangles) == 2

    def test_empty_mesh(self, tmp_path):
        path = tmp_path / "empty.obj"
        path.write_text("# nothing here\n")
        with pytest.raises(EmptyMesh):
            render.load_mesh(path)

    def test_parse_error_carries_line(self, tmp_path):
        path = tmp_path / "bad.obj"
        path.write_text("v 0 0 0\nv oops 0 0\n")
        with pytest.raises(ParseError) as info:
            render.load_mesh(path)
        assert info.value.line == 2

    def test_axis_remap_sidecar(self, tmp_path):
        # model authored with +y forward, length along y
        obj = "v 0 -2 0\nv 0 2 0\nv 1 2 0\nv 1 -2 1\nf 1 2 3\nf 1 3 4\n"
        path = tmp_path / "m.obj"
        path.write_text(obj)
        path.with_suffix(".json").write_text(
            '{"forward": "+y", "up": "+z", "length_m": 4.0}'
        )
        mesh = render.load_mesh(path)
        assert mesh.length == pytest.approx(4.0)


class TestRenderScene:
    def test_empty_scene_preserves_background(self, camera):
        rng = np.random.default_rng(0)
        bg = random_background(rng, camera)
        pose = look_at_pose([0, -15, 6])
        result = render.render_scene(bg, [], camera, pose)
        assert np.array_equal(result.image, bg)
        assert (result.mask == -1).all()
        assert np.isinf(result.depth).all()

    def test_dimension_mismatch(self, camera):
        bg = np.zeros((100, 100, 3), dtype=np.uint8)
        with pytest.raises(DimensionMismatch):
            render.render_scene(bg, [], camera, look_at_pose([0, -15, 6]))

    def test_cube_silhouette_matches_corner_projection(self, camera, cube_mesh):
        rng = np.random.default_rng(1)
        bg = np.zeros((camera.height, camera.width, 3), dtype=np.uint8)
        checked = 0
        while checked < 20:
            pose = random_oblique_pose(rng)
            inst = cube_instance(cube_mesh, position=(rng.uniform(-3, 3), rng.uniform(-3, 3)))
            proj = np.array(
                [g.project_point(camera, pose, c) for c in inst.world_vertices()]
            )
            if proj[:, 0].min() < 1 or proj[:, 0].max() > camera.width - 1:
                continue  # only fully visible cubes have an analytic bbox
            if proj[:, 1].min() < 1 or proj[:, 1].max() > camera.height - 1:
                continue
            result = render.render_scene(bg, [inst], camera, pose)
            ys, xs = np.nonzero(result.mask == 0)
            assert len(xs) > 0
            assert abs(xs.min() - proj[:, 0].min()) <= 1.0
            assert abs(xs.max() + 1 - proj[:, 0].max()) <= 1.0
            assert abs(ys.min() - proj[:, 1].min()) <= 1.0
            assert abs(ys.max() + 1 - proj[:, 1].max()) <= 1.0
            checked += 1

    def test_background_outside_masks_untouched(self, camera, cube_mesh):
        rng = np.random.default_rng(2)
        bg = random_background(rng, camera)
        pose = look_at_pose([0, -15, 6])
        instances = [
            cube_instance(cube_mesh, 0, (0, 0)),
            cube_instance(cube_mesh, 1, (4, 2)),
        ]
        result = render.render_scene(bg, instances, camera, pose)
        outside = result.mask == -1
        assert np.array_equal(result.image[outside], bg[outside])
        assert np.isinf(result.depth[outside]).all()
        assert np.isfinite(result.depth[~outside]).all()

    def test_occlusion_mask_holds_nearer_instance(self, camera, cube_mesh):
        # two cubes on the same camera ray; the near one is smaller in world
        pose = look_at_pose([0, -20, 2], target=(0, 0, 1))
        near = cube_instance(cube_mesh, 0, (0, -8), length=1.0)
        far = cube_instance(cube_mesh, 1, (0, 4), length=3.0)
        bg = np.zeros((camera.height, camera.width, 3), dtype=np.uint8)
        both = render.render_scene(bg, [near, far], camera, pose)
        near_alone = render.solo_mask(near, camera, pose)
        far_alone = render.solo_mask(far, camera, pose)
        overlap = near_alone & far_alone
        assert overlap.any()
        assert (both.mask[overlap] == 0).all()

    def test_depth_ordering_on_overlaps(self, camera, cube_mesh):
        pose = look_at_pose([0, -20, 2], target=(0, 0, 1))
        near = cube_instance(cube_mesh, 0, (0, -8), length=1.0)
        far = cube_instance(cube_mesh, 1, (0, 4), length=3.0)
        bg = np.zeros((camera.height, camera.width, 3), dtype=np.uint8)
        both = render.render_scene(bg, [near, far], camera, pose)
        depth_near = np.full((camera.height, camera.width), np.inf)
        mask_near = np.full((camera.height, camera.width), -1, dtype=np.int32)
        render._raster_instance(near, camera, pose, depth_near, mask_near)
        depth_far = np.full((camera.height, camera.width), np.inf)
        mask_far = np.full((camera.height, camera.width), -1, dtype=np.int32)
        render._raster_instance(far, camera, pose, depth_far, mask_far)
        overlap = (mask_near == 0) & (mask_far == 1)
        winners = both.mask[overlap]
        solo = np.where(winners == 0, depth_near[overlap], depth_far[overlap])
        other = np.where(winners == 0, depth_far[overlap], depth_near[overlap])
        assert (solo < other).all()

    def test_deterministic(self, camera, cube_mesh):
        rng = np.random.default_rng(3)
        bg = random_background(rng, camera)
        pose = random_oblique_pose(rng)
        instances = [cube_instance(cube_mesh, i, (3 * i, 0)) for i in range(3)]
        a = render.render_scene(bg, instances, camera, pose)
        b = render.render_scene(bg, instances, camera, pose)
        assert np.array_equal(a.image, b.image)
        assert np.array_equal(a.mask, b.mask)
        assert np.array_equal(a.depth, b.depth)

    def test_silhouette_inside_projected_hull(self, camera, cube_mesh):
        from scipy.spatial import Delaunay

        rng = np.random.default_rng(4)
        for _ in range(10):
            pose = random_oblique_pose(rng)
            inst = cube_instance(cube_mesh, position=(rng.uniform(-3, 3), rng.uniform(-3, 3)))
            bg = np.zeros((camera.height, camera.width, 3), dtype=np.uint8)
            result = render.render_scene(bg, [inst], camera, pose)
            ys, xs = np.nonzero(result.mask == 0)
            proj = np.array(
                [g.project_point(camera, pose, c) for c in inst.world_vertices()]
            )
            hull = Delaunay(proj)
            centers = np.column_stack([xs + 0.5, ys + 0.5])
            inside = hull.find_simplex(centers) >= 0
            # dilate by 1 px: points not inside must be within 1px of the hull
            if not inside.all():
                for pt in centers[~inside]:
                    dists = np.linalg.norm(proj - pt, axis=1)
                    shifted = [
                        hull.find_simplex(pt + d) >= 0
                        for d in np.array(
                            [[1, 0], [-1, 0], [0, 1], [0, -1], [1, 1], [-1, -1], [1, -1], [-1, 1]]
                        )
                    ]
                    assert any(shifted) or dists.min() <= 1.5

    def test_behind_camera_skipped(self, camera, cube_mesh):
        pose = look_at_pose([0, -15, 6])
        behind = cube_instance(cube_mesh, 0, (0, -40))
        bg = np.zeros((camera.height, camera.width, 3), dtype=np.uint8)
        result = render.render_scene(bg, [behind], camera, pose)
        assert (result.mask == -1).all()

    def test_shading_responds_to_sun(self, camera, cube_mesh):
        pose = look_at_pose([0, -15, 6])
        inst = cube_instance(cube_mesh)
        bg = np.zeros((camera.height, camera.width, 3), dtype=np.uint8)
        lit = render.render_scene(
            bg, [inst], camera, pose, lighting={"sun_dir": (0, 0, 1), "ambient": 0.2}
        )
        dark = render.render_scene(
            bg, [inst], camera, pose, lighting={"sun_dir": (0, 0, 1), "ambient": 1.0}
        )
        vis = lit.mask == 0
        assert lit.image[vis].max() > 0
        assert not np.array_equal(lit.image[vis], dark.image[vis])
