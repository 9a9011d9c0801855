"""Pinhole camera model, landmark-based pose estimation, and ground-plane homographies.

World coordinates are local East-North-Up meters anchored at a reference
latitude/longitude. All rotations are world->camera.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import (
    DegenerateConfiguration,
    NoConvergence,
    PointAtInfinity,
    PointBehindCamera,
    SchemaError,
)

MIN_DEPTH = 1e-9
EARTH_RADIUS_M = 6378137.0


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 < self.cx < self.width and 0 < self.cy < self.height):
            raise ValueError("principal point must lie inside the image")

    @property
    def matrix(self) -> np.ndarray:
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]]
        )


@dataclass(frozen=True)
class CameraPose:
    rotation: np.ndarray  # 3x3, world -> camera
    translation: np.ndarray  # 3, meters, camera frame

    def __post_init__(self):
        R = np.asarray(self.rotation, dtype=float)
        T = np.asarray(self.translation, dtype=float).reshape(3)
        if R.shape != (3, 3):
            raise ValueError("rotation must be 3x3")
        if not np.allclose(R.T @ R, np.eye(3), atol=1e-9):
            raise ValueError("rotation is not orthonormal")
        if abs(np.linalg.det(R) - 1.0) > 1e-9:
            raise ValueError("rotation determinant must be +1")
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", T)

    @property
    def camera_center(self) -> np.ndarray:
        """Camera position in world coordinates."""
        return -self.rotation.T @ self.translation


@dataclass(frozen=True)
class LandmarkCorrespondence:
    name: str
    world: np.ndarray  # 3, meters ENU
    pixel: np.ndarray  # 2, (u, v)

    def __post_init__(self):
        w = np.asarray(self.world, dtype=float).reshape(3)
        p = np.asarray(self.pixel, dtype=float).reshape(2)
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(p))):
            raise ValueError("landmark coordinates must be finite")
        object.__setattr__(self, "world", w)
        object.__setattr__(self, "pixel", p)


@dataclass(frozen=True)
class Homography:
    """3x3 projective map, stored with unit Frobenius norm and H[2,2] >= 0."""

    matrix: np.ndarray

    def __post_init__(self):
        H = np.asarray(self.matrix, dtype=float).reshape(3, 3)
        H = H / np.linalg.norm(H)
        if H[2, 2] < 0:
            H = -H
        if abs(np.linalg.det(H)) <= 1e-12:
            raise DegenerateConfiguration("homography is singular")
        object.__setattr__(self, "matrix", H)

    def inverse(self) -> "Homography":
        return Homography(np.linalg.inv(self.matrix))


@dataclass(frozen=True)
class PoseSolution:
    pose: CameraPose
    per_landmark_error: list = field(default_factory=list)
    rms_error: float = 0.0


def enu_from_latlon(lat, lon, alt, ref_lat, ref_lon):
    """Equirectangular local approximation, adequate at intersection scale."""
    x = math.radians(lon - ref_lon) * math.cos(math.radians(ref_lat)) * EARTH_RADIUS_M
    y = math.radians(lat - ref_lat) * EARTH_RADIUS_M
    return np.array([x, y, float(alt)])


def project_point(K: CameraIntrinsics, pose: CameraPose, X) -> np.ndarray:
    """Project a world point to pixel coordinates; raises PointBehindCamera."""
    Xc = pose.rotation @ np.asarray(X, dtype=float).reshape(3) + pose.translation
    if Xc[2] <= MIN_DEPTH:
        raise PointBehindCamera(f"depth {Xc[2]:.3g} m")
    uvw = K.matrix @ Xc
    return uvw[:2] / uvw[2]


def _project_many(K, R, T, pts):
    """Vectorized projection with depth clamped away from zero (solver internal)."""
    cam = pts @ R.T + T
    z = np.maximum(cam[:, 2], MIN_DEPTH)
    u = K.fx * cam[:, 0] / z + K.cx
    v = K.fy * cam[:, 1] / z + K.cy
    return np.column_stack([u, v])


def _normalization_transform(pts):
    """Hartley normalization: zero centroid, mean distance sqrt(dim)."""
    pts = np.asarray(pts, dtype=float)
    centroid = pts.mean(axis=0)
    dists = np.linalg.norm(pts - centroid, axis=1)
    mean_dist = dists.mean()
    if mean_dist < 1e-12:
        raise DegenerateConfiguration("all points coincide")
    s = math.sqrt(pts.shape[1]) / mean_dist
    dim = pts.shape[1]
    T = np.eye(dim + 1)
    T[:dim, :dim] *= s
    T[:dim, dim] = -s * centroid
    return T


def _any_three_collinear(pts, tol=1e-9):
    pts = np.asarray(pts, dtype=float)
    n = len(pts)
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                a = pts[j] - pts[i]
                b = pts[k] - pts[i]
                na, nb = np.linalg.norm(a), np.linalg.norm(b)
                if na < 1e-12 or nb < 1e-12:
                    return True
                if pts.shape[1] == 2:
                    cross = abs(a[0] * b[1] - a[1] * b[0])
                else:
                    cross = np.linalg.norm(np.cross(a, b))
                if cross / (na * nb) < tol:
                    return True
    return False


def _dlt_homography(src, dst):
    """Normalized DLT homography mapping src (Nx2) to dst (Nx2)."""
    src = np.asarray(src, dtype=float)
    dst = np.asarray(dst, dtype=float)
    Ts = _normalization_transform(src)
    Td = _normalization_transform(dst)
    sh = np.column_stack([src, np.ones(len(src))]) @ Ts.T
    dh = np.column_stack([dst, np.ones(len(dst))]) @ Td.T
    rows = []
    for (x, y, _), (xp, yp, _) in zip(sh, dh):
        rows.append([0, 0, 0, -x, -y, -1, yp * x, yp * y, yp])
        rows.append([x, y, 1, 0, 0, 0, -xp * x, -xp * y, -xp])
    A = np.asarray(rows)
    _, s, Vt = np.linalg.svd(A)
    if s[-2] < 1e-12 * s[0]:
        raise DegenerateConfiguration("homography system is rank deficient")
    Hn = Vt[-1].reshape(3, 3)
    return np.linalg.inv(Td) @ Hn @ Ts


def estimate_homography(pixel_points, ground_points) -> Homography:
    """Least-squares homography mapping image pixels to ground-plane meters."""
    pixel_points = np.asarray(pixel_points, dtype=float)
    ground_points = np.asarray(ground_points, dtype=float)
    if len(pixel_points) != len(ground_points):
        raise DegenerateConfiguration("point counts differ")
    if len(pixel_points) < 4:
        raise DegenerateConfiguration("need >=4 correspondences")
    if _any_three_collinear(pixel_points) or _any_three_collinear(ground_points):
        raise DegenerateConfiguration("three or more points are collinear")
    return Homography(_dlt_homography(pixel_points, ground_points))


def image_to_ground(H: Homography, pixel) -> np.ndarray:
    u, v = np.asarray(pixel, dtype=float).reshape(2)
    x, y, w = H.matrix @ np.array([u, v, 1.0])
    if abs(w) <= 1e-12:
        raise PointAtInfinity(f"pixel ({u}, {v}) maps to infinity")
    return np.array([x / w, y / w])


def pose_to_ground_homography(K: CameraIntrinsics, pose: CameraPose) -> Homography:
    """Closed-form image->ground homography for the z=0 plane."""
    R, T = pose.rotation, pose.translation
    A = K.matrix @ np.column_stack([R[:, 0], R[:, 1], T])
    if abs(np.linalg.det(A)) <= 1e-12 * np.linalg.norm(A) ** 3:
        raise DegenerateConfiguration("camera center lies in the ground plane")
    return Homography(np.linalg.inv(A))


def _orthonormalize(M):
    U, _, Vt = np.linalg.svd(M)
    D = np.diag([1.0, 1.0, np.linalg.det(U @ Vt)])
    return U @ D @ Vt


def _pose_from_planar(K, world, pixels):
    """Initial pose from the plane-induced homography (near-coplanar points)."""
    centroid = world.mean(axis=0)
    centered = world - centroid
    _, _, Vt = np.linalg.svd(centered)
    E = Vt.T  # columns: in-plane e1, e2, normal e3
    if np.linalg.det(E) < 0:
        E[:, 2] = -E[:, 2]
    plane_coords = centered @ E[:, :2]
    Hpw = _dlt_homography(plane_coords, pixels)  # plane (a,b) -> pixel
    M = np.linalg.inv(K.matrix) @ Hpw
    lam = 2.0 / (np.linalg.norm(M[:, 0]) + np.linalg.norm(M[:, 1]))
    # choose sign so the landmark centroid ends up in front of the camera
    t = lam * M[:, 2]
    if t[2] < 0:
        lam, t = -lam, -t
    r1, r2 = lam * M[:, 0], lam * M[:, 1]
    Rp = _orthonormalize(np.column_stack([r1, r2, np.cross(r1, r2)]))
    R = Rp @ E.T
    T = t - R @ centroid
    return R, T


def _pose_from_dlt(K, world, pixels):
    """Initial pose from a normalized DLT estimate of the full projection matrix."""
    Tw = _normalization_transform(world)
    Tp = _normalization_transform(pixels)
    wh = np.column_stack([world, np.ones(len(world))]) @ Tw.T
    ph = np.column_stack([pixels, np.ones(len(pixels))]) @ Tp.T
    rows = []
    for X, (u, v, _) in zip(wh, ph):
        rows.append(np.concatenate([np.zeros(4), -X, v * X]))
        rows.append(np.concatenate([X, np.zeros(4), -u * X]))
    A = np.asarray(rows)
    _, s, Vt = np.linalg.svd(A)
    if s[-2] < 1e-10 * s[0]:
        raise DegenerateConfiguration("projection system is rank deficient")
    P = np.linalg.inv(Tp) @ Vt[-1].reshape(3, 4) @ Tw
    B = np.linalg.inv(K.matrix) @ P
    if np.linalg.det(B[:, :3]) < 0:
        B = -B
    scale = np.linalg.det(B[:, :3]) ** (1.0 / 3.0)
    if scale < 1e-12:
        raise DegenerateConfiguration("degenerate projection matrix")
    R = _orthonormalize(B[:, :3] / scale)
    T = B[:, 3] / scale
    return R, T


def _refine_pose(K, world, pixels, R0, T0, max_iter=100, step_tol=1e-10):
    """Damped (Levenberg-Marquardt) least squares over axis-angle + translation."""

    def residuals(params):
        R = Rotation.from_rotvec(params[:3]).as_matrix()
        return (_project_many(K, R, params[3:], world) - pixels).ravel()

    params = np.concatenate([Rotation.from_matrix(R0).as_rotvec(), T0])
    cost = float(np.sum(residuals(params) ** 2))
    lam = 1e-3
    converged = False
    h = 1e-7
    for _ in range(max_iter):
        r = residuals(params)
        J = np.empty((len(r), 6))
        for j in range(6):
            dp = np.zeros(6)
            dp[j] = h
            J[:, j] = (residuals(params + dp) - residuals(params - dp)) / (2 * h)
        g = J.T @ r
        A = J.T @ J
        step = None
        while lam < 1e14:
            try:
                cand = np.linalg.solve(A + lam * np.eye(6), -g)
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            new_cost = float(np.sum(residuals(params + cand) ** 2))
            if new_cost < cost:
                params = params + cand
                cost = new_cost
                lam = max(lam * 0.1, 1e-12)
                step = cand
                break
            lam *= 10
        if step is None or np.linalg.norm(step) < step_tol:
            converged = True
            break
    R = Rotation.from_rotvec(params[:3]).as_matrix()
    return R, params[3:], math.sqrt(cost / len(world)), converged


def solve_pnp(K: CameraIntrinsics, corrs, max_rms: float = 2.0, max_iter: int = 100) -> PoseSolution:
    """Estimate camera pose from world/pixel landmark correspondences.

    Near-coplanar landmark sets (the usual ground-landmark case) are
    initialized from a homography decomposition; general sets need >=6
    points and use a DLT estimate of the projection matrix. Both are
    refined by damped nonlinear least squares.
    """
    corrs = list(corrs)
    if len(corrs) < 4:
        raise DegenerateConfiguration(f"need >=4 correspondences, got {len(corrs)}")
    world = np.array([c.world for c in corrs], dtype=float)
    pixels = np.array([c.pixel for c in corrs], dtype=float)
    centered = world - world.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    if sv[0] < 1e-12 or sv[1] < 1e-6 * sv[0]:
        raise DegenerateConfiguration("world landmarks are collinear")
    planar = sv[2] < 1e-6 * sv[0]
    if planar:
        R0, T0 = _pose_from_planar(K, world, pixels)
    else:
        if len(corrs) < 6:
            raise DegenerateConfiguration(
                "non-planar landmark sets need >=6 correspondences"
            )
        R0, T0 = _pose_from_dlt(K, world, pixels)
    R, T, rms, converged = _refine_pose(K, world, pixels, R0, T0, max_iter=max_iter)
    if not converged and rms > max_rms:
        raise NoConvergence(f"rms {rms:.3g} px after {max_iter} iterations")
    pose = CameraPose(R, T)
    return reprojection_report(K, pose, corrs)


def reprojection_report(K: CameraIntrinsics, pose: CameraPose, corrs) -> PoseSolution:
    """Per-landmark pixel error and RMS; behind-camera landmarks get inf."""
    errors = []
    for c in corrs:
        try:
            err = float(np.linalg.norm(project_point(K, pose, c.world) - c.pixel))
        except PointBehindCamera:
            err = math.inf
        errors.append(err)
    finite = [e for e in errors if math.isfinite(e)]
    rms = math.sqrt(sum(e * e for e in finite) / len(finite)) if finite else math.inf
    return PoseSolution(pose=pose, per_landmark_error=errors, rms_error=rms)


# --- file formats ---


def load_landmarks(path):
    """Read a landmark JSON file; returns (reference dict, correspondences)."""
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    if "landmarks" not in doc:
        raise SchemaError("missing 'landmarks'", "/landmarks")
    ref = doc.get("reference")
    corrs = []
    for i, lm in enumerate(doc["landmarks"]):
        ptr = f"/landmarks/{i}"
        try:
            w = lm["world"]
            if isinstance(w, dict):
                if ref is None:
                    raise SchemaError("lat/lon landmark needs a reference", ptr)
                world = enu_from_latlon(
                    w["lat"], w["lon"], w.get("alt", 0.0), ref["lat"], ref["lon"]
                )
            else:
                world = np.asarray(w, dtype=float)
            corrs.append(
                LandmarkCorrespondence(
                    name=str(lm.get("name", f"P{i + 1}")),
                    world=world,
                    pixel=np.asarray(lm["pixel"], dtype=float),
                )
            )
        except (KeyError, TypeError, ValueError) as e:
            raise SchemaError(str(e), ptr) from e
    return ref, corrs


def save_pose(solution: PoseSolution, path):
    doc = {
        "R": [[float(v) for v in row] for row in solution.pose.rotation],
        "T": [float(v) for v in solution.pose.translation],
        "rms_error": float(solution.rms_error),
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")


def load_pose(path) -> CameraPose:
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    try:
        return CameraPose(np.asarray(doc["R"], dtype=float), np.asarray(doc["T"], dtype=float))
    except (KeyError, ValueError) as e:
        raise SchemaError(str(e)) from e
