"""HTTP facade over the geometry module for the interactive calibration UI.

Stateless JSON-over-HTTP: every response is a pure function of the request.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import __version__
from .errors import DegenerateConfiguration, NoConvergence
from .geometry import (
    CameraIntrinsics,
    LandmarkCorrespondence,
    enu_from_latlon,
    estimate_homography,
    solve_pnp,
)

CALIB_SCHEMA = "roadforge-calib/1"


class IntrinsicsBody(BaseModel):
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int


class LatLon(BaseModel):
    lat: float
    lon: float
    alt: float = 0.0


class CorrespondenceBody(BaseModel):
    name: str = ""
    pixel: list[float]
    world: list[float] | None = None
    latlon: LatLon | None = None


class SolveBody(BaseModel):
    intrinsics: IntrinsicsBody
    reference: LatLon | None = None
    correspondences: list[CorrespondenceBody]


class HomographyPair(BaseModel):
    pixel: list[float]
    ground: list[float]


class HomographyBody(BaseModel):
    pairs: list[HomographyPair]


def _error(status, code, message, detail=None):
    body = {"code": code, "message": message}
    if detail is not None:
        body["detail"] = detail
    return JSONResponse(status_code=status, content=body)


def create_app(ui_dir=None) -> FastAPI:
    app = FastAPI(title="roadforge calibration service")
    app.add_middleware(
        CORSMiddleware,
        allow_origin_regex=r"https?://(localhost|127\.0\.0\.1)(:\d+)?",
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError):
        return _error(400, "malformed", "request body failed validation",
                      detail=str(exc.errors()[:3]))

    @app.get("/api/health")
    async def health():
        return {"version": __version__, "schema": CALIB_SCHEMA}

    @app.post("/api/solve")
    async def solve(body: SolveBody):
        try:
            K = CameraIntrinsics(**body.intrinsics.model_dump())
        except ValueError as e:
            return _error(422, "bad_intrinsics", str(e))
        corrs = []
        for i, c in enumerate(body.correspondences):
            if c.world is not None:
                world = np.asarray(c.world, dtype=float)
            elif c.latlon is not None:
                if body.reference is None:
                    return _error(422, "missing_reference",
                                  f"correspondence {i} uses lat/lon but no reference given")
                world = enu_from_latlon(
                    c.latlon.lat, c.latlon.lon, c.latlon.alt,
                    body.reference.lat, body.reference.lon,
                )
            else:
                return _error(422, "missing_world",
                              f"correspondence {i} has neither world nor latlon")
            corrs.append(
                LandmarkCorrespondence(name=c.name or f"P{i + 1}", world=world,
                                       pixel=np.asarray(c.pixel, dtype=float))
            )
        try:
            sol = solve_pnp(K, corrs)
        except DegenerateConfiguration as e:
            return _error(422, "degenerate", str(e))
        except NoConvergence as e:
            return _error(422, "no_convergence", str(e))
        return {
            "pose": {
                "R": [[float(v) for v in row] for row in sol.pose.rotation],
                "T": [float(v) for v in sol.pose.translation],
            },
            "errors": [float(e) if np.isfinite(e) else None
                       for e in sol.per_landmark_error],
            "rms": float(sol.rms_error),
        }

    @app.post("/api/homography")
    async def homography(body: HomographyBody):
        try:
            H = estimate_homography(
                [p.pixel for p in body.pairs], [p.ground for p in body.pairs]
            )
        except DegenerateConfiguration as e:
            return _error(422, "degenerate", str(e))
        return {"H": [[float(v) for v in row] for row in H.matrix]}

    if ui_dir is not None:
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    return app
