"""Microscopic traffic simulation on an intersection lane network.

A seeded Poisson arrival process feeds vehicles onto routes; they advance
along lane centerlines under Intelligent Driver Model car following, then a
domain randomization step perturbs positions and headings, and a greedy
separating-axis filter removes physically impossible overlaps.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidNetwork, SchemaError

# IDM parameters (time headway s, min gap m, accel/decel m/s^2, exponent)
IDM_TIME_HEADWAY = 1.5
IDM_MIN_GAP = 2.0
IDM_MAX_ACCEL = 1.5
IDM_COMFORT_DECEL = 2.0
IDM_DELTA = 4.0
DT = 0.5


@dataclass(frozen=True)
class Lane:
    id: str
    centerline: np.ndarray  # Nx2 ENU meters
    width: float
    speed_limit: float

    def __post_init__(self):
        pts = np.asarray(self.centerline, dtype=float).reshape(-1, 2)
        if len(pts) < 2:
            raise InvalidNetwork(f"lane {self.id}: centerline needs >=2 points")
        if not (2.5 <= self.width <= 5.0):
            raise InvalidNetwork(f"lane {self.id}: width {self.width} outside [2.5, 5]")
        object.__setattr__(self, "centerline", pts)

    @property
    def length(self) -> float:
        return float(np.sum(np.linalg.norm(np.diff(self.centerline, axis=0), axis=1)))


@dataclass(frozen=True)
class Route:
    id: str
    lane_ids: tuple


@dataclass(frozen=True)
class LaneNetwork:
    lanes: dict  # id -> Lane
    routes: dict  # id -> Route

    def __post_init__(self):
        for route in self.routes.values():
            prev = None
            for lid in route.lane_ids:
                lane = self.lanes.get(lid)
                if lane is None:
                    raise InvalidNetwork(f"route {route.id}: unknown lane {lid}")
                if prev is not None:
                    gap = np.linalg.norm(prev.centerline[-1] - lane.centerline[0])
                    if gap > 0.5:
                        raise InvalidNetwork(
                            f"route {route.id}: lanes {prev.id} -> {lid} disconnected by {gap:.2f} m"
                        )
                prev = lane


@dataclass(frozen=True)
class VehicleState:
    id: int
    position: np.ndarray  # ENU 2-vector, z=0
    heading: float  # rad CCW from east, in [-pi, pi)
    route_id: str
    model_id: str
    length: float
    width: float

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float).reshape(2))
        h = (self.heading + math.pi) % (2 * math.pi) - math.pi
        object.__setattr__(self, "heading", h)

    def footprint(self) -> np.ndarray:
        """Oriented rectangle corners (4x2), CCW."""
        c, s = math.cos(self.heading), math.sin(self.heading)
        R = np.array([[c, -s], [s, c]])
        hl, hw = self.length / 2, self.width / 2
        local = np.array([[hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]])
        return local @ R.T + self.position


@dataclass(frozen=True)
class FrameScene:
    time: float
    vehicles: tuple


@dataclass(frozen=True)
class RandomizationParams:
    pos_variance: float = 0.5  # m^2, longitudinal and lateral
    heading_range: float = math.radians(5.0)  # uniform +/- offset

    def __post_init__(self):
        if self.pos_variance < 0:
            raise ValueError("pos_variance must be >= 0")
        if not (0 <= self.heading_range <= math.pi / 4):
            raise ValueError("heading_range outside [0, pi/4]")


class _RoutePath:
    """Arc-length parameterized concatenation of a route's lane centerlines."""

    def __init__(self, net: LaneNetwork, route: Route):
        self.lane_offsets = []  # (start_s, lane)
        pts = []
        s = 0.0
        for lid in route.lane_ids:
            lane = net.lanes[lid]
            self.lane_offsets.append((s, lane))
            seg = lane.centerline if not pts else lane.centerline[0:]
            pts.append(seg)
            s += lane.length
        self.points = np.vstack(pts)
        seg_vecs = np.diff(self.points, axis=0)
        seg_lens = np.linalg.norm(seg_vecs, axis=1)
        keep = seg_lens > 1e-9
        self.seg_starts = self.points[:-1][keep]
        self.seg_vecs = seg_vecs[keep]
        self.seg_lens = seg_lens[keep]
        self.cum = np.concatenate([[0.0], np.cumsum(self.seg_lens)])
        self.length = float(self.cum[-1])

    def locate(self, s):
        """Position and heading at arc length s (clamped)."""
        s = min(max(s, 0.0), self.length)
        i = min(int(np.searchsorted(self.cum, s, side="right")) - 1, len(self.seg_lens) - 1)
        t = (s - self.cum[i]) / self.seg_lens[i]
        pos = self.seg_starts[i] + t * self.seg_vecs[i]
        vec = self.seg_vecs[i]
        return pos, math.atan2(vec[1], vec[0])

    def lane_at(self, s):
        lane = self.lane_offsets[0][1]
        lane_s = s
        for start, ln in self.lane_offsets:
            if s >= start - 1e-9:
                lane = ln
                lane_s = s - start
        return lane, lane_s


class _Vehicle:
    __slots__ = ("id", "route_id", "path", "s", "v", "model_id", "length", "width")

    def __init__(self, vid, route_id, path, model_id, length, width, v0):
        self.id = vid
        self.route_id = route_id
        self.path = path
        self.s = 0.0
        self.v = v0
        self.model_id = model_id
        self.length = length
        self.width = width


def _idm_accel(v, v0, gap, dv):
    """IDM acceleration; dv = own speed minus leader speed, gap is bumper gap."""
    s_star = IDM_MIN_GAP + max(
        0.0, v * IDM_TIME_HEADWAY + v * dv / (2 * math.sqrt(IDM_MAX_ACCEL * IDM_COMFORT_DECEL))
    )
    interaction = (s_star / max(gap, 0.1)) ** 2 if gap is not None else 0.0
    return IDM_MAX_ACCEL * (1 - (v / v0) ** IDM_DELTA - interaction)


def simulate(net: LaneNetwork, flows, duration, seed, dt=DT, model_ids=("default",)):
    """Run the car-following simulation; returns a list of FrameScene at fixed dt.

    flows: mapping route id -> arrival rate (veh/s). Deterministic for a
    fixed seed.
    """
    if duration <= 0:
        raise ValueError("duration must be > 0")
    for rid, rate in flows.items():
        if rid not in net.routes:
            raise InvalidNetwork(f"flow references unknown route {rid}")
        if rate < 0:
            raise ValueError(f"route {rid}: negative arrival rate")
    rng = np.random.default_rng(seed)
    paths = {rid: _RoutePath(net, net.routes[rid]) for rid in sorted(net.routes)}

    # pre-draw Poisson arrival times per route, in sorted route order
    pending = {}
    for rid in sorted(flows):
        rate = flows[rid]
        times = []
        t = 0.0
        while rate > 0:
            t += rng.exponential(1.0 / rate)
            if t >= duration:
                break
            times.append(t)
        pending[rid] = times

    vehicles = []
    next_id = 0
    frames = []
    n_steps = int(round(duration / dt))
    for step in range(n_steps + 1):
        now = step * dt

        # spawn arrivals whose time has come and whose entry is clear
        for rid in sorted(pending):
            times = pending[rid]
            while times and times[0] <= now:
                path = paths[rid]
                entry_lane = path.lane_offsets[0][1]
                blockers = [
                    veh
                    for veh in vehicles
                    if veh.path.lane_at(veh.s)[0].id == entry_lane.id
                    and veh.s - veh.length / 2 < IDM_MIN_GAP + 8.0
                ]
                if blockers:
                    break  # entry occupied; retry next step
                times.pop(0)
                speed_limit = entry_lane.speed_limit
                vehicles.append(
                    _Vehicle(
                        next_id,
                        rid,
                        path,
                        model_id=str(rng.choice(list(model_ids))),
                        length=float(rng.uniform(4.2, 5.8)),
                        width=float(rng.uniform(1.7, 2.1)),
                        v0=0.7 * speed_limit,
                    )
                )
                next_id += 1

        # group by current lane for leader lookup
        by_lane = {}
        for veh in vehicles:
            lane, lane_s = veh.path.lane_at(veh.s)
            by_lane.setdefault(lane.id, []).append((lane_s, veh, lane))
        accel = {}
        for lane_id, group in by_lane.items():
            group.sort(key=lambda item: item[0])
            for i, (lane_s, veh, lane) in enumerate(group):
                if i + 1 < len(group):
                    lead_s, lead, _ = group[i + 1]
                    gap = lead_s - lead.length / 2 - (lane_s + veh.length / 2)
                    dv = veh.v - lead.v
                    accel[veh.id] = _idm_accel(veh.v, lane.speed_limit, gap, dv)
                else:
                    accel[veh.id] = _idm_accel(veh.v, lane.speed_limit, None, 0.0)

        # emit the frame before integrating so t=0 reflects initial states
        states = []
        for veh in sorted(vehicles, key=lambda v: v.id):
            pos, heading = veh.path.locate(veh.s)
            states.append(
                VehicleState(
                    id=veh.id,
                    position=pos,
                    heading=heading,
                    route_id=veh.route_id,
                    model_id=veh.model_id,
                    length=veh.length,
                    width=veh.width,
                )
            )
        frames.append(FrameScene(time=now, vehicles=tuple(states)))

        # semi-implicit Euler integration
        for veh in vehicles:
            veh.v = max(0.0, veh.v + accel[veh.id] * dt)
            veh.s += veh.v * dt
        vehicles = [veh for veh in vehicles if veh.s < veh.path.length]
    return frames


def randomize_poses(scene: FrameScene, p: RandomizationParams, seed) -> FrameScene:
    """Gaussian longitudinal/lateral offsets plus a uniform heading offset.

    Deterministic per (seed, vehicle id, frame time).
    """
    sigma = math.sqrt(p.pos_variance)
    out = []
    time_key = int(round(scene.time * 1000))
    for veh in scene.vehicles:
        rng = np.random.default_rng(
            np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, veh.id, time_key])
        )
        d_long, d_lat = rng.normal(0.0, sigma, size=2) if sigma > 0 else (0.0, 0.0)
        d_head = rng.uniform(-p.heading_range, p.heading_range) if p.heading_range > 0 else 0.0
        c, s = math.cos(veh.heading), math.sin(veh.heading)
        offset = np.array([d_long * c - d_lat * s, d_long * s + d_lat * c])
        out.append(
            replace(veh, position=veh.position + offset, heading=veh.heading + d_head)
        )
    return FrameScene(time=scene.time, vehicles=tuple(out))


def _rects_intersect(a: np.ndarray, b: np.ndarray) -> bool:
    """Separating-axis test for two convex quads (4x2 corner arrays)."""
    for rect in (a, b):
        for i in range(4):
            edge = rect[(i + 1) % 4] - rect[i]
            axis = np.array([-edge[1], edge[0]])
            pa = a @ axis
            pb = b @ axis
            if pa.max() < pb.min() or pb.max() < pa.min():
                return False
    return True


def collision_filter(scene: FrameScene) -> FrameScene:
    """Greedily keep vehicles in id order; drop any overlapping a kept one."""
    kept = []
    kept_rects = []
    for veh in sorted(scene.vehicles, key=lambda v: v.id):
        rect = veh.footprint()
        if any(_rects_intersect(rect, other) for other in kept_rects):
            continue
        kept.append(veh)
        kept_rects.append(rect)
    return FrameScene(time=scene.time, vehicles=tuple(kept))


# --- file formats ---


def load_network(path):
    """Read a network JSON file; returns (LaneNetwork, flows dict)."""
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    try:
        lanes = {
            l["id"]: Lane(
                id=l["id"],
                centerline=l["polyline"],
                width=l["width"],
                speed_limit=l["speed_limit"],
            )
            for l in doc["lanes"]
        }
        routes = {}
        flows = {}
        for r in doc["routes"]:
            routes[r["id"]] = Route(id=r["id"], lane_ids=tuple(r["lanes"]))
            flows[r["id"]] = float(r.get("flow_veh_per_s", 0.0))
    except (KeyError, TypeError) as e:
        raise SchemaError(str(e)) from e
    return LaneNetwork(lanes=lanes, routes=routes), flows


def scene_to_dict(scene: FrameScene) -> dict:
    return {
        "time": scene.time,
        "vehicles": [
            {
                "id": v.id,
                "position": [float(v.position[0]), float(v.position[1])],
                "heading": v.heading,
                "route_id": v.route_id,
                "model_id": v.model_id,
                "length": v.length,
                "width": v.width,
            }
            for v in scene.vehicles
        ],
    }


def write_scenes(scenes, path):
    with open(path, "w", encoding="utf-8") as f:
        for scene in scenes:
            f.write(json.dumps(scene_to_dict(scene)) + "\n")


def read_scenes(path):
    scenes = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            d = json.loads(line)
            scenes.append(
                FrameScene(
                    time=d["time"],
                    vehicles=tuple(VehicleState(**v) for v in d["vehicles"]),
                )
            )
    return scenes
