"""Post-encroachment time between a merging vehicle and mainline challengers.

The conflict area is spanned by the crossings of the ego's left corner
paths (front-left, rear-left) with the challenger's right corner paths
(front-right, rear-right). Every crossing yields an arrival-time
difference ``dt = t_ego - t_challenger``; PET is the one of minimum
magnitude, so PET > 0 means the ego arrived after the challenger.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional

import numpy as np

from . import kernels
from .geometry import LaneModel
from .ingest import Trajectory

log = logging.getLogger(__name__)

DEFAULT_VICINITY_M = 100.0
LEFT, RIGHT = "left", "right"


@dataclass
class CornerTrack:
    object_id: str
    side: str
    t: np.ndarray
    front: np.ndarray  # (n, 2)
    rear: np.ndarray  # (n, 2)


class Crossing(NamedTuple):
    point: tuple[float, float]
    t_ego: float
    t_challenger: float
    ego_corner: str
    challenger_corner: str

    @property
    def dt(self) -> float:
        return self.t_ego - self.t_challenger


@dataclass
class PetResult:
    challenger_id: str
    intersections: list = field(default_factory=list)
    pet: Optional[float] = None
    degenerate: bool = True
    overlap_warning: bool = False

    @property
    def n_intersections(self) -> int:
        return len(self.intersections)

    def to_dict(self) -> dict:
        return {
            "challenger_id": self.challenger_id,
            "pet_s": self.pet,
            "n_intersections": self.n_intersections,
            "degenerate": self.degenerate,
            "overlap_warning": self.overlap_warning,
            "intersections": [
                {"x": c.point[0], "y": c.point[1], "t_ego_s": c.t_ego,
                 "t_challenger_s": c.t_challenger, "dt_s": c.dt,
                 "ego_corner": c.ego_corner, "challenger_corner": c.challenger_corner}
                for c in self.intersections
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PetResult":
        pts = [Crossing((p["x"], p["y"]), p["t_ego_s"], p["t_challenger_s"], p["ego_corner"],
                        p["challenger_corner"])
               for p in d.get("intersections", [])]
        return cls(d["challenger_id"], pts, d["pet_s"], d["degenerate"], d.get("overlap_warning", False))


def corner_tracks(traj: Trajectory, side: str, start: int = 0, stop: Optional[int] = None) -> CornerTrack:
    """Front and rear corner paths on one side of the vehicle."""
    if side not in (LEFT, RIGHT):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    sl = slice(start, stop)
    x, y, h = traj.x[sl], traj.y[sl], traj.heading[sl]
    half_l = 0.5 * traj.length[sl]
    half_w = (0.5 if side == LEFT else -0.5) * traj.width[sl]
    c, s = np.cos(h), np.sin(h)
    lx, ly = -s * half_w, c * half_w  # lateral offset, left normal times signed half width
    front = np.column_stack([x + c * half_l + lx, y + s * half_l + ly])
    rear = np.column_stack([x - c * half_l + lx, y - s * half_l + ly])
    return CornerTrack(traj.object_id, side, np.asarray(traj.t[sl], dtype=np.float64), front, rear)


def _clip_to_box(path: np.ndarray, box, margin: float) -> tuple[int, int]:
    """Index range of ``path`` vertices whose segments can touch ``box``."""
    (x0, y0), (x1, y1) = box
    a, b = path[:-1], path[1:]
    hit = ((np.maximum(a[:, 0], b[:, 0]) >= x0 - margin) & (np.minimum(a[:, 0], b[:, 0]) <= x1 + margin)
           & (np.maximum(a[:, 1], b[:, 1]) >= y0 - margin) & (np.minimum(a[:, 1], b[:, 1]) <= y1 + margin))
    idx = np.nonzero(hit)[0]
    if len(idx) == 0:
        return 0, 0
    return int(idx[0]), int(idx[-1]) + 2


def find_intersections(ego: CornerTrack, ch: CornerTrack) -> list[Crossing]:
    """First crossing for each ego-corner x challenger-corner path pair."""
    out = []
    for e_name, e_path in (("front_left", ego.front), ("rear_left", ego.rear)):
        if len(e_path) < 2:
            continue
        box = (e_path.min(axis=0), e_path.max(axis=0))
        for c_name, c_path in (("front_right", ch.front), ("rear_right", ch.rear)):
            a, b = _clip_to_box(c_path, box, 1e-9)
            if b - a < 2:
                continue
            i, j, u, v, _ = kernels.first_crossing(e_path, c_path[a:b])
            if i < 0:
                continue
            j += a
            p = e_path[i] + u * (e_path[i + 1] - e_path[i])
            t_e = ego.t[i] + u * (ego.t[i + 1] - ego.t[i])
            t_c = ch.t[j] + v * (ch.t[j + 1] - ch.t[j])
            out.append(Crossing((float(p[0]), float(p[1])), float(t_e), float(t_c), e_name, c_name))
    return out


def pet_from_crossings(challenger_id: str, crossings: list[Crossing]) -> PetResult:
    if not crossings:
        return PetResult(challenger_id, [], None, True)
    dts = [c.dt for c in crossings]
    best = min(range(len(dts)), key=lambda k: (abs(dts[k]), k))
    # opposite signs among the crossings mean the two occupied the area at once
    overlap = min(dts) < 0.0 < max(dts)
    return PetResult(challenger_id, crossings, dts[best], False, overlap)


def pet(ego: Trajectory, challenger: Trajectory, window: Optional[tuple[int, int]] = None) -> PetResult:
    """PET of ``ego`` against ``challenger``; ``window`` limits the ego frames
    (inclusive index range) to the maneuver."""
    start, stop = (0, None) if window is None else (window[0], window[1] + 1)
    e = corner_tracks(ego, LEFT, start, stop)
    c = corner_tracks(challenger, RIGHT)
    res = pet_from_crossings(challenger.object_id, find_intersections(e, c))
    if res.overlap_warning:
        log.warning("%s vs %s: simultaneous occupancy of the conflict area",
                    ego.object_id, challenger.object_id)
    return res


def select_challengers(
    ego: Trajectory,
    cross_index: int,
    target_lane: Optional[str],
    trajs: Iterable[Trajectory],
    lanes: LaneModel,
    vicinity_m: float = DEFAULT_VICINITY_M,
) -> list[Trajectory]:
    """Vehicles on the target lane within +-vicinity_m of the ego at Cross entry.

    The gap is measured along the target lane's centerline.
    """
    if target_lane is None or target_lane not in lanes:
        return []
    t0 = float(ego.t[cross_index])
    center = lanes[target_lane].centerline
    s_ego = center.project_many(ego.xy[cross_index:cross_index + 1])[0][0]
    out = []
    for tr in trajs:
        if tr.object_id == ego.object_id:
            continue
        k = tr.index_at(t0)
        if k is None or tr.lane_id[k] != target_lane:
            continue
        s = center.project_many(tr.xy[k:k + 1])[0][0]
        if abs(s - s_ego) <= vicinity_m:
            out.append(tr)
    return out
