"""Lane geometry: polylines, Frenet projection, segment intersection, lane files."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Optional, Sequence

import numpy as np

from . import kernels

MAINLINE = "mainline"
ON_RAMP = "on-ramp"
LANE_KINDS = (MAINLINE, ON_RAMP)
MIN_SEGMENT = 1e-9  # m


class LaneFileError(ValueError):
    """Lane geometry file is missing, malformed or inconsistent."""


class FrenetPosition(NamedTuple):
    s: float
    d: float
    extrapolated: bool = False


class Intersection(NamedTuple):
    point: tuple[float, float]
    u: float
    v: float
    degenerate: bool = False


class Polyline:
    """Immutable 2-D polyline with cumulative arc length.

    ``vertices`` is an (n, 2) array in meters; at least two vertices and no
    segment shorter than :data:`MIN_SEGMENT` (numerically zero-length).
    """

    __slots__ = ("vertices", "cum_s")

    def __init__(self, vertices):
        verts = np.array(vertices, dtype=np.float64)
        if verts.ndim != 2 or verts.shape[1] != 2 or len(verts) < 2:
            raise ValueError("polyline needs >= 2 vertices of shape (n, 2)")
        if not np.all(np.isfinite(verts)):
            raise ValueError("polyline vertices must be finite")
        seg = np.hypot(*np.diff(verts, axis=0).T)
        if np.any(seg < MIN_SEGMENT):
            raise ValueError("polyline has repeated consecutive vertices")
        verts.setflags(write=False)
        cum = np.concatenate(([0.0], np.cumsum(seg)))
        cum.setflags(write=False)
        self.vertices = verts
        self.cum_s = cum

    @property
    def length(self) -> float:
        return float(self.cum_s[-1])

    def __len__(self) -> int:
        return len(self.vertices)

    def __repr__(self) -> str:
        return f"Polyline(n={len(self)}, length={self.length:.3f})"

    def project_many(self, points) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Vectorized :func:`project`; returns arrays ``(s, d, extrapolated)``."""
        s, d, flag = kernels.project_points(points, self.vertices, self.cum_s)
        return s, d, flag.astype(bool)

    def point_at(self, s: float) -> tuple[float, float]:
        """Point at arc length ``s``; linear extrapolation outside [0, length]."""
        cum = self.cum_s
        i = int(np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(cum) - 2))
        a, b = self.vertices[i], self.vertices[i + 1]
        t = (s - cum[i]) / (cum[i + 1] - cum[i])
        p = a + t * (b - a)
        return float(p[0]), float(p[1])

    def to_list(self) -> list[list[float]]:
        return self.vertices.tolist()


def project(point: Sequence[float], line: Polyline) -> FrenetPosition:
    """Closest-point arc length and signed offset (positive left of travel)."""
    s, d, flag = line.project_many(np.asarray(point, dtype=np.float64).reshape(1, 2))
    return FrenetPosition(float(s[0]), float(d[0]), bool(flag[0]))


def segment_intersection(a1, a2, b1, b2) -> Optional[Intersection]:
    """Intersection of closed segments [a1, a2] and [b1, b2].

    ``u`` and ``v`` are the interpolation parameters along the first and the
    second segment. Collinear overlaps return the overlap midpoint with
    ``degenerate=True``. Returns None when the segments do not meet.
    """
    a1x, a1y = float(a1[0]), float(a1[1])
    a2x, a2y = float(a2[0]), float(a2[1])
    b1x, b1y = float(b1[0]), float(b1[1])
    b2x, b2y = float(b2[0]), float(b2[1])
    a_point = a1x == a2x and a1y == a2y
    b_point = b1x == b2x and b1y == b2y
    if a_point or b_point:
        # zero-length segments: point-on-segment test
        if a_point and b_point:
            if (a1x, a1y) == (b1x, b1y):
                return Intersection((a1x, a1y), 0.0, 0.0, True)
            return None
        if a_point:
            v = _point_on_segment(a1x, a1y, b1x, b1y, b2x, b2y)
            return None if v is None else Intersection((a1x, a1y), 0.0, v, True)
        u = _point_on_segment(b1x, b1y, a1x, a1y, a2x, a2y)
        return None if u is None else Intersection((b1x, b1y), u, 0.0, True)
    hit = kernels._pure._seg_intersect(a1x, a1y, a2x, a2y, b1x, b1y, b2x, b2y)
    if hit is None:
        return None
    u, v, degenerate = hit
    point = (a1x + u * (a2x - a1x), a1y + u * (a2y - a1y))
    return Intersection(point, u, v, degenerate)


def _point_on_segment(px, py, ax, ay, bx, by) -> Optional[float]:
    rx, ry = bx - ax, by - ay
    if (px - ax) * ry - (py - ay) * rx != 0.0:
        return None
    t = ((px - ax) * rx + (py - ay) * ry) / (rx * rx + ry * ry)
    return t if 0.0 <= t <= 1.0 else None


@dataclass(frozen=True)
class Lane:
    id: str
    kind: str
    left_border: Polyline
    right_border: Polyline
    centerline: Polyline


@dataclass(frozen=True)
class LaneModel:
    """Road section with exactly one on-ramp (acceleration) lane.

    ``merge_start_s`` is the arc length of the start line on the on-ramp
    left border, ``merge_ref_length`` the arc length from there to the end of
    the acceleration lane.
    """

    lanes: tuple[Lane, ...]
    merge_start_s: float
    merge_ref_length: float
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ids = [lane.id for lane in self.lanes]
        if len(set(ids)) != len(ids):
            raise LaneFileError("duplicate lane ids")
        ramps = [lane for lane in self.lanes if lane.kind == ON_RAMP]
        if len(ramps) != 1:
            raise LaneFileError(f"expected exactly one on-ramp lane, got {len(ramps)}")
        if not any(lane.kind == MAINLINE for lane in self.lanes):
            raise LaneFileError("at least one mainline lane required")
        for lane in self.lanes:
            if lane.kind not in LANE_KINDS:
                raise LaneFileError(f"lane {lane.id!r}: unknown kind {lane.kind!r}")
        if not 0.0 <= self.merge_start_s < ramps[0].left_border.length:
            raise LaneFileError("merge_start_s must lie on the on-ramp left border")
        if not self.merge_ref_length > 0.0:
            raise LaneFileError("merge_ref_length must be positive")
        object.__setattr__(self, "_index", {lane.id: lane for lane in self.lanes})

    def __getitem__(self, lane_id: str) -> Lane:
        return self._index[lane_id]

    def __contains__(self, lane_id) -> bool:
        return lane_id in self._index

    @property
    def on_ramp(self) -> Lane:
        return next(lane for lane in self.lanes if lane.kind == ON_RAMP)

    @property
    def mainline_ids(self) -> list[str]:
        return [lane.id for lane in self.lanes if lane.kind == MAINLINE]

    def lane_width_at(self, lane_id: str, points) -> np.ndarray:
        """Local lane width (m) at the lateral cut through each point."""
        lane = self[lane_id]
        _, dl, _ = lane.left_border.project_many(points)
        _, dr, _ = lane.right_border.project_many(points)
        return dr - dl

    def to_dict(self) -> dict:
        return {
            "lanes": [
                {
                    "id": lane.id,
                    "kind": lane.kind,
                    "left_border": lane.left_border.to_list(),
                    "right_border": lane.right_border.to_list(),
                    "centerline": lane.centerline.to_list(),
                }
                for lane in self.lanes
            ],
            "merge_start_s": self.merge_start_s,
            "merge_ref_length": self.merge_ref_length,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LaneModel":
        try:
            lanes = tuple(
                Lane(
                    id=str(item["id"]),
                    kind=str(item["kind"]),
                    left_border=Polyline(item["left_border"]),
                    right_border=Polyline(item["right_border"]),
                    centerline=Polyline(item["centerline"]),
                )
                for item in data["lanes"]
            )
            return cls(lanes, float(data["merge_start_s"]), float(data["merge_ref_length"]))
        except LaneFileError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise LaneFileError(f"invalid lane geometry: {exc}") from exc


def load_lanes(path) -> LaneModel:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise LaneFileError(f"lane file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise LaneFileError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise LaneFileError(f"{path}: top level must be an object")
    return LaneModel.from_dict(data)


def save_lanes(lanes: LaneModel, path) -> None:
    Path(path).write_text(json.dumps(lanes.to_dict(), indent=1) + "\n", encoding="utf-8")


def normalized_maneuver_position(point, lanes: LaneModel) -> float:
    """Position along the acceleration lane: 0 at the start line, 1 at its end.

    Values above 1 mean the point lies beyond the end of the lane.
    """
    return float(normalized_positions(np.asarray(point, dtype=np.float64).reshape(1, 2), lanes)[0])


def normalized_positions(points, lanes: LaneModel) -> np.ndarray:
    s, _, _ = lanes.on_ramp.left_border.project_many(points)
    return (s - lanes.merge_start_s) / lanes.merge_ref_length


def straight_polyline(x0: float, x1: float, y: float, step: float = 25.0) -> Polyline:
    """Straight polyline along +x at height y with vertices roughly every ``step`` m."""
    n = max(1, int(math.ceil((x1 - x0) / step)))
    xs = np.linspace(x0, x1, n + 1)
    return Polyline(np.column_stack([xs, np.full_like(xs, y)]))
