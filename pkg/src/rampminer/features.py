"""Lane-relative features for primitive decoding.

The decoder sees two values per frame: ``d_c``, the distance of the
vehicle center from the reference lane's centerline in lane widths, and
``kappa``, 1 while the vehicle footprint overlaps a lane marking.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .geometry import LaneModel
from .ingest import OFF_ROAD, Trajectory, VehicleState

SETTLE_BAND = 0.25  # lane widths from the new lane's center
SETTLE_TIME = 0.5  # s


class RawFeatures(NamedTuple):
    d_l: float
    d_r: float
    w: float


class Observation(NamedTuple):
    d_c: float
    kappa: int


@dataclass
class FeatureSeries:
    """Per-frame observations plus the geometry they were derived from.

    ``offset`` is the signed distance (m, positive left) of the center from
    the reference centerline and gives the maneuver direction. ``departed``
    marks frames where the footprint lies entirely outside the reference
    lane. ``reanchor`` is True on frames where the reference lane switches.
    """

    object_id: str
    frame: np.ndarray
    t: np.ndarray
    d_c: np.ndarray
    kappa: np.ndarray
    ref_lane: np.ndarray
    offset: np.ndarray
    lane_width: np.ndarray
    d_l: np.ndarray
    d_r: np.ndarray
    w: np.ndarray
    offroad: np.ndarray
    departed: np.ndarray
    reanchor: np.ndarray

    def __len__(self) -> int:
        return len(self.d_c)

    @property
    def observations(self) -> list[Observation]:
        return [Observation(float(a), int(b)) for a, b in zip(self.d_c, self.kappa)]

    def as_array(self) -> np.ndarray:
        return np.column_stack([self.d_c, self.kappa.astype(np.float64)])


def _lane_of(state: VehicleState, lanes: LaneModel) -> Optional[str]:
    if state.lane_id in lanes:
        return state.lane_id
    p = np.array([[state.x, state.y]])
    for lane in lanes.lanes:
        _, dl, el = lane.left_border.project_many(p)
        _, dr, er = lane.right_border.project_many(p)
        if dl[0] <= 0.0 <= dr[0] and not el[0] and not er[0]:
            return lane.id
    return None


def raw_features(state: VehicleState, lanes: LaneModel) -> Optional[RawFeatures]:
    """Distances (m) from the center to the next marking on each side, and
    the vehicle width. None when the center is outside every modeled lane.
    """
    lane_id = _lane_of(state, lanes)
    if lane_id is None:
        return None
    lane = lanes[lane_id]
    p = np.array([[state.x, state.y]])
    _, dl, _ = lane.left_border.project_many(p)
    _, dr, _ = lane.right_border.project_many(p)
    return RawFeatures(max(0.0, -float(dl[0])), max(0.0, float(dr[0])), state.width)


def transform(state: VehicleState, lanes: LaneModel, ref_lane: str) -> Observation:
    """Observation of one state measured against ``ref_lane``."""
    lane = lanes[ref_lane]
    p = np.array([[state.x, state.y]])
    _, dc, _ = lane.centerline.project_many(p)
    width = float(lanes.lane_width_at(ref_lane, p)[0])
    raw = raw_features(state, lanes)
    if raw is None:
        _, dl, _ = lane.left_border.project_many(p)
        _, dr, _ = lane.right_border.project_many(p)
        raw = RawFeatures(abs(float(dl[0])), abs(float(dr[0])), state.width)
    kappa = int(min(raw.d_l, raw.d_r) < 0.5 * raw.w)
    return Observation(abs(float(dc[0])) / width, kappa)


def reference_lane_tracking(
    traj: Trajectory,
    lanes: LaneModel,
    settle_band: float = SETTLE_BAND,
    settle_time: float = SETTLE_TIME,
) -> Optional[FeatureSeries]:
    """Observation series with a hysteretic reference lane.

    The reference starts at the first associated lane. It moves to another
    lane once the center has stayed within ``settle_band`` lane widths of
    that lane's centerline for ``settle_time`` seconds. Returns None for a
    trajectory that never touches a modeled lane.
    """
    lane_ids = np.asarray(traj.lane_id, dtype=object)
    on_road = lane_ids != OFF_ROAD
    if not on_road.any():
        return None
    pts = traj.xy
    n = len(pts)

    # per-lane geometry for every frame
    center_d, width, left_d, right_d = {}, {}, {}, {}
    for lane in lanes.lanes:
        _, center_d[lane.id], _ = lane.centerline.project_many(pts)
        _, left_d[lane.id], _ = lane.left_border.project_many(pts)
        _, right_d[lane.id], _ = lane.right_border.project_many(pts)
        width[lane.id] = right_d[lane.id] - left_d[lane.id]

    ref = np.empty(n, dtype=object)
    reanchor = np.zeros(n, dtype=bool)
    current = lane_ids[np.argmax(on_road)]
    cand, since = None, None
    for i in range(n):
        lid = lane_ids[i]
        if lid != OFF_ROAD and lid != current:
            near = abs(center_d[lid][i]) <= settle_band * width[lid][i]
            if near:
                if cand != lid:
                    cand, since = lid, traj.t[i]
                if traj.t[i] - since >= settle_time - 1e-9:
                    current = lid
                    reanchor[i] = True
                    cand = None
            else:
                cand = None
        else:
            cand = None
        ref[i] = current

    idx = np.arange(n)
    offset = np.empty(n)
    lane_w = np.empty(n)
    d_l = np.empty(n)
    d_r = np.empty(n)
    for lane in lanes.lanes:
        m = ref == lane.id
        offset[m] = center_d[lane.id][m]
        lane_w[m] = width[lane.id][m]
    for lane in lanes.lanes:
        m = lane_ids == lane.id
        d_l[m] = np.maximum(0.0, -left_d[lane.id][m])
        d_r[m] = np.maximum(0.0, right_d[lane.id][m])
    off = ~on_road
    if off.any():
        for i in idx[off]:
            d_l[i] = abs(left_d[ref[i]][i])
            d_r[i] = abs(right_d[ref[i]][i])

    w = np.asarray(traj.width, dtype=np.float64)
    kappa = (np.minimum(d_l, d_r) < 0.5 * w).astype(np.int8)
    d_c = np.abs(offset) / lane_w
    departed = np.abs(offset) >= 0.5 * (lane_w + w)
    return FeatureSeries(
        traj.object_id, np.asarray(traj.frame), np.asarray(traj.t), d_c, kappa, ref,
        offset, lane_w, d_l, d_r, w, off, departed, reanchor,
    )


def write_debug_csv(series: FeatureSeries, path) -> None:
    """Per-frame dump: object_id,frame,d_l,d_r,w,d_c,kappa,ref_lane."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["object_id", "frame", "d_l", "d_r", "w", "d_c", "kappa", "ref_lane"])
        for i in range(len(series)):
            writer.writerow([
                series.object_id, int(series.frame[i]), repr(float(series.d_l[i])),
                repr(float(series.d_r[i])), repr(float(series.w[i])), repr(float(series.d_c[i])),
                int(series.kappa[i]), series.ref_lane[i],
            ])
