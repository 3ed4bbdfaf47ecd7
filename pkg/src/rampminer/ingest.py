"""Trajectory CSV I/O, per-frame lane association, clipping filter, road labels.

CSV schema, one row per object per frame, header mandatory::

    object_id,frame,t,x,y,heading,v,width,length,class

Units are meters, seconds and radians. ``v`` may be empty.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Optional

import numpy as np

from .geometry import MAINLINE, ON_RAMP, LaneModel, load_lanes

CSV_COLUMNS = ("object_id", "frame", "t", "x", "y", "heading", "v", "width", "length", "class")
OBJECT_CLASSES = ("car", "truck", "other")
OFF_ROAD = "offroad"
HIGHWAY = "highway"
GAP_FACTOR = 3.0


class TrajectoryFileError(ValueError):
    """Malformed trajectory file; message names the offending line."""


class VehicleState(NamedTuple):
    frame: int
    t: float
    x: float
    y: float
    heading: float
    v: float
    width: float
    length: float
    lane_id: str


@dataclass(eq=False)
class Trajectory:
    """Time-ordered states of one object, stored column-wise."""

    object_id: str
    object_class: str
    frame: np.ndarray
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    heading: np.ndarray
    v: np.ndarray
    width: np.ndarray
    length: np.ndarray
    lane_id: np.ndarray = field(default=None)
    source_road: Optional[str] = None

    def __post_init__(self):
        n = len(self.t)
        if self.lane_id is None:
            self.lane_id = np.full(n, OFF_ROAD, dtype=object)
        for name in ("frame", "x", "y", "heading", "v", "width", "length", "lane_id"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{self.object_id}: column {name} has wrong length")

    def __len__(self) -> int:
        return len(self.t)

    @property
    def states(self) -> list[VehicleState]:
        return [self.state(i) for i in range(len(self))]

    def state(self, i: int) -> VehicleState:
        return VehicleState(
            int(self.frame[i]), float(self.t[i]), float(self.x[i]), float(self.y[i]),
            float(self.heading[i]), float(self.v[i]), float(self.width[i]),
            float(self.length[i]), str(self.lane_id[i]),
        )

    @property
    def xy(self) -> np.ndarray:
        return np.column_stack([self.x, self.y])

    @property
    def dt(self) -> float:
        """Median sampling period (s)."""
        return float(np.median(np.diff(self.t))) if len(self.t) > 1 else 0.0

    def path_length(self) -> float:
        return float(np.sum(np.hypot(np.diff(self.x), np.diff(self.y))))

    def index_at(self, t: float) -> Optional[int]:
        """Index of the state nearest to time ``t``; None outside the track."""
        if len(self.t) == 0 or t < self.t[0] - 0.5 * self.dt or t > self.t[-1] + 0.5 * self.dt:
            return None
        i = int(np.searchsorted(self.t, t))
        if i == len(self.t):
            return i - 1
        if i > 0 and t - self.t[i - 1] <= self.t[i] - t:
            return i - 1
        return i

    def slice(self, start: int, stop: int, object_id: Optional[str] = None) -> "Trajectory":
        return Trajectory(
            object_id or self.object_id, self.object_class,
            *(getattr(self, c)[start:stop] for c in
              ("frame", "t", "x", "y", "heading", "v", "width", "length", "lane_id")),
            source_road=None,
        )


def _parse_rows(handle: Iterable[str], name: str):
    reader = csv.reader(handle)
    try:
        header = next(reader)
    except StopIteration:
        return
    header = [h.strip() for h in header]
    if tuple(header) != CSV_COLUMNS:
        raise TrajectoryFileError(f"{name}:1: header must be {','.join(CSV_COLUMNS)}")
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(CSV_COLUMNS):
            raise TrajectoryFileError(f"{name}:{line}: expected {len(CSV_COLUMNS)} fields, got {len(row)}")
        try:
            oid = row[0].strip()
            frame = int(row[1])
            t, x, y, heading = (float(row[k]) for k in (2, 3, 4, 5))
            v = float(row[6]) if row[6].strip() else math.nan
            width, length = float(row[7]), float(row[8])
        except ValueError as exc:
            raise TrajectoryFileError(f"{name}:{line}: {exc}") from None
        cls = row[9].strip()
        if not oid:
            raise TrajectoryFileError(f"{name}:{line}: empty object_id")
        if not all(math.isfinite(val) for val in (t, x, y, heading, width, length)):
            raise TrajectoryFileError(f"{name}:{line}: non-finite value")
        if width <= 0 or length <= 0:
            raise TrajectoryFileError(f"{name}:{line}: width and length must be > 0")
        if cls not in OBJECT_CLASSES:
            raise TrajectoryFileError(f"{name}:{line}: unknown class {cls!r}")
        yield line, oid, frame, t, x, y, heading, v, width, length, cls


def parse_trajectories(text: str, name: str = "<string>") -> list[Trajectory]:
    """Parse CSV text; see :func:`read_trajectories`."""
    return _build(io.StringIO(text), name)


def read_trajectories(path) -> list[Trajectory]:
    """Parse the trajectory CSV. Rows of an object may be interleaved with others.

    Tracks are split where the sampling gap exceeds 3x the median period;
    the pieces get ids ``<id>#<k>``. Pieces with fewer than 2 states are
    dropped.
    """
    path = Path(path)
    try:
        handle = path.open(newline="", encoding="utf-8")
    except FileNotFoundError:
        raise TrajectoryFileError(f"trajectory file not found: {path}") from None
    return _build(handle, str(path))


def _build(handle, name: str) -> list[Trajectory]:
    rows: dict[str, list] = {}
    with handle:
        for rec in _parse_rows(handle, name):
            rows.setdefault(rec[1], []).append(rec)

    out = []
    for oid, recs in rows.items():
        recs.sort(key=lambda r: r[3])
        ts = [r[3] for r in recs]
        for a, b in zip(recs, recs[1:]):
            if b[3] <= a[3]:
                raise TrajectoryFileError(f"{name}:{b[0]}: timestamps of {oid!r} not strictly increasing")
        classes = {r[10] for r in recs}
        if len(classes) > 1:
            raise TrajectoryFileError(f"{name}: object {oid!r} has several classes")
        cols = list(zip(*recs))
        arrays = dict(
            frame=np.asarray(cols[2], dtype=np.int64), t=np.asarray(ts, dtype=np.float64),
            x=np.asarray(cols[4], dtype=np.float64), y=np.asarray(cols[5], dtype=np.float64),
            heading=np.asarray(cols[6], dtype=np.float64), v=np.asarray(cols[7], dtype=np.float64),
            width=np.asarray(cols[8], dtype=np.float64), length=np.asarray(cols[9], dtype=np.float64),
        )
        traj = Trajectory(oid, recs[0][10], **arrays)
        out.extend(split_gaps(traj))
    out.sort(key=lambda tr: tr.object_id)
    return out


def split_gaps(traj: Trajectory, factor: float = GAP_FACTOR) -> list[Trajectory]:
    if len(traj) < 2:
        return []
    dt = np.diff(traj.t)
    cuts = np.nonzero(dt > factor * np.median(dt))[0] + 1
    if len(cuts) == 0:
        return [traj]
    bounds = [0, *cuts.tolist(), len(traj)]
    pieces = []
    for k, (a, b) in enumerate(zip(bounds, bounds[1:])):
        if b - a >= 2:
            pieces.append(traj.slice(a, b, f"{traj.object_id}#{k}"))
    return pieces


def _fmt(value: float) -> str:
    return "" if math.isnan(value) else repr(float(value))


def write_trajectories(trajs: Iterable[Trajectory], path) -> None:
    """Write trajectories in the CSV schema (rows ordered by object, then time)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for tr in trajs:
            for i in range(len(tr)):
                fh.write(",".join((
                    tr.object_id, str(int(tr.frame[i])), _fmt(tr.t[i]), _fmt(tr.x[i]), _fmt(tr.y[i]),
                    _fmt(tr.heading[i]), _fmt(tr.v[i]), _fmt(tr.width[i]), _fmt(tr.length[i]),
                    tr.object_class,
                )) + "\n")


def associate_lanes(traj: Trajectory, lanes: LaneModel) -> np.ndarray:
    """Per-frame lane id of the vehicle center, or :data:`OFF_ROAD`.

    A center belongs to a lane when it lies between the lane's borders and
    projects inside their extent. The first lane in file order wins on
    shared borders.
    """
    pts = traj.xy
    out = np.full(len(pts), OFF_ROAD, dtype=object)
    free = np.ones(len(pts), dtype=bool)
    for lane in lanes.lanes:
        _, dl, el = lane.left_border.project_many(pts)
        _, dr, er = lane.right_border.project_many(pts)
        inside = free & (dl <= 0.0) & (dr >= 0.0) & ~el & ~er
        out[inside] = lane.id
        free &= ~inside
    return out


def associate_road(traj: Trajectory, lanes: LaneModel) -> str:
    """Ground-truth road label: on-ramp iff the track starts on the on-ramp
    lane and ends on a mainline lane, highway otherwise.

    Only meant for evaluation; extraction never looks at it.
    """
    assoc = [lid for lid in traj.lane_id if lid != OFF_ROAD]
    if not assoc:
        return HIGHWAY
    ramp = lanes.on_ramp.id
    mainline = set(lanes.mainline_ids)
    return ON_RAMP if assoc[0] == ramp and assoc[-1] in mainline else HIGHWAY


def filter_clipped(trajs: Iterable[Trajectory], lanes: LaneModel) -> list[Trajectory]:
    """Keep trajectories longer than half the on-ramp left border (strict)."""
    limit = 0.5 * lanes.on_ramp.left_border.length
    return [tr for tr in trajs if tr.path_length() > limit]


def prepare(trajs: Iterable[Trajectory], lanes: LaneModel) -> list[Trajectory]:
    """Attach lane association and road label to every trajectory."""
    out = list(trajs)
    for tr in out:
        tr.lane_id = associate_lanes(tr, lanes)
        tr.source_road = associate_road(tr, lanes)
    return out


def load_dataset(trajectory_file, lane_file) -> tuple[list[Trajectory], LaneModel]:
    lanes = load_lanes(lane_file)
    trajs = prepare(read_trajectories(trajectory_file), lanes)
    return trajs, lanes


__all__ = [
    "CSV_COLUMNS", "HIGHWAY", "MAINLINE", "OFF_ROAD", "ON_RAMP", "Trajectory",
    "TrajectoryFileError", "VehicleState", "associate_lanes", "associate_road",
    "filter_clipped", "load_dataset", "parse_trajectories", "prepare", "read_trajectories",
    "split_gaps", "write_trajectories",
]
