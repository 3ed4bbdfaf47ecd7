"""Candidate partitioning and DTW pattern matching of primitive series."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .features import FeatureSeries, reference_lane_tracking
from .categorization import ScenarioRecord
from .geometry import LaneModel, normalized_positions
from .hmm import APPROACH, CROSS, IDLE, HmmParams, PrimitiveSeries, viterbi
from .ingest import OFF_ROAD, Trajectory

DEFAULT_XI = 2
MIN_DURATION_S = 0.2


class PatternFileError(ValueError):
    pass


@dataclass(frozen=True)
class Pattern:
    name: str
    sequence: tuple[int, ...]
    merge_family: bool = False

    def __post_init__(self):
        if not self.sequence or any(int(p) not in (0, 1, 2, 3) for p in self.sequence):
            raise PatternFileError(f"pattern {self.name!r}: sequence must be non-empty over 0..3")


DEFAULT_PATTERNS = (
    Pattern("merge", (0, 1, 2, 3), True),
    Pattern("abort", (0, 1, 2, 1, 0), False),
    Pattern("overshoot-merge", (1, 2, 3), True),
)


def load_patterns(path) -> list[Pattern]:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
        patterns = [Pattern(str(d["name"]), tuple(int(x) for x in d["sequence"]),
                            bool(d.get("merge_family", False))) for d in data]
    except FileNotFoundError as exc:
        raise PatternFileError(f"pattern file not found: {path}") from exc
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise PatternFileError(f"{path}: invalid pattern library ({exc})") from exc
    if not patterns:
        raise PatternFileError(f"{path}: empty pattern library")
    return patterns


def save_patterns(patterns: Sequence[Pattern], path) -> None:
    data = [{"name": p.name, "sequence": list(p.sequence), "merge_family": p.merge_family}
            for p in patterns]
    Path(path).write_text(json.dumps(data, indent=1) + "\n", encoding="utf-8")


@dataclass
class CandidateSequence:
    object_id: str
    frame_range: tuple[int, int]  # inclusive indices into the series
    primitives: np.ndarray
    context_range: tuple[int, int]
    context: np.ndarray


@dataclass
class MatchResult:
    candidate: CandidateSequence
    best_pattern: str
    similarity: float
    all_scores: dict = field(default_factory=dict)


def partition(prims, xi: int = DEFAULT_XI, barriers=None, object_id: str = "") -> list[CandidateSequence]:
    """Maximal runs of labels >= xi, each with its context.

    The context grows outwards from the run until it has taken in the
    nearest Idle frame on each side, or reaches the series boundary, or an
    episode boundary: ``barriers`` flags frames that open a new reference-lane
    episode; neither runs nor contexts straddle them.
    """
    if isinstance(prims, PrimitiveSeries):
        object_id = object_id or prims.object_id
        labels = prims.labels
    else:
        labels = np.asarray(prims, dtype=np.int64)
    n = len(labels)
    stop = np.zeros(n, dtype=bool) if barriers is None else np.asarray(barriers, dtype=bool)
    core = labels >= xi
    out = []
    i = 0
    while i < n:
        if not core[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and core[j + 1] and not stop[j + 1]:
            j += 1
        lo = i
        while lo > 0 and not stop[lo]:
            lo -= 1
            if labels[lo] == IDLE:
                break
        hi = j
        while hi < n - 1 and not stop[hi + 1]:
            hi += 1
            if labels[hi] == IDLE:
                break
        out.append(CandidateSequence(object_id, (i, j), labels[i:j + 1].copy(), (lo, hi),
                                     labels[lo:hi + 1].copy()))
        i = j + 1
    return out


def run_length_compress(seq) -> list[int]:
    out: list[int] = []
    for x in seq:
        x = int(x)
        if not out or out[-1] != x:
            out.append(x)
    return out


def dtw_distance(a, b) -> float:
    if len(a) == 0 or len(b) == 0:
        raise ValueError("DTW needs non-empty series")
    return float(kernels.dtw_distance(np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)))


def similarity(a, b) -> float:
    return 1.0 / (1.0 + dtw_distance(run_length_compress(a), run_length_compress(b)))


def classify(cand, patterns: Sequence[Pattern], context=None) -> MatchResult:
    """Best pattern by DTW similarity of run-length skeletons.

    ``context`` overrides the candidate's own context series. Ties keep
    the earlier pattern in the library.
    """
    if not patterns:
        raise ValueError("empty pattern library")
    seq = cand.context if context is None else context
    skel = run_length_compress(seq)
    scores = {}
    best_name, best = None, -1.0
    for p in patterns:
        sc = 1.0 / (1.0 + dtw_distance(skel, run_length_compress(p.sequence)))
        scores[p.name] = sc
        if sc > best:
            best_name, best = p.name, sc
    return MatchResult(cand, best_name, best, scores)


@dataclass
class Maneuver:
    """One classified lane-change attempt of a trajectory (indices into it)."""

    object_id: str
    pattern_class: str
    merge_family: bool
    similarity: float
    core_range: tuple[int, int]
    context_range: tuple[int, int]
    start_index: int
    end_index: int
    cross_index: int
    source_lane: str
    target_lane: Optional[str]
    direction: str
    skeleton: list[int]


def _target_lane(feats: FeatureSeries, traj: Trajectory, lanes: LaneModel, core, end_index,
                 source: str) -> tuple[Optional[str], str]:
    lo, hi = core
    seg = slice(lo, hi + 1)
    k = lo + int(np.argmax(feats.d_c[seg]))
    direction = "left" if feats.offset[k] >= 0 else "right"
    if feats.reanchor[end_index] and feats.ref_lane[end_index] != source:
        return str(feats.ref_lane[end_index]), direction
    for i in range(k, lo - 1, -1):
        lid = traj.lane_id[i]
        if lid != OFF_ROAD and lid != source:
            return str(lid), direction
    # neighbor one lane width over on the maneuver side
    sign = 1.0 if direction == "left" else -1.0
    lane = lanes[source]
    s, _, _ = lane.centerline.project_many(traj.xy[k:k + 1])
    x0, y0 = lane.centerline.point_at(float(s[0]))
    x1, y1 = lane.centerline.point_at(float(s[0]) + 1.0)
    nx, ny = -(y1 - y0), x1 - x0
    norm = float(np.hypot(nx, ny))
    w = feats.lane_width[k]
    probe = np.array([[x0 + sign * w * nx / norm, y0 + sign * w * ny / norm]])
    for other in lanes.lanes:
        if other.id == source:
            continue
        _, dl, el = other.left_border.project_many(probe)
        _, dr, er = other.right_border.project_many(probe)
        if dl[0] <= 0.0 <= dr[0] and not el[0] and not er[0]:
            return other.id, direction
    return None, direction


def find_maneuvers(
    traj: Trajectory,
    lanes: LaneModel,
    params: HmmParams,
    patterns: Sequence[Pattern],
    xi: int = DEFAULT_XI,
    min_duration: float = MIN_DURATION_S,
    feats: Optional[FeatureSeries] = None,
) -> list[Maneuver]:
    """features -> Viterbi -> partition -> classify for one trajectory.

    Candidates sharing one context window describe the same attempt and are
    merged. Frames where the vehicle has already left its reference lane are
    dropped from the matched series: primitives there no longer describe
    the source lane.
    """
    if feats is None:
        feats = reference_lane_tracking(traj, lanes)
    if feats is None or len(feats) == 0:
        return []
    prims = viterbi(feats, params)
    labels = prims.labels
    cands = partition(prims, xi, barriers=feats.reanchor)
    dt = traj.dt
    cands = [c for c in cands
             if feats.t[c.frame_range[1]] - feats.t[c.frame_range[0]] + dt >= min_duration - 1e-9]

    groups: dict[tuple[int, int], list[CandidateSequence]] = {}
    for c in cands:
        groups.setdefault(c.context_range, []).append(c)

    out = []
    for (lo, hi), members in groups.items():
        core = (members[0].frame_range[0], members[-1].frame_range[1])
        keep = ~feats.departed[lo:hi + 1]
        keep[core[0] - lo:core[1] - lo + 1] |= labels[core[0]:core[1] + 1] >= xi
        matched = labels[lo:hi + 1][keep]
        res = classify(members[0], patterns, context=matched)
        fam = next(p.merge_family for p in patterns if p.name == res.best_pattern)

        ctx = labels[lo:hi + 1]
        nz = np.nonzero(ctx == APPROACH)[0]
        if len(nz) == 0:
            nz = np.nonzero(ctx != IDLE)[0]
        start = lo + int(nz[0])
        if hi + 1 < len(labels) and feats.reanchor[hi + 1]:
            end = hi + 1
        else:
            end = hi
        crosses = np.nonzero(labels[core[0]:core[1] + 1] == CROSS)[0]
        cross = core[0] + (int(crosses[0]) if len(crosses) else 0)
        source = str(feats.ref_lane[core[0]])
        target, direction = _target_lane(feats, traj, lanes, core, end, source)
        out.append(Maneuver(
            traj.object_id, res.best_pattern, fam, res.similarity, core, (lo, hi), start, end,
            cross, source, target, direction, run_length_compress(matched),
        ))
    out.sort(key=lambda m: m.core_range)
    return out


def extract_scenarios(
    traj: Trajectory,
    lanes: LaneModel,
    params: HmmParams,
    patterns: Sequence[Pattern] = DEFAULT_PATTERNS,
    xi: int = DEFAULT_XI,
    min_duration: float = MIN_DURATION_S,
) -> list[ScenarioRecord]:
    """Scenario records (without PET assessment) for maneuvers that start on
    the on-ramp lane."""
    ramp = lanes.on_ramp.id
    out = []
    for m in find_maneuvers(traj, lanes, params, patterns, xi, min_duration):
        if m.source_lane != ramp:
            continue
        pos = normalized_positions(traj.xy[[m.start_index, m.end_index]], lanes)
        lo, hi = m.context_range
        out.append(ScenarioRecord(
            object_id=traj.object_id,
            object_class=traj.object_class,
            pattern_class=m.pattern_class,
            merge_family=m.merge_family,
            similarity=m.similarity,
            skeleton=m.skeleton,
            source_lane=m.source_lane,
            target_lane=m.target_lane,
            direction=m.direction,
            frame_window=(int(traj.frame[lo]), int(traj.frame[hi])),
            start_frame=int(traj.frame[m.start_index]),
            end_frame=int(traj.frame[m.end_index]),
            cross_frame=int(traj.frame[m.cross_index]),
            start_time=float(traj.t[m.start_index]),
            end_time=float(traj.t[m.end_index]),
            maneuver_start_pos=float(pos[0]),
            maneuver_end_pos=float(pos[1]),
        ))
    return out
