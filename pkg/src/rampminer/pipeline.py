"""End-to-end extraction over a dataset and evaluation against labels."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .assessment import DEFAULT_VICINITY_M, pet, select_challengers
from .categorization import DEFAULT_CRITICAL_S, ScenarioRecord, finalize
from .extraction import DEFAULT_PATTERNS, DEFAULT_XI, MIN_DURATION_S, Pattern, extract_scenarios
from .geometry import LaneModel
from .hmm import HmmParams, default_params
from .ingest import ON_RAMP, Trajectory, filter_clipped

log = logging.getLogger(__name__)


@dataclass
class ExtractionSettings:
    params: HmmParams = field(default_factory=default_params)
    patterns: tuple = DEFAULT_PATTERNS
    xi: int = DEFAULT_XI
    vicinity_m: float = DEFAULT_VICINITY_M
    critical_s: float = DEFAULT_CRITICAL_S
    min_duration: float = MIN_DURATION_S


def _index_of_frame(traj: Trajectory, frame: int) -> int:
    return int(np.searchsorted(traj.frame, frame))


def process_trajectory(traj: Trajectory, trajs: Sequence[Trajectory], lanes: LaneModel,
                       settings: ExtractionSettings) -> list[ScenarioRecord]:
    """Scenario records of one trajectory, with PET against its challengers."""
    out = []
    for rec in extract_scenarios(traj, lanes, settings.params, settings.patterns, settings.xi,
                                 settings.min_duration):
        lo = _index_of_frame(traj, rec.frame_window[0])
        hi = _index_of_frame(traj, rec.frame_window[1])
        hi = max(hi, _index_of_frame(traj, rec.end_frame))
        cross = _index_of_frame(traj, rec.cross_frame)
        chs = select_challengers(traj, cross, rec.target_lane, trajs, lanes, settings.vicinity_m)
        results = [pet(traj, ch, (lo, hi)) for ch in chs]
        out.append(finalize(rec, results, settings.critical_s))
    return out


# worker-process state, set once by the pool initializer
_STATE: dict = {}


def _init_worker(trajs, lanes, settings):
    _STATE["trajs"] = trajs
    _STATE["lanes"] = lanes
    _STATE["settings"] = settings


def _work(i: int) -> list[ScenarioRecord]:
    trajs = _STATE["trajs"]
    return process_trajectory(trajs[i], trajs, _STATE["lanes"], _STATE["settings"])


def extract_all(trajs: Sequence[Trajectory], lanes: LaneModel,
                settings: Optional[ExtractionSettings] = None, workers: int = 1) -> list[ScenarioRecord]:
    """Records for every trajectory, ordered by object id then start frame.

    Trajectories no longer than half the on-ramp left border are dropped
    first. Output does not depend on ``workers``.
    """
    settings = settings or ExtractionSettings()
    trajs = sorted(filter_clipped(trajs, lanes), key=lambda tr: tr.object_id)
    if workers <= 1 or len(trajs) < 2:
        chunks = [process_trajectory(tr, trajs, lanes, settings) for tr in trajs]
    else:
        workers = min(workers, os.cpu_count() or 1, len(trajs))
        with ProcessPoolExecutor(workers, initializer=_init_worker,
                                 initargs=(trajs, lanes, settings)) as ex:
            chunks = list(ex.map(_work, range(len(trajs)), chunksize=max(1, len(trajs) // (4 * workers))))
    records = [r for chunk in chunks for r in chunk]
    records.sort(key=lambda r: (r.object_id, r.start_frame))
    return records


def summarize(records: Sequence[ScenarioRecord], n_trajectories: int) -> dict:
    by_class: dict[str, int] = {}
    by_cat: dict[str, int] = {}
    for r in records:
        by_class[r.pattern_class] = by_class.get(r.pattern_class, 0) + 1
        if r.merge_family:
            by_cat[str(r.category)] = by_cat.get(str(r.category), 0) + 1
    return {
        "n_trajectories": n_trajectories,
        "n_records": len(records),
        "n_merges": sum(1 for r in records if r.merge_family),
        "by_pattern_class": dict(sorted(by_class.items())),
        "by_category": dict(sorted(by_cat.items())),
        "n_critical": sum(1 for r in records if r.critical and r.merge_family),
    }


class LabelMismatchError(ValueError):
    pass


def _base_id(oid: str) -> str:
    return oid.split("#", 1)[0]


def labels_from_roads(trajs: Sequence[Trajectory]) -> dict:
    """Fallback ground truth: on-ramp road label means merge."""
    out: dict[str, dict] = {}
    for tr in trajs:
        base = _base_id(tr.object_id)
        if tr.source_road == ON_RAMP or base not in out:
            out[base] = {"label": "merge" if tr.source_road == ON_RAMP else "none"}
    return out


def evaluate(records: Sequence[ScenarioRecord], labels: dict, trajectory_ids: Sequence[str]) -> dict:
    """Per-object comparison of extracted merge-family records with labels.

    An object with a labeled merge counts as found when at least one
    merge-family record was extracted for it. Any merge-family record on
    another object is a false positive.
    """
    known = {_base_id(t) for t in trajectory_ids}
    missing = sorted(set(labels) - known)
    if missing:
        raise LabelMismatchError(f"labels reference unknown objects: {', '.join(missing[:5])}")
    unlabeled = sorted(known - set(labels))
    if unlabeled:
        raise LabelMismatchError(f"objects without labels: {', '.join(unlabeled[:5])}")

    found: dict[str, list] = {}
    for r in records:
        if r.merge_family:
            found.setdefault(_base_id(r.object_id), []).append(r)
    positives = sorted(k for k, v in labels.items() if v.get("label") == "merge")
    tp = [k for k in positives if k in found]
    fp = sorted(k for k in found if labels[k].get("label") != "merge")
    misses = []
    for k in positives:
        if k in found:
            continue
        lab = labels[k]
        misses.append({"object_id": k, "start_pos": lab.get("start_pos"), "end_pos": lab.get("end_pos")})
    n_extracted = len(tp) + len(fp)
    recall = len(tp) / len(positives) if positives else None
    return {
        "n_ground_truth": len(positives),
        "n_extracted": n_extracted,
        "true_positives": len(tp),
        "false_positives": fp,
        "accuracy": recall,
        "recall": recall,
        "precision": len(tp) / n_extracted if n_extracted else None,
        "misses": misses,
        "summary": f"extracted {len(tp)} of {len(positives)} merges",
    }
