"""Merge categories (free / in front / behind / into) and the scenario record."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .assessment import PetResult

FREE, IN_FRONT, BEHIND, INTO, AMBIGUOUS = "free", "in_front", "behind", "into", "ambiguous"
CATEGORIES = (FREE, IN_FRONT, BEHIND, INTO, AMBIGUOUS)
DEFAULT_CRITICAL_S = 1.0


def categorize(pets: Sequence) -> str:
    """Decision tree over the PETs of the (non-degenerate) challengers.

    Accepts PET values or :class:`PetResult` objects. A PET of exactly 0
    makes the scenario ambiguous.
    """
    values = [p.pet if isinstance(p, PetResult) else float(p) for p in pets]
    if not values:
        return FREE
    if any(v == 0.0 for v in values):
        return AMBIGUOUS
    if len(values) >= 2 and min(values) < 0.0 < max(values):
        return INTO
    nearest = min(values, key=abs)
    return BEHIND if nearest > 0.0 else IN_FRONT


def accepted_gap(pets: Sequence) -> float:
    """Sum of |PET| to the nearest challenger behind and the nearest ahead."""
    values = [p.pet if isinstance(p, PetResult) else float(p) for p in pets]
    if categorize(values) != INTO:
        raise ValueError("accepted gap is only defined for 'into' scenarios")
    rear = min(v for v in values if v > 0)
    lead = max(v for v in values if v < 0)
    return rear + abs(lead)


def _valid(challengers: Iterable[PetResult]) -> list[PetResult]:
    return [c for c in challengers if not c.degenerate and c.pet is not None]


@dataclass
class ScenarioRecord:
    object_id: str
    object_class: str
    pattern_class: str
    merge_family: bool
    similarity: float
    skeleton: list
    source_lane: str
    target_lane: Optional[str]
    direction: str
    frame_window: tuple  # (first, last) frame numbers of the context
    start_frame: int
    end_frame: int
    cross_frame: int
    start_time: float
    end_time: float
    maneuver_start_pos: float
    maneuver_end_pos: float
    challengers: list = field(default_factory=list)
    category: Optional[str] = None
    critical: bool = False
    accepted_gap_s: Optional[float] = None

    @property
    def valid_challengers(self) -> list[PetResult]:
        return _valid(self.challengers)

    def to_dict(self) -> dict:
        return {
            "object_id": self.object_id,
            "object_class": self.object_class,
            "pattern_class": self.pattern_class,
            "merge_family": self.merge_family,
            "similarity": self.similarity,
            "skeleton": list(self.skeleton),
            "source_lane": self.source_lane,
            "target_lane": self.target_lane,
            "direction": self.direction,
            "frame_window": [int(self.frame_window[0]), int(self.frame_window[1])],
            "start_frame": int(self.start_frame),
            "end_frame": int(self.end_frame),
            "cross_frame": int(self.cross_frame),
            "start_time_s": self.start_time,
            "end_time_s": self.end_time,
            "maneuver_start_pos": self.maneuver_start_pos,
            "maneuver_end_pos": self.maneuver_end_pos,
            "challengers": [c.to_dict() for c in self.challengers],
            "category": self.category,
            "critical": self.critical,
            "accepted_gap_s": self.accepted_gap_s,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioRecord":
        return cls(
            d["object_id"], d["object_class"], d["pattern_class"], d["merge_family"],
            d["similarity"], list(d["skeleton"]), d["source_lane"], d["target_lane"],
            d["direction"], tuple(d["frame_window"]), d["start_frame"], d["end_frame"],
            d["cross_frame"], d["start_time_s"], d["end_time_s"], d["maneuver_start_pos"],
            d["maneuver_end_pos"], [PetResult.from_dict(c) for c in d["challengers"]],
            d["category"], d["critical"], d.get("accepted_gap_s"),
        )


def flag_critical(rec: ScenarioRecord, threshold_s: float = DEFAULT_CRITICAL_S) -> bool:
    return any(abs(c.pet) < threshold_s for c in rec.valid_challengers)


def finalize(rec: ScenarioRecord, challengers: list[PetResult],
             critical_s: float = DEFAULT_CRITICAL_S) -> ScenarioRecord:
    """Attach PET results, category, criticality and accepted gap."""
    rec.challengers = sorted(challengers, key=lambda c: c.challenger_id)
    valid = rec.valid_challengers
    rec.category = categorize(valid)
    rec.critical = flag_critical(rec, critical_s)
    rec.accepted_gap_s = accepted_gap(valid) if rec.category == INTO else None
    return rec


def write_records(records: Iterable[ScenarioRecord], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(json.dumps(r.to_dict(), sort_keys=True) + "\n")


def read_records(path) -> list[ScenarioRecord]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(ScenarioRecord.from_dict(json.loads(line)))
    return out


def record_schema() -> dict:
    """JSON schema of one line of the scenario JSON-lines output."""
    path = Path(__file__).with_name("data") / "scenario_record.schema.json"
    return json.loads(path.read_text(encoding="utf-8"))
