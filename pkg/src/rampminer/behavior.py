"""Statistics over extracted scenarios: position ECDFs, quantiles, PET spread."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .categorization import BEHIND, IN_FRONT, INTO, ScenarioRecord

QUANTILE_LEVELS = (0.25, 0.5, 0.75, 0.9)
START_THRESHOLDS = (0.25, 0.5, 0.75)
PET_BIN_S = 1.0


class Ecdf:
    """Right-continuous empirical CDF: F(x) = #{samples <= x} / n."""

    def __init__(self, samples):
        x = np.sort(np.asarray(samples, dtype=np.float64).ravel())
        if len(x) == 0:
            raise ValueError("ECDF needs at least one sample")
        if not np.all(np.isfinite(x)):
            raise ValueError("ECDF samples must be finite")
        self.x = x

    def __len__(self) -> int:
        return len(self.x)

    def __call__(self, q):
        q = np.asarray(q, dtype=np.float64)
        out = np.searchsorted(self.x, q, side="right") / len(self.x)
        return float(out) if out.ndim == 0 else out

    def curve(self) -> tuple[np.ndarray, np.ndarray]:
        """Step points (x, F(x)) at the distinct sample values."""
        ux = np.unique(self.x)
        return ux, self(ux)


def ecdf(samples) -> Ecdf:
    return Ecdf(samples)


def quantiles(samples, levels: Sequence[float] = QUANTILE_LEVELS) -> dict:
    """Linear interpolation between closest order statistics."""
    x = np.asarray(samples, dtype=np.float64)
    if len(x) == 0:
        return {}
    vals = np.quantile(x, list(levels), method="linear")
    return {f"q{round(l * 100):d}": float(v) for l, v in zip(levels, vals)}


def _mean_std(x) -> Optional[dict]:
    if len(x) == 0:
        return None
    a = np.asarray(x, dtype=np.float64)
    return {"mean": float(a.mean()), "std": float(a.std(ddof=1)) if len(a) > 1 else 0.0, "n": len(a)}


@dataclass
class BehaviorReport:
    n_scenarios: int
    start_quantiles: dict = field(default_factory=dict)
    end_quantiles: dict = field(default_factory=dict)
    start_fraction_below: dict = field(default_factory=dict)
    end_fraction_within: Optional[float] = None
    category_counts: dict = field(default_factory=dict)
    pet_quantiles: dict = field(default_factory=dict)
    accepted_gap: Optional[dict] = None
    critical: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = {
            "n_scenarios": self.n_scenarios,
            "start_quantiles": self.start_quantiles,
            "end_quantiles": self.end_quantiles,
            "start_fraction_below": self.start_fraction_below,
            "end_fraction_within_lane": self.end_fraction_within,
            "category_counts": self.category_counts,
            "pet_quantiles": self.pet_quantiles,
            "critical": self.critical,
        }
        if self.accepted_gap is not None:
            d["accepted_gap_s"] = self.accepted_gap
        return d


def _nearest_pet(rec: ScenarioRecord) -> Optional[float]:
    valid = rec.valid_challengers
    if not valid:
        return None
    return min((c.pet for c in valid), key=abs)


def behavior_report(records: Sequence[ScenarioRecord], merge_only: bool = True) -> BehaviorReport:
    """Aggregate statistics; with ``merge_only`` non-merge classes are skipped."""
    recs = [r for r in records if r.merge_family or not merge_only]
    # permutation invariance: fix the order before any float reduction
    recs.sort(key=lambda r: (r.object_id, r.start_frame))
    rep = BehaviorReport(len(recs))
    if not recs:
        return rep
    starts = np.array([r.maneuver_start_pos for r in recs])
    ends = np.array([r.maneuver_end_pos for r in recs])
    rep.start_quantiles = quantiles(starts)
    rep.end_quantiles = quantiles(ends)
    rep.start_fraction_below = {f"{t:g}": float(np.mean(starts < t)) for t in START_THRESHOLDS}
    rep.end_fraction_within = float(np.mean(ends <= 1.0))

    counts: dict[str, int] = {}
    for r in recs:
        counts[str(r.category)] = counts.get(str(r.category), 0) + 1
    rep.category_counts = dict(sorted(counts.items()))

    for cat in (BEHIND, IN_FRONT):
        pets = [abs(p) for r in recs if r.category == cat for p in [_nearest_pet(r)] if p is not None]
        if pets:
            rep.pet_quantiles[cat] = quantiles(pets)
    gaps = [r.accepted_gap_s for r in recs if r.category == INTO and r.accepted_gap_s is not None]
    if gaps:
        rep.accepted_gap = {**_mean_std(gaps), **quantiles(gaps)}
        rep.pet_quantiles[INTO] = quantiles(gaps)
    rep.critical = [
        {"object_id": r.object_id, "start_frame": r.start_frame, "category": r.category,
         "min_abs_pet_s": abs(_nearest_pet(r))}
        for r in recs if r.critical
    ]
    return rep


def pet_histogram(values, bin_s: float = PET_BIN_S) -> tuple[np.ndarray, np.ndarray]:
    """Counts over bins of width ``bin_s`` aligned to multiples of it."""
    v = np.asarray(values, dtype=np.float64)
    if len(v) == 0:
        return np.array([0.0, bin_s]), np.zeros(1, dtype=np.int64)
    lo = math.floor(v.min() / bin_s) * bin_s
    hi = (math.floor(v.max() / bin_s) + 1) * bin_s
    edges = np.arange(lo, hi + 0.5 * bin_s, bin_s)
    counts, _ = np.histogram(v, edges)
    return edges, counts


def write_report(records: Sequence[ScenarioRecord], out_dir, merge_only: bool = True) -> BehaviorReport:
    """report.json plus plot-ready CSVs (ECDF curves, PET histograms)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rep = behavior_report(records, merge_only)
    (out / "report.json").write_text(json.dumps(rep.to_dict(), indent=1, sort_keys=True) + "\n",
                                     encoding="utf-8")
    recs = [r for r in records if r.merge_family or not merge_only]
    for name, vals in (("start", [r.maneuver_start_pos for r in recs]),
                       ("end", [r.maneuver_end_pos for r in recs])):
        with open(out / f"ecdf_{name}.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "F"])
            if vals:
                xs, fs = ecdf(vals).curve()
                w.writerows([repr(float(a)), repr(float(b))] for a, b in zip(xs, fs))
    for cat in (BEHIND, IN_FRONT):
        pets = sorted(p for r in recs if r.category == cat for p in [_nearest_pet(r)] if p is not None)
        edges, counts = pet_histogram(pets)
        with open(out / f"pet_hist_{cat}.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["bin_lo", "bin_hi", "count"])
            w.writerows([repr(float(a)), repr(float(b)), int(c)]
                        for a, b, c in zip(edges[:-1], edges[1:], counts))
    return rep
