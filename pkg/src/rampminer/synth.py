"""Synthetic on-ramp traffic with ground-truth labels.

Straight road along +x: on-ramp (acceleration) lane centered at y=0, two
mainline lanes to its left. Vehicles drive at constant speed. Lateral
motion is a tanh sigmoid in x for merges and a tanh bump for aborts, so
every quantity has a closed form that the tests use as an oracle.

A maneuver's ground-truth start is where the lateral offset reaches
``onset`` lane widths, its end where it reaches ``1 - onset``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from numpy.random import PCG64, Generator

from .geometry import MAINLINE, ON_RAMP, Lane, LaneModel, save_lanes, straight_polyline
from .ingest import Trajectory, prepare, write_trajectories

RAMP, MAIN_1, MAIN_2 = "ramp", "main_1", "main_2"


@dataclass
class SynthConfig:
    seed: int = 0
    n_mainline: int = 150
    n_merging: int = 40
    n_aborting: int = 10
    lane_width: float = 3.75
    road_x0: float = -100.0
    road_x1: float = 700.0
    ramp_x1: float = 320.0
    merge_start_s: float = 60.0
    rate_hz: float = 25.0
    spawn_window_s: float = 300.0
    mainline_speed: tuple = (24.0, 34.0)
    ramp_speed: tuple = (20.0, 28.0)
    start_pos_mean: float = 0.3
    start_pos_std: float = 0.1
    start_pos_range: tuple = (0.02, 0.6)
    merge_length_m: tuple = (50.0, 100.0)
    abort_peak: tuple = (0.5, 0.6)
    onset: float = 0.2
    truck_fraction: float = 0.15
    noise_std: float = 0.0
    vicinity_m: float = 100.0
    min_true_pet_s: float = 0.5

    def __post_init__(self):
        if min(self.n_mainline, self.n_merging, self.n_aborting) < 0:
            raise ValueError("vehicle counts must be >= 0")
        if self.noise_std < 0 or self.rate_hz <= 0:
            raise ValueError("noise_std must be >= 0 and rate_hz > 0")


def build_lanes(cfg: SynthConfig) -> LaneModel:
    w = cfg.lane_width
    lanes = []
    for lane_id, kind, y, x0, x1 in (
        (RAMP, ON_RAMP, 0.0, 0.0, cfg.ramp_x1),
        (MAIN_1, MAINLINE, w, cfg.road_x0, cfg.road_x1),
        (MAIN_2, MAINLINE, 2 * w, cfg.road_x0, cfg.road_x1),
    ):
        lanes.append(Lane(
            lane_id, kind,
            left_border=straight_polyline(x0, x1, y + 0.5 * w),
            right_border=straight_polyline(x0, x1, y - 0.5 * w),
            centerline=straight_polyline(x0, x1, y),
        ))
    ref = cfg.ramp_x1 - cfg.merge_start_s
    return LaneModel(tuple(lanes), cfg.merge_start_s, ref)


# lateral profiles: offset in lane widths as a function of x


@dataclass(frozen=True)
class Keep:
    def f(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def df(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class Sigmoid:
    """0 -> ``lanes`` lane widths, centered at ``x_mid`` with scale ``sigma`` (m)."""

    x_mid: float
    sigma: float
    lanes: float = 1.0

    @classmethod
    def between(cls, x_start: float, x_end: float, onset: float, lanes: float = 1.0) -> "Sigmoid":
        """Profile reaching ``onset`` at x_start and ``lanes - onset`` at x_end."""
        q = 1.0 - 2.0 * onset / lanes
        return cls(0.5 * (x_start + x_end), (x_end - x_start) / (2.0 * math.atanh(q)), lanes)

    def f(self, x):
        return 0.5 * self.lanes * (1.0 + np.tanh((np.asarray(x, dtype=float) - self.x_mid) / self.sigma))

    def df(self, x):
        u = (np.asarray(x, dtype=float) - self.x_mid) / self.sigma
        return 0.5 * self.lanes / (self.sigma * np.cosh(u) ** 2)


@dataclass(frozen=True)
class Bump:
    """Out to about ``peak`` lane widths and back."""

    x_up: float
    x_down: float
    sigma: float
    peak: float

    def f(self, x):
        x = np.asarray(x, dtype=float)
        return self.peak * 0.25 * (1 + np.tanh((x - self.x_up) / self.sigma)) * (1 - np.tanh((x - self.x_down) / self.sigma))

    def df(self, x):
        x = np.asarray(x, dtype=float)
        a = np.tanh((x - self.x_up) / self.sigma)
        b = np.tanh((x - self.x_down) / self.sigma)
        return self.peak * 0.25 / self.sigma * ((1 - a * a) * (1 - b) - (1 + a) * (1 - b * b))


@dataclass
class Vehicle:
    """Continuous-time vehicle: x(t) = x0 + v (t - t0), y = y0 + W f(x)."""

    object_id: str
    object_class: str
    width: float
    length: float
    v: float
    t0: float
    x0: float
    x_exit: float
    y0: float
    lane_width: float
    profile: object = field(default_factory=Keep)

    @property
    def t_exit(self) -> float:
        return self.t0 + (self.x_exit - self.x0) / self.v

    def x(self, t):
        return self.x0 + self.v * (np.asarray(t, dtype=float) - self.t0)

    def y(self, t):
        return self.y0 + self.lane_width * self.profile.f(self.x(t))

    def heading(self, t):
        return np.arctan(self.lane_width * self.profile.df(self.x(t)))

    def corner(self, t, front: bool, left: bool):
        h = self.heading(t)
        lon = (0.5 if front else -0.5) * self.length
        lat = (0.5 if left else -0.5) * self.width
        c, s = np.cos(h), np.sin(h)
        return self.x(t) + c * lon - s * lat, self.y(t) + s * lon + c * lat

    def time_at_x(self, x: float) -> float:
        return self.t0 + (x - self.x0) / self.v

    def sample(self, rate_hz: float, rng: Optional[Generator] = None, noise_std: float = 0.0) -> Trajectory:
        k0 = int(math.ceil(self.t0 * rate_hz - 1e-9))
        k1 = int(math.floor(self.t_exit * rate_hz + 1e-9))
        frames = np.arange(k0, k1 + 1, dtype=np.int64)
        t = frames / rate_hz
        x = self.x(t)
        y = self.y(t)
        if noise_std > 0 and rng is not None:
            x = x + rng.normal(0.0, noise_std, len(t))
            y = y + rng.normal(0.0, noise_std, len(t))
        n = len(t)
        return Trajectory(
            self.object_id, self.object_class, frames, t, x, y, self.heading(t),
            np.full(n, self.v), np.full(n, self.width), np.full(n, self.length),
        )


def _first_root(fun, t_lo: float, t_hi: float, step: float) -> Optional[float]:
    """First sign change of ``fun`` on [t_lo, t_hi], refined by bisection."""
    ts = np.arange(t_lo, t_hi + step, step)
    vals = fun(ts)
    idx = np.nonzero(np.signbit(vals[:-1]) != np.signbit(vals[1:]))[0]
    if len(idx) == 0:
        return None
    a, b = float(ts[idx[0]]), float(ts[idx[0] + 1])
    fa = fun(a)
    for _ in range(200):
        m = 0.5 * (a + b)
        fm = fun(m)
        if np.signbit(fm) == np.signbit(fa):
            a, fa = m, fm
        else:
            b = m
        if b - a < 1e-12:
            break
    return 0.5 * (a + b)


def true_pet(ego: Vehicle, ch: Vehicle) -> Optional[float]:
    """Closed-form PET of ``ego`` (left corners) against a lane-keeping
    challenger (right corners, heading 0) from the continuous kinematics."""
    y_line = ch.y0 - 0.5 * ch.width
    dts = []
    for front in (True, False):
        def gap(t, front=front):
            return ego.corner(t, front, True)[1] - y_line

        t_star = _first_root(gap, ego.t0, ego.t_exit, 0.01)
        if t_star is None:
            continue
        x_p = float(ego.corner(t_star, front, True)[0])
        for c_front in (True, False):
            # challenger corner passes x_p when its center is half a length behind/ahead
            xc = x_p - (0.5 if c_front else -0.5) * ch.length
            t_c = ch.time_at_x(xc)
            if ch.t0 <= t_c <= ch.t_exit:
                dts.append(t_star - t_c)
    if not dts:
        return None
    return min(dts, key=abs)


def kappa_onset_time(ego: Vehicle) -> Optional[float]:
    """Time the ego footprint first touches its left lane marking."""
    thr = 0.5 - 0.5 * ego.width / ego.lane_width
    return _first_root(lambda t: ego.profile.f(ego.x(t)) - thr, ego.t0, ego.t_exit, 0.01)


@dataclass
class LabeledDataset:
    trajectories: list
    lanes: LaneModel
    labels: dict
    vehicles: dict
    config: SynthConfig

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_trajectories(self.trajectories, out / "trajectories.csv")
        save_lanes(self.lanes, out / "lanes.json")
        (out / "labels.json").write_text(
            json.dumps({"config": asdict(self.config), "objects": self.labels}, indent=1, sort_keys=True) + "\n",
            encoding="utf-8",
        )


def load_labels(path) -> dict:
    """Object-id -> label dict from a labels.json written by :meth:`LabeledDataset.write`."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return data["objects"] if "objects" in data else data


def _dims(rng: Generator, cfg: SynthConfig) -> tuple[str, float, float]:
    if rng.random() < cfg.truck_fraction:
        return "truck", 2.5, float(rng.uniform(10.0, 16.0))
    return "car", float(rng.uniform(1.7, 2.0)), float(rng.uniform(4.2, 5.0))


def _x_of_fraction(profile, level: float, x_lo: float, x_hi: float, rising: bool = True) -> float:
    """x where the profile crosses ``level`` (first rising or last falling crossing)."""
    fun = (lambda x: profile.f(x) - level) if rising else (lambda x: level - profile.f(x))
    if not rising:
        xs = np.linspace(x_lo, x_hi, 4001)
        vals = profile.f(xs) - level
        idx = np.nonzero((vals[:-1] >= 0) & (vals[1:] < 0))[0]
        x_lo = float(xs[idx[-1]]) if len(idx) else x_lo
    root = _first_root(fun, x_lo, x_hi, 0.05)
    return float("nan") if root is None else root


def merge_vehicle(object_id: str, cfg: SynthConfig, start_pos: float, length_m: float, v: float, t0: float,
                  object_class: str = "car", width: float = 1.8, length: float = 4.6,
                  lanes_crossed: int = 1) -> Vehicle:
    """Ramp vehicle whose lateral motion starts at normalized ``start_pos`` and
    spans ``length_m`` meters between onset and completion."""
    ref = cfg.ramp_x1 - cfg.merge_start_s
    x_s = cfg.merge_start_s + start_pos * ref
    prof = Sigmoid.between(x_s, x_s + length_m, cfg.onset, float(lanes_crossed))
    return Vehicle(object_id, object_class, width, length, v, t0, 0.0, cfg.road_x1, 0.0,
                   cfg.lane_width, prof)


def abort_vehicle(object_id: str, cfg: SynthConfig, start_pos: float, out_m: float, peak: float, v: float,
                  t0: float, object_class: str = "car", width: float = 1.8, length: float = 4.6) -> Vehicle:
    ref = cfg.ramp_x1 - cfg.merge_start_s
    x_s = cfg.merge_start_s + start_pos * ref
    sigma = out_m / 4.0
    prof = Bump(x_s + out_m / 2.0, x_s + 1.5 * out_m, sigma, peak)
    return Vehicle(object_id, object_class, width, length, v, t0, 0.0, cfg.ramp_x1 - 1.0, 0.0,
                   cfg.lane_width, prof)


def mainline_vehicle(object_id: str, cfg: SynthConfig, lane: int, v: float, t0: float,
                     object_class: str = "car", width: float = 1.8, length: float = 4.6) -> Vehicle:
    return Vehicle(object_id, object_class, width, length, v, t0, cfg.road_x0, cfg.road_x1,
                   lane * cfg.lane_width, cfg.lane_width, Keep())


def gap_pair(cfg: SynthConfig, gap_s: float, start_pos: float = 0.3, length_m: float = 80.0,
             v: float = 25.0, ch_width: float = 1.8, ch_length: float = 4.6) -> tuple[Vehicle, Vehicle]:
    """Merging ego and a main_1 challenger at equal speed with true PET ``gap_s``.

    gap_s > 0: the ego's front-left corner reaches the challenger's right
    edge line ``gap_s`` after the challenger's rear-right corner passed that
    point (ego merges behind). gap_s < 0: the challenger's front-right
    corner arrives ``|gap_s|`` after the ego's rear-left corner (ego merges
    in front).
    """
    ego = merge_vehicle("ego", cfg, start_pos, length_m, v, 0.0)
    y_line = cfg.lane_width - 0.5 * ch_width
    front = gap_s > 0
    t_star = _first_root(lambda t: ego.corner(t, front, True)[1] - y_line, ego.t0, ego.t_exit, 0.01)
    if t_star is None:
        raise ValueError("ego never reaches the challenger lane")
    x_star = float(ego.corner(t_star, front, True)[0])
    # challenger center position at time t_star - gap_s
    xc = x_star + (0.5 if front else -0.5) * ch_length
    t_ref = t_star - gap_s
    t0 = t_ref - (xc - cfg.road_x0) / v
    ch = mainline_vehicle("ch", cfg, 1, v, t0, "car", ch_width, ch_length)
    return ego, ch


def _frame_at(t: float, rate: float) -> int:
    return int(round(t * rate))


def label_vehicles(vehicles: dict, cfg: SynthConfig, lanes: LaneModel) -> dict:
    """Ground truth per object: label, start/end, challengers with true PETs."""
    ref = lanes.merge_ref_length
    labels = {}
    mains = [v for v in vehicles.values() if isinstance(v.profile, Keep) and v.y0 > 0]
    for oid, veh in sorted(vehicles.items()):
        prof = veh.profile
        if isinstance(prof, Keep):
            labels[oid] = {"label": "none"}
            continue
        kind = "merge" if isinstance(prof, Sigmoid) else "abort"
        peak = prof.lanes if isinstance(prof, Sigmoid) else prof.peak
        x_s = _x_of_fraction(prof, cfg.onset, veh.x0, veh.x_exit)
        if kind == "merge":
            x_e = _x_of_fraction(prof, peak - cfg.onset, veh.x0, veh.x_exit)
        else:
            x_e = _x_of_fraction(prof, cfg.onset, x_s + 1.0, veh.x_exit, rising=False)
        t_s, t_e = veh.time_at_x(x_s), veh.time_at_x(x_e)
        lab = {
            "label": kind,
            "start_pos": (x_s - cfg.merge_start_s) / ref,
            "end_pos": (x_e - cfg.merge_start_s) / ref,
            "start_time": t_s,
            "end_time": t_e,
            "start_frame": _frame_at(t_s, cfg.rate_hz),
            "end_frame": _frame_at(t_e, cfg.rate_hz),
            "target_lane": MAIN_1,
            "challengers": [],
        }
        t_k = kappa_onset_time(veh)
        if t_k is not None:
            x_k = float(veh.x(t_k))
            for ch in mains:
                if abs(ch.y0 - cfg.lane_width) > 1e-9 or not ch.t0 <= t_k <= ch.t_exit:
                    continue
                if abs(float(ch.x(t_k)) - x_k) <= cfg.vicinity_m:
                    p = true_pet(veh, ch)
                    lab["challengers"].append({"id": ch.object_id, "pet_s": p})
            lab["kappa_onset_time"] = t_k
        labels[oid] = lab
    return labels


def generate(cfg: SynthConfig) -> LabeledDataset:
    """Deterministic labeled dataset for ``cfg``."""
    rng = Generator(PCG64(cfg.seed))
    lanes = build_lanes(cfg)
    vehicles: dict[str, Vehicle] = {}
    for i in range(cfg.n_mainline):
        cls, w, ln = _dims(rng, cfg)
        lane = 1 + int(rng.integers(0, 2))
        v = float(rng.uniform(*cfg.mainline_speed))
        t0 = float(rng.uniform(0.0, cfg.spawn_window_s))
        oid = f"h{i:04d}"
        vehicles[oid] = mainline_vehicle(oid, cfg, lane, v, t0, cls, w, ln)
    mains = [v for v in vehicles.values() if abs(v.y0 - cfg.lane_width) < 1e-9]

    lo, hi = cfg.start_pos_range
    for i in range(cfg.n_merging):
        cls, w, ln = _dims(rng, cfg)
        oid = f"m{i:04d}"
        for _attempt in range(50):
            start = float(np.clip(rng.normal(cfg.start_pos_mean, cfg.start_pos_std), lo, hi))
            length_m = float(rng.uniform(*cfg.merge_length_m))
            v = float(rng.uniform(*cfg.ramp_speed))
            t0 = float(rng.uniform(0.0, cfg.spawn_window_s))
            veh = merge_vehicle(oid, cfg, start, length_m, v, t0, cls, w, ln)
            # keep merges collision-free: no challenger closer than min_true_pet_s
            t_k = kappa_onset_time(veh)
            pets = [true_pet(veh, ch) for ch in mains
                    if t_k is not None and ch.t0 - 5 <= t_k <= ch.t_exit + 5]
            if all(p is None or abs(p) >= cfg.min_true_pet_s for p in pets):
                break
        vehicles[oid] = veh
    for i in range(cfg.n_aborting):
        cls, w, ln = _dims(rng, cfg)
        oid = f"a{i:04d}"
        start = float(rng.uniform(0.05, 0.4))
        out_m = float(rng.uniform(40.0, 60.0))
        peak = float(rng.uniform(*cfg.abort_peak))
        v = float(rng.uniform(*cfg.ramp_speed))
        t0 = float(rng.uniform(0.0, cfg.spawn_window_s))
        vehicles[oid] = abort_vehicle(oid, cfg, start, out_m, peak, v, t0, cls, w, ln)

    trajs = [vehicles[oid].sample(cfg.rate_hz, rng, cfg.noise_std) for oid in sorted(vehicles)]
    trajs = prepare(trajs, lanes)
    labels = label_vehicles(vehicles, cfg, lanes)
    return LabeledDataset(trajs, lanes, labels, vehicles, cfg)
