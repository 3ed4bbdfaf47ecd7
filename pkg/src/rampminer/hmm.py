"""Gaussian-emission HMM over the four lane-change primitives.

States: Idle (0), Approach (1), Cross (2), Change (3). The default model
holds fixed reference transition percentages and per-state d_c emission
statistics; kappa has mean 0 or 1 per state and a spread floored at 0.1.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from . import kernels

IDLE, APPROACH, CROSS, CHANGE = 0, 1, 2, 3
STATE_NAMES = ("Idle", "Approach", "Cross", "Change")
KAPPA_STD_FLOOR = 0.1
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

# percent, rows = from-state
DEFAULT_TRANSITIONS_PCT = (
    (98.94, 1.03, 0.03, 0.00),
    (1.46, 97.53, 1.01, 0.00),
    (0.47, 8.28, 86.17, 5.08),
    (0.00, 0.33, 5.98, 93.69),
)
DEFAULT_DC = ((0.09, 0.06), (0.33, 0.08), (0.53, 0.09), (0.89, 0.11))
DEFAULT_KAPPA = (0.0, 0.0, 1.0, 1.0)


class HmmParamsError(ValueError):
    pass


class Component(NamedTuple):
    weight: float
    mean: tuple[float, float]
    std: tuple[float, float]


@dataclass(frozen=True)
class HmmParams:
    A: np.ndarray
    pi: np.ndarray
    emissions: tuple[tuple[Component, ...], ...]

    def __post_init__(self):
        A = np.array(self.A, dtype=np.float64)
        pi = np.array(self.pi, dtype=np.float64)
        k = len(pi)
        if A.shape != (k, k) or len(self.emissions) != k:
            raise HmmParamsError("inconsistent number of states")
        if np.any(A < 0) or np.any(np.abs(A.sum(axis=1) - 1.0) > 1e-9):
            raise HmmParamsError("transition rows must be non-negative and sum to 1")
        if np.any(pi < 0) or abs(pi.sum() - 1.0) > 1e-9:
            raise HmmParamsError("initial distribution must sum to 1")
        for comps in self.emissions:
            if not comps:
                raise HmmParamsError("every state needs an emission component")
            if abs(sum(c.weight for c in comps) - 1.0) > 1e-9:
                raise HmmParamsError("mixture weights must sum to 1")
            for c in comps:
                if len(c.mean) != 2 or len(c.std) != 2 or min(c.std) <= 0:
                    raise HmmParamsError("emission components need 2 means and 2 positive stds")
        A.setflags(write=False)
        pi.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "pi", pi)

    @property
    def n_states(self) -> int:
        return len(self.pi)

    def to_dict(self) -> dict:
        def emission(comps):
            if len(comps) == 1:
                return {"mean": list(comps[0].mean), "std": list(comps[0].std)}
            return {"components": [
                {"weight": c.weight, "mean": list(c.mean), "std": list(c.std)} for c in comps
            ]}

        return {"A": self.A.tolist(), "pi": self.pi.tolist(),
                "emissions": [emission(c) for c in self.emissions]}

    @classmethod
    def from_dict(cls, data: dict, kappa_std_floor: float = KAPPA_STD_FLOOR) -> "HmmParams":
        def comp(d, weight=1.0):
            mean = tuple(float(x) for x in d["mean"])
            std = [float(x) for x in d["std"]]
            if len(std) == 2:
                std[1] = max(std[1], kappa_std_floor)
            return Component(float(weight), mean, tuple(std))

        try:
            emissions = []
            for e in data["emissions"]:
                if "components" in e:
                    emissions.append(tuple(comp(c, c["weight"]) for c in e["components"]))
                else:
                    emissions.append((comp(e),))
            return cls(np.asarray(data["A"], dtype=float), np.asarray(data["pi"], dtype=float),
                       tuple(emissions))
        except HmmParamsError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise HmmParamsError(f"invalid HMM parameters: {exc}") from exc


def default_params() -> HmmParams:
    A = np.array(DEFAULT_TRANSITIONS_PCT, dtype=np.float64) / 100.0
    A = A / A.sum(axis=1, keepdims=True)
    emissions = tuple(
        (Component(1.0, (mu, kap), (sd, KAPPA_STD_FLOOR)),)
        for (mu, sd), kap in zip(DEFAULT_DC, DEFAULT_KAPPA)
    )
    return HmmParams(A, np.full(4, 0.25), emissions)


def load_params(path) -> HmmParams:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise HmmParamsError(f"HMM parameter file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise HmmParamsError(f"{path}: not valid JSON ({exc})") from exc
    return HmmParams.from_dict(data)


def _gauss_logpdf(x, mean, std):
    z = (x - mean) / std
    return -0.5 * z * z - math.log(std) - _LOG_SQRT_2PI


def emission_logpdf(state: int, obs: Sequence[float], params: HmmParams) -> float:
    """Log density of one (d_c, kappa) observation under a state's mixture."""
    d_c, kappa = float(obs[0]), float(obs[1])
    terms = [
        math.log(c.weight) + _gauss_logpdf(d_c, c.mean[0], c.std[0])
        + _gauss_logpdf(kappa, c.mean[1], c.std[1])
        for c in params.emissions[state] if c.weight > 0
    ]
    top = max(terms)
    return top + math.log(sum(math.exp(x - top) for x in terms))


def emission_matrix(obs: np.ndarray, params: HmmParams) -> np.ndarray:
    """(n_frames, n_states) log densities."""
    obs = np.asarray(obs, dtype=np.float64)
    out = np.empty((len(obs), params.n_states))
    for k, comps in enumerate(params.emissions):
        parts = []
        for c in comps:
            if c.weight <= 0:
                continue
            z0 = (obs[:, 0] - c.mean[0]) / c.std[0]
            z1 = (obs[:, 1] - c.mean[1]) / c.std[1]
            parts.append(math.log(c.weight) - 0.5 * (z0 * z0 + z1 * z1)
                         - math.log(c.std[0]) - math.log(c.std[1]) - 2 * _LOG_SQRT_2PI)
        out[:, k] = parts[0] if len(parts) == 1 else np.logaddexp.reduce(np.vstack(parts), axis=0)
    return out


def _log(x: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(x)


@dataclass
class PrimitiveSeries:
    object_id: str
    labels: np.ndarray
    log_likelihood: float

    def __len__(self) -> int:
        return len(self.labels)


def viterbi(obs, params: HmmParams, object_id: str = "") -> PrimitiveSeries:
    """Most likely primitive path; accepts a FeatureSeries or an (n, 2) array.

    Zero transition probabilities stay forbidden (log 0 = -inf).
    """
    if hasattr(obs, "as_array"):
        object_id = object_id or obs.object_id
        obs = obs.as_array()
    X = np.asarray(obs, dtype=np.float64).reshape(-1, 2)
    if len(X) == 0:
        raise ValueError("empty observation series")
    bad = ~np.isfinite(X).all(axis=1)
    if bad.any():
        raise ValueError(f"non-finite observation at frame index {int(np.argmax(bad))}")
    log_B = emission_matrix(X, params)
    path, score = kernels.viterbi_decode(_log(params.pi), _log(params.A), log_B)
    return PrimitiveSeries(object_id, np.asarray(path, dtype=np.int64), float(score))


def path_log_probability(path: Sequence[int], obs, params: HmmParams) -> float:
    """Joint log-probability of a state path and the observations."""
    X = np.asarray(obs, dtype=np.float64).reshape(-1, 2)
    lp = _log(params.pi)[path[0]] + emission_logpdf(path[0], X[0], params)
    logA = _log(params.A)
    for t in range(1, len(path)):
        lp += logA[path[t - 1], path[t]] + emission_logpdf(path[t], X[t], params)
    return float(lp)
