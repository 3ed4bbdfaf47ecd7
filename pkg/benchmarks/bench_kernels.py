"""Compiled vs pure-Python kernels, plus one end-to-end extraction per backend.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--skip-pipeline]
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from rampminer import _pure

try:
    from rampminer import _ext
except ImportError:  # extension not built
    _ext = None


def cases(rng):
    n = 2000
    lb = rng.normal(0, 2, (n, 4))
    la = np.log(rng.dirichlet(np.ones(4), size=4))
    lp = np.log(np.full(4, 0.25))
    a = rng.integers(0, 4, 300).astype(float)
    b = rng.integers(0, 4, 300).astype(float)
    xs = np.linspace(0, 800, 33)
    verts = np.column_stack([xs, 5 * np.sin(xs / 100)])
    cum = np.concatenate(([0.0], np.cumsum(np.hypot(*np.diff(verts, axis=0).T))))
    pts = np.column_stack([rng.uniform(0, 800, 700), rng.uniform(-5, 10, 700)])
    t = np.linspace(0, 1, 600)
    pa = np.column_stack([400 * t, 8 * t - 2])
    pb = np.column_stack([400 * t + 3, np.full_like(t, 2.9)])
    return {
        "viterbi (2000 frames)": ("viterbi_decode", (lp, la, lb)),
        "dtw (300 x 300)": ("dtw_distance", (a, b)),
        "project (700 pts, 32 segs)": ("project_points", (pts, verts, cum)),
        "first_crossing (600 x 600)": ("first_crossing", (pa, pb)),
    }


def pipeline_time(pure: bool) -> float:
    code = ("import time; from rampminer.synth import SynthConfig, generate; "
            "from rampminer.pipeline import extract_all; ds = generate(SynthConfig(seed=1)); "
            "t = time.perf_counter(); extract_all(ds.trajectories, ds.lanes); print(time.perf_counter() - t)")
    env = {**os.environ, "RAMPMINER_PURE_PYTHON": "1" if pure else "0"}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--skip-pipeline", action="store_true")
    args = ap.parse_args()
    if _ext is None:
        sys.exit("compiled extension not available; build with `pip install -e . --no-build-isolation`")
    rng = np.random.default_rng(0)
    print(f"{'kernel':30s} {'python ms':>10s} {'cython ms':>10s} {'speedup':>8s}")
    for name, (fn, argv) in cases(rng).items():
        tp = min(timeit.repeat(lambda: getattr(_pure, fn)(*argv), number=1, repeat=args.repeat))
        tc = min(timeit.repeat(lambda: getattr(_ext, fn)(*argv), number=1, repeat=args.repeat))
        print(f"{name:30s} {1e3 * tp:10.3f} {1e3 * tc:10.3f} {tp / tc:7.1f}x")
    if not args.skip_pipeline:
        tp, tc = pipeline_time(True), pipeline_time(False)
        print(f"{'extract (200 trajectories)':30s} {1e3 * tp:10.1f} {1e3 * tc:10.1f} {tp / tc:7.1f}x")


if __name__ == "__main__":
    main()
