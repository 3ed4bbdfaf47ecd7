"""The compiled kernels must agree with the pure-Python fallback."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rampminer import _pure, kernels

ext = pytest.importorskip("rampminer._ext")

coords = st.floats(-50, 50, allow_nan=False, allow_infinity=False)


def test_backend_is_reported():
    assert kernels.BACKEND in ("cython", "python")


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 30), st.integers(2, 5), st.integers(0, 10**6))
def test_viterbi_backends_agree(n, k, seed):
    rng = np.random.default_rng(seed)
    A = rng.dirichlet(np.ones(k), size=k)
    A[rng.random((k, k)) < 0.2] = 0.0
    A[:, 0] += 1e-3
    A /= A.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore"):
        la = np.log(A)
    lp = np.log(rng.dirichlet(np.ones(k)))
    lb = rng.normal(0, 3, (n, k))
    p1, s1 = _pure.viterbi_decode(lp, la, lb)
    p2, s2 = ext.viterbi_decode(lp, la, lb)
    assert list(p1) == list(p2)
    assert s1 == pytest.approx(s2, rel=1e-12, abs=1e-12)


def test_viterbi_ties_resolve_identically():
    lp = np.log(np.full(3, 1 / 3))
    la = np.log(np.full((3, 3), 1 / 3))
    lb = np.zeros((5, 3))
    assert list(_pure.viterbi_decode(lp, la, lb)[0]) == [0] * 5
    assert list(ext.viterbi_decode(lp, la, lb)[0]) == [0] * 5


@settings(max_examples=300, deadline=None)
@given(st.lists(st.integers(0, 3), min_size=1, max_size=12), st.lists(st.integers(0, 3), min_size=1, max_size=12))
def test_dtw_backends_agree(a, b):
    assert _pure.dtw_distance(np.array(a, float), np.array(b, float)) == ext.dtw_distance(np.array(a, float), np.array(b, float))


@settings(max_examples=150, deadline=None)
@given(st.lists(st.tuples(coords, coords), min_size=2, max_size=8, unique=True),
       st.lists(st.tuples(coords, coords), min_size=1, max_size=10))
def test_projection_backends_agree(verts, pts):
    V = np.array(verts)
    seg = np.hypot(*np.diff(V, axis=0).T)
    if np.any(seg < 1e-9):
        return
    S = np.concatenate(([0.0], np.cumsum(seg)))
    P = np.array(pts)
    r1 = _pure.project_points(P, V, S)
    r2 = ext.project_points(P, V, S)
    for a, b in zip(r1, r2):
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-9)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(coords, coords), min_size=2, max_size=8),
       st.lists(st.tuples(coords, coords), min_size=2, max_size=8))
def test_first_crossing_backends_agree(a, b):
    A, B = np.array(a), np.array(b)
    r1 = _pure.first_crossing(A, B)
    r2 = ext.first_crossing(A, B)
    assert r1[0] == r2[0] and r1[1] == r2[1] and bool(r1[4]) == bool(r2[4])
    assert r1[2] == pytest.approx(r2[2], abs=1e-12)
    assert r1[3] == pytest.approx(r2[3], abs=1e-12)


def test_read_only_inputs_accepted():
    V = np.array([[0.0, 0.0], [10.0, 0.0]])
    V.setflags(write=False)
    s, d, f = ext.project_points(np.array([[3.0, 1.0]]), V, np.array([0.0, 10.0]))
    assert (s[0], d[0], f[0]) == (3.0, 1.0, 0)


def test_env_var_forces_fallback():
    import subprocess
    import sys
    env = {**__import__("os").environ, "RAMPMINER_PURE_PYTHON": "1"}
    out = subprocess.run([sys.executable, "-c", "import rampminer.kernels as k; print(k.BACKEND)"],
                         capture_output=True, text=True, env=env, check=True).stdout.strip()
    assert out == "python"
