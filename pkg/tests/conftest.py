import numpy as np
import pytest

from rampminer.ingest import Trajectory, prepare
from rampminer.synth import SynthConfig, build_lanes


def make_traj(oid, x, y, t=None, width=1.8, length=4.6, heading=None, cls="car", rate=25.0):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    frame = np.arange(n, dtype=np.int64)
    t = frame / rate if t is None else np.asarray(t, dtype=float)
    if heading is None:
        heading = np.zeros(n)
    return Trajectory(oid, cls, frame, t, x, y, np.asarray(heading, dtype=float), np.full(n, 25.0),
                      np.full(n, width), np.full(n, length))


@pytest.fixture(scope="session")
def cfg():
    return SynthConfig(n_mainline=0, n_merging=0, n_aborting=0)


@pytest.fixture(scope="session")
def lanes(cfg):
    return build_lanes(cfg)


@pytest.fixture
def traj_factory(lanes):
    def build(oid, x, y, **kw):
        return prepare([make_traj(oid, x, y, **kw)], lanes)[0]
    return build


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, text = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {text}")
