import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rampminer.geometry import (
    MAINLINE, ON_RAMP, Lane, LaneFileError, LaneModel, Polyline, load_lanes, normalized_maneuver_position,
    project, save_lanes, segment_intersection, straight_polyline,
)

coords = st.floats(-100, 100, allow_nan=False, allow_infinity=False)


def brute_project(point, verts):
    """Dense sampling of the polyline; reference for the closest point."""
    best = (math.inf, None)
    s0 = 0.0
    for a, b in zip(verts[:-1], verts[1:]):
        a, b = np.asarray(a, float), np.asarray(b, float)
        L = float(np.hypot(*(b - a)))
        for t in np.linspace(0, 1, 2001):
            p = a + t * (b - a)
            d = float(np.hypot(*(np.asarray(point) - p)))
            if d < best[0] - 1e-12:
                best = (d, s0 + t * L)
        s0 += L
    return best


def test_polyline_rejects_bad_input():
    with pytest.raises(ValueError):
        Polyline([[0, 0]])
    with pytest.raises(ValueError):
        Polyline([[0, 0], [0, 0], [1, 0]])
    with pytest.raises(ValueError):
        Polyline([[0, 0], [np.nan, 1]])


def test_cumulative_arc_length():
    pl = Polyline([[0, 0], [3, 4], [3, 10]])
    np.testing.assert_allclose(pl.cum_s, [0, 5, 11])
    assert pl.length == 11


def test_project_examples():
    line = Polyline([[0, 0], [10, 0]])
    assert project((0, 0), line)[:2] == (0.0, 0.0)
    assert project((10, 0), line)[:2] == (10.0, 0.0)
    pos = project((30, 2), Polyline([[0, 0], [100, 0]]))
    assert pos.s == pytest.approx(30) and pos.d == pytest.approx(2) and not pos.extrapolated


def test_project_sign_right_is_negative():
    assert project((5, -1.5), Polyline([[0, 0], [10, 0]])).d == pytest.approx(-1.5)


def test_project_extrapolates_beyond_ends():
    line = Polyline([[0, 0], [10, 0], [20, 0]])
    before = project((-4, 1), line)
    after = project((27, -2), line)
    assert before == (pytest.approx(-4), pytest.approx(1), True)
    assert after == (pytest.approx(27), pytest.approx(-2), True)


def test_project_tie_prefers_smallest_s():
    # equidistant from both legs of a V
    line = Polyline([[-5, 5], [0, 0], [5, 5]])
    pos = project((0, 5), line)
    assert pos.s == pytest.approx(0.5 * math.hypot(5, 5))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(coords, coords), min_size=2, max_size=5, unique=True), coords, coords)
def test_project_matches_dense_sampling(verts, px, py):
    seg = np.hypot(*np.diff(np.array(verts), axis=0).T)
    if np.any(seg < 1e-3):
        return
    line = Polyline(verts)
    pos = project((px, py), line)
    dist, _ = brute_project((px, py), verts)
    if not pos.extrapolated:
        assert abs(pos.d) == pytest.approx(dist, abs=max(seg) / 2000 + 1e-6)
        assert abs(pos.d) <= dist + 1e-9


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(coords, coords), min_size=2, max_size=6, unique=True), st.floats(0, 1))
def test_points_on_polyline_project_to_themselves(verts, frac):
    seg = np.hypot(*np.diff(np.array(verts), axis=0).T)
    if np.any(seg < 1e-3):
        return
    line = Polyline(verts)
    s = frac * line.length
    p = line.point_at(s)
    pos = project(p, line)
    assert abs(pos.d) < 1e-9
    # the closest point may sit on another leg at equal (zero) distance only at self-intersections
    again = project(line.point_at(pos.s), line)
    assert again.s == pytest.approx(pos.s, abs=1e-9) and abs(again.d) < 1e-9


def test_segment_intersection_examples():
    hit = segment_intersection((0, 0), (2, 0), (1, -1), (1, 1))
    assert hit.point == (1.0, 0.0) and hit.u == 0.5 and hit.v == 0.5 and not hit.degenerate
    assert segment_intersection((0, 0), (1, 0), (2, 0), (3, 0)) is None
    assert segment_intersection((0, 0), (4, 4), (0, 4), (4, 0)).point == pytest.approx((2, 2))


def test_segment_intersection_collinear_overlap():
    hit = segment_intersection((0, 0), (4, 0), (2, 0), (6, 0))
    assert hit.degenerate and hit.point == pytest.approx((3, 0))
    assert hit.u == pytest.approx(0.75) and hit.v == pytest.approx(0.25)


def test_segment_intersection_touching_endpoint():
    hit = segment_intersection((0, 0), (1, 1), (1, 1), (2, 0))
    assert hit.point == pytest.approx((1, 1)) and hit.u == 1.0 and hit.v == 0.0


@settings(max_examples=300, deadline=None)
@given(*(st.tuples(st.integers(-5, 5), st.integers(-5, 5)) for _ in range(4)))
def test_segment_intersection_symmetric(a1, a2, b1, b2):
    h1 = segment_intersection(a1, a2, b1, b2)
    h2 = segment_intersection(b1, b2, a1, a2)
    assert (h1 is None) == (h2 is None)
    if h1 is not None:
        assert h1.point == pytest.approx(h2.point, abs=1e-9)
        assert (h1.u, h1.v) == pytest.approx((h2.v, h2.u), abs=1e-9)
        assert h1.degenerate == h2.degenerate


def _model(start=40.0, ref=160.0):
    ramp = Lane("r", ON_RAMP, straight_polyline(0, 200, 1.875), straight_polyline(0, 200, -1.875),
                straight_polyline(0, 200, 0))
    main = Lane("m", MAINLINE, straight_polyline(-50, 300, 5.625), straight_polyline(-50, 300, 1.875),
                straight_polyline(-50, 300, 3.75))
    return LaneModel((ramp, main), start, ref)


def test_normalized_position_examples():
    lm = _model()
    assert normalized_maneuver_position((40, 0), lm) == pytest.approx(0.0)
    assert normalized_maneuver_position((200, 0), lm) == pytest.approx(1.0)
    assert normalized_maneuver_position((120, 0), lm) == pytest.approx(0.5)
    assert normalized_maneuver_position((264, 0), lm) == pytest.approx(1.4)


@given(st.floats(0, 190), st.floats(1, 300))
def test_normalized_position_affine_in_ref_length(s, ref):
    a = normalized_maneuver_position((s, 0.0), _model(10.0, ref))
    b = normalized_maneuver_position((s, 0.0), _model(10.0, 2 * ref))
    assert b == pytest.approx(a / 2, rel=1e-9, abs=1e-12)


def test_lane_model_invariants():
    lm = _model()
    with pytest.raises(LaneFileError):
        LaneModel((lm["m"],), 0, 10)
    with pytest.raises(LaneFileError):
        LaneModel(lm.lanes, 250, 10)
    with pytest.raises(LaneFileError):
        LaneModel(lm.lanes, 10, 0)


def test_lane_file_roundtrip(tmp_path):
    lm = _model()
    save_lanes(lm, tmp_path / "lanes.json")
    back = load_lanes(tmp_path / "lanes.json")
    assert back.to_dict() == lm.to_dict()
    data = json.loads((tmp_path / "lanes.json").read_text())
    assert set(data) >= {"lanes", "merge_start_s", "merge_ref_length"}


def test_lane_file_errors(tmp_path):
    with pytest.raises(LaneFileError, match="not found"):
        load_lanes(tmp_path / "missing.json")
    (tmp_path / "bad.json").write_text("{nope")
    with pytest.raises(LaneFileError):
        load_lanes(tmp_path / "bad.json")
    (tmp_path / "incomplete.json").write_text('{"lanes": []}')
    with pytest.raises(LaneFileError):
        load_lanes(tmp_path / "incomplete.json")


def test_lane_width_at(lanes):
    np.testing.assert_allclose(lanes.lane_width_at("main_1", [[100, 3.75], [150, 4]]), 3.75)
