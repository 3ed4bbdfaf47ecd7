import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rampminer.extraction import (
    DEFAULT_PATTERNS, Pattern, PatternFileError, classify, dtw_distance, extract_scenarios, find_maneuvers,
    load_patterns, partition, run_length_compress, save_patterns, similarity,
)
from rampminer.hmm import default_params
from rampminer.ingest import prepare
from rampminer.synth import abort_vehicle, mainline_vehicle, merge_vehicle

from oracles import dtw_brute

series = st.lists(st.integers(0, 3), min_size=1, max_size=6)


@settings(max_examples=300, deadline=None)
@given(series, series)
def test_dtw_equals_brute_force(a, b):
    assert dtw_distance(a, b) == dtw_brute(a, b)


@given(series, series)
def test_dtw_symmetric_and_zero_on_self(a, b):
    assert dtw_distance(a, b) == dtw_distance(b, a)
    assert dtw_distance(a, a) == 0.0


def test_dtw_rejects_empty():
    with pytest.raises(ValueError):
        dtw_distance([], [1])


def test_similarity_examples():
    assert similarity([0, 0, 1, 1, 2, 3, 3], [0, 1, 2, 3]) == 1.0
    # best alignment: 2 against (2, 1), then 3 against 0
    assert dtw_distance([0, 1, 2, 3], [0, 1, 2, 1, 0]) == dtw_brute([0, 1, 2, 3], [0, 1, 2, 1, 0]) == 4.0
    assert similarity([0, 1, 2, 3], [0, 1, 2, 1, 0]) == 0.2
    assert similarity([1, 2, 3], [0, 1, 2, 3]) == 0.5


def test_run_length_compress():
    assert run_length_compress([0, 0, 1, 1, 1, 2, 1, 1]) == [0, 1, 2, 1]
    assert run_length_compress([]) == []


def test_classify_prefers_first_pattern_on_tie():
    pats = [Pattern("x", (0, 2)), Pattern("y", (2, 0))]
    cands = partition([0, 2, 0])
    # [0,2,0] is at distance 2 from both patterns
    assert classify(cands[0], pats).best_pattern == "x"
    assert classify(cands[0], pats[::-1]).best_pattern == "y"


def test_classify_default_library():
    for ctx, name in (([0, 1, 2, 3], "merge"), ([0, 1, 2, 1, 0], "abort"), ([1, 2, 3], "overshoot-merge"),
                      ([0, 2, 3], "merge"), ([0, 2, 0], "abort")):
        cand = partition(ctx)[0]
        assert classify(cand, DEFAULT_PATTERNS).best_pattern == name


def test_partition_example():
    labels = [0, 0, 1, 2, 2, 3, 1, 0, 0, 1, 2, 1]
    (a, b) = partition(labels)
    assert a.frame_range == (3, 5) and a.context_range == (1, 7)
    assert list(a.context) == [0, 1, 2, 2, 3, 1, 0]
    assert b.frame_range == (10, 10) and b.context_range == (8, 11)


def test_partition_respects_barriers():
    labels = [0, 1, 2, 3, 3, 2, 2, 0]
    barriers = np.zeros(8, bool)
    barriers[4] = True
    a, b = partition(labels, barriers=barriers)
    assert a.frame_range == (2, 3) and a.context_range == (0, 3)
    assert b.frame_range == (4, 6) and b.context_range == (4, 7)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 3), min_size=1, max_size=40), st.integers(1, 3))
def test_partition_properties(labels, xi):
    labels = np.array(labels)
    cands = partition(labels, xi)
    covered = np.zeros(len(labels), bool)
    for c in cands:
        lo, hi = c.frame_range
        assert np.all(labels[lo:hi + 1] >= xi)
        # maximal runs
        assert lo == 0 or labels[lo - 1] < xi
        assert hi == len(labels) - 1 or labels[hi + 1] < xi
        clo, chi = c.context_range
        assert clo <= lo and hi <= chi
        assert clo == 0 or labels[clo] == 0
        assert chi == len(labels) - 1 or labels[chi] == 0
        # no Idle strictly between the context end and the core
        assert not np.any(labels[clo + 1:lo] == 0) and not np.any(labels[hi + 1:chi] == 0)
        covered[lo:hi + 1] = True
    np.testing.assert_array_equal(covered, labels >= xi)


def test_pattern_file_roundtrip_and_errors(tmp_path):
    save_patterns(DEFAULT_PATTERNS, tmp_path / "p.json")
    assert tuple(load_patterns(tmp_path / "p.json")) == DEFAULT_PATTERNS
    (tmp_path / "bad.json").write_text(json.dumps([{"name": "x", "sequence": [0, 7]}]))
    with pytest.raises(PatternFileError):
        load_patterns(tmp_path / "bad.json")
    (tmp_path / "empty.json").write_text("[]")
    with pytest.raises(PatternFileError):
        load_patterns(tmp_path / "empty.json")
    with pytest.raises(PatternFileError):
        load_patterns(tmp_path / "none.json")


def _run(veh, cfg, lanes):
    tr = prepare([veh.sample(cfg.rate_hz)], lanes)[0]
    return tr, find_maneuvers(tr, lanes, default_params(), DEFAULT_PATTERNS)


def test_merge_is_one_maneuver(cfg, lanes):
    tr, ms = _run(merge_vehicle("m", cfg, 0.3, 80.0, 25.0, 0.0), cfg, lanes)
    (m,) = ms
    assert m.pattern_class == "merge" and m.merge_family and m.similarity >= 0.5
    assert m.skeleton[:3] == [0, 1, 2]
    assert m.source_lane == "ramp" and m.target_lane == "main_1" and m.direction == "left"
    assert m.start_index < m.cross_index < m.end_index


def test_abort_is_not_merge_family(cfg, lanes):
    tr, ms = _run(abort_vehicle("a", cfg, 0.2, 50.0, 0.55, 25.0, 0.0), cfg, lanes)
    (m,) = ms
    assert m.pattern_class == "abort" and not m.merge_family


def test_lane_keeping_has_no_maneuver(cfg, lanes):
    assert _run(mainline_vehicle("h", cfg, 1, 30.0, 0.0), cfg, lanes)[1] == []


def test_extract_scenarios_only_from_ramp(cfg, lanes):
    # a mainline lane change main_1 -> main_2 is not an on-ramp scenario
    v = mainline_vehicle("h", cfg, 1, 30.0, 0.0)
    from rampminer.synth import Sigmoid
    v.profile = Sigmoid.between(200.0, 280.0, cfg.onset)
    tr = prepare([v.sample(cfg.rate_hz)], lanes)[0]
    assert [m.source_lane for m in find_maneuvers(tr, lanes, default_params(), DEFAULT_PATTERNS)] == ["main_1"]
    assert extract_scenarios(tr, lanes, default_params()) == []


def test_extract_scenario_positions(cfg, lanes):
    veh = merge_vehicle("m", cfg, 0.3, 80.0, 25.0, 0.0)
    tr = prepare([veh.sample(cfg.rate_hz)], lanes)[0]
    (rec,) = extract_scenarios(tr, lanes, default_params())
    assert rec.maneuver_start_pos == pytest.approx(0.3, abs=0.03)
    assert rec.maneuver_start_pos < rec.maneuver_end_pos
    assert rec.frame_window[0] <= rec.start_frame <= rec.cross_frame <= rec.end_frame


def test_min_duration_filter(cfg, lanes):
    veh = merge_vehicle("m", cfg, 0.3, 80.0, 25.0, 0.0)
    tr = prepare([veh.sample(cfg.rate_hz)], lanes)[0]
    assert extract_scenarios(tr, lanes, default_params(), min_duration=100.0) == []
