import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from semcast.errors import ScenarioError
from semcast.scene import (
    FeatureDistribution,
    Scenario,
    TileGrid,
    TileId,
    dump_scenario,
    load_scenario,
    scenario_from_dict,
    scenario_to_dict,
    tiles_of_viewport,
)


def test_grid_tile_boxes_partition_frame():
    # 523 and 517 are not divisible by 8: last row/col absorb the remainder.
    grid = TileGrid(frame_width=523, frame_height=517, rows=8, cols=8)
    owner = np.zeros((517, 523), dtype=int)
    for tile in grid.all_tiles():
        x0, y0, x1, y1 = grid.tile_pixel_box(tile)
        owner[y0:y1, x0:x1] += 1
    assert np.all(owner == 1)


def test_grid_rejects_degenerate():
    with pytest.raises(ScenarioError):
        TileGrid(frame_width=100, frame_height=100, rows=0, cols=4)


def test_viewport_counts():
    grid = TileGrid(frame_width=256, frame_height=256, rows=8, cols=8)
    assert len(tiles_of_viewport(grid, 0, 0, 1, 1)) == 4
    assert tiles_of_viewport(grid, 3, 3, 3, 3) == frozenset({TileId(3, 3)})
    grid46 = TileGrid(frame_width=240, frame_height=160, rows=4, cols=6)
    assert len(tiles_of_viewport(grid46, 0, 0, 3, 5)) == 24


def test_viewport_out_of_bounds():
    grid = TileGrid(frame_width=256, frame_height=256, rows=8, cols=8)
    with pytest.raises(ScenarioError):
        tiles_of_viewport(grid, 0, 0, 8, 3)


rects = st.tuples(
    st.integers(0, 7), st.integers(0, 7), st.integers(0, 7), st.integers(0, 7)
).map(lambda t: (min(t[0], t[2]), min(t[1], t[3]), max(t[0], t[2]), max(t[1], t[3])))


@given(rects, rects)
def test_viewport_sets_intersect_iff_rects_overlap(a, b):
    grid = TileGrid(frame_width=256, frame_height=256, rows=8, cols=8)
    overlap = not (a[2] < b[0] or b[2] < a[0] or a[3] < b[1] or b[3] < a[1])
    sets_meet = bool(tiles_of_viewport(grid, *a) & tiles_of_viewport(grid, *b))
    assert sets_meet == overlap


def test_case_study_shape(case_study):
    assert len(case_study.topology.bs_ids()) == 3
    assert case_study.users == ("u1", "u2", "u3", "u4", "u5")
    assert case_study.topology.mbs.bandwidth_bps == 200e6
    assert case_study.topology.bs("sbs1").bandwidth_bps == 150e6
    assert case_study.topology.bs("sbs2").bandwidth_bps == 100e6
    assert case_study.topology.bs("sbs1").covers == frozenset({"u1", "u2"})
    assert case_study.topology.bs("sbs2").covers == frozenset({"u4", "u5"})
    assert case_study.topology.sbs_of_user("u3") is None


def test_fov_out_of_range_rejected(case_study):
    doc = scenario_to_dict(case_study)
    doc["users"][0]["fov"] = {"tiles": [[99, 0]]}
    with pytest.raises(ScenarioError, match="outside"):
        scenario_from_dict(doc)


def test_uoa_length_mismatch_rejected(case_study):
    doc = scenario_to_dict(case_study)
    doc["users"][0]["uoa"] = [0.5, 0.5]
    with pytest.raises(ScenarioError, match="UOA"):
        scenario_from_dict(doc)


def test_feature_sum_above_one_rejected():
    with pytest.raises(ScenarioError, match="sum"):
        FeatureDistribution(np.full((2, 2, 3), 0.5))


def test_missing_file_names_path(tmp_path):
    missing = tmp_path / "nope.json"
    with pytest.raises(ScenarioError, match="nope.json"):
        load_scenario(missing)


def test_parse_error_reports_line(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text('{\n  "grid": [,]\n}\n')
    with pytest.raises(ScenarioError, match="line 2"):
        load_scenario(p)


def test_round_trip(case_study, tmp_path):
    p = tmp_path / "copy.json"
    dump_scenario(case_study, p)
    again = load_scenario(p)
    assert again == case_study
    # and the serialized form itself is stable
    q = tmp_path / "copy2.json"
    dump_scenario(again, q)
    assert p.read_text() == q.read_text()


def test_uncovered_user_rejected(case_study):
    doc = scenario_to_dict(case_study)
    doc["topology"]["mbs"]["covers"] = ["u1", "u2", "u4", "u5"]
    with pytest.raises(ScenarioError):
        scenario_from_dict(doc)
