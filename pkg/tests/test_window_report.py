import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from orbitcount.families import invariance_suite, random_window
from orbitcount.report import dumps, to_plain
from orbitcount.window import Region, Window

coords = st.floats(-5, 5, allow_nan=False)


@given(st.lists(coords, min_size=2, max_size=2))
def test_ball_margin_is_signed_distance(p):
    r = Region.ball([0.0, 0.0], 2.0)
    assert r.margin(p) == pytest.approx(2.0 - math.hypot(*p))
    assert r.contains(p) == (math.hypot(*p) < 2.0)


@given(st.lists(coords, min_size=3, max_size=3))
def test_box_margin(p):
    r = Region.box([-1, -2, -3], [1, 2, 3])
    expected = min(min(v - lo, hi - v) for v, lo, hi in zip(p, (-1, -2, -3), (1, 2, 3)))
    assert r.margin(p) == pytest.approx(expected)


def test_grid_points_lie_inside():
    pts = Region.ball([1.0, -1.0], 0.5).grid(6)
    assert len(pts) > 0
    assert all(Region.ball([1.0, -1.0], 0.5).contains(p) for p in pts)


def test_window_validation_and_round_trip():
    with pytest.raises(ValueError):
        Window(Region.ball([0.0], 1.0), s_max=0.0)
    with pytest.raises(ValueError):
        Window(Region.ball([0.0], 1.0), s_max=1.0, degree_max=0)
    with pytest.raises(ValueError):
        Region.box([0, 0], [1, 0])
    w = Window(Region.box([0, 0], [1, 2]), 3.0, 2)
    assert Region.from_dict(w.to_dict()["region"]) == w.region
    assert w.admits(2.9, 2) and not w.admits(3.1, 1) and not w.admits(1.0, 3)


def test_to_plain_handles_numpy_and_non_finite():
    data = {1: np.float64(0.5), "a": np.arange(3), "b": (np.int64(4), np.bool_(True)),
            "c": float("inf"), "d": float("nan"), "e": 1 + 2j}
    plain = to_plain(data)
    assert plain == {"1": 0.5, "a": [0, 1, 2], "b": [4, True], "c": "inf", "d": "nan", "e": [1.0, 2.0]}
    text = dumps(plain)
    assert text.endswith("\n") and json.loads(text) == plain
    assert dumps({"b": 1, "a": 2}).index('"a"') < dumps({"b": 1, "a": 2}).index('"b"')


def test_invariance_suite_is_reproducible():
    a, b = invariance_suite(6), invariance_suite(6)
    for fa, fb in zip(a, b):
        assert np.array_equal(fa.field.coef_layers, fb.field.coef_layers)
    assert [f.field.ambient_dim for f in a] == [2, 3, 2, 3, 2, 3]
    assert random_window(a[1]).region.dim == 3
