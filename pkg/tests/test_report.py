import json

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from holonomy_lab.report import format_float, plain, render, to_csv, to_json


def test_float_formatting():
    assert format_float(1.0) == "1.0"
    assert format_float(0.1) == "0.10000000000000001"
    assert format_float(1e-20) == "9.9999999999999995e-21"
    assert format_float(float("nan")) == '"nan"'
    assert format_float(float("-inf")) == '"-inf"'


def test_plain_converts_numpy():
    out = plain({"a": np.float64(1.5), "b": np.arange(3), "c": (np.bool_(True), np.int64(4))})
    assert out == {"a": 1.5, "b": [0, 1, 2], "c": [True, 4]}
    assert type(out["b"][0]) is int


def test_json_sorted_and_parseable():
    text = to_json({"z": 1.0, "a": {"y": [1.0, 2.5], "b": "s"}, "m": [], "n": {}, "k": None, "f": False, "r": [{"u": 1}]})
    assert text.index('"a"') < text.index('"m"') < text.index('"z"')
    data = json.loads(text)
    assert data["a"]["y"] == [1.0, 2.5] and data["k"] is None and data["f"] is False


def test_json_nonfinite_become_strings():
    assert json.loads(to_json({"x": float("inf"), "y": [float("nan")]})) == {"x": "inf", "y": ["nan"]}


def test_csv_rows_table():
    text = to_csv({"rows": [{"b": 2.0, "a": [1.0, 2.0]}, {"a": [3.0], "c": "x"}], "other": 1})
    assert text.splitlines() == ["a,b,c", "1.0 2.0,2.0,", "3.0,,x"]


def test_csv_flattened():
    text = render({"b": {"y": 0.5}, "a": 1}, "csv")
    assert text.splitlines() == ["key,value", "a,1", "b.y,0.5"]


@settings(max_examples=100, deadline=None)
@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_roundtrip_is_exact(x):
    assert float(format_float(x)) == x


@settings(max_examples=30, deadline=None)
@given(st.dictionaries(st.text("abc", min_size=1, max_size=4), st.floats(-1e6, 1e6), max_size=6))
def test_json_deterministic_and_roundtrips(d):
    assert to_json(d) == to_json(dict(reversed(list(d.items()))))
    assert json.loads(to_json(d)) == d
