import json
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from rxnkit.estimation import Dataset
from rxnkit.fileio import (
    DatasetFormatError,
    atomic_write,
    dataset_csv,
    ensemble_csv,
    events_csv,
    fit_json,
    read_csv_table,
    read_dataset,
    trajectory_csv,
)
from rxnkit.svgplot import line_plot


def test_trajectory_csv_round_trips_floats():
    times = np.array([0.0, 0.1, 1 / 3])
    states = np.array([[1.0, 2e-17], [0.5, 1 / 7], [np.pi, 0.0]])
    text = trajectory_csv(times, states, ["A", "B"])
    header, rows = read_csv_table(text)
    assert header == ["t", "A", "B"]
    np.testing.assert_array_equal(np.array(rows, dtype=float), np.c_[times, states])


def test_events_csv_marks_fired_steps_one_based():
    text = events_csv([0.0, 0.5], np.array([[3, 0], [2, 1]]), np.array([-1, 0]), ["X", "Y"])
    assert text.splitlines() == ["t,X,Y,fired", "0.0,3,0,", "0.5,2,1,1"]


def test_ensemble_csv_header():
    text = ensemble_csv([0.0], np.array([[1.0, 2.0]]), np.array([[0.0, 0.5]]), ["X", "Y"])
    assert text.splitlines()[0] == "t,mean_X,mean_Y,var_X,var_Y"


def test_dataset_round_trip_with_missing():
    d = Dataset([0.0, 0.2, 0.4], [[1.0, np.nan], [0.5, 0.25], [np.nan, 0.125]], ("A", "B"))
    back = read_dataset(dataset_csv(d))
    assert back.observed_species == ("A", "B")
    np.testing.assert_array_equal(back.times, d.times)
    np.testing.assert_array_equal(np.isnan(back.observations), np.isnan(d.observations))
    assert back.n_observed == 4


@pytest.mark.parametrize("text", [
    "",
    "time,A\n0,1\n",
    "t,A\n",
    "t,A\n0,1,2\n",
    "t,A\n0,x\n",
    "t,A\n,1\n",
    "t,A\n1,1\n0,2\n",
])
def test_malformed_datasets(text):
    with pytest.raises(DatasetFormatError):
        read_dataset(text)


def test_atomic_write_replaces(tmp_path):
    target = tmp_path / "out.csv"
    target.write_text("old")
    atomic_write(target, "new\n")
    assert target.read_text() == "new\n"
    assert [p.name for p in tmp_path.iterdir()] == ["out.csv"]


def test_atomic_write_leaves_no_temp_on_failure(tmp_path):
    with pytest.raises(TypeError):
        atomic_write(tmp_path / "x.txt", 3)
    assert list(tmp_path.iterdir()) == []


def test_fit_json_sorted():
    assert json.loads(fit_json({"b": 1, "a": [0.5]})) == {"a": [0.5], "b": 1}


def test_svg_is_wellformed():
    x = np.linspace(0, 1, 20)
    svg = line_plot(x, [x, x**2], ["lin", "sq"], title="a < b", markers=[(x[::4], x[::4] ** 2, "data")])
    root = ET.fromstring(svg)
    ns = "{http://www.w3.org/2000/svg}"
    assert len(root.findall(f"{ns}polyline")) == 2
    assert len(root.findall(f"{ns}circle")) == 5
    texts = [t.text for t in root.iter(f"{ns}text")]
    assert "a < b" in texts and "data" in texts


def test_svg_log_axis_drops_nonpositive_times():
    x = np.array([0.0, 1e-3, 1.0, 1e3])
    root = ET.fromstring(line_plot(x, [np.ones(4)], ["c"], logx=True, step=True))
    ns = "{http://www.w3.org/2000/svg}"
    pts = root.find(f"{ns}polyline").get("points").split()
    assert len(pts) == 3 * 2 - 1
    assert any(t.text == "1e0" for t in root.iter(f"{ns}text"))


def test_svg_handles_constant_and_nan_series():
    svg = line_plot([0, 1, 2], [[1.0, math.nan, 1.0]], ["flat"])
    ET.fromstring(svg)
