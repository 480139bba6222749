"""
Hyperpulse Framework.

Copyright 2024.
"""

import csv
import json
import math

import numpy as np
import pytest

from hyperpulse.dynamics import ControlProfile, ReducedState, integrate_reduced
from hyperpulse.exceptions import ResultFormatError
from hyperpulse.media import (
    SWEEP_HEADER,
    TRAJECTORY_HEADER,
    converter,
    dumps,
    read_json,
    write_json,
    write_sweep_csv,
    write_trajectory_csv,
)
from hyperpulse.solvers import zero_result
from hyperpulse.solvers.enumerate import SweepRow


def test_converter():
    assert converter(np.arange(3)) == [0, 1, 2]
    assert converter(np.int64(4)) == 4
    assert converter(np.float64(0.5)) == 0.5
    assert converter(np.bool_(True)) is True
    assert converter(ReducedState(1.0, 2.0, 3.0)) == [1.0, 2.0, 3.0]
    with pytest.raises(TypeError):
        converter(object())


def test_dumps_handles_numpy_values():
    data = json.loads(dumps({"q": np.array([0.25, -1.0]), "n": np.int32(7)}))
    assert data == {"n": 7, "q": [0.25, -1.0]}


def test_json_round_trip(tmp_path):
    path = tmp_path / "result.json"
    write_json(str(path), {"r": 0.8336})
    assert read_json(str(path)) == {"r": 0.8336}


def test_json_to_stdout(capsys):
    write_json(None, {"r": 1.0})
    assert json.loads(capsys.readouterr().out) == {"r": 1.0}


def test_invalid_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(ResultFormatError):
        read_json(str(path))


def test_trajectory_csv(tmp_path):
    profile = ControlProfile.from_switch_times(1.0, [0.3, 0.7], [1.0, -1.0, 1.0], 1.0)
    trajectory = integrate_reduced(profile)
    path = tmp_path / "traj.csv"
    write_trajectory_csv(str(path), trajectory)

    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == ",".join(TRAJECTORY_HEADER)
    assert len(lines) == len(trajectory.times) + 1
    first = lines[1].split(",")
    assert [float(x) for x in first[:6]] == [0.0, 1.0, 0.0, 0.0, 0.0, 1.0]
    last = [float(x) for x in lines[-1].split(",")]
    # full double precision survives the text format
    assert last[2] == trajectory.states[-1, 0]
    assert last[0] == pytest.approx(1.0)


def test_sweep_csv(tmp_path):
    rows = [
        SweepRow("T", 0.0, zero_result(1.0, 0.0, "zero")),
        SweepRow("T", 0.5, None, "failed: no root"),
    ]
    path = tmp_path / "sweep.csv"
    write_sweep_csv(str(path), rows)

    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == ",".join(SWEEP_HEADER)
    with open(path, encoding="utf-8", newline="") as fh:
        records = list(csv.DictReader(fh))
    assert float(records[0]["r"]) == 0.0
    assert records[0]["structure"] == "zero"
    assert records[0]["status"] == "ok"
    assert math.isnan(float(records[1]["r"]))
    assert records[1]["status"] == "failed: no root"
