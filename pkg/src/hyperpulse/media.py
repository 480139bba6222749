"""
Hyperpulse Framework.

Copyright 2024.
"""

import contextlib
import csv
import json
import logging
import sys
from functools import partial

import numpy as np

from .entropy import entanglement_entropy
from .exceptions import ResultFormatError

logger = logging.getLogger(__name__)

TRAJECTORY_HEADER = ("t", "g", "q1", "q2", "q3", "j0", "entropy")
SWEEP_HEADER = ("axis_value", "r", "structure", "residual_q2", "residual_q3", "singular_fraction", "status")


def converter(obj):
    """
    Convert numpy and value objects for JSON.

    :param obj:     object to convert
    :return:        converted object
    """
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if hasattr(obj, "_asdict"):
        return list(obj)
    raise TypeError(f"{type(obj).__name__} is not JSON serializable")


dumps = partial(json.dumps, ensure_ascii=False, default=converter, indent=2, sort_keys=True)


def _output(path):
    """Open a text file for writing, or stdout when no path is given."""
    if path in (None, "-"):
        return contextlib.nullcontext(sys.stdout)
    return open(path, "w", encoding="utf-8", newline="")


def write_json(path, data):
    """
    Write a mapping as JSON.

    :param str path:    Output path
    :param dict data:   Data
    """
    with _output(path) as fh:
        fh.write(dumps(data))
        fh.write("\n")
    logger.info("wrote %s", path or "stdout")


def read_json(path):
    """
    Read a JSON file.

    :param str path:             Input path
    :return:                     Parsed data
    :raises ResultFormatError:   Not valid JSON
    """
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ResultFormatError(f"{path} is not valid JSON: {exc}") from exc


def _number(value):
    if isinstance(value, str):
        return value
    return format(float(value), ".17g")


def trajectory_rows(trajectory):
    """
    Yield the trajectory CSV records.

    :param Trajectory trajectory:   Samples of the reduced or full system
    :return:                        Iterator of tuples in header order
    """
    for t, g, point in zip(trajectory.times, trajectory.sample_controls(), trajectory.points()):
        yield (t, g, point.q1, point.q2, point.q3, point.j0, entanglement_entropy(point))


def write_trajectory_csv(path, trajectory):
    """
    Write a trajectory as CSV at full double precision.

    :param str path:                Output path
    :param Trajectory trajectory:   Samples
    """
    with _output(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRAJECTORY_HEADER)
        for row in trajectory_rows(trajectory):
            writer.writerow([_number(value) for value in row])
    logger.info("wrote %s", path or "stdout")


def write_sweep_csv(path, rows):
    """
    Write sweep rows as CSV.

    :param str path:    Output path
    :param list rows:   SweepRow per axis value
    """
    with _output(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_HEADER)
        for row in rows:
            record = row.to_row()
            writer.writerow([_number(record[key]) for key in SWEEP_HEADER])
    logger.info("wrote %s", path or "stdout")
