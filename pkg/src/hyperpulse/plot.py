"""
Hyperpulse Framework.

Copyright 2024.
"""

import logging

import matplotlib

matplotlib.use("Agg")

from matplotlib.figure import Figure  # noqa: E402

logger = logging.getLogger(__name__)

FIGSIZE = (6.4, 4.0)


def _save(fig, path, title, description):
    """Write a figure as SVG, storing the configuration echo in its metadata."""
    fig.savefig(path, format="svg", bbox_inches="tight", metadata={"Title": title, "Description": description})
    logger.info("wrote %s", path)


def trajectory_plot(trajectory, path, description="", series=None):
    """
    Plot g(t)/G and Q1..Q3 against t.

    With a PMP series a second panel overlays the switching function and the
    Legendre-Clebsch left-hand side on g(t)/G.

    :param Trajectory trajectory:   Reduced trajectory
    :param str path:                SVG output path
    :param str description:         Configuration echo
    :param PmpSeries series:        Sampled switching function, optional
    :return Figure:                 The rendered figure
    """
    columns = trajectory.hyperboloid_columns()
    bound = trajectory.bound or 1.0
    title = "optimal pulse and moments"

    fig = Figure(figsize=FIGSIZE if series is None else (FIGSIZE[0], 2 * FIGSIZE[1]))
    ax = fig.add_subplot(2, 1, 1) if series is not None else fig.add_subplot()
    ax.step(trajectory.times, trajectory.sample_controls() / bound, where="post", label="g/G")
    for index, label in enumerate(("Q1", "Q2", "Q3")):
        ax.plot(trajectory.times, columns[:, index], label=label)
    ax.set_xlabel("t")
    ax.set_ylabel("value")
    ax.set_title(title)
    ax.legend(loc="best")

    if series is not None:
        lower = fig.add_subplot(2, 1, 2)
        lower.step(series.times, series.controls / bound, where="post", linestyle="--", label="g/G")
        lower.plot(series.times, series.phi, label="Phi")
        lower.plot(series.times, series.lc, linestyle="-.", label="LC")
        lower.axhline(0.0, color="grey", linewidth=0.5)
        lower.set_xlabel("t")
        lower.set_title("switching function and Legendre-Clebsch condition")
        lower.legend(loc="best")

    _save(fig, path, title, description)
    return fig


def sweep_plot(rows, path, description=""):
    """
    Plot r against the swept parameter.

    Failed points are NaN and leave a gap in the line.

    :param list rows:           SweepRow per axis value
    :param str path:            SVG output path
    :param str description:     Configuration echo
    :return Figure:             The rendered figure
    """
    xlabel = "G" if rows and rows[0].axis == "g" else "T"
    title = f"squeezing parameter against {xlabel}"

    fig = Figure(figsize=FIGSIZE)
    ax = fig.add_subplot()
    ax.plot([row.axis_value for row in rows], [row.r for row in rows], marker="o", label="r")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("r")
    ax.set_title(title)
    _save(fig, path, title, description)
    return fig
