"""Plot-ready tables: fitness curves, nestedness heatmaps, proximity edges."""
import logging
import os

import numpy as np
import pandas as pd

from green_complexity.models.bipartite import NestednessReport
from green_complexity.models.complexity import ScoreVector
from green_complexity.models.null_model import ValidatedNetwork
from green_complexity.models.relatedness import ProximityNetwork
from green_complexity.src.errors import DataError
from green_complexity.src.utils.export import write_csv

logger = logging.getLogger(__name__)

POINT_COLUMNS = ["x", "y", "label"]
EDGE_COLUMNS = ["x", "y", "label", "value"]


def _score_curve(scores):
    """(rank, value, id) sorted by descending value; undefined scores last."""
    ranks = scores.ranks()
    frame = pd.DataFrame({"x": ranks, "y": scores.values, "label": list(scores.ids)})
    frame = frame.sort_values("x", kind="mergesort", na_position="last", ignore_index=True)
    return frame[POINT_COLUMNS]


def _heatmap_cells(report):
    """Filled cells of the degree-ordered matrix, row by row.

    x is the column position and y the row position in the ordered matrix.
    """
    rows, cols = np.nonzero(report.ordered)
    geos, activities = report.ordered_geos, report.ordered_activities
    return pd.DataFrame({
        "x": cols,
        "y": rows,
        "label": [f"{geos[i]}|{activities[j]}" for i, j in zip(rows, cols)],
    })[POINT_COLUMNS]


def _proximity_edges(net, cutoff):
    edges = net.edges(cutoff)
    return pd.DataFrame({
        "x": edges["source"],
        "y": edges["target"],
        "label": "proximity",
        "value": edges["weight"],
    })[EDGE_COLUMNS]


def _validated_edges(network):
    edges = network.edges()
    return pd.DataFrame({
        "x": edges["source"],
        "y": edges["target"],
        "label": "assist",
        "value": edges["weight"],
    })[EDGE_COLUMNS]


def emit_plot_data(result, cutoff=0.0):
    """Plot-ready table for a toolkit result.

    Parameters
    ----------
    result : ScoreVector, NestednessReport, ProximityNetwork or ValidatedNetwork
    cutoff : float
        Smallest proximity kept in proximity edge bundles.

    Returns
    -------
    pd.DataFrame
        Columns ``x, y, label`` (plus ``value`` for edge bundles).
    """
    if isinstance(result, ScoreVector):
        return _score_curve(result)
    if isinstance(result, NestednessReport):
        return _heatmap_cells(result)
    if isinstance(result, ProximityNetwork):
        return _proximity_edges(result, cutoff)
    if isinstance(result, ValidatedNetwork):
        return _validated_edges(result)
    raise DataError(f"no plot data for {type(result).__name__}")


def write_plot_data(result, path, cutoff=0.0):
    frame = emit_plot_data(result, cutoff)
    write_csv(frame, path)
    logger.debug("wrote %d plot rows to %s", len(frame), os.path.basename(path))
    return path
