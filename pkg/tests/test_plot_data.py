import numpy as np
import pandas as pd
import pytest

from green_complexity.models.bipartite import nestedness
from green_complexity.models.complexity import ScoreVector
from green_complexity.models.null_model import fit_bicm, validate_links
from green_complexity.models.relatedness import assist_matrix, proximity
from green_complexity.pipeline.plot_data import emit_plot_data, write_plot_data
from green_complexity.src.errors import DataError


def test_score_curve():
    scores = ScoreVector("geo", ("x", "y", "z"), [0.5, np.nan, 2.0], "Fitness", "mean-one")
    frame = emit_plot_data(scores)
    assert list(frame.columns) == ["x", "y", "label"]
    assert list(frame.label) == ["z", "x", "y"]
    assert list(frame.x[:2]) == [1, 2]
    assert np.isnan(frame.x[2])


def test_nestedness_heatmap(m0):
    frame = emit_plot_data(nestedness(m0))
    assert set(zip(frame.x, frame.y)) == {(0, 0), (1, 0), (2, 0), (1, 1), (2, 1), (2, 2)}
    assert frame.label[0] == "g1|a3"


def test_proximity_edges(m0):
    frame = emit_plot_data(proximity(m0), cutoff=0.6)
    assert list(frame.columns) == ["x", "y", "label", "value"]
    assert frame[["x", "y"]].values.tolist() == [["a1", "a2"]]
    assert frame.value[0] == pytest.approx(2 / 3)


def test_validated_edges(m0):
    null = fit_bicm(m0)
    network = validate_links(assist_matrix(m0, m0), null, null, samples=100)
    frame = emit_plot_data(network)
    assert frame.empty
    assert list(frame.columns) == ["x", "y", "label", "value"]


def test_unknown_result():
    with pytest.raises(DataError):
        emit_plot_data({"x": 1})


def test_write_plot_data(m0, tmp_path):
    path = write_plot_data(nestedness(m0), str(tmp_path / "cells.csv"))
    frame = pd.read_csv(path)
    assert len(frame) == 6
