"""Writers and readers for the tables and documents stages exchange on disk.

Floats are written with 17 significant digits so every value reads back
bit for bit; JSON is written with sorted keys.
"""
import hashlib
import json
import logging
import os

import networkx as nx
import numpy as np
import pandas as pd
from networkx.readwrite import json_graph

from green_complexity.models.bipartite import BinaryBipartite
from green_complexity.models.complexity import ConvergenceRecord, ScoreVector
from green_complexity.models.relatedness import AssistMatrix, ProximityNetwork
from green_complexity.src.data.codes import ActivityCode, normalize_code
from green_complexity.src.data.parsing import RECORD_COLUMNS
from green_complexity.src.errors import DataError

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
META_SUFFIX = ".json"
MATRIX_COLUMNS = ["geo", "activity", "value"]


def _plain(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (set, tuple)):
        return list(value)
    if isinstance(value, ActivityCode):
        return str(value)
    raise TypeError(f"cannot serialize {type(value).__name__}")


def write_json(document, path):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(document, f, indent=2, sort_keys=True, default=_plain)
        f.write("\n")
    return path


def read_json(path):
    if not os.path.isfile(path):
        raise DataError(f"{path} not found")
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def write_csv(frame, path, index=False):
    frame.to_csv(path, index=index, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def _meta_path(path):
    return os.path.splitext(path)[0] + META_SUFFIX


def file_digest(path):
    """SHA-256 of a file's bytes."""
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_records(frame, path):
    return write_csv(frame[RECORD_COLUMNS], path)


def read_records_table(path):
    if not os.path.isfile(path):
        raise DataError(f"{path} not found")
    frame = pd.read_csv(path, dtype={"geo": str, "scheme": str, "activity": str})
    return frame.astype({"value": np.float64, "period": np.int64})


def matrix_summary(matrix, values):
    """Dimensions, fill (share of nonzero cells), undefined-cell count and threshold."""
    values = np.asarray(values, dtype=np.float64)
    defined = ~np.isnan(values)
    return {
        "scheme": next((a.scheme for a in matrix.activities if isinstance(a, ActivityCode)), None),
        "period": getattr(matrix, "period", None),
        "layer": getattr(matrix, "layer", None),
        "threshold": getattr(matrix, "threshold", None),
        "dimensions": list(values.shape),
        "fill": float((values[defined] != 0).sum() / values.size) if values.size else 0.0,
        "undefined_cells": int((~defined).sum()),
        "geos": list(matrix.geos),
        "activities": [str(a) for a in matrix.activities],
    }


def write_matrix(matrix, values, path, **summary):
    """Long (geo, activity, value) table, one row per cell, plus a summary sidecar.

    ``matrix`` supplies the labels and metadata (any of WeightedBipartite,
    RcaMatrix, BinaryBipartite); ``values`` the cells. Undefined cells are
    written empty. ``summary`` entries override those of ``matrix_summary``.
    """
    values = np.asarray(values, dtype=np.float64)
    labels = [str(a) for a in matrix.activities]
    frame = pd.DataFrame({
        "geo": np.repeat(np.asarray(matrix.geos, dtype=object), len(labels)),
        "activity": np.tile(np.asarray(labels, dtype=object), len(matrix.geos)),
        "value": values.ravel(),
    })
    write_csv(frame, path)
    write_json({**matrix_summary(matrix, values), **summary}, _meta_path(path))
    return path


def read_matrix(path):
    """(geos, activities, values, metadata) of a long table written by write_matrix.

    Without a sidecar, geos and activities keep their order of first
    appearance; missing cells are NaN.
    """
    if not os.path.isfile(path):
        raise DataError(f"{path} not found")
    frame = pd.read_csv(path, dtype={"geo": str, "activity": str})
    if not set(MATRIX_COLUMNS) <= set(frame.columns):
        raise DataError(f"{path} is not a matrix table (needs {', '.join(MATRIX_COLUMNS)} columns)")
    if frame.duplicated(["geo", "activity"]).any():
        raise DataError(f"{path} lists a (geo, activity) cell twice")
    meta = read_json(_meta_path(path)) if os.path.isfile(_meta_path(path)) else {}
    geos = meta.get("geos") or list(pd.unique(frame["geo"]))
    labels = meta.get("activities") or list(pd.unique(frame["activity"]))
    table = frame.pivot(index="geo", columns="activity", values="value").reindex(index=geos, columns=labels)
    scheme = meta.get("scheme")
    activities = tuple(
        ActivityCode(scheme, normalize_code(c, scheme)) if scheme else str(c)
        for c in labels
    )
    return tuple(str(g) for g in geos), activities, table.to_numpy(dtype=np.float64), meta


def write_binary(m, path):
    return write_matrix(m, m.matrix, path)


def read_binary(path):
    geos, activities, values, meta = read_matrix(path)
    return BinaryBipartite(
        geos, activities, np.nan_to_num(values, nan=0.0).astype(np.int8),
        threshold=meta.get("threshold"), period=meta.get("period"), layer=meta.get("layer"),
    )


def write_scores(scores, path):
    """Score table (id, value, rank) plus its metadata sidecar."""
    write_csv(scores.to_frame(), path)
    write_json(scores.metadata(), _meta_path(path))
    return path


def read_scores(path, axis=None, method=None):
    """ScoreVector from a score table; the sidecar fills in the metadata."""
    if not os.path.isfile(path):
        raise DataError(f"{path} not found")
    frame = pd.read_csv(path, dtype={"id": str})
    if "id" not in frame or "value" not in frame:
        raise DataError(f"{path} is not a score table (needs id and value columns)")
    meta = read_json(_meta_path(path)) if os.path.isfile(_meta_path(path)) else {}
    convergence = meta.get("convergence")
    return ScoreVector(
        axis=meta.get("axis", axis),
        ids=tuple(frame["id"]),
        values=frame["value"].to_numpy(dtype=np.float64),
        method=meta.get("method", method or os.path.splitext(os.path.basename(path))[0]),
        normalization=meta.get("normalization", "raw"),
        reference=meta.get("reference"),
        convergence=ConvergenceRecord(**convergence) if convergence else None,
        flags=meta.get("flags", {}),
    )


def write_proximity(net, path):
    """Square proximity table; the sidecar keeps ubiquities and the zero-ubiquity flags."""
    frame = net.to_frame()
    frame.index.name = "activity"
    write_csv(frame, path, index=True)
    scheme = next((a.scheme for a in net.activities if isinstance(a, ActivityCode)), None)
    write_json({
        "scheme": scheme,
        "period": net.period,
        "layer": net.layer,
        "ubiquity": net.ubiquity,
        "zero_ubiquity": net.zero_ubiquity,
        "row_sums": net.row_sums,
    }, _meta_path(path))
    return path


def read_proximity(path):
    if not os.path.isfile(path):
        raise DataError(f"{path} not found")
    frame = pd.read_csv(path, index_col="activity", dtype={"activity": str})
    if list(frame.index) != list(frame.columns):
        raise DataError(f"{path} is not a square proximity table")
    meta = read_json(_meta_path(path)) if os.path.isfile(_meta_path(path)) else {}
    scheme = meta.get("scheme")
    activities = tuple(
        ActivityCode(scheme, normalize_code(c, scheme)) if scheme else str(c)
        for c in frame.columns
    )
    phi = frame.to_numpy(dtype=np.float64)
    ubiquity = np.asarray(meta.get("ubiquity", np.diag(phi)), dtype=np.int64)
    return ProximityNetwork(
        activities, phi, ubiquity, tuple(meta.get("zero_ubiquity", ())),
        period=meta.get("period"), layer=meta.get("layer"),
    )


def write_assist(b, path):
    frame = b.to_frame()
    frame.index.name = "source"
    write_csv(frame, path, index=True)
    write_json({
        "source_scheme": next((a.scheme for a in b.source_activities if isinstance(a, ActivityCode)), None),
        "target_scheme": next((a.scheme for a in b.target_activities if isinstance(a, ActivityCode)), None),
        "source_layer": b.source_layer,
        "target_layer": b.target_layer,
        "y1": b.y1,
        "y2": b.y2,
        "lag": b.lag,
        "geos": b.geos,
        "dropped_geos": b.dropped_geos,
        "zero_rows": b.zero_rows,
        "warnings": b.warnings,
    }, _meta_path(path))
    return path


def read_assist(path):
    if not os.path.isfile(path):
        raise DataError(f"{path} not found")
    frame = pd.read_csv(path, index_col="source", dtype={"source": str})
    meta = read_json(_meta_path(path)) if os.path.isfile(_meta_path(path)) else {}

    def codes(labels, scheme):
        return tuple(ActivityCode(scheme, normalize_code(c, scheme)) if scheme else str(c) for c in labels)

    return AssistMatrix(
        source_activities=codes(frame.index, meta.get("source_scheme")),
        target_activities=codes(frame.columns, meta.get("target_scheme")),
        values=frame.to_numpy(dtype=np.float64),
        source_layer=meta.get("source_layer"),
        target_layer=meta.get("target_layer"),
        y1=meta.get("y1"),
        y2=meta.get("y2"),
        geos=tuple(meta.get("geos", ())),
        dropped_geos=tuple(meta.get("dropped_geos", ())),
        zero_rows=tuple(meta.get("zero_rows", ())),
        warnings=list(meta.get("warnings", [])),
    )


def write_graph(edges, path, directed=False, nodes=(), attributes=None):
    """Node-link JSON document of an edge list.

    ``edges`` has ``source`` and ``target`` columns; every other column
    becomes an edge attribute. ``nodes`` adds isolated nodes and
    ``attributes`` goes to the graph-level ``graph`` entry.
    """
    extra = [c for c in edges.columns if c not in ("source", "target")]
    graph = nx.from_pandas_edgelist(
        edges, "source", "target", edge_attr=extra or None,
        create_using=nx.DiGraph if directed else nx.Graph,
    )
    graph.add_nodes_from(nodes)
    graph.graph.update(attributes or {})
    return write_json(json_graph.node_link_data(graph, edges="edges"), path)


def read_graph(path):
    return json_graph.node_link_graph(read_json(path), edges="edges")
