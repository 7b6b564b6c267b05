"""Revealed comparative advantage, the binary specialization matrix and its
degree/nestedness diagnostics."""
import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from green_complexity.src.data.codes import ActivityCode, label
from green_complexity.src.errors import ConfigError, DataError

logger = logging.getLogger(__name__)


def _scheme_of(activities):
    schemes = {a.scheme for a in activities if isinstance(a, ActivityCode)}
    return schemes.pop() if len(schemes) == 1 else None


@dataclass(frozen=True, eq=False)
class RcaMatrix:
    """Balassa RCA values; undefined cells are NaN.

    A cell is undefined when its geo or activity has a zero total.
    """
    geos: tuple
    activities: tuple
    values: np.ndarray
    period: int = None
    layer: str = None
    undefined_geos: tuple = ()
    undefined_activities: tuple = ()

    @property
    def defined(self):
        return ~np.isnan(self.values)

    @property
    def n_undefined(self):
        return int(np.isnan(self.values).sum())

    @property
    def scheme(self):
        return _scheme_of(self.activities)

    def to_frame(self):
        return pd.DataFrame(self.values, index=list(self.geos), columns=[label(a) for a in self.activities])


@dataclass(frozen=True, eq=False)
class BinaryBipartite:
    """Specialization matrix M_ga in {0, 1}.

    Parameters
    ----------
    geos, activities : tuple
        Row and column identifiers.
    matrix : np.ndarray of int8, shape=(n_geos, n_activities)
    threshold : float, optional
        RCA threshold used to build the matrix.
    period : int, optional
    layer : str, optional
    """
    geos: tuple
    activities: tuple
    matrix: np.ndarray
    threshold: float = None
    period: int = None
    layer: str = None

    def __post_init__(self):
        matrix = np.asarray(self.matrix)
        if matrix.ndim != 2 or matrix.shape != (len(self.geos), len(self.activities)):
            raise DataError(
                f"matrix shape {matrix.shape} does not match "
                f"{len(self.geos)} geos x {len(self.activities)} activities"
            )
        if not np.isin(matrix, (0, 1)).all():
            raise DataError("binary matrix entries must be 0 or 1")
        matrix = matrix.astype(np.int8)
        matrix.setflags(write=False)
        object.__setattr__(self, "geos", tuple(self.geos))
        object.__setattr__(self, "activities", tuple(self.activities))
        object.__setattr__(self, "matrix", matrix)

    @classmethod
    def from_array(cls, array, geos=None, activities=None, **metadata):
        array = np.asarray(array)
        if geos is None:
            geos = tuple(f"g{i + 1}" for i in range(array.shape[0]))
        if activities is None:
            activities = tuple(f"a{j + 1}" for j in range(array.shape[1]))
        return cls(tuple(geos), tuple(activities), array, **metadata)

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def scheme(self):
        return _scheme_of(self.activities)

    @property
    def activity_labels(self):
        return [label(a) for a in self.activities]

    def as_float(self):
        return self.matrix.astype(np.float64)

    def subset(self, rows=None, columns=None):
        """Copy restricted to boolean/index selections of rows and columns."""
        rows = np.arange(self.shape[0]) if rows is None else np.asarray(rows)
        columns = np.arange(self.shape[1]) if columns is None else np.asarray(columns)
        if rows.dtype == bool:
            rows = np.flatnonzero(rows)
        if columns.dtype == bool:
            columns = np.flatnonzero(columns)
        return BinaryBipartite(
            tuple(self.geos[i] for i in rows),
            tuple(self.activities[j] for j in columns),
            self.matrix[np.ix_(rows, columns)],
            threshold=self.threshold,
            period=self.period,
            layer=self.layer,
        )

    def with_row(self, geo, row):
        """Copy with one extra row appended."""
        return BinaryBipartite(
            self.geos + (geo,),
            self.activities,
            np.vstack([self.matrix, np.asarray(row, dtype=np.int8)[None, :]]),
            threshold=self.threshold,
            period=self.period,
            layer=self.layer,
        )

    def to_frame(self):
        return pd.DataFrame(self.matrix, index=list(self.geos), columns=self.activity_labels)


@dataclass(frozen=True, eq=False)
class DegreeProfile:
    """Diversification d_g and ubiquity u_a of a binary matrix."""
    geos: tuple
    activities: tuple
    diversification: np.ndarray
    ubiquity: np.ndarray


@dataclass(frozen=True, eq=False)
class NestednessReport:
    """Degree-sorted orders and the NODF score of a binary matrix.

    ``score`` is NaN (and ``defined`` False) for matrices with fewer than two
    rows or columns.
    """
    geos: tuple
    activities: tuple
    row_order: np.ndarray
    column_order: np.ndarray
    score: float
    rows_score: float
    columns_score: float
    ordered: np.ndarray = field(repr=False, default=None)

    @property
    def defined(self):
        return not np.isnan(self.score)

    @property
    def ordered_geos(self):
        return [self.geos[i] for i in self.row_order]

    @property
    def ordered_activities(self):
        return [label(self.activities[j]) for j in self.column_order]


def compute_rca(matrix):
    """Balassa's revealed comparative advantage.

    RCA_ga = (W_ga * sum W) / (row_g total * col_a total).

    Parameters
    ----------
    matrix : WeightedBipartite

    Returns
    -------
    RcaMatrix
        Cells of zero-total rows or columns are NaN and listed in
        ``undefined_geos`` / ``undefined_activities``.
    """
    weights = np.asarray(matrix.weights, dtype=np.float64)
    if weights.size == 0:
        raise DataError("RCA needs at least one geo and one activity")
    row = weights.sum(axis=1)
    col = weights.sum(axis=0)
    total = weights.sum()
    if not total > 0:
        raise DataError("RCA is undefined for a matrix with zero grand total")

    undefined = (row == 0)[:, None] | (col == 0)[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        values = weights * total / np.outer(row, col)
    values[undefined] = np.nan
    undefined_geos = tuple(g for g, r in zip(matrix.geos, row) if r == 0)
    undefined_activities = tuple(label(a) for a, c in zip(matrix.activities, col) if c == 0)
    if undefined_geos or undefined_activities:
        logger.warning(
            "RCA undefined for %d geos and %d activities with zero totals",
            len(undefined_geos), len(undefined_activities),
        )
    values.setflags(write=False)
    return RcaMatrix(
        geos=tuple(matrix.geos),
        activities=tuple(matrix.activities),
        values=values,
        period=getattr(matrix, "period", None),
        layer=getattr(matrix, "layer", None),
        undefined_geos=undefined_geos,
        undefined_activities=undefined_activities,
    )


def binarize(rca, threshold=1.0):
    """Specialization matrix M_ga = 1 iff RCA_ga >= threshold.

    Undefined cells map to 0.
    """
    if not threshold > 0:
        raise ConfigError(f"RCA threshold must be > 0, got {threshold}")
    values = np.nan_to_num(rca.values, nan=-np.inf)
    matrix = (values >= threshold).astype(np.int8)
    return BinaryBipartite(
        geos=tuple(rca.geos),
        activities=tuple(rca.activities),
        matrix=matrix,
        threshold=float(threshold),
        period=rca.period,
        layer=rca.layer,
    )


def degrees(m):
    """Row sums (diversification) and column sums (ubiquity) of M."""
    matrix = m.matrix.astype(np.int64)
    return DegreeProfile(
        geos=m.geos,
        activities=m.activities,
        diversification=matrix.sum(axis=1),
        ubiquity=matrix.sum(axis=0),
    )


def drop_empty(m):
    """Remove zero-diversification geos and zero-ubiquity activities.

    Removing rows can empty columns and vice versa, so this repeats until
    both degree vectors are positive.
    """
    current = m
    while True:
        profile = degrees(current)
        rows = profile.diversification > 0
        columns = profile.ubiquity > 0
        if rows.all() and columns.all():
            return current
        logger.info(
            "dropping %d empty geos and %d empty activities",
            (~rows).sum(), (~columns).sum(),
        )
        current = current.subset(rows, columns)


def _nodf_half(matrix, degree):
    """Sum of pairwise NODF overlaps along the rows of ``matrix``.

    A pair contributes 100 * overlap / smaller degree when the degrees differ
    and the smaller one is positive, 0 otherwise.
    """
    overlap = matrix @ matrix.T
    larger = degree[:, None] > degree[None, :]
    valid = larger & (degree[None, :] > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(valid, overlap / degree[None, :], 0.0)
    return 100.0 * ratio.sum()


def nestedness(m):
    """NODF nestedness with degree-sorted row and column orders.

    Rows are ordered by descending diversification and columns by ascending
    ubiquity, ties broken by original index.

    Returns
    -------
    NestednessReport
        Score in [0, 100]: 100 for a perfectly nested matrix, 0 when no
        decreasing-fill pair overlaps.
    """
    matrix = m.matrix.astype(np.float64)
    n_rows, n_cols = matrix.shape
    profile = degrees(m)
    d = profile.diversification.astype(np.float64)
    u = profile.ubiquity.astype(np.float64)
    row_order = np.argsort(-profile.diversification, kind="stable")
    column_order = np.argsort(profile.ubiquity, kind="stable")

    if n_rows < 2 or n_cols < 2:
        logger.warning("nestedness undefined for a %dx%d matrix", n_rows, n_cols)
        score = rows_score = columns_score = float("nan")
    else:
        row_pairs = n_rows * (n_rows - 1) / 2
        column_pairs = n_cols * (n_cols - 1) / 2
        rows_total = _nodf_half(matrix, d)
        columns_total = _nodf_half(matrix.T, u)
        rows_score = rows_total / row_pairs
        columns_score = columns_total / column_pairs
        score = (rows_total + columns_total) / (row_pairs + column_pairs)

    return NestednessReport(
        geos=m.geos,
        activities=m.activities,
        row_order=row_order,
        column_order=column_order,
        score=float(score),
        rows_score=float(rows_score),
        columns_score=float(columns_score),
        ordered=m.matrix[np.ix_(row_order, column_order)],
    )
