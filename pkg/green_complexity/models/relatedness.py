"""Activity-activity relatedness: proximity, relatedness density and the
time-lagged (possibly cross-layer) assist matrix."""
import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from green_complexity.src.data.codes import label
from green_complexity.src.errors import ConfigError, DataError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ProximityNetwork:
    """Symmetric proximity phi between activities.

    phi_aa' = C_aa' / max(u_a, u_a') with C = M^T M the co-occurrence counts.
    Pairs involving a zero-ubiquity activity are 0; those activities are
    listed in ``zero_ubiquity``.
    """
    activities: tuple
    phi: np.ndarray
    ubiquity: np.ndarray
    zero_ubiquity: tuple = ()
    period: int = None
    layer: str = None

    @property
    def labels(self):
        return [label(a) for a in self.activities]

    @property
    def row_sums(self):
        """sum over a' of phi_aa'; not a probability, so in general != 1."""
        return self.phi.sum(axis=1)

    def edges(self, cutoff=0.0):
        """Upper-triangle edges with phi >= cutoff (and phi > 0)."""
        labels = self.labels
        rows, cols = np.triu_indices(len(labels), k=1)
        weights = self.phi[rows, cols]
        keep = (weights >= cutoff) & (weights > 0)
        return pd.DataFrame({
            "source": [labels[i] for i in rows[keep]],
            "target": [labels[j] for j in cols[keep]],
            "weight": weights[keep],
        })

    def to_frame(self):
        return pd.DataFrame(self.phi, index=self.labels, columns=self.labels)


@dataclass(frozen=True, eq=False)
class RelatednessDensity:
    """omega_ga for every geo and activity; NaN where undefined."""
    geos: tuple
    activities: tuple
    values: np.ndarray

    @property
    def undefined_activities(self):
        return [label(a) for a, col in zip(self.activities, self.values.T) if np.isnan(col).all()]

    def to_frame(self):
        return pd.DataFrame(self.values, index=list(self.geos), columns=[label(a) for a in self.activities])


@dataclass(frozen=True, eq=False)
class AssistMatrix:
    """B_aa' from source layer (year y1) to destination layer (year y2).

    Rows of defined source activities sum to one; rows of zero-ubiquity
    source activities are all-zero and listed in ``zero_rows``.
    """
    source_activities: tuple
    target_activities: tuple
    values: np.ndarray
    source_layer: str = None
    target_layer: str = None
    y1: int = None
    y2: int = None
    geos: tuple = ()
    dropped_geos: tuple = ()
    zero_rows: tuple = ()
    warnings: list = field(default_factory=list)

    @property
    def lag(self):
        if self.y1 is None or self.y2 is None:
            return None
        return self.y2 - self.y1

    @property
    def defined_rows(self):
        zero = set(self.zero_rows)
        return np.array([label(a) not in zero for a in self.source_activities], dtype=bool)

    def edges(self):
        sources = [label(a) for a in self.source_activities]
        targets = [label(a) for a in self.target_activities]
        rows, cols = np.nonzero(self.values)
        return pd.DataFrame({
            "source": [sources[i] for i in rows],
            "target": [targets[j] for j in cols],
            "weight": self.values[rows, cols],
        })

    def to_frame(self):
        return pd.DataFrame(
            self.values,
            index=[label(a) for a in self.source_activities],
            columns=[label(a) for a in self.target_activities],
        )


def proximity(m):
    """Proximity network of the activities of ``m``.

    Parameters
    ----------
    m : BinaryBipartite

    Returns
    -------
    ProximityNetwork
    """
    matrix = m.matrix.astype(np.int64)
    counts = matrix.T @ matrix
    ubiquity = np.diag(counts).copy()
    larger = np.maximum(ubiquity[:, None], ubiquity[None, :]).astype(np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = np.where(larger > 0, counts / larger, 0.0)
    zero = tuple(label(a) for a, u in zip(m.activities, ubiquity) if u == 0)
    if zero:
        logger.warning("%d activities with zero ubiquity get proximity 0", len(zero))
    phi.setflags(write=False)
    return ProximityNetwork(
        activities=tuple(m.activities),
        phi=phi,
        ubiquity=ubiquity,
        zero_ubiquity=zero,
        period=m.period,
        layer=m.layer,
    )


def relatedness_density(net, m):
    """omega_ga = sum_a' phi_aa' M_ga' / sum_a' phi_aa'.

    Activities whose proximity row sums to zero have undefined (NaN) density.
    """
    if net.labels != m.activity_labels:
        raise DataError("proximity network and matrix have different activities")
    denominator = net.row_sums
    numerator = m.as_float() @ net.phi.T
    values = np.full(numerator.shape, np.nan)
    defined = denominator > 0
    values[:, defined] = numerator[:, defined] / denominator[defined]
    return RelatednessDensity(tuple(m.geos), tuple(m.activities), values)


def assist_values(source, target):
    """Assist matrix values for two row-aligned 0/1 arrays.

    Geos with a nonzero source row and an empty destination row are
    dropped; ubiquities are taken after the drop.

    Returns
    -------
    values : np.ndarray
    kept : np.ndarray of bool
        Geos that entered the sum.
    """
    source = np.asarray(source, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    diversification = target.sum(axis=1)
    kept = ~((source.sum(axis=1) > 0) & (diversification == 0))
    source, target, diversification = source[kept], target[kept], diversification[kept]
    ubiquity = source.sum(axis=0)
    row_weights = np.divide(source, ubiquity[None, :], out=np.zeros_like(source), where=ubiquity[None, :] > 0)
    column_weights = np.divide(
        target, diversification[:, None], out=np.zeros_like(target), where=diversification[:, None] > 0,
    )
    return row_weights.T @ column_weights, kept


def align_geos(m_src, m_dst):
    """Row indices of the geos shared by both matrices, in source order."""
    position = {g: i for i, g in enumerate(m_dst.geos)}
    src_rows = np.array([i for i, g in enumerate(m_src.geos) if g in position], dtype=np.intp)
    common = [m_src.geos[i] for i in src_rows]
    if not common:
        raise DataError("source and destination matrices share no geo")
    warnings = []
    if len(common) != len(m_src.geos) or len(common) != len(m_dst.geos):
        message = (
            f"geo sets differ ({len(m_src.geos)} source, {len(m_dst.geos)} destination); "
            f"using the {len(common)} shared geos"
        )
        logger.warning(message)
        warnings.append(message)
    dst_rows = np.array([position[g] for g in common], dtype=np.intp)
    return tuple(common), src_rows, dst_rows, warnings


def assist_matrix(m_src, m_dst, y1=None, y2=None):
    """Time-lagged assist matrix.

    B_aa' = sum_g (M_src[g, a] / u_src[a]) (M_dst[g, a'] / d_dst[g]),
    evaluated over the geos shared by both matrices.

    Parameters
    ----------
    m_src : BinaryBipartite
        Layer alpha in year y1.
    m_dst : BinaryBipartite
        Layer beta in year y2.
    y1, y2 : int, optional
        Default to the matrices' periods; y2 >= y1 is required.

    Returns
    -------
    AssistMatrix
    """
    y1 = m_src.period if y1 is None else y1
    y2 = m_dst.period if y2 is None else y2
    if y1 is not None and y2 is not None and y2 < y1:
        raise ConfigError(f"destination year {y2} precedes source year {y1}")

    common, src_rows, dst_rows, warnings = align_geos(m_src, m_dst)
    source = m_src.matrix[src_rows]
    target = m_dst.matrix[dst_rows]
    values, kept = assist_values(source, target)
    dropped = tuple(g for g, k in zip(common, kept) if not k)
    if dropped:
        message = f"{len(dropped)} geos with an empty destination row dropped"
        logger.warning(message)
        warnings.append(message)

    ubiquity = source[kept].sum(axis=0)
    zero_rows = tuple(label(a) for a, u in zip(m_src.activities, ubiquity) if u == 0)
    if zero_rows:
        logger.info("%d source activities with zero ubiquity have empty rows", len(zero_rows))
    values.setflags(write=False)
    return AssistMatrix(
        source_activities=tuple(m_src.activities),
        target_activities=tuple(m_dst.activities),
        values=values,
        source_layer=m_src.layer,
        target_layer=m_dst.layer,
        y1=y1,
        y2=y2,
        geos=tuple(g for g, k in zip(common, kept) if k),
        dropped_geos=dropped,
        zero_rows=zero_rows,
        warnings=warnings,
    )
