"""Geo x activity count matrices and green tagging."""
import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from green_complexity.src.data.codes import COMPATIBLE, ActivityCode, as_code, label
from green_complexity.src.data.parsing import records_to_frame
from green_complexity.src.errors import DataError

logger = logging.getLogger(__name__)

ANY = "any"
ALL = "all"


@dataclass(frozen=True, eq=False)
class WeightedBipartite:
    """Raw volumes W_ga of one layer in one period.

    Parameters
    ----------
    geos : tuple of str
        Row identifiers, unique.
    activities : tuple of ActivityCode
        Column identifiers, unique.
    weights : np.ndarray, shape=(n_geos, n_activities)
        Non-negative finite volumes.
    period : int
    layer : str
        Tag such as ``"trade"`` or ``"technology"``.
    """
    geos: tuple
    activities: tuple
    weights: np.ndarray
    period: int = None
    layer: str = "trade"

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=np.float64)
        if weights.shape != (len(self.geos), len(self.activities)):
            raise DataError(
                f"weights shape {weights.shape} does not match "
                f"{len(self.geos)} geos x {len(self.activities)} activities"
            )
        if not np.all(np.isfinite(weights)) or np.any(weights < 0):
            raise DataError("weights must be finite and non-negative")
        if len(set(self.geos)) != len(self.geos):
            raise DataError("duplicate geo identifiers")
        if len(set(self.activities)) != len(self.activities):
            raise DataError("duplicate activity identifiers")
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)

    @property
    def shape(self):
        return self.weights.shape

    @property
    def scheme(self):
        schemes = {a.scheme for a in self.activities if isinstance(a, ActivityCode)}
        if len(schemes) > 1:
            raise DataError(f"matrix mixes schemes {sorted(schemes)}")
        return schemes.pop() if schemes else None

    @property
    def zero_geos(self):
        return [g for g, total in zip(self.geos, self.weights.sum(axis=1)) if total == 0]

    @property
    def zero_activities(self):
        return [label(a) for a, total in zip(self.activities, self.weights.sum(axis=0)) if total == 0]

    def to_frame(self):
        return pd.DataFrame(
            self.weights, index=list(self.geos), columns=[label(a) for a in self.activities],
        )


def build_matrix(records, period, digits=None, layer="trade", report=None):
    """Aggregate records of one period into a WeightedBipartite.

    Parameters
    ----------
    records : list of RawRecord or pd.DataFrame
        A frame must carry the columns of ``parsing.RECORD_COLUMNS``.
    period : int
        Only records of this year are used.
    digits : int, optional
        Codes are truncated to this depth (HS digits or IPC/CPC levels) and
        weights summed per (geo, truncated code).
    layer : str
    report : IngestReport, optional
        Receives the zero rows and columns of the result.

    Returns
    -------
    WeightedBipartite
        Geos and activities sorted lexicographically.
    """
    frame = records_to_frame(records)
    frame = frame[frame["period"] == period]
    if frame.empty:
        raise DataError(f"no records for period {period}", details={"period": period})
    schemes = frame["scheme"].unique()
    if len(schemes) != 1:
        raise DataError(f"records for period {period} mix schemes {sorted(schemes)}")
    scheme = schemes[0]

    codes = {code: ActivityCode(scheme, code) for code in frame["activity"].unique()}
    if digits is not None:
        deepest = max(code.digits for code in codes.values())
        if digits > deepest:
            raise DataError(f"aggregation depth {digits} exceeds the deepest code ({deepest})")
        truncated = {raw: code.truncate(digits) for raw, code in codes.items()}
        shallow = sum(1 for code in codes.values() if code.digits < digits)
        if shallow:
            logger.warning("%d codes are shallower than depth %d and kept as they are", shallow, digits)
    else:
        truncated = codes

    frame = pd.DataFrame({
        "geo": frame["geo"].to_numpy(),
        "activity": frame["activity"].map({raw: code.code for raw, code in truncated.items()}).to_numpy(),
        "value": frame["value"].to_numpy(dtype=np.float64),
    })
    # summing in a canonical order keeps the result bit-identical under any input order
    frame = frame.sort_values(["geo", "activity", "value"], kind="mergesort", ignore_index=True)
    summed = frame.groupby(["geo", "activity"], sort=True)["value"].sum()
    table = summed.unstack("activity", fill_value=0.0)
    table = table.sort_index(axis=0).sort_index(axis=1)

    matrix = WeightedBipartite(
        geos=tuple(str(g) for g in table.index),
        activities=tuple(ActivityCode(scheme, code) for code in table.columns),
        weights=table.to_numpy(dtype=np.float64),
        period=int(period),
        layer=layer,
    )
    zero_geos, zero_activities = matrix.zero_geos, matrix.zero_activities
    if zero_geos or zero_activities:
        logger.warning(
            "%s %s: %d all-zero geos and %d all-zero activities kept",
            layer, period, len(zero_geos), len(zero_activities),
        )
    if report is not None:
        report.zero_geos = zero_geos
        report.zero_activities = zero_activities
    return matrix


def _check_scheme(scheme, classification):
    for entry_scheme in classification.schemes:
        if scheme is not None and entry_scheme not in COMPATIBLE[scheme]:
            raise DataError(
                f"{classification.name!r} lists {entry_scheme} codes, "
                f"cannot tag {scheme} activities"
            )


def green_mask(activities, classification, scheme=None):
    """Boolean mask over ``activities`` marking green codes.

    Labels that are not ActivityCode objects are parsed with ``scheme``
    (defaulting to the classification's scheme).
    """
    if scheme is None:
        scheme = next(iter(sorted(classification.schemes)))
    codes = [as_code(a, scheme) for a in activities]
    for code in codes:
        _check_scheme(code.scheme, classification)
    return np.array([classification.matches(code) for code in codes], dtype=bool)


def tag_green(matrix, classification):
    """Mark the columns of ``matrix`` that ``classification`` flags as green.

    An activity is green when it equals an exact entry or starts with a
    prefix entry, comparing normalized codes (whitespace and case folded for
    IPC/CPC).

    Returns
    -------
    np.ndarray of bool, shape=(n_activities,)
    """
    scheme = getattr(matrix, "scheme", None)
    if scheme is not None:
        _check_scheme(scheme, classification)
    mask = green_mask(matrix.activities, classification, scheme)
    logger.info("%s tags %d of %d activities as green", classification.name, mask.sum(), mask.size)
    return mask


def tag_patents(patents, classification, rule=ANY):
    """Green flag per patent.

    Parameters
    ----------
    patents : list of PatentRecord
    classification : GreenClassification
    rule : {"any", "all"}
        Whether one green code suffices or every code must be green.

    Returns
    -------
    dict
        ``{patent_id: bool}``
    """
    if rule not in (ANY, ALL):
        raise DataError(f"tagging rule must be 'any' or 'all', got {rule!r}")
    combine = any if rule == ANY else all
    flags = {}
    for patent in patents:
        for code in patent.codes:
            _check_scheme(code.scheme, classification)
        flags[patent.patent_id] = combine(classification.matches(code) for code in patent.codes)
    return flags
