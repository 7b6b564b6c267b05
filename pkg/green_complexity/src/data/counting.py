"""Patent counting: turn patent records into geo x code weights."""
import logging
import math
from collections import Counter, defaultdict

from green_complexity.src.data.parsing import RawRecord
from green_complexity.src.errors import ConfigError

logger = logging.getLogger(__name__)

FRACTIONAL = "fractional"
FULL = "full"
COUNT_MODES = (FRACTIONAL, FULL)


def _geo_key(location, level):
    return location if level is None else location[:level]


def patent_shares(patent, mode, level=None, digits=None):
    """Weights one patent contributes per (geo, code).

    Parameters
    ----------
    patent : PatentRecord
    mode : {"fractional", "full"}
        Fractional: a geo gets (its occurrences) / (number of locations).
        Full: every distinct geo gets 1.
    level : int, optional
        Keep only the first ``level`` characters of each location, for
        hierarchical identifiers such as NUTS codes.
    digits : int, optional
        Aggregation depth applied to the codes before splitting.

    Returns
    -------
    dict
        ``{(geo, code): weight}``; each geo's weight is split equally across
        the patent's distinct codes.
    """
    geos = Counter(_geo_key(loc, level) for loc in patent.locations)
    codes = sorted({code.truncate(digits) for code in patent.codes})
    n_locations = len(patent.locations)
    shares = {}
    for geo, occurrences in geos.items():
        geo_weight = occurrences / n_locations if mode == FRACTIONAL else 1.0
        for code in codes:
            shares[(geo, code)] = geo_weight / len(codes)
    return shares


def count_patents(records, mode, level=None, digits=None):
    """Aggregate patents into (geo, code, period) weights.

    Parameters
    ----------
    records : list of PatentRecord
    mode : {"fractional", "full"}
        Chosen explicitly; in fractional mode every patent contributes a
        total weight of exactly 1.
    level : int, optional
        Geo granularity, see ``patent_shares``.
    digits : int, optional
        Code aggregation depth.

    Returns
    -------
    list of RawRecord
        Sorted by period, geo and code. An empty input gives an empty list.
    """
    if mode not in COUNT_MODES:
        raise ConfigError(f"count mode must be one of {COUNT_MODES}, got {mode!r}")
    if level is not None and level < 1:
        raise ConfigError(f"geo level must be >= 1, got {level}")
    shares = defaultdict(list)
    for patent in records:
        for (geo, code), weight in patent_shares(patent, mode, level, digits).items():
            shares[(patent.period, geo, code)].append(weight)
    logger.debug("counted %d patents into %d cells (%s)", len(records), len(shares), mode)
    return [
        RawRecord(geo, code, math.fsum(weights), period)
        for (period, geo, code), weights in sorted(shares.items())
    ]
