"""Green Complexity Index, Green Complexity Potential and its assist-matrix
(cross-layer) counterpart."""
import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.stats import rankdata

from green_complexity.models.complexity import GEO, RAW, ScoreVector, activity_mask
from green_complexity.models.relatedness import RelatednessDensity, relatedness_density
from green_complexity.src.data.codes import label
from green_complexity.src.errors import ConfigError, DataError

logger = logging.getLogger(__name__)

RANK = "rank"
PCI_WEIGHTED = "pci"


@dataclass(eq=False)
class GreenScores:
    """GCI, GCP and green specialization counts per geo."""
    geos: tuple
    gci: np.ndarray
    gcp: np.ndarray
    n_green: np.ndarray
    green_activities: tuple
    pci_source: dict = field(default_factory=dict)

    def to_frame(self):
        return pd.DataFrame({
            "geo": list(self.geos),
            "gci": self.gci,
            "gcp": self.gcp,
            "n_green_specializations": self.n_green,
        })


def _green_mask(m, green):
    mask = activity_mask(m, green)
    if not mask.any():
        raise DataError("green activity set shares no activity with the matrix")
    return mask


def _pci_values(m, pci, mask):
    values, missing = pci.lookup(m.activity_labels)
    missing_green = [a for a, g in zip(m.activity_labels, mask) if g and a in set(missing)]
    if missing_green:
        raise DataError(
            f"{len(missing_green)} green activities have no PCI",
            details={"activities": missing_green},
        )
    return values


def _rank_transform(values):
    """Ranks in (0, 1], highest PCI ranked 1; NaN stays NaN."""
    ranked = np.full(len(values), np.nan)
    defined = ~np.isnan(values)
    ranked[defined] = rankdata(values[defined]) / defined.sum()
    return ranked


def gci(m, pci, green, rank_transform=False):
    """GCI(g) = sum of PCI(a) over green activities a with M_ga = 1.

    PCI is taken as-is, so negative standardized values lower the index;
    ``rank_transform`` replaces PCI by its rank share in (0, 1].

    Parameters
    ----------
    m : BinaryBipartite
    pci : ScoreVector
        Activity complexities computed on the full activity set.
    green : array of bool or collection of labels
    """
    mask = _green_mask(m, green)
    values = _pci_values(m, pci, mask)
    if rank_transform:
        values = _rank_transform(values)
    scores = m.as_float()[:, mask] @ values[mask]
    return ScoreVector(
        GEO, m.geos, scores, "GCI", RANK if rank_transform else RAW,
        reference=pci.method, flags={"green_activities": int(mask.sum())},
    )


def gcp(net, m, green, weighting=None, pci=None):
    """GCP(g) = mean relatedness density to the green activities g lacks.

    NaN when the geo already holds every green activity. With
    ``weighting="pci"`` the mean is weighted by the rank share of each
    activity's PCI.
    """
    if weighting not in (None, PCI_WEIGHTED):
        raise ConfigError(f"GCP weighting must be None or 'pci', got {weighting!r}")
    if weighting == PCI_WEIGHTED and pci is None:
        raise ConfigError("PCI-weighted GCP needs PCI values")
    mask = _green_mask(m, green)
    density = relatedness_density(net, m).values
    weights = np.ones(len(mask))
    if weighting == PCI_WEIGHTED:
        weights = _rank_transform(_pci_values(m, pci, mask))

    candidates = mask[None, :] & (m.matrix == 0) & ~np.isnan(density)
    weight_matrix = np.where(candidates, weights[None, :], 0.0)
    total = weight_matrix.sum(axis=1)
    weighted = np.where(candidates, density, 0.0)
    scores = np.full(m.shape[0], np.nan)
    defined = total > 0
    scores[defined] = (weighted * weight_matrix).sum(axis=1)[defined] / total[defined]
    undefined = [g for g, ok in zip(m.geos, defined) if not ok]
    if undefined:
        logger.info("GCP undefined for %d geos holding every green activity", len(undefined))
    return ScoreVector(
        GEO, m.geos, scores, "GCP", PCI_WEIGHTED if weighting else RAW,
        flags={"undefined": undefined},
    )


def green_scores(m, pci, net, green, rank_transform=False, weighting=None):
    """GCI, GCP and the number of green specializations of every geo."""
    mask = _green_mask(m, green)
    index = gci(m, pci, mask, rank_transform=rank_transform)
    potential = gcp(net, m, mask, weighting=weighting, pci=pci)
    return GreenScores(
        geos=tuple(m.geos),
        gci=index.values,
        gcp=potential.values,
        n_green=m.matrix[:, mask].sum(axis=1).astype(np.int64),
        green_activities=tuple(label(a) for a, g in zip(m.activities, mask) if g),
        pci_source={"method": pci.method, "normalization": pci.normalization,
                    "rank_transform": bool(rank_transform), "weighting": weighting},
    )


def assisted_density(b, m_src, links=None):
    """Cross-layer density: share of each target activity's incoming assist
    that comes from a geo's source-layer specializations.

    omega^B_ga' = sum_a M_src[g, a] B_aa' / sum_a B_aa', NaN where no
    assist reaches a'. ``links`` (bool, same shape as B) keeps only the
    links it marks, e.g. the significant ones of a ValidatedNetwork.

    Returns
    -------
    RelatednessDensity
        Over the geos of ``m_src`` and the target activities of ``b``.
    """
    if m_src.activity_labels != [label(a) for a in b.source_activities]:
        raise DataError("source matrix and assist matrix have different activities")
    values = np.asarray(b.values, dtype=np.float64)
    if links is not None:
        links = np.asarray(links, dtype=bool)
        if links.shape != values.shape:
            raise DataError(f"link mask of shape {links.shape} for an assist matrix of shape {values.shape}")
        values = np.where(links, values, 0.0)
    incoming = values.sum(axis=0)
    numerator = m_src.as_float() @ values
    density = np.full(numerator.shape, np.nan)
    reached = incoming > 0
    density[:, reached] = numerator[:, reached] / incoming[reached]
    return RelatednessDensity(tuple(m_src.geos), tuple(b.target_activities), density)


def green_assist_potential(b, m_src, m_dst, green, links=None):
    """Green opportunities in the target layer opened by source-layer capabilities.

    For every geo present in both matrices: the mean assisted density over
    the green target activities the geo does not hold yet in ``m_dst``. NaN
    when no such activity is reachable.

    Parameters
    ----------
    b : AssistMatrix
        From ``m_src``'s layer (year y1) to ``m_dst``'s (year y2), e.g.
        technologies to exports.
    m_src, m_dst : BinaryBipartite
    green : array of bool or collection of labels
        Over the target activities.
    links : np.ndarray of bool, optional
        Restrict to these assist links.
    """
    if m_dst.activity_labels != [label(a) for a in b.target_activities]:
        raise DataError("target matrix and assist matrix have different activities")
    mask = _green_mask(m_dst, green)
    density = assisted_density(b, m_src, links).values
    position = {g: i for i, g in enumerate(m_dst.geos)}
    src_rows = np.array([i for i, g in enumerate(m_src.geos) if g in position], dtype=np.intp)
    if not src_rows.size:
        raise DataError("source and target matrices share no geo")
    geos = [m_src.geos[i] for i in src_rows]
    held = m_dst.matrix[[position[g] for g in geos]] != 0
    density = density[src_rows]

    candidates = mask[None, :] & ~held & ~np.isnan(density)
    counts = candidates.sum(axis=1)
    scores = np.full(len(geos), np.nan)
    defined = counts > 0
    scores[defined] = np.where(candidates, density, 0.0).sum(axis=1)[defined] / counts[defined]
    return ScoreVector(
        GEO, geos, scores, "GreenAssistPotential", RAW,
        flags={"green_activities": int(mask.sum()), "links": "validated" if links is not None else "all",
               "source_layer": b.source_layer, "target_layer": b.target_layer},
    )
