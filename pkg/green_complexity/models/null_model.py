"""Bipartite Configuration Model and Monte Carlo validation of assist links."""
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from statsmodels.stats.multitest import multipletests

from green_complexity.models.bipartite import degrees
from green_complexity.models.relatedness import assist_values
from green_complexity.src.data.codes import label
from green_complexity.src.errors import ConfigError, ConvergenceError, DataError

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 100000
DAMPING = 0.5

BONFERRONI = "bonferroni"
BH_FDR = "bh-fdr"
CORRECTIONS = {BONFERRONI: "bonferroni", BH_FDR: "fdr_bh"}
DEFAULT_SAMPLES = 1000
MIN_SAMPLES = 100
DEFAULT_ALPHA = 0.05
TIE_TOL = 1e-12
THREADS_ENV = "GREEN_COMPLEXITY_THREADS"


@dataclass(frozen=True, eq=False)
class NullModel:
    """Fitted BiCM: independent links with p_ga = x_g y_a / (1 + x_g y_a).

    Cells forced by full or empty rows/columns hold exactly 0 or 1 and the
    multipliers of those rows and columns are NaN.
    """
    geos: tuple
    activities: tuple
    probabilities: np.ndarray
    x: np.ndarray
    y: np.ndarray
    residual: float = 0.0
    iterations: int = 0

    @property
    def shape(self):
        return self.probabilities.shape

    def expected_degrees(self):
        """(expected diversification, expected ubiquity)"""
        return self.probabilities.sum(axis=1), self.probabilities.sum(axis=0)

    def sample(self, rng):
        """One binary matrix drawn from the ensemble."""
        return (rng.random(self.shape) < self.probabilities).astype(np.int8)


@dataclass(eq=False)
class ValidatedNetwork:
    """Assist links that survive the null-model test.

    ``p_values`` covers every cell (1 for unobserved links); ``adjusted`` is
    NaN for cells that were not tested.
    """
    source_activities: tuple
    target_activities: tuple
    observed: np.ndarray
    p_values: np.ndarray
    adjusted: np.ndarray
    significant: np.ndarray
    alpha: float
    correction: str
    samples: int
    seed: int
    warnings: list = field(default_factory=list)

    @property
    def n_tested(self):
        return int((~np.isnan(self.adjusted)).sum())

    def table(self):
        """Every cell with its observed value, p-value and decision."""
        sources = [label(a) for a in self.source_activities]
        targets = [label(a) for a in self.target_activities]
        rows, cols = np.indices(self.observed.shape)
        rows, cols = rows.ravel(), cols.ravel()
        return pd.DataFrame({
            "source": [sources[i] for i in rows],
            "target": [targets[j] for j in cols],
            "weight": self.observed.ravel(),
            "p_value": self.p_values.ravel(),
            "p_adjusted": self.adjusted.ravel(),
            "significant": self.significant.ravel(),
        })

    def edges(self):
        table = self.table()
        return table[table["significant"]].reset_index(drop=True)


def _degree_classes(values):
    classes, inverse, counts = np.unique(values, return_inverse=True, return_counts=True)
    return classes.astype(np.float64), inverse, counts.astype(np.float64)


def _reduce(row_targets, col_targets):
    """Peel off rows and columns whose probabilities are forced to 0 or 1.

    A full row (target equal to the number of active columns) fills all
    active columns and lowers their targets by one; an empty row is zero.
    Same for columns. Repeats until nothing changes.

    Returns
    -------
    fixed : np.ndarray
        Forced probabilities, NaN on cells left to fit.
    rows, cols : np.ndarray of bool
        Rows and columns left to fit.
    row_targets, col_targets : np.ndarray
        Remaining degree targets.
    """
    row_targets = row_targets.astype(np.float64).copy()
    col_targets = col_targets.astype(np.float64).copy()
    fixed = np.full((len(row_targets), len(col_targets)), np.nan)
    rows = np.ones(len(row_targets), dtype=bool)
    cols = np.ones(len(col_targets), dtype=bool)
    changed = True
    while changed and rows.any() and cols.any():
        changed = False
        n_cols = cols.sum()
        for g in np.flatnonzero(rows):
            if row_targets[g] == 0 or row_targets[g] == n_cols:
                full = row_targets[g] == n_cols
                fixed[g, cols] = 1.0 if full else 0.0
                if full:
                    col_targets[cols] -= 1
                rows[g] = False
                changed = True
        n_rows = rows.sum()
        for a in np.flatnonzero(cols):
            if col_targets[a] == 0 or col_targets[a] == n_rows:
                full = col_targets[a] == n_rows
                fixed[rows, a] = 1.0 if full else 0.0
                if full:
                    row_targets[rows] -= 1
                cols[a] = False
                changed = True
    if np.any(row_targets[rows] < 0) or np.any(col_targets[cols] < 0):
        raise DataError("degree sequences are inconsistent")
    fixed[~rows, :] = np.where(np.isnan(fixed[~rows, :]), 0.0, fixed[~rows, :])
    fixed[:, ~cols] = np.where(np.isnan(fixed[:, ~cols]), 0.0, fixed[:, ~cols])
    return fixed, rows, cols, row_targets, col_targets


def _fixed_point(row_degrees, row_counts, col_degrees, col_counts, tol, max_iter):
    """Damped fixed point for the multipliers of one degree class each.

    x_k = r_k / sum_l n_l y_l / (1 + x_k y_l), y_l = c_l / sum_k m_k x_k / (1 + x_k y_l)
    """
    total = np.sqrt(row_degrees @ row_counts)
    x = row_degrees / total
    y = col_degrees / total
    residual = np.inf
    for n in range(1, max_iter + 1):
        product = np.outer(x, y)
        p = product / (1.0 + product)
        residual = max(
            np.max(np.abs(p @ col_counts - row_degrees)),
            np.max(np.abs(row_counts @ p - col_degrees)),
        )
        if residual < tol:
            return x, y, residual, n
        x_new = row_degrees / ((y * col_counts)[None, :] / (1.0 + product)).sum(axis=1)
        product = np.outer(x_new, y)
        y_new = col_degrees / ((x_new * row_counts)[:, None] / (1.0 + product)).sum(axis=0)
        x = DAMPING * x + (1 - DAMPING) * x_new
        y = DAMPING * y + (1 - DAMPING) * y_new
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            break
    raise ConvergenceError(
        f"BiCM fit did not converge after {n} iterations (residual {residual:.3g})",
        details={"iterations": n, "residual": float(residual)},
    )


def fit_bicm(m, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Fit the Bipartite Configuration Model to the degrees of ``m``.

    Rows (columns) sharing a degree share a multiplier, so the fixed point
    runs over degree classes.

    Parameters
    ----------
    m : BinaryBipartite
    tol : float
        Largest allowed absolute degree mismatch.
    max_iter : int

    Returns
    -------
    NullModel
    """
    if not tol > 0:
        raise ConfigError(f"tol must be > 0, got {tol}")
    profile = degrees(m)
    fixed, rows, cols, row_targets, col_targets = _reduce(profile.diversification, profile.ubiquity)
    probabilities = fixed
    x = np.full(len(rows), np.nan)
    y = np.full(len(cols), np.nan)
    residual, iterations = 0.0, 0
    if rows.any() and cols.any():
        row_degrees, row_inverse, row_counts = _degree_classes(row_targets[rows])
        col_degrees, col_inverse, col_counts = _degree_classes(col_targets[cols])
        xs, ys, residual, iterations = _fixed_point(
            row_degrees, row_counts, col_degrees, col_counts, tol, max_iter,
        )
        product = np.outer(xs[row_inverse], ys[col_inverse])
        probabilities[np.ix_(rows, cols)] = product / (1.0 + product)
        x[rows] = xs[row_inverse]
        y[cols] = ys[col_inverse]
    logger.debug("BiCM fit: %d iterations, residual %.3g", iterations, residual)
    probabilities.setflags(write=False)
    return NullModel(tuple(m.geos), tuple(m.activities), probabilities, x, y, float(residual), iterations)


def _workers(workers):
    if workers is None:
        workers = int(os.environ.get(THREADS_ENV, "1"))
    if workers < 1:
        raise ConfigError(f"worker count must be >= 1, got {workers}")
    return workers


def _count_exceedances(seeds, null_src, null_dst, src_rows, dst_rows, observed):
    """Number of draws, for each cell, where the sampled B is >= the observed B."""
    counts = np.zeros(observed.shape, dtype=np.int64)
    for seed in seeds:
        rng = np.random.Generator(np.random.Philox(seed))
        source = null_src.sample(rng)[src_rows]
        target = null_dst.sample(rng)[dst_rows]
        values, _ = assist_values(source, target)
        counts += values >= observed - TIE_TOL
    return counts


def validate_links(b, null_src, null_dst, samples=DEFAULT_SAMPLES, alpha=DEFAULT_ALPHA,
                   correction=BH_FDR, seed=0, workers=None):
    """Monte Carlo test of every observed assist link against the BiCM.

    Each draw samples a source and a destination matrix from the two null
    models and recomputes the assist matrix on them. The one-sided p-value
    of a cell is (1 + #draws with B* >= B) / (samples + 1). Links with B > 0
    on defined rows are corrected for multiple testing.

    Every draw gets its own Philox stream spawned from ``seed``, so results
    do not depend on ``workers`` (default: the ``GREEN_COMPLEXITY_THREADS``
    environment variable, else 1).

    Returns
    -------
    ValidatedNetwork
    """
    if samples < MIN_SAMPLES:
        raise ConfigError(f"samples must be >= {MIN_SAMPLES}, got {samples}")
    if not 0 < alpha < 1:
        raise ConfigError(f"alpha must be in (0, 1), got {alpha}")
    if correction not in CORRECTIONS:
        raise ConfigError(f"correction must be one of {sorted(CORRECTIONS)}, got {correction!r}")
    if [label(a) for a in null_src.activities] != [label(a) for a in b.source_activities]:
        raise DataError("source null model does not match the assist matrix activities")
    if [label(a) for a in null_dst.activities] != [label(a) for a in b.target_activities]:
        raise DataError("destination null model does not match the assist matrix activities")

    position = {g: i for i, g in enumerate(null_dst.geos)}
    src_rows = np.array([i for i, g in enumerate(null_src.geos) if g in position], dtype=np.intp)
    if not src_rows.size:
        raise DataError("null models share no geo")
    common = [null_src.geos[i] for i in src_rows]
    dst_rows = np.array([position[g] for g in common], dtype=np.intp)

    observed = np.asarray(b.values, dtype=np.float64)
    children = np.random.SeedSequence(seed).spawn(samples)
    n_workers = _workers(workers)
    batches = [children[k::n_workers] for k in range(n_workers)]
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        partial = pool.map(
            lambda batch: _count_exceedances(batch, null_src, null_dst, src_rows, dst_rows, observed),
            batches,
        )
        counts = sum(partial)
    p_values = (1.0 + counts) / (samples + 1.0)

    tested = (observed > 0) & b.defined_rows[:, None]
    adjusted = np.full(observed.shape, np.nan)
    significant = np.zeros(observed.shape, dtype=bool)
    if tested.any():
        reject, corrected, _, _ = multipletests(p_values[tested], alpha=alpha, method=CORRECTIONS[correction])
        adjusted[tested] = corrected
        significant[tested] = reject
    logger.info(
        "%d of %d links significant (%s, alpha=%g, %d samples)",
        significant.sum(), tested.sum(), correction, alpha, samples,
    )
    return ValidatedNetwork(
        source_activities=tuple(b.source_activities),
        target_activities=tuple(b.target_activities),
        observed=observed,
        p_values=p_values,
        adjusted=adjusted,
        significant=significant,
        alpha=float(alpha),
        correction=correction,
        samples=int(samples),
        seed=int(seed),
        warnings=list(b.warnings),
    )
