"""Complexity indices on a binary geo x activity matrix.

Method of Reflections, ECI/PCI, the Fitness-Complexity fixed point and its
exogenous and sectoral variants.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
import scipy.sparse as sp

from green_complexity.models.bipartite import degrees
from green_complexity.src.data.codes import label
from green_complexity.src.errors import ConfigError, ConvergenceError, DataError

logger = logging.getLogger(__name__)

GEO = "geo"
ACTIVITY = "activity"

STANDARDIZED = "standardized"
MEAN_ONE = "mean-one"
DUMMY = "dummy"
REFERENCE = "reference"
RAW = "raw"
SCALES = (MEAN_ONE, DUMMY, REFERENCE)

DUMMY_GEO = "__dummy__"

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 5000
FITNESS_FLOOR = 1e-12
EXTREMAL_COMPLEXITY = 1e9
RANK_WINDOW = 10
RANK_DECIMALS = 12

EIGEN_TOL = 1e-12
EIGEN_MAX_ITER = 10000
EIGEN_GAP = 1e-9
DENSE_LIMIT = 500


@dataclass
class ConvergenceRecord:
    """How an iterative solver ended."""
    iterations: int = 0
    residual: float = float("nan")
    converged: bool = True
    rank_stable_iterations: int = 0
    means: list = field(default_factory=list, repr=False)

    def to_dict(self):
        return {
            "iterations": self.iterations,
            "residual": self.residual,
            "converged": self.converged,
            "rank_stable_iterations": self.rank_stable_iterations,
        }


@dataclass(eq=False)
class ScoreVector:
    """Scores for every geo or every activity.

    Parameters
    ----------
    axis : {"geo", "activity"}
    ids : tuple of str
    values : np.ndarray
        NaN marks an undefined score.
    method : str
        ``"ECI"``, ``"PCI"``, ``"Fitness"``, ``"Complexity"``, ...
    normalization : str
        ``"standardized"``, ``"mean-one"``, ``"dummy"``, ``"reference"`` or ``"raw"``.
    reference : str, optional
        Identifier the values are divided by, for referenced scales.
    convergence : ConvergenceRecord, optional
    flags : dict
        Solver diagnostics (non-unique eigenvector, extremal ids, dropped ids).
    """
    axis: str
    ids: tuple
    values: np.ndarray
    method: str
    normalization: str
    reference: str = None
    convergence: ConvergenceRecord = None
    flags: dict = field(default_factory=dict)

    def __post_init__(self):
        self.ids = tuple(label(i) for i in self.ids)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (len(self.ids),):
            raise DataError(f"{len(self.ids)} ids but {self.values.shape} values")

    def __len__(self):
        return len(self.ids)

    def __getitem__(self, key):
        return self.values[self.ids.index(label(key))]

    def as_series(self):
        return pd.Series(self.values, index=list(self.ids), name=self.method)

    def ranks(self):
        """Descending ranks starting at 1; ties keep input order, NaN stays NaN."""
        values = self.values
        defined = ~np.isnan(values)
        order = np.argsort(np.where(defined, -values, np.inf), kind="stable")
        ranks = np.full(len(values), np.nan)
        ranks[order[: defined.sum()]] = np.arange(1, defined.sum() + 1)
        return ranks

    def lookup(self, ids):
        """Values aligned to ``ids`` and the ids that have no score here."""
        index = {i: k for k, i in enumerate(self.ids)}
        values = np.full(len(ids), np.nan)
        missing = []
        for k, i in enumerate(ids):
            key = label(i)
            if key in index:
                values[k] = self.values[index[key]]
            else:
                missing.append(key)
        return values, missing

    def to_frame(self):
        return pd.DataFrame({"id": list(self.ids), "value": self.values, "rank": self.ranks()})

    def metadata(self):
        return {
            "axis": self.axis,
            "method": self.method,
            "normalization": self.normalization,
            "reference": self.reference,
            "convergence": self.convergence.to_dict() if self.convergence else None,
            "flags": self.flags,
        }


@dataclass(eq=False)
class ReflectionsTrace:
    """Iterates of the Method of Reflections.

    Row ``n`` of ``geo`` / ``activity`` holds k_g^(n) / k_a^(n); the
    ``*_standardized`` arrays hold the same iterates with mean removed and
    unit variance.
    """
    geos: tuple
    activities: tuple
    geo: np.ndarray
    activity: np.ndarray
    geo_standardized: np.ndarray
    activity_standardized: np.ndarray

    @property
    def iterations(self):
        return self.geo.shape[0] - 1


def standardize(values):
    """Remove the mean and divide by the (population) standard deviation.

    A constant vector standardizes to zeros.
    """
    values = np.asarray(values, dtype=np.float64)
    centered = values - values.mean()
    std = centered.std()
    if std == 0 or not np.isfinite(std):
        return np.zeros_like(centered)
    return centered / std


def check_degrees(m):
    """Raise DataError naming zero-diversification geos and zero-ubiquity activities."""
    profile = degrees(m)
    empty_geos = [g for g, d in zip(m.geos, profile.diversification) if d == 0]
    empty_activities = [label(a) for a, u in zip(m.activities, profile.ubiquity) if u == 0]
    if empty_geos or empty_activities:
        raise DataError(
            f"{len(empty_geos)} geos without specializations and {len(empty_activities)} "
            f"activities without specialized geos; drop them first",
            details={"geos": empty_geos, "activities": empty_activities},
        )
    return profile


def reflections(m, iterations, initial=None):
    """Method of Reflections iterates.

    k_g^(n) = (1/k_g^0) sum_a M_ga k_a^(n-1), and symmetrically for activities.

    Parameters
    ----------
    m : BinaryBipartite
        No zero-degree rows or columns.
    iterations : int
        Number of reflection steps n >= 0.
    initial : tuple of array, optional
        Starting ``(geo, activity)`` vectors; defaults to diversification and
        ubiquity.

    Returns
    -------
    ReflectionsTrace
    """
    if iterations < 0:
        raise ConfigError(f"iterations must be >= 0, got {iterations}")
    profile = check_degrees(m)
    matrix = m.as_float()
    d = profile.diversification.astype(np.float64)
    u = profile.ubiquity.astype(np.float64)
    if initial is None:
        kg, ka = d.copy(), u.copy()
    else:
        kg = np.asarray(initial[0], dtype=np.float64).copy()
        ka = np.asarray(initial[1], dtype=np.float64).copy()

    n_geo, n_act = matrix.shape
    geo = np.empty((iterations + 1, n_geo))
    act = np.empty((iterations + 1, n_act))
    geo_std = np.empty_like(geo)
    act_std = np.empty_like(act)
    geo[0], act[0] = kg, ka
    sg, sa = standardize(kg), standardize(ka)
    geo_std[0], act_std[0] = sg, sa
    for n in range(1, iterations + 1):
        kg, ka = (matrix @ ka) / d, (matrix.T @ kg) / u
        # the map fixes constants, so reflecting the standardized iterate and
        # standardizing again equals standardizing the raw iterate, without
        # the cancellation the raw iterate suffers as it flattens out
        sg, sa = standardize((matrix @ sa) / d), standardize((matrix.T @ sg) / u)
        geo[n], act[n] = kg, ka
        geo_std[n], act_std[n] = sg, sa
    return ReflectionsTrace(m.geos, tuple(label(a) for a in m.activities), geo, act, geo_std, act_std)


def _dense_second_eigvec(kernel, degree):
    """Second eigenpair of D^-1 K via the symmetric form D^-1/2 K D^-1/2."""
    root = np.sqrt(degree)
    symmetric = kernel / root[:, None] / root[None, :]
    values, vectors = np.linalg.eigh(symmetric)
    vector = vectors[:, -2] / root
    gaps = [values[-1] - values[-2]]
    if len(values) > 2:
        gaps.append(values[-2] - values[-3])
    non_unique = bool(min(gaps) < EIGEN_GAP)
    record = ConvergenceRecord(iterations=0, residual=0.0, converged=True)
    return float(values[-2]), vector, non_unique, record


def _power_second_eigvec(apply, degree, tol=EIGEN_TOL, max_iter=EIGEN_MAX_ITER):
    """Second eigenpair of a reversible transition matrix by power iteration.

    ``apply`` computes W @ v. The leading eigenvector of W is constant and
    its stationary weights are proportional to ``degree``, so each iterate is
    projected off the constant direction with those weights.
    """
    weights = degree / degree.sum()

    def deflate(v):
        return v - weights @ v

    vector = deflate(degree - degree.mean())
    if np.linalg.norm(vector) == 0:
        vector = deflate(np.random.default_rng(0).standard_normal(len(degree)))
    vector /= np.linalg.norm(vector)
    eigenvalue, residual = 0.0, np.inf
    for n in range(1, max_iter + 1):
        image = deflate(apply(vector))
        norm = np.linalg.norm(image)
        if norm == 0:
            return 0.0, vector, True, ConvergenceRecord(n, 0.0, False)
        eigenvalue = float(vector @ image)
        image /= norm
        if image @ vector < 0:
            image = -image
        residual = float(np.linalg.norm(image - vector))
        vector = image
        if residual < tol:
            third = _power_third_eigenvalue(apply, weights, vector, tol, max_iter)
            non_unique = bool(min(1.0 - eigenvalue, eigenvalue - third) < EIGEN_GAP)
            return eigenvalue, vector, non_unique, ConvergenceRecord(n, residual, True)
    logger.warning("power iteration stopped after %d steps (residual %.3g)", max_iter, residual)
    # slow convergence means the second and third eigenvalues are close
    return eigenvalue, vector, True, ConvergenceRecord(max_iter, residual, False)


def _power_third_eigenvalue(apply, weights, second, tol, max_iter):
    """Third eigenvalue from the pi-weighted Rayleigh quotient on the complement of 1 and ``second``.

    W is reversible, so its spectrum is real and non-negative and power
    iteration on that complement approaches the third eigenvalue from below.
    Returns -inf when there is no third direction.
    """
    second_norm = weights @ (second * second)

    def deflate(v):
        v = v - weights @ v
        return v - (weights @ (v * second)) / second_norm * second

    vector = deflate(np.random.default_rng(1).standard_normal(len(weights)))
    norm = np.linalg.norm(vector)
    if norm < EIGEN_TOL:
        return -np.inf
    vector /= norm
    value = np.inf
    for _ in range(max_iter):
        image = deflate(apply(vector))
        estimate = float((weights @ (vector * image)) / (weights @ (vector * vector)))
        norm = np.linalg.norm(image)
        if norm == 0:
            return 0.0
        vector = image / norm
        if abs(estimate - value) < tol:
            return estimate
        value = estimate
    return value


def _orient(vector, degree, sign):
    """Fix the eigenvector sign: ``sign`` * correlation with ``degree`` >= 0."""
    alignment = sign * float((vector - vector.mean()) @ (degree - degree.mean()))
    if alignment < 0 or (alignment == 0 and vector[np.argmax(np.abs(vector))] < 0):
        return -vector
    return vector


def eci_pci(m, dense_limit=DENSE_LIMIT):
    """Economic and Product Complexity Index.

    ECI is the standardized eigenvector of the second largest eigenvalue of
    the geo transition matrix D^-1 M U^-1 M^T; PCI the same on the activity
    side, U^-1 M^T D^-1 M.

    Signs are fixed so that ECI correlates non-negatively with
    diversification and PCI non-positively with ubiquity. When the second
    eigenvalue is degenerate the results carry ``flags["non_unique"]``.

    Returns
    -------
    (ScoreVector, ScoreVector)
        Geo ECI and activity PCI.
    """
    profile = check_degrees(m)
    d = profile.diversification.astype(np.float64)
    u = profile.ubiquity.astype(np.float64)
    if len(d) < 2 or len(u) < 2:
        raise DataError("ECI/PCI need at least two geos and two activities")

    results = []
    for axis, degree, other in ((GEO, d, u), (ACTIVITY, u, d)):
        if len(degree) < dense_limit:
            matrix = m.as_float() if axis == GEO else m.as_float().T
            kernel = (matrix / other[None, :]) @ matrix.T
            eigenvalue, vector, non_unique, record = _dense_second_eigvec(kernel, degree)
        else:
            matrix = sp.csr_matrix(m.matrix if axis == GEO else m.matrix.T, dtype=np.float64)
            transposed = matrix.T.tocsr()

            def apply(v, matrix=matrix, transposed=transposed, degree=degree, other=other):
                return (matrix @ ((transposed @ v) / other)) / degree

            eigenvalue, vector, non_unique, record = _power_second_eigvec(apply, degree)
        vector = _orient(vector, degree, 1.0 if axis == GEO else -1.0)
        results.append((eigenvalue, standardize(vector), non_unique, record))

    (eig_g, eci, nu_g, rec_g), (eig_a, pci, nu_a, rec_a) = results
    non_unique = nu_g or nu_a
    if non_unique:
        logger.warning("second eigenvalue is degenerate; ECI/PCI are not unique")
    geo = ScoreVector(GEO, m.geos, eci, "ECI", STANDARDIZED, convergence=rec_g,
                      flags={"non_unique": non_unique, "eigenvalue": eig_g})
    act = ScoreVector(ACTIVITY, m.activities, pci, "PCI", STANDARDIZED, convergence=rec_a,
                      flags={"non_unique": non_unique, "eigenvalue": eig_a})
    return geo, act


def _ranking(values):
    # values closer than the 12th decimal count as tied
    return np.argsort(-np.round(values, RANK_DECIMALS), kind="stable")


def _relative_change(new, old):
    return float(np.max(np.abs(new - old) / np.maximum(old, FITNESS_FLOOR)))


def _fitness_iterations(matrix, ids, tol, max_iter, rank_window=RANK_WINDOW):
    """Iterate the normalized Fitness-Complexity map from all-ones vectors.

    Stops once the relative change is below ``tol`` and both rankings have
    held for ``rank_window`` consecutive iterations.
    """
    n_geo, n_act = matrix.shape
    transposed = np.ascontiguousarray(matrix.T)
    fitness = np.ones(n_geo)
    complexity = np.ones(n_act)
    record = ConvergenceRecord(converged=False)
    previous = None
    extremal = set()
    for n in range(1, max_iter + 1):
        raw_fitness = matrix @ complexity
        new_fitness = raw_fitness / raw_fitness.mean()
        with np.errstate(divide="ignore", over="ignore"):
            raw_complexity = 1.0 / (transposed @ (1.0 / np.maximum(new_fitness, FITNESS_FLOOR)))
        if not np.all(np.isfinite(raw_complexity)) or not raw_complexity.mean() > 0:
            bad = [ids[j] for j in np.flatnonzero(~np.isfinite(raw_complexity))]
            raise ConvergenceError(
                f"complexity diverged at iteration {n} for {len(bad)} activities",
                details={"iteration": n, "activities": bad},
            )
        new_complexity = raw_complexity / raw_complexity.mean()
        extremal.update(np.flatnonzero(new_complexity > EXTREMAL_COMPLEXITY).tolist())

        record.residual = max(_relative_change(new_fitness, fitness),
                              _relative_change(new_complexity, complexity))
        record.means.append((float(new_fitness.mean()), float(new_complexity.mean())))
        ranking = (_ranking(new_fitness), _ranking(new_complexity))
        if previous is not None and all(np.array_equal(a, b) for a, b in zip(ranking, previous)):
            record.rank_stable_iterations += 1
        else:
            record.rank_stable_iterations = 0
        previous = ranking
        fitness, complexity = new_fitness, new_complexity
        record.iterations = n
        if record.residual < tol and record.rank_stable_iterations >= rank_window:
            record.converged = True
            break
    return fitness, complexity, record, sorted(extremal)


def fitness_complexity(m, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, scale=MEAN_ONE, reference=None):
    """Economic Fitness and Complexity fixed point.

    F_g = sum_a M_ga Q_a and Q_a = 1 / sum_g M_ga / F_g, each normalized to
    mean one after every step, starting from all-ones vectors.

    Parameters
    ----------
    m : BinaryBipartite
        No zero-degree rows or columns.
    tol : float
        Converged when the largest relative change of any component is
        below it and both rankings have been stable for ``RANK_WINDOW``
        consecutive iterations.
    max_iter : int
        Iteration cap; reaching it sets ``convergence.converged = False``.
    scale : {"mean-one", "dummy", "reference"}
        ``"dummy"`` adds a geo specialized in every activity and divides every
        fitness by the dummy's; ``"reference"`` divides by the fitness of the
        geo named by ``reference``.

    Returns
    -------
    (ScoreVector, ScoreVector)
        Geo fitness and activity complexity.
    """
    if not tol > 0:
        raise ConfigError(f"tol must be > 0, got {tol}")
    if max_iter < 1:
        raise ConfigError(f"max_iter must be >= 1, got {max_iter}")
    if scale not in SCALES:
        raise ConfigError(f"scale must be one of {SCALES}, got {scale!r}")
    if scale == REFERENCE and reference not in m.geos:
        raise ConfigError(f"reference geo {reference!r} is not in the matrix")
    check_degrees(m)

    work = m.with_row(DUMMY_GEO, np.ones(m.shape[1])) if scale == DUMMY else m
    ids = [label(a) for a in m.activities]
    fitness, complexity, record, extremal = _fitness_iterations(work.as_float(), ids, tol, max_iter)
    if not record.converged:
        logger.warning(
            "fitness-complexity not converged after %d iterations (residual %.3g)",
            record.iterations, record.residual,
        )
    flags = {}
    if extremal:
        flags["extremal"] = [ids[j] for j in extremal]
        logger.warning("%d activities with extremal complexity", len(extremal))

    normalization, ref_id = MEAN_ONE, None
    if scale == DUMMY:
        fitness = fitness[:-1] / fitness[-1]
        normalization, ref_id = DUMMY, DUMMY_GEO
    elif scale == REFERENCE:
        fitness = fitness / fitness[m.geos.index(reference)]
        normalization, ref_id = REFERENCE, reference

    geo = ScoreVector(GEO, m.geos, fitness, "Fitness", normalization, ref_id, record, dict(flags))
    act = ScoreVector(ACTIVITY, m.activities, complexity, "Complexity", MEAN_ONE, None, record, dict(flags))
    return geo, act


def _mean_one(values, what):
    mean = values.mean()
    if not mean > 0:
        raise DataError(f"{what} is zero for every geo; cannot normalize")
    return values / mean


def exogenous_fitness(m_sub, q_ref, normalize=True):
    """Fitness of (sub-national) geos from externally computed complexities.

    F_g = sum_a M_ga Q_ref(a), normalized to mean one across the geos.
    Activities without a reference complexity are dropped and listed in
    ``flags["dropped_activities"]``.
    """
    labels = [label(a) for a in m_sub.activities]
    values, missing = q_ref.lookup(labels)
    present = ~np.isnan(values)
    if not present.any():
        raise DataError("no activity of the matrix has a reference complexity")
    if missing:
        logger.warning("%d activities without reference complexity dropped", len(missing))
    raw = m_sub.as_float()[:, present] @ values[present]
    scores = _mean_one(raw, "exogenous fitness") if normalize else raw
    return ScoreVector(
        GEO, m_sub.geos, scores, "ExogenousFitness", MEAN_ONE if normalize else RAW,
        flags={"dropped_activities": missing, "source": q_ref.method},
    )


def activity_mask(m, subset):
    """Boolean column mask from a mask or a collection of activity labels."""
    labels = [label(a) for a in m.activities]
    subset = np.asarray(list(subset) if not isinstance(subset, np.ndarray) else subset)
    if subset.dtype == bool:
        if subset.shape != (len(labels),):
            raise DataError(f"mask of length {subset.size} for {len(labels)} activities")
        return subset
    wanted = {label(s) for s in subset}
    return np.array([lab in wanted for lab in labels], dtype=bool)


def sectoral_fitness(m, q_full, subset, name="green", normalize=True):
    """Fitness restricted to an activity subset, with full-spectrum complexities.

    F_g = sum over a in subset of M_ga Q_full(a), normalized to mean one.

    Parameters
    ----------
    m : BinaryBipartite
        The full matrix ``q_full`` was computed on.
    q_full : ScoreVector
        Activity complexities of the full matrix.
    subset : array of bool or collection of labels
    name : str
        Recorded in the method tag, e.g. ``"SectoralFitness[green]"``.
    """
    mask = activity_mask(m, subset)
    if not mask.any():
        raise DataError(f"subset {name!r} shares no activity with the matrix")
    labels = [label(a) for a in m.activities]
    values, missing = q_full.lookup(labels)
    if missing:
        raise DataError(
            f"{len(missing)} activities have no complexity; compute it on the full matrix",
            details={"activities": missing},
        )
    raw = m.as_float()[:, mask] @ values[mask]
    scores = _mean_one(raw, f"{name} fitness") if normalize else raw
    return ScoreVector(
        GEO, m.geos, scores, f"SectoralFitness[{name}]", MEAN_ONE if normalize else RAW,
        flags={"subset": name, "subset_size": int(mask.sum())},
    )


def exogenous_eci(m_sub, pci_ref):
    """Averaging counterpart of exogenous fitness.

    k_g = mean PCI_ref over the geo's specializations, then standardized.
    Geos without any scored specialization are NaN.
    """
    labels = [label(a) for a in m_sub.activities]
    values, missing = pci_ref.lookup(labels)
    present = ~np.isnan(values)
    if not present.any():
        raise DataError("no activity of the matrix has a reference PCI")
    matrix = m_sub.as_float()[:, present]
    d = matrix.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        average = (matrix @ values[present]) / d
    scores = np.full(len(d), np.nan)
    defined = d > 0
    scores[defined] = standardize(average[defined])
    return ScoreVector(GEO, m_sub.geos, scores, "ExogenousECI", STANDARDIZED,
                       flags={"dropped_activities": missing})


def aggregation_paradox(m, pci, atol=1e-9):
    """Geo pairs whose average complexity ties although their diversification differs.

    Averaging-based indices cannot tell a geo specialized in everything from
    one holding a single activity of average complexity; the pairs listed
    here are the ones where that happens in ``m``.

    Returns
    -------
    list of (str, str, float)
        Both geos and their shared average complexity.
    """
    values, missing = pci.lookup([label(a) for a in m.activities])
    if missing:
        raise DataError(f"{len(missing)} activities have no PCI", details={"activities": missing})
    matrix = m.as_float()
    d = matrix.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        average = (matrix @ values) / d
    pairs = []
    for i in range(len(d)):
        for j in range(i + 1, len(d)):
            if d[i] > 0 and d[j] > 0 and d[i] != d[j] and abs(average[i] - average[j]) <= atol:
                pairs.append((m.geos[i], m.geos[j], float(average[i])))
    return pairs
