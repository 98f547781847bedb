"""Nondominance filtering, knee detection and weight-selection searches.

Both objectives are minimized. Points are :class:`ObjectivePoint` objects;
a *trainer* is any callable ``trainer(lam, seed=..., epochs=...)`` that
returns the objective point reached with weighted-sum weight ``lam``.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DegeneratePairError, ProbeError
from .training import derive_seed

DUPLICATE_RADIUS = 1e-3
KNEE_TIE_TOL = 1e-12


def filter_nondominated(points):
    """Points not weakly dominated by any other, sorted by ascending omega.

    Exact duplicates collapse to their first occurrence.
    """
    order = sorted(range(len(points)), key=lambda i: (points[i].e_value, points[i].omega_value, i))
    kept = []
    best = math.inf
    for i in order:
        if points[i].omega_value < best:
            kept.append(points[i])
            best = points[i].omega_value
    kept.reverse()
    return kept


def dominates(p, q):
    return (
        p.e_value <= q.e_value
        and p.omega_value <= q.omega_value
        and (p.e_value < q.e_value or p.omega_value < q.omega_value)
    )


class FrontArchive:
    """Nondominated set of objective points plus the log of every insert."""

    def __init__(self, points=()):
        self.history = []
        self.points = []
        self.insert(points)

    def insert(self, points):
        points = list(points)
        self.history.extend(points)
        self.points = filter_nondominated(self.points + points)

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __contains__(self, point):
        return any(p is point for p in self.points)


def lambda_equalizing(p, q):
    """Weight at which ``p`` and ``q`` have equal weighted sums."""
    d1 = q.e_value - p.e_value
    d2 = q.omega_value - p.omega_value
    if d1 == 0.0 or d2 == 0.0 or (d1 > 0) == (d2 > 0):
        raise DegeneratePairError(f"points {p.values} and {q.values} are not mutually nondominated")
    return -d1 / (d2 - d1)


def _normalizer(points):
    e = np.array([p.e_value for p in points])
    o = np.array([p.omega_value for p in points])
    lo = np.array([e.min(), o.min()])
    span = np.array([e.max() - lo[0], o.max() - lo[1]])
    span[span == 0.0] = 1.0
    return lo, span


def find_knee(points):
    """Point farthest below the chord joining the two extreme points.

    Both objectives are min-max normalized over ``points``. With fewer than
    three points the one closest to the normalized ideal point is returned.
    Ties go to the smallest omega value.
    """
    points = list(points)
    if not points:
        raise ValueError("cannot find a knee in an empty archive")
    lo, span = _normalizer(points)
    xy = np.array([[(p.e_value - lo[0]) / span[0], (p.omega_value - lo[1]) / span[1]] for p in points])
    if len(points) < 3:
        score = -np.hypot(xy[:, 0], xy[:, 1])
    else:
        # the extremes sit at (0, 1) and (1, 0); distance below x + y = 1
        score = (1.0 - xy[:, 0] - xy[:, 1]) / math.sqrt(2.0)
    # scores within rounding of the best count as ties
    best = score.max()
    ties = [p for p, s in zip(points, score) if s >= best - KNEE_TIE_TOL]
    return min(ties, key=lambda p: p.omega_value)


@dataclass
class SearchBudget:
    levels: int = 3
    epochs_per_probe: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.levels < 1 or self.epochs_per_probe < 1:
            raise ConfigurationError("search budget must be positive")


@dataclass
class SearchResult:
    archive: FrontArchive
    knee: object
    probes: list = field(default_factory=list)  # dicts: level, lam, seed, point
    interval: tuple = None


class _Probe:
    """Picklable wrapper so probes can be shipped to worker processes."""

    def __init__(self, trainer, epochs):
        self.trainer = trainer
        self.epochs = epochs

    def __call__(self, job):
        level, _, lam, seed = job
        try:
            point = self.trainer(lam, seed=seed, epochs=self.epochs)
        except ProbeError:
            raise
        except Exception as exc:
            raise ProbeError(lam, exc) from exc
        point.meta.setdefault("lam", lam)
        point.meta.setdefault("seed", seed)
        point.meta.setdefault("level", level)
        return point


def _run_probes(trainer, jobs, epochs, map_fn):
    """``jobs`` is a list of (level, index, lam, seed); returns points in order."""
    return list((map_fn or map)(_Probe(trainer, epochs), jobs))


def _dichotomic(trainer, lam1, lam2, budget, stochastic, map_fn=None):
    if not 0.0 <= lam1 < lam2 < 1.0:
        raise ConfigurationError(f"need 0 <= lam1 < lam2 < 1, got {lam1}, {lam2}")
    rng = np.random.default_rng(derive_seed(budget.seed, "perturb"))
    lams = [lam1, lam2]
    archive = FrontArchive()
    probes = []
    for level in range(budget.levels):
        jobs = [(level, i, lam, derive_seed(budget.seed, level, i)) for i, lam in enumerate(lams)]
        points = _run_probes(trainer, jobs, budget.epochs_per_probe, map_fn)
        for (lvl, _, lam, seed), point in zip(jobs, points):
            archive.insert([point])
            probes.append({"level": lvl, "lam": lam, "seed": seed, "point": point})
        if level == budget.levels - 1:
            break
        cand = archive.points
        for prev, cur in zip(cand[:-1], cand[1:]):
            try:
                lam_new = lambda_equalizing(prev, cur)
            except DegeneratePairError:
                continue
            near = [l for l in lams if abs(l - lam_new) <= DUPLICATE_RADIUS]
            if near:
                if not stochastic:
                    continue
                hat = min(near, key=lambda l: abs(l - lam_new))
                lam_new = float(rng.uniform(max(0.9 * hat, lam1), min(1.1 * hat, lam2)))
            lams.append(lam_new)
    knee = find_knee(archive.points) if len(archive) > 1 else None
    return SearchResult(archive, knee, probes)


def stochastic_dichotomic_search(trainer, lam1, lam2, budget, map_fn=None):
    """Dichotomic weight refinement with random restarts near repeated weights."""
    return _dichotomic(trainer, lam1, lam2, budget, True, map_fn)


def dichotomic_search(trainer, lam1, lam2, budget, map_fn=None):
    """Classical dichotomic refinement; repeated weights are dropped."""
    return _dichotomic(trainer, lam1, lam2, budget, False, map_fn)


def _angle(p, q, lo, span):
    dx = (q.e_value - p.e_value) / span[0]
    dy = (q.omega_value - p.omega_value) / span[1]
    return math.atan2(-dy, dx), math.hypot(dx, dy)


def bisection_search(trainer, lam_lo, lam_hi, iterations, budget=None, map_fn=None):
    """Halve the weight interval towards the knee ``iterations`` times.

    The tangent direction at the midpoint's outcome is interpolated from the
    two chords to the interval endpoints. The knee is where that direction is
    parallel to the chord joining the archive extremes (45 degrees after
    normalization): a steeper midpoint tangent keeps the upper half.
    """
    if not lam_lo < lam_hi:
        raise ConfigurationError(f"need lam_lo < lam_hi, got {lam_lo}, {lam_hi}")
    budget = budget or SearchBudget(levels=1)
    archive = FrontArchive()
    probes = []

    def probe(level, index, lams):
        jobs = [(level, index + i, lam, derive_seed(budget.seed, level, index + i)) for i, lam in enumerate(lams)]
        points = _run_probes(trainer, jobs, budget.epochs_per_probe, map_fn)
        for (lvl, _, lam, seed), point in zip(jobs, points):
            archive.insert([point])
            probes.append({"level": lvl, "lam": lam, "seed": seed, "point": point})
        return points

    p_lo, p_hi = probe(0, 0, [lam_lo, lam_hi])
    lo, hi = lam_lo, lam_hi
    for it in range(1, iterations + 1):
        mid = 0.5 * (lo + hi)
        (p_mid,) = probe(it, 0, [mid])
        if len(archive) < 2:
            hi, p_hi = mid, p_mid
            continue
        origin, span = _normalizer(archive.points)
        phi1, len1 = _angle(p_lo, p_mid, origin, span)
        phi2, len2 = _angle(p_mid, p_hi, origin, span)
        if len1 + len2 == 0.0:
            hi, p_hi = mid, p_mid
            continue
        theta = phi1 + (phi2 - phi1) * len1 / (len1 + len2)
        if theta > math.pi / 4:
            lo, p_lo = mid, p_mid
        else:
            hi, p_hi = mid, p_mid
    knee = find_knee(archive.points) if len(archive) > 1 else None
    return SearchResult(archive, knee, probes, interval=(lo, hi))
