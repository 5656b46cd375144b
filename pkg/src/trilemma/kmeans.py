"""K-means clustering: Lloyd's iteration and an exact 1-D solver.

Distances are squared Euclidean throughout. Ties between equidistant
centroids always go to the lowest centroid index.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .dataset import FeatureMatrix

logger = logging.getLogger(__name__)

SEEDINGS = ("kmeanspp", "random-pick")
SSE_TIE_RTOL = 1e-12

_MASK64 = (1 << 64) - 1
_GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    x = (x + _GOLDEN_GAMMA) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def restart_seed(rng_seed: int, restart: int) -> int:
    """Seed for restart ``restart``: splitmix64 of the base seed offset by
    ``restart`` golden-gamma steps. Restarts are therefore independent and
    can be computed in any order."""
    return splitmix64((rng_seed + restart * _GOLDEN_GAMMA) & _MASK64)


@dataclass(frozen=True)
class KMeansConfig:
    k: int
    seeding: str = "kmeanspp"
    restarts: int = 10
    max_iterations: int = 300
    tolerance: float = 1e-9
    rng_seed: int = 0

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k!r}")
        if self.seeding not in SEEDINGS:
            raise ValueError(f"unknown seeding {self.seeding!r}; expected one of {SEEDINGS}")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.tolerance >= 0:
            raise ValueError("tolerance must be non-negative")
        if not 0 <= self.rng_seed <= _MASK64:
            raise ValueError("rng_seed must fit in an unsigned 64-bit integer")

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "seeding": self.seeding,
            "restarts": self.restarts,
            "max_iterations": self.max_iterations,
            "tolerance": self.tolerance,
            "rng_seed": self.rng_seed,
        }


@dataclass(frozen=True)
class Clustering:
    assignments: np.ndarray
    centroids: np.ndarray
    per_cluster_sse: np.ndarray
    total_sse: float
    iterations: int
    converged: bool
    config: KMeansConfig | None
    engine: str = "lloyd"
    # total SSE after every update step of the winning run
    sse_history: tuple[float, ...] = field(default=(), repr=False)

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    def to_dict(self, fm: FeatureMatrix | None = None) -> dict:
        names = list(fm.names) if fm is not None and fm.names else [str(i) for i in range(len(self.assignments))]
        out = {}
        if fm is not None:
            out["columns"] = list(fm.columns)
            out["scaling"] = fm.scaling
        out.update(
            {
                "engine": self.engine,
                "k": self.k,
                "seed": self.config.rng_seed if self.config is not None else None,
                "assignments": [{"country": n, "cluster": int(c)} for n, c in zip(names, self.assignments)],
                "centroids": self.centroids.tolist(),
                "per_cluster_sse": self.per_cluster_sse.tolist(),
                "total_sse": float(self.total_sse),
                "iterations": self.iterations,
                "converged": self.converged,
            }
        )
        if self.config is not None:
            out["config"] = self.config.to_dict()
        return out


def _as_points(points) -> np.ndarray:
    if isinstance(points, FeatureMatrix):
        points = points.points
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ValueError("points must be a 1-D or 2-D array")
    return x


def _sq_dists(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - centroids[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def assign_step(points, centroids) -> np.ndarray:
    """Label each point with its nearest centroid (lowest index on ties)."""
    x = _as_points(points)
    c = _as_points(centroids)
    if c.shape[0] == 0:
        raise ValueError("empty centroid set")
    if c.shape[1] != x.shape[1]:
        raise ValueError(f"dimension mismatch: points d={x.shape[1]}, centroids d={c.shape[1]}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(c))):
        raise ValueError("points and centroids must be finite")
    # argmin returns the first minimum, which is the tie rule we want
    return np.argmin(_sq_dists(x, c), axis=1)


def update_step(points, labels, k: int | None = None) -> np.ndarray:
    """Centroid of each cluster: the coordinate-wise mean of its members."""
    x = _as_points(points)
    labels = np.asarray(labels, dtype=int)
    if labels.shape != (x.shape[0],):
        raise ValueError("one label per point is required")
    if k is None:
        k = int(labels.max()) + 1 if labels.size else 0
    counts = np.bincount(labels, minlength=k)
    if counts.size > k or np.any(counts == 0):
        empty = [j for j in range(k) if counts[j] == 0]
        raise ValueError(f"empty cluster(s) {empty}; repair assignments before updating")
    centroids = np.empty((k, x.shape[1]))
    for j in range(k):
        centroids[j] = x[labels == j].mean(axis=0)
    return centroids


def sse(points, labels, centroids) -> tuple[np.ndarray, float]:
    """Per-cluster and total sum of squared distances to the centroids."""
    x = _as_points(points)
    c = _as_points(centroids)
    labels = np.asarray(labels, dtype=int)
    if labels.shape != (x.shape[0],) or c.shape[1] != x.shape[1]:
        raise ValueError("shape mismatch between points, labels and centroids")
    if labels.size and (labels.min() < 0 or labels.max() >= c.shape[0]):
        raise ValueError("label outside centroid range")
    diff = x - c[labels]
    per_point = np.einsum("ij,ij->i", diff, diff)
    per_cluster = np.zeros(c.shape[0])
    np.add.at(per_cluster, labels, per_point)
    return per_cluster, float(per_cluster.sum())


def _check_input(x: np.ndarray, k: int) -> None:
    n = x.shape[0]
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > n:
        raise ValueError(f"k={k} exceeds number of points n={n}")
    if not np.all(np.isfinite(x)):
        raise ValueError("input contains non-finite values")


def _init_centroids(x: np.ndarray, k: int, seeding: str, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    if seeding == "random-pick":
        return x[rng.choice(n, size=k, replace=False)].copy()
    chosen = [int(rng.integers(n))]
    closest = _sq_dists(x, x[chosen])[:, 0]
    for _ in range(1, k):
        total = closest.sum()
        if total > 0:
            idx = int(rng.choice(n, p=closest / total))
        else:
            # every point coincides with a chosen center
            remaining = np.setdiff1d(np.arange(n), chosen)
            idx = int(rng.choice(remaining))
        chosen.append(idx)
        closest = np.minimum(closest, _sq_dists(x, x[idx : idx + 1])[:, 0])
    return x[chosen].copy()


def _repair_empty(x: np.ndarray, labels: np.ndarray, centroids: np.ndarray, k: int) -> np.ndarray:
    """Give every empty cluster the point farthest from its own centroid."""
    labels = labels.copy()
    while True:
        counts = np.bincount(labels, minlength=k)
        empty = np.flatnonzero(counts == 0)
        if empty.size == 0:
            return labels
        dist = np.einsum("ij,ij->i", x - centroids[labels], x - centroids[labels])
        # never strip a cluster of its last member
        dist[counts[labels] < 2] = -1.0
        donor = int(np.argmax(dist))
        labels[donor] = empty[0]
        centroids = centroids.copy()
        centroids[empty[0]] = x[donor]


def _lloyd_single(x: np.ndarray, cfg: KMeansConfig, rng: np.random.Generator) -> Clustering:
    k = cfg.k
    centroids = _init_centroids(x, k, cfg.seeding, rng)
    labels = None
    history: list[float] = []
    converged = False
    iterations = 0
    for iterations in range(1, cfg.max_iterations + 1):
        new_labels = _repair_empty(x, assign_step(x, centroids), centroids, k)
        changed = labels is None or bool(np.any(new_labels != labels))
        labels = new_labels
        new_centroids = update_step(x, labels, k)
        shift = float(np.sqrt(np.max(np.sum((new_centroids - centroids) ** 2, axis=1))))
        centroids = new_centroids
        history.append(sse(x, labels, centroids)[1])
        if not changed or shift < cfg.tolerance:
            converged = True
            break
    per_cluster, total = sse(x, labels, centroids)
    return Clustering(labels, centroids, per_cluster, total, iterations, converged, cfg, "lloyd", tuple(history))


def lloyd(fm, cfg: KMeansConfig) -> Clustering:
    """Best-of-``cfg.restarts`` Lloyd's k-means.

    Each restart seeds its own generator from ``restart_seed(cfg.rng_seed, i)``;
    the lowest total SSE wins, earliest restart on ties. SSEs within
    ``SSE_TIE_RTOL`` of each other count as tied so that rounding noise
    cannot decide between restarts. Labels are numbered by first
    appearance in input order.
    """
    x = _as_points(fm)
    _check_input(x, cfg.k)
    best = None
    for r in range(cfg.restarts):
        rng = np.random.default_rng(restart_seed(cfg.rng_seed, r))
        run = _lloyd_single(x, cfg, rng)
        if not run.converged:
            logger.debug("restart %d hit max_iterations=%d", r, cfg.max_iterations)
        if best is None or run.total_sse < best.total_sse * (1.0 - SSE_TIE_RTOL):
            best = run
    return relabel_by_first_appearance(best)


def _segment_costs(s: np.ndarray) -> np.ndarray:
    """cost[i, j] = SSE of the sorted run s[i:j] about its mean (Welford)."""
    n = s.size
    cost = np.full((n + 1, n + 1), np.inf)
    for i in range(n):
        mean = 0.0
        m2 = 0.0
        cost[i, i] = 0.0
        for j in range(i, n):
            count = j - i + 1
            delta = s[j] - mean
            mean += delta / count
            m2 += delta * (s[j] - mean)
            cost[i, j + 1] = m2
    return cost


def kmeans_1d_exact(values, k: int, rel_tie: float = 0.0) -> Clustering:
    """Globally optimal k-means for 1-D data by dynamic programming.

    Optimal 1-D clusters are contiguous runs of the sorted values, so the
    problem reduces to choosing k-1 cut points. Among optimal solutions the
    one with the lexicographically smallest sorted boundaries is returned.
    Optima count as equal when their float costs are identical, or within
    ``rel_tie`` times the total sum of squares if that is set. Labels are numbered in ascending order of
    the cluster values and reported in input order.
    """
    x = _as_points(values)
    if x.shape[1] != 1:
        raise ValueError(f"kmeans_1d_exact needs 1-D data, got d={x.shape[1]}")
    v = x[:, 0]
    n = v.size
    _check_input(x, k)
    order = np.argsort(v, kind="stable")
    s = v[order]
    cost = _segment_costs(s)

    # best[m, i]: optimal cost of splitting the suffix s[i:] into m runs
    best = np.full((k + 1, n + 1), np.inf)
    best[0, n] = 0.0
    for m in range(1, k + 1):
        for i in range(n - m, -1, -1):
            ends = np.arange(i + 1, n - m + 2)
            best[m, i] = np.min(cost[i, ends] + best[m - 1, ends])

    # walk left to right taking the earliest cut that stays optimal
    # ties are judged relative to the total sum of squares of the data
    slack = rel_tie * cost[0, n]
    bounds = [0]
    i = 0
    for m in range(k, 0, -1):
        ends = np.arange(i + 1, n - m + 2)
        totals = cost[i, ends] + best[m - 1, ends]
        target = best[m, i]
        ok = totals <= target + slack
        i = int(ends[np.argmax(ok)])
        bounds.append(i)

    labels_sorted = np.empty(n, dtype=int)
    for c in range(k):
        labels_sorted[bounds[c] : bounds[c + 1]] = c
    labels = np.empty(n, dtype=int)
    labels[order] = labels_sorted
    centroids = update_step(x, labels, k)
    per_cluster, total = sse(x, labels, centroids)
    cfg = KMeansConfig(k=k, restarts=1)
    return Clustering(labels, centroids, per_cluster, total, 0, True, cfg, "exact-1d")


def run_engine(fm, k: int, engine: str = "lloyd", cfg: KMeansConfig | None = None) -> Clustering:
    """Dispatch to ``lloyd`` or ``kmeans_1d_exact``; ``cfg`` supplies everything but ``k``."""
    if engine == "lloyd":
        cfg = KMeansConfig(k=k) if cfg is None else replace(cfg, k=k)
        return lloyd(fm, cfg)
    if engine == "exact-1d":
        return kmeans_1d_exact(fm, k)
    raise ValueError(f"unknown engine {engine!r}; expected 'lloyd' or 'exact-1d'")


def _relabel(clustering: Clustering, order: np.ndarray) -> Clustering:
    inverse = np.empty_like(order)
    inverse[order] = np.arange(order.size)
    return replace(
        clustering,
        assignments=inverse[clustering.assignments],
        centroids=clustering.centroids[order],
        per_cluster_sse=clustering.per_cluster_sse[order],
    )


def relabel_by_first_appearance(clustering: Clustering) -> Clustering:
    """Renumber clusters so labels first occur in the order 0, 1, 2, ..."""
    _, first = np.unique(clustering.assignments, return_index=True)
    return _relabel(clustering, np.argsort(first, kind="stable"))


def relabel_by_centroid(clustering: Clustering, dim: int = 0) -> Clustering:
    """Renumber clusters in ascending order of centroid coordinate ``dim``."""
    return _relabel(clustering, np.argsort(clustering.centroids[:, dim], kind="stable"))


def labels_to_partition(labels: Sequence[int]) -> list[frozenset[int]]:
    groups: dict[int, set[int]] = {}
    for i, lab in enumerate(labels):
        groups.setdefault(int(lab), set()).add(i)
    return sorted((frozenset(g) for g in groups.values()), key=min)
