"""Choosing k: WCSS (elbow) curves, knee detection and silhouettes."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .kmeans import Clustering, KMeansConfig, _as_points, run_engine

logger = logging.getLogger(__name__)

KNEE_METHODS = ("chord-distance", "second-difference")
DEFAULT_KNEE_METHOD = "chord-distance"


@dataclass(frozen=True)
class Knee:
    k: int
    score: float
    method: str
    distinct: bool
    scores: dict[int, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "score": self.score,
            "method": self.method,
            "distinct": self.distinct,
            "scores": {str(k): v for k, v in self.scores.items()},
        }


@dataclass(frozen=True)
class WcssEntry:
    k: int
    wcss: float
    clustering: Clustering | None = field(default=None, repr=False)


@dataclass(frozen=True)
class WcssCurve:
    entries: tuple[WcssEntry, ...]
    knee: Knee | None = None
    engine: str = "lloyd"
    warnings: tuple[str, ...] = ()

    @property
    def ks(self) -> list[int]:
        return [e.k for e in self.entries]

    @property
    def values(self) -> list[float]:
        return [e.wcss for e in self.entries]

    def clustering(self, k: int) -> Clustering:
        for e in self.entries:
            if e.k == k and e.clustering is not None:
                return e.clustering
        raise KeyError(k)

    def to_dict(self) -> dict:
        return {
            "engine": self.engine,
            "entries": [{"k": e.k, "wcss": e.wcss} for e in self.entries],
            "knee": None if self.knee is None else self.knee.to_dict(),
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_values(cls, wcss: Sequence[float], start: int = 1) -> "WcssCurve":
        entries = tuple(WcssEntry(start + i, float(w)) for i, w in enumerate(wcss))
        return cls(entries, engine="given")


@dataclass(frozen=True)
class SilhouetteReport:
    per_point: np.ndarray
    mean: float
    per_cluster_mean: np.ndarray
    cluster_ids: np.ndarray

    def to_dict(self) -> dict:
        return {
            "per_point": self.per_point.tolist(),
            "mean": self.mean,
            "per_cluster_mean": self.per_cluster_mean.tolist(),
            "cluster_ids": self.cluster_ids.tolist(),
        }


def wcss_curve(fm, k_max: int, engine: str = "lloyd", cfg: KMeansConfig | None = None,
               knee_method: str = DEFAULT_KNEE_METHOD) -> WcssCurve:
    """Cluster at every k in 1..k_max and record the total SSE.

    The clusterings are kept on the curve so later steps can reuse them.
    """
    x = _as_points(fm)
    n, d = x.shape
    if not 1 <= k_max <= n:
        raise ValueError(f"k_max must lie in 1..n={n}, got {k_max}")
    if engine == "exact-1d" and d != 1:
        raise ValueError(f"exact-1d engine needs d=1, got d={d}")
    entries = []
    for k in range(1, k_max + 1):
        c = run_engine(fm, k, engine, cfg)
        entries.append(WcssEntry(k, c.total_sse, c))
    warnings = []
    for prev, cur in zip(entries, entries[1:]):
        if cur.wcss > prev.wcss:
            msg = f"wcss increases from k={prev.k} ({prev.wcss:.6g}) to k={cur.k} ({cur.wcss:.6g})"
            logger.warning(msg)
            warnings.append(msg)
    curve = WcssCurve(tuple(entries), None, engine, tuple(warnings))
    if len(entries) >= 3:
        curve = WcssCurve(curve.entries, detect_knee(curve, knee_method), engine, curve.warnings)
    return curve


def detect_knee(curve: WcssCurve | Sequence[float], method: str = DEFAULT_KNEE_METHOD) -> Knee:
    """Locate the elbow of a WCSS curve.

    ``second-difference`` scores interior k by
    ``(w[k-1] - w[k]) - (w[k] - w[k+1])``.

    ``chord-distance`` rescales both axes to [0, 1] and scores interior k by
    how far the curve sits below the straight line joining its end points.

    Either way the highest score wins, smaller k on ties. A curve with no
    positive score (straight or concave) has no distinct knee; its smallest
    interior k is returned with ``distinct=False``.
    """
    if not isinstance(curve, WcssCurve):
        curve = WcssCurve.from_values(curve)
    ks = np.array(curve.ks)
    w = np.array(curve.values, dtype=float)
    if w.size < 3:
        raise ValueError("knee detection needs at least 3 curve entries")
    if method not in KNEE_METHODS:
        raise ValueError(f"unknown knee method {method!r}; expected one of {KNEE_METHODS}")

    span = float(np.max(w) - np.min(w))
    if method == "second-difference":
        scores = (w[:-2] - w[1:-1]) - (w[1:-1] - w[2:])
        eps = 1e-12 * max(span, np.max(np.abs(w)), 1e-300)
    else:
        x = (ks - ks[0]) / (ks[-1] - ks[0])
        if span == 0:
            y = np.zeros_like(w)
        else:
            y = (w - w[-1]) / (w[0] - w[-1]) if w[0] != w[-1] else (w - w.min()) / span
        scores = ((1.0 - x) - y)[1:-1]
        eps = 1e-12
    interior = ks[1:-1]
    score_map = {int(k): float(s) for k, s in zip(interior, scores)}
    best = int(np.argmax(scores))
    if scores[best] <= eps:
        return Knee(int(interior[0]), float(scores[0]), method, False, score_map)
    return Knee(int(interior[best]), float(scores[best]), method, True, score_map)


def silhouette(points, labels) -> SilhouetteReport:
    """Silhouette values with plain Euclidean distance.

    Points alone in their cluster get 0.
    """
    x = _as_points(points)
    labels = np.asarray(labels)
    n = x.shape[0]
    if n < 2:
        raise ValueError("silhouette needs at least two points")
    if labels.shape != (n,):
        raise ValueError("one label per point is required")
    ids, codes = np.unique(labels, return_inverse=True)
    if ids.size < 2:
        raise ValueError("silhouette needs at least two clusters")

    dist = cdist(x, x)
    onehot = np.zeros((n, ids.size))
    onehot[np.arange(n), codes] = 1.0
    sums = dist @ onehot  # sums[i, c] = total distance from i to members of c
    sizes = onehot.sum(axis=0)

    own = sizes[codes]
    a = np.zeros(n)
    multi = own > 1
    a[multi] = sums[multi, codes[multi]] / (own[multi] - 1)
    means = sums / sizes
    means[np.arange(n), codes] = np.inf
    b = means.min(axis=1)

    denom = np.maximum(a, b)
    s = np.zeros(n)
    ok = multi & (denom > 0)
    s[ok] = (b[ok] - a[ok]) / denom[ok]
    per_cluster = np.array([s[codes == c].mean() for c in range(ids.size)])
    return SilhouetteReport(s, float(s.mean()), per_cluster, ids)


@dataclass(frozen=True)
class KSelection:
    k: int
    scores: dict[int, float]
    engine: str

    def to_dict(self) -> dict:
        return {"k": self.k, "engine": self.engine, "scores": {str(k): v for k, v in self.scores.items()}}


def select_k(fm, k_candidates: Sequence[int], cfg: KMeansConfig | None = None, engine: str = "lloyd",
             curve: WcssCurve | None = None) -> KSelection:
    """Pick the candidate k with the highest mean silhouette (smaller k on ties).

    Clusterings cached on ``curve`` are reused when present.
    """
    candidates = list(k_candidates)
    if not candidates:
        raise ValueError("no candidate k given")
    x = _as_points(fm)
    n = x.shape[0]
    for k in candidates:
        if not 2 <= k <= n - 1:
            raise ValueError(f"candidate k={k} outside 2..n-1={n - 1}")
    scores: dict[int, float] = {}
    for k in sorted(set(candidates)):
        clustering = None
        if curve is not None:
            try:
                clustering = curve.clustering(k)
            except KeyError:
                pass
        if clustering is None:
            clustering = run_engine(fm, k, engine, cfg)
        scores[k] = silhouette(x, clustering.assignments).mean
    best = max(scores, key=lambda k: (scores[k], -k))
    return KSelection(best, scores, engine if curve is None else curve.engine)
