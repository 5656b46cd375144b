"""Tier labelling and the consolidated index/rank/tier report bundle."""

from __future__ import annotations

import csv
import io
import json
import os
import shutil
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .dataset import (
    DIMENSIONS,
    REFERENCE_SOURCE,
    Dataset,
    rank_column,
    reference_ranks,
    reference_tiers,
    select_features,
)
from .hier import agglomerate
from .kmeans import KMeansConfig, kmeans_1d_exact, lloyd, relabel_by_centroid
from .svg import dendrogram_svg, elbow_svg, pairplot_svg
from .validity import select_k, silhouette, wcss_curve

TIER_NAMES = ("Low", "Medium", "High")


@dataclass(frozen=True)
class TierLabeling:
    per_index: dict[str, dict[str, str]]
    centroid_order: dict[str, list[int]]
    centroids: dict[str, list[float]] = field(default_factory=dict)

    def members(self, dimension: str, tier: str) -> set[str]:
        return {c for c, t in self.per_index[dimension].items() if t == tier}


def tier_labels(ds: Dataset, k: int = 3, dimensions=DIMENSIONS) -> TierLabeling:
    """Exact 1-D k-means per dimension; clusters named by ascending centroid."""
    if k != len(TIER_NAMES):
        raise ValueError(f"tier naming is defined for k={len(TIER_NAMES)} only")
    if len(ds) < k:
        raise ValueError(f"need at least {k} countries, got {len(ds)}")
    per_index, order, centroids = {}, {}, {}
    for dim in dimensions:
        raw = kmeans_1d_exact(ds.column(dim), k)
        ranked = relabel_by_centroid(raw)
        perm = np.argsort(raw.centroids[:, 0], kind="stable")
        per_index[dim] = {name: TIER_NAMES[c] for name, c in zip(ds.names, ranked.assignments)}
        order[dim] = [int(p) for p in perm]
        centroids[dim] = ranked.centroids[:, 0].tolist()
    return TierLabeling(per_index, order, centroids)


@dataclass(frozen=True)
class ReportConfig:
    scaling: str = "none"
    seed: int = 0
    restarts: int = 100
    k_max: int = 10
    k_candidates: tuple[int, ...] = (3, 4)
    linkage: str = "ward"
    seeding: str = "kmeanspp"


@dataclass(frozen=True)
class RunManifest:
    input: str
    columns: list[str]
    scaling: str
    engines: dict[str, str]
    seeds: dict[str, int]
    config: dict
    tool_version: str = __version__
    timestamp: str = ""

    def to_dict(self) -> dict:
        return {
            "input": self.input,
            "columns": self.columns,
            "scaling": self.scaling,
            "engines": self.engines,
            "seeds": self.seeds,
            "config": self.config,
            "tool_version": self.tool_version,
            "timestamp": self.timestamp,
        }


class SelfCheckError(RuntimeError):
    """A report was produced but one of its embedded checks failed."""

    def __init__(self, failed: list[dict], out_dir: Path):
        self.failed = failed
        self.out_dir = out_dir
        names = ", ".join(c["name"] for c in failed)
        super().__init__(f"self-check failed: {names}")


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def report_table(ds: Dataset, tiers: TierLabeling) -> list[dict]:
    """One row per (country, dimension): score, descending rank, tier."""
    ranks = {d: dict(rank_column(ds, d)) for d in DIMENSIONS}
    rows = []
    for rec in ds.records:
        for d in DIMENSIONS:
            rows.append(
                {
                    "country": rec.name,
                    "dimension": d,
                    "index": rec.score(d),
                    "rank": ranks[d][rec.name],
                    "tier": tiers.per_index[d][rec.name],
                }
            )
    return rows


def discrepancies(ds: Dataset, table: list[dict]) -> list[dict]:
    """Compare recomputed ranks and tiers with the published reference values.

    Only meaningful for the embedded reference; an empty list otherwise.
    """
    if ds.source != REFERENCE_SOURCE:
        return []
    printed_ranks = reference_ranks()
    printed_tiers = reference_tiers()
    out = []
    for row in table:
        d, c = row["dimension"], row["country"]
        want = printed_ranks[d].get(c)
        if want is not None and want != row["rank"]:
            out.append({"kind": "rank", "country": c, "dimension": d, "published": want, "computed": row["rank"]})
        want_tier = printed_tiers[d].get(c)
        if want_tier is not None and want_tier != row["tier"]:
            out.append({"kind": "tier", "country": c, "dimension": d, "published": want_tier, "computed": row["tier"]})
    return out


def self_checks(ds: Dataset, table: list[dict], disc: list[dict]) -> list[dict]:
    n = len(ds)
    checks = []
    for d in DIMENSIONS:
        rows = [r for r in table if r["dimension"] == d]
        names = [r["country"] for r in rows]
        checks.append({"name": f"coverage[{d}]", "passed": sorted(names) == sorted(ds.names) and len(set(names)) == n})
        checks.append({"name": f"rank_permutation[{d}]", "passed": sorted(r["rank"] for r in rows) == list(range(1, n + 1))})
        ok = True
        for lower, upper in zip(TIER_NAMES, TIER_NAMES[1:]):
            lo = [r["index"] for r in rows if r["tier"] == lower]
            hi = [r["index"] for r in rows if r["tier"] == upper]
            if lo and hi and max(lo) > min(hi):
                ok = False
        checks.append({"name": f"tier_intervals[{d}]", "passed": ok})
    if ds.source == REFERENCE_SOURCE:
        published = reference_tiers()
        for d in DIMENSIONS:
            listed = published[d]
            bad = [x for x in disc if x["kind"] == "tier" and x["dimension"] == d]
            checks.append({"name": f"published_tiers[{d}]", "passed": not bad, "compared": len(listed)})
    return checks


def build_bundle(ds: Dataset, cfg: ReportConfig = ReportConfig()) -> tuple[dict[str, str], list[dict], RunManifest]:
    """Render every report artifact in memory as ``{filename: text}``.

    The manifest is returned separately because its timestamp is the one
    part of the bundle that is allowed to change between runs.
    """
    if len(ds) == 0:
        raise ValueError("empty dataset")
    files: dict[str, str] = {}

    tiers = tier_labels(ds)
    table = report_table(ds, tiers)
    files["table.csv"] = _csv_text(
        ["country", "dimension", "index", "rank", "tier"],
        [[r["country"], r["dimension"], repr(r["index"]), r["rank"], r["tier"]] for r in table],
    )
    files["table.json"] = _dumps(table)
    disc = discrepancies(ds, table)
    files["discrepancies.csv"] = _csv_text(
        ["kind", "country", "dimension", "published", "computed"],
        [[x["kind"], x["country"], x["dimension"], x["published"], x["computed"]] for x in disc],
    )
    files["tiers.json"] = _dumps(
        {"per_index": tiers.per_index, "centroid_order": tiers.centroid_order, "centroids": tiers.centroids}
    )

    fm = select_features(ds, DIMENSIONS, cfg.scaling)
    kcfg = KMeansConfig(k=1, seeding=cfg.seeding, restarts=cfg.restarts, rng_seed=cfg.seed)
    k_max = min(cfg.k_max, len(ds))
    curve = wcss_curve(fm, k_max, "lloyd", kcfg)
    files["elbow.json"] = _dumps(curve.to_dict())
    files["elbow.svg"] = elbow_svg(curve, f"Elbow method ({cfg.scaling})")

    candidates = [k for k in cfg.k_candidates if 2 <= k <= len(ds) - 1]
    if candidates:
        sel = select_k(fm, candidates, kcfg, curve=curve)
        sil = {"selection": sel.to_dict(), "reports": {}}
        for k in candidates:
            sil["reports"][str(k)] = silhouette(fm.points, curve.clustering(k).assignments).to_dict()
        files["silhouette.json"] = _dumps(sil)
        chosen = curve.clustering(sel.k)
    else:
        chosen = lloyd(fm, KMeansConfig(k=min(3, len(ds)), seeding=cfg.seeding, restarts=cfg.restarts, rng_seed=cfg.seed))
    files["clustering.json"] = _dumps(chosen.to_dict(fm))
    files["pairplot.svg"] = pairplot_svg(fm.points, fm.columns, chosen.assignments, "Pair plot")

    if len(ds) >= 2:
        for d in DIMENSIONS:
            dg = agglomerate(select_features(ds, [d], cfg.scaling), cfg.linkage)
            files[f"dendrogram_{d}.json"] = _dumps(dg.to_dict())
            files[f"dendrogram_{d}.nwk"] = dg.to_newick() + "\n"
            files[f"dendrogram_{d}.svg"] = dendrogram_svg(dg, f"Dendrogram: {d}")

    checks = self_checks(ds, table, disc)
    files["selfcheck.json"] = _dumps(checks)

    manifest = RunManifest(
        input=ds.source,
        columns=list(DIMENSIONS),
        scaling=cfg.scaling,
        engines={"tiers": "exact-1d", "elbow": "lloyd", "silhouette": "lloyd", "dendrogram": cfg.linkage},
        seeds={"rng_seed": cfg.seed},
        config={
            "restarts": cfg.restarts,
            "seeding": cfg.seeding,
            "k_max": k_max,
            "k_candidates": list(cfg.k_candidates),
            "linkage": cfg.linkage,
        },
    )
    return files, checks, manifest


def _write_atomic(out_dir: Path, files: dict[str, str]) -> None:
    out_dir = Path(out_dir)
    parent = out_dir.resolve().parent
    parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{out_dir.name}.", dir=parent))
    try:
        for name, text in files.items():
            (tmp / name).write_text(text, encoding="utf-8")
        backup = None
        if out_dir.exists():
            backup = parent / f".{out_dir.name}.old-{os.getpid()}"
            os.replace(out_dir, backup)
        os.replace(tmp, out_dir)
        if backup is not None:
            shutil.rmtree(backup, ignore_errors=True)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise


def full_report(ds: Dataset, out_dir, cfg: ReportConfig = ReportConfig(), timestamp: str | None = None) -> RunManifest:
    """Write the full bundle to ``out_dir`` atomically.

    Raises SelfCheckError (after writing) if any embedded check fails.
    """
    files, checks, manifest = build_bundle(ds, cfg)
    if timestamp is None:
        timestamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    manifest = RunManifest(**{**manifest.to_dict(), "timestamp": timestamp})
    files["manifest.json"] = _dumps(manifest.to_dict())
    _write_atomic(Path(out_dir), files)
    failed = [c for c in checks if not c["passed"]]
    if failed:
        raise SelfCheckError(failed, Path(out_dir))
    return manifest
