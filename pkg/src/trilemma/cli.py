"""Command-line interface.

Exit codes: 0 success, 1 validation error, 2 runtime/IO error,
3 report self-check failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from pathlib import Path

from .dataset import DIMENSIONS, DatasetError, embedded_reference, load_dataset, select_features, serialize
from .hier import LINKAGES, agglomerate
from .kmeans import SEEDINGS, KMeansConfig, run_engine
from .report import ReportConfig, SelfCheckError, full_report
from .svg import dendrogram_svg, elbow_svg, pairplot_svg
from .validity import KNEE_METHODS, DEFAULT_KNEE_METHOD, select_k, silhouette, wcss_curve

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME, EXIT_SELFCHECK = 0, 1, 2, 3
SEED_ENV = "TRILEMMA_SEED"

log = logging.getLogger("trilemma")


class UsageError(ValueError):
    pass


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return value


def _columns(text: str) -> list[str]:
    return [c.strip() for c in text.split(",") if c.strip()]


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--input", type=Path, help="indicator CSV (country,security,equity,sustainability,trilemma)")
    src.add_argument("--reference", action="store_true", help="use the embedded 38-country reference table")
    p.add_argument("--columns", type=_columns, default=list(DIMENSIONS), help="comma-separated dimensions")
    p.add_argument("--scale", choices=("none", "zscore"), default="none")
    p.add_argument("--seed", type=_u64, default=None, help=f"RNG seed (falls back to ${SEED_ENV}, then 0)")
    p.add_argument("--out", type=Path, default=None, help="output directory (stdout when omitted)")
    p.add_argument("--format", choices=("json", "csv", "svg", "newick"), default="json")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="trilemma", description="Cluster country energy-indicator tables.")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("ingest", parents=[common], help="validate an indicator table and echo it")

    p = sub.add_parser("cluster", parents=[common], help="k-means clustering")
    p.add_argument("-k", type=int, default=3)
    p.add_argument("--engine", choices=("lloyd", "exact-1d"), default="lloyd")
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--seeding", choices=SEEDINGS, default="kmeanspp")

    p = sub.add_parser("elbow", parents=[common], help="WCSS curve and knee")
    p.add_argument("--k-max", type=int, default=10)
    p.add_argument("--engine", choices=("lloyd", "exact-1d"), default="lloyd")
    p.add_argument("--restarts", type=int, default=100)
    p.add_argument("--knee-method", choices=KNEE_METHODS, default=DEFAULT_KNEE_METHOD)

    p = sub.add_parser("silhouette", parents=[common], help="silhouette comparison of candidate k")
    p.add_argument("--k", type=_int_list, default=[3, 4], help="comma-separated candidate k values")
    p.add_argument("--engine", choices=("lloyd", "exact-1d"), default="lloyd")
    p.add_argument("--restarts", type=int, default=100)

    p = sub.add_parser("dendrogram", parents=[common], help="agglomerative clustering tree")
    p.add_argument("--linkage", choices=LINKAGES, default="ward")

    p = sub.add_parser("report", parents=[common], help="write the full report bundle")
    p.add_argument("--restarts", type=int, default=100)
    p.add_argument("--linkage", choices=LINKAGES, default="ward")
    return parser


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return _u64(env)
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise UsageError(f"bad ${SEED_ENV}: {env!r}") from exc
    return 0


def _dataset(args):
    if args.input is not None:
        return load_dataset(args.input)
    if args.reference:
        return embedded_reference()
    raise UsageError("one of --input PATH or --reference is required")


def _emit(args, stem: str, text: str) -> None:
    ext = {"newick": "nwk"}.get(args.format, args.format)
    if args.out is None:
        sys.stdout.write(text)
        return
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / f"{stem}.{ext}"
    path.write_text(text, encoding="utf-8")
    log.info("wrote %s", path)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def _unsupported(args):
    raise UsageError(f"--format {args.format} is not available for '{args.command}'")


def cmd_ingest(args, ds):
    if args.format == "csv":
        text = serialize(ds)
    elif args.format == "json":
        text = _json(
            {
                "source": ds.source,
                "count": len(ds),
                "records": [
                    {"country": r.name, **{d: r.score(d) for d in DIMENSIONS}} for r in ds.records
                ],
            }
        )
    else:
        _unsupported(args)
    _emit(args, "dataset", text)


def _kcfg(args, k=1) -> KMeansConfig:
    return KMeansConfig(k=k, seeding=getattr(args, "seeding", "kmeanspp"), restarts=args.restarts, rng_seed=_seed(args))


def cmd_cluster(args, ds):
    fm = select_features(ds, args.columns, args.scale)
    c = run_engine(fm, args.k, args.engine, _kcfg(args, args.k))
    if args.format == "json":
        text = _json(c.to_dict(fm))
    elif args.format == "csv":
        text = _csv(["country", "cluster"], [[n, int(a)] for n, a in zip(fm.names, c.assignments)])
    elif args.format == "svg":
        if fm.d != 4:
            raise UsageError("svg output of 'cluster' is a 4-column pair plot; select all four columns")
        text = pairplot_svg(fm.points, fm.columns, c.assignments, f"Pair plot, k={args.k}")
    else:
        _unsupported(args)
    _emit(args, "clustering", text)


def cmd_elbow(args, ds):
    fm = select_features(ds, args.columns, args.scale)
    curve = wcss_curve(fm, min(args.k_max, fm.n), args.engine, _kcfg(args), args.knee_method)
    if args.format == "json":
        text = _json(curve.to_dict())
    elif args.format == "csv":
        text = _csv(["k", "wcss"], [[e.k, repr(e.wcss)] for e in curve.entries])
    elif args.format == "svg":
        text = elbow_svg(curve)
    else:
        _unsupported(args)
    _emit(args, "elbow", text)


def cmd_silhouette(args, ds):
    fm = select_features(ds, args.columns, args.scale)
    cfg = _kcfg(args)
    sel = select_k(fm, args.k, cfg, args.engine)
    if args.format == "json":
        reports = {}
        for k in args.k:
            reports[str(k)] = silhouette(fm.points, run_engine(fm, k, args.engine, cfg).assignments).to_dict()
        text = _json({"selection": sel.to_dict(), "reports": reports})
    elif args.format == "csv":
        text = _csv(["k", "mean_silhouette", "selected"], [[k, repr(v), int(k == sel.k)] for k, v in sel.scores.items()])
    else:
        _unsupported(args)
    _emit(args, "silhouette", text)


def cmd_dendrogram(args, ds):
    fm = select_features(ds, args.columns, args.scale)
    dg = agglomerate(fm, args.linkage)
    if args.format == "json":
        text = _json(dg.to_dict())
    elif args.format == "newick":
        text = dg.to_newick() + "\n"
    elif args.format == "svg":
        text = dendrogram_svg(dg, f"Dendrogram: {','.join(fm.columns)}")
    else:
        text = _csv(
            ["id", "left", "right", "height", "size"],
            [[fm.n + i, m.left, m.right, repr(m.height), m.size] for i, m in enumerate(dg.merges)],
        )
    _emit(args, "dendrogram", text)


def cmd_report(args, ds):
    if args.out is None:
        raise UsageError("'report' needs --out DIR")
    cfg = ReportConfig(scaling=args.scale, seed=_seed(args), restarts=args.restarts, linkage=args.linkage)
    full_report(ds, args.out, cfg)
    log.info("report written to %s", args.out)


COMMANDS = {
    "ingest": cmd_ingest,
    "cluster": cmd_cluster,
    "elbow": cmd_elbow,
    "silhouette": cmd_silhouette,
    "dendrogram": cmd_dendrogram,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        ds = _dataset(args)
        COMMANDS[args.command](args, ds)
    except SelfCheckError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SELFCHECK
    except (DatasetError, UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
