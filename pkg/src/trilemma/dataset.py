"""Country-indicator tables: ingestion, validation and feature selection.

The ingestion format is a small CSV with one row per country::

    country,security,equity,sustainability,trilemma
    Sweden,73.1,94.6,87.5,84.3

Scores are kept exactly as read (no rounding, no padding).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence, TextIO

import numpy as np

DIMENSIONS = ("security", "equity", "sustainability", "trilemma")
HEADER = ("country",) + DIMENSIONS
SCALINGS = ("none", "zscore")

REFERENCE_SOURCE = "embedded-reference"


@dataclass(frozen=True)
class DimensionMeta:
    name: str
    weight: float
    variables: tuple[str, ...] = ()
    has_column: bool = True


# Composite-index weights. Country context has no published column; it is
# carried as metadata only and never recomputed.
DIMENSION_META = (
    DimensionMeta("security", 0.30, ("import independence", "diversity of electricity generation", "energy storage")),
    DimensionMeta("equity", 0.30, ("access to electricity", "electricity prices", "gasoline and diesel prices")),
    DimensionMeta(
        "sustainability",
        0.30,
        ("final energy intensity", "low carbon electricity generation", "CO2 emissions per capita"),
    ),
    DimensionMeta(
        "country_context",
        0.10,
        ("macroeconomic stability", "effectiveness of government", "innovation capability"),
        has_column=False,
    ),
)


class DatasetError(ValueError):
    """Raised for malformed or invalid indicator tables.

    ``row`` is the 1-based line number in the input (the header is line 1),
    or ``None`` when the problem is not tied to a single row.
    """

    def __init__(self, reason: str, row: int | None = None):
        self.reason = reason
        self.row = row
        super().__init__(reason if row is None else f"row {row}: {reason}")


@dataclass(frozen=True)
class CountryRecord:
    name: str
    security: float
    equity: float
    sustainability: float
    trilemma: float

    def score(self, dimension: str) -> float:
        _check_dimension(dimension)
        return getattr(self, dimension)

    def scores(self) -> tuple[float, float, float, float]:
        return (self.security, self.equity, self.sustainability, self.trilemma)


@dataclass(frozen=True)
class Dataset:
    records: tuple[CountryRecord, ...]
    source: str = REFERENCE_SOURCE

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        seen: dict[str, int] = {}
        for i, rec in enumerate(self.records):
            key = _name_key(rec.name)
            if not key:
                raise DatasetError("empty country name")
            if key in seen:
                raise DatasetError(f"duplicate country name {rec.name!r}")
            seen[key] = i
            for dim, value in zip(DIMENSIONS, rec.scores()):
                _check_score(value, dim)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def count(self) -> int:
        return len(self.records)

    @property
    def names(self) -> list[str]:
        return [r.name for r in self.records]

    def __getitem__(self, name: str) -> CountryRecord:
        key = _name_key(name)
        for rec in self.records:
            if _name_key(rec.name) == key:
                return rec
        raise KeyError(name)

    def column(self, dimension: str) -> np.ndarray:
        _check_dimension(dimension)
        return np.array([getattr(r, dimension) for r in self.records], dtype=float)


@dataclass(frozen=True)
class FeatureMatrix:
    """Selected (and optionally standardized) columns of a Dataset.

    ``means`` and ``stds`` are recorded for z-score scaling so the transform
    can be inverted; both are ``None`` when ``scaling == "none"``.
    """

    points: np.ndarray
    columns: tuple[str, ...]
    scaling: str = "none"
    names: tuple[str, ...] = ()
    means: np.ndarray | None = field(default=None, repr=False)
    stds: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[1] < 1:
            raise ValueError("points must be an n x d array with d >= 1")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "names", tuple(self.names))
        if len(self.columns) != pts.shape[1]:
            raise ValueError("one column name per point dimension is required")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def inverse_transform(self, points: np.ndarray | None = None) -> np.ndarray:
        pts = self.points if points is None else np.asarray(points, dtype=float)
        if self.scaling == "none":
            return np.array(pts)
        return pts * self.stds + self.means

    @classmethod
    def from_array(cls, points, columns: Sequence[str] | None = None) -> "FeatureMatrix":
        """Wrap a raw array (no scaling) for use outside the country tables."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if columns is None:
            columns = [f"x{j}" for j in range(pts.shape[1])]
        return cls(pts, tuple(columns), "none", tuple(str(i) for i in range(pts.shape[0])))


def _name_key(name: str) -> str:
    return name.strip().casefold()


def _check_dimension(dimension: str) -> None:
    if dimension not in DIMENSIONS:
        raise DatasetError(f"unknown column {dimension!r}; expected one of {', '.join(DIMENSIONS)}")


def _check_score(value: float, dimension: str, row: int | None = None) -> None:
    if not math.isfinite(value):
        raise DatasetError(f"non-finite score in column {dimension!r}", row)
    if not 0.0 <= value <= 100.0:
        raise DatasetError(f"score {value!r} in column {dimension!r} outside [0, 100]", row)


def parse_dataset(stream: TextIO | str, source: str = "<stream>") -> Dataset:
    """Parse and validate an indicator table.

    ``stream`` is a text stream or the CSV text itself. Row numbers in
    errors count physical CSV rows with the header as row 1.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise DatasetError("missing header row", 1) from None
    if header:
        header[0] = header[0].lstrip("﻿")
    if tuple(h.strip().lower() for h in header) != HEADER:
        raise DatasetError(f"bad header {','.join(header)!r}; expected {','.join(HEADER)!r}", 1)

    records: list[CountryRecord] = []
    seen: dict[str, int] = {}
    for fields in reader:
        row = reader.line_num
        if not fields or all(not f.strip() for f in fields):
            continue
        if len(fields) != len(HEADER):
            raise DatasetError(f"malformed row: expected {len(HEADER)} columns, got {len(fields)}", row)
        name = fields[0].strip()
        if not name:
            raise DatasetError("empty country name", row)
        values = []
        for dim, text in zip(DIMENSIONS, fields[1:]):
            try:
                value = float(text.strip())
            except ValueError:
                raise DatasetError(f"non-numeric score {text!r} in column {dim!r}", row) from None
            _check_score(value, dim, row)
            values.append(value)
        key = _name_key(name)
        if key in seen:
            raise DatasetError(f"duplicate country name {name!r} (first seen on row {seen[key]})", row)
        seen[key] = row
        records.append(CountryRecord(name, *values))

    if not records:
        raise DatasetError("empty body")
    return Dataset(tuple(records), source)


def load_dataset(path: str | Path) -> Dataset:
    path = Path(path)
    with open(path, newline="", encoding="utf-8-sig") as fh:
        return parse_dataset(fh, source=str(path))


def _format_score(value: float) -> str:
    text = repr(float(value))
    return text[:-2] if text.endswith(".0") else text


def serialize(ds: Dataset) -> str:
    """Render ``ds`` in the ingestion CSV format (inverse of parse_dataset)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HEADER)
    for rec in ds.records:
        writer.writerow([rec.name, *(_format_score(v) for v in rec.scores())])
    return buf.getvalue()


def reference_csv_text() -> str:
    return resources.files("trilemma").joinpath("data/oecd_eti.csv").read_text(encoding="utf-8")


def embedded_reference() -> Dataset:
    """The 38 OECD countries with their 2022 index scores."""
    return parse_dataset(reference_csv_text(), source=REFERENCE_SOURCE)


def reference_ranks() -> dict[str, dict[str, int]]:
    """Published per-dimension ranks for the reference countries.

    Returned as ``{dimension: {country: rank}}``.
    """
    text = resources.files("trilemma").joinpath("data/oecd_eti_ranks.csv").read_text(encoding="utf-8")
    out: dict[str, dict[str, int]] = {d: {} for d in DIMENSIONS}
    for row in csv.DictReader(io.StringIO(text)):
        for d in DIMENSIONS:
            out[d][row["country"]] = int(row[d])
    return out


def reference_tiers() -> dict[str, dict[str, str]]:
    """Published tier memberships for the reference countries.

    Partial: only countries whose tier is stated explicitly are listed.
    Returned as ``{dimension: {country: tier}}``.
    """
    text = resources.files("trilemma").joinpath("data/reference_tiers.csv").read_text(encoding="utf-8")
    out: dict[str, dict[str, str]] = {d: {} for d in DIMENSIONS}
    for row in csv.DictReader(io.StringIO(text)):
        out[row["dimension"]][row["country"]] = row["tier"]
    return out


def select_features(ds: Dataset, columns: Iterable[str], scaling: str = "none") -> FeatureMatrix:
    columns = list(columns)
    if not columns:
        raise DatasetError("at least one column must be selected")
    for c in columns:
        _check_dimension(c)
    if len(set(columns)) != len(columns):
        raise DatasetError(f"duplicate column in selection {columns}")
    if scaling not in SCALINGS:
        raise DatasetError(f"unknown scaling {scaling!r}; expected one of {', '.join(SCALINGS)}")
    if len(ds) == 0:
        raise DatasetError("empty dataset")

    raw = np.column_stack([ds.column(c) for c in columns])
    if scaling == "none":
        return FeatureMatrix(raw, tuple(columns), "none", tuple(ds.names))

    if len(ds) < 2:
        raise DatasetError("z-score scaling needs at least two rows")
    means = raw.mean(axis=0)
    stds = raw.std(axis=0, ddof=1)
    for c, s in zip(columns, stds):
        if s == 0.0:
            raise DatasetError(f"column {c!r} has zero variance; cannot z-score")
    z = (raw - means) / stds
    return FeatureMatrix(z, tuple(columns), "zscore", tuple(ds.names), means, stds)


def rank_column(ds: Dataset, column: str, direction: str = "descending") -> list[tuple[str, int]]:
    """Rank countries on one dimension; rank 1 is the best score.

    Ties keep dataset order. Output follows dataset order.
    """
    _check_dimension(column)
    if direction not in ("descending", "ascending"):
        raise ValueError(f"unknown direction {direction!r}")
    values = ds.column(column)
    keys = -values if direction == "descending" else values
    order = np.argsort(keys, kind="stable")
    ranks = np.empty(len(values), dtype=int)
    ranks[order] = np.arange(1, len(values) + 1)
    return [(name, int(r)) for name, r in zip(ds.names, ranks)]
