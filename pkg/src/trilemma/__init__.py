"""Clustering analytics for country energy-indicator tables."""

__version__ = "0.1.0"

from .dataset import (  # noqa: E402
    DIMENSIONS,
    CountryRecord,
    Dataset,
    DatasetError,
    FeatureMatrix,
    embedded_reference,
    load_dataset,
    parse_dataset,
    rank_column,
    select_features,
    serialize,
)
from .hier import Dendrogram, agglomerate, cut  # noqa: E402
from .kmeans import (  # noqa: E402
    Clustering,
    KMeansConfig,
    assign_step,
    kmeans_1d_exact,
    lloyd,
    sse,
    update_step,
)
from .validity import detect_knee, select_k, silhouette, wcss_curve  # noqa: E402

__all__ = [
    "DIMENSIONS",
    "Clustering",
    "CountryRecord",
    "Dataset",
    "DatasetError",
    "Dendrogram",
    "FeatureMatrix",
    "KMeansConfig",
    "agglomerate",
    "assign_step",
    "cut",
    "detect_knee",
    "embedded_reference",
    "kmeans_1d_exact",
    "load_dataset",
    "lloyd",
    "parse_dataset",
    "rank_column",
    "select_features",
    "select_k",
    "serialize",
    "silhouette",
    "sse",
    "update_step",
    "wcss_curve",
]
