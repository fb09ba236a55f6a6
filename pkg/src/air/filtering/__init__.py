"""Similarity-based duplicate and outlier removal over image embeddings."""

from air.filtering.removal import (
    FilterParams,
    FilterReport,
    dedup_pass,
    filter_dataset,
    outlier_pass,
    search_alpha,
)
from air.filtering.similarity import cosine_similarity, neighbor_counts, similarity_matrix

__all__ = [
    "FilterParams",
    "FilterReport",
    "cosine_similarity",
    "similarity_matrix",
    "neighbor_counts",
    "dedup_pass",
    "outlier_pass",
    "search_alpha",
    "filter_dataset",
]
