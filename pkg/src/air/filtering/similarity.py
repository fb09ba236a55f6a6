"""Cosine similarity and in-range neighbor counting."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from air.errors import ValidationError


def _as_matrix(vectors: Sequence[Sequence[float]] | np.ndarray) -> np.ndarray:
    matrix = np.asarray(vectors, dtype=np.float64)
    if matrix.ndim == 1:
        matrix = matrix.reshape(1, -1)
    return matrix


def cosine_similarity(u: Sequence[float] | np.ndarray, v: Sequence[float] | np.ndarray) -> float:
    """dot(u, v) / (|u| |v|); symmetric and invariant to positive scaling.

    Bit-identical vectors score exactly 1.0, so exact duplicates tie exactly
    rather than landing an ulp away from each other.
    """
    a = np.asarray(u, dtype=np.float64)
    b = np.asarray(v, dtype=np.float64)
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a == 0.0 or norm_b == 0.0:
        raise ValidationError("cosine similarity is undefined for a zero vector")
    if a.shape == b.shape and np.array_equal(a, b):
        return 1.0
    return float(np.dot(a, b) / (norm_a * norm_b))


def similarity_matrix(vectors: Sequence[Sequence[float]] | np.ndarray) -> np.ndarray:
    """Full pairwise cosine matrix (float64) with exact ones on the diagonal
    and between bit-identical rows."""
    matrix = _as_matrix(vectors)
    norms = np.sqrt(np.einsum("ij,ij->i", matrix, matrix))
    if np.any(norms == 0.0):
        raise ValidationError("cosine similarity is undefined for a zero vector")
    sims = (matrix @ matrix.T) / np.outer(norms, norms)
    groups: dict[bytes, list[int]] = {}
    for row in range(matrix.shape[0]):
        groups.setdefault(matrix[row].tobytes(), []).append(row)
    for rows in groups.values():
        if len(rows) > 1:
            sims[np.ix_(rows, rows)] = 1.0
    np.fill_diagonal(sims, 1.0)
    return sims


def neighbor_counts(
    vectors: Sequence[Sequence[float]] | np.ndarray,
    alpha: float,
    beta: float,
    sims: np.ndarray | None = None,
) -> list[int]:
    """Per point, how many other points have similarity within [alpha, beta]."""
    if alpha > beta:
        raise ValidationError(f"alpha ({alpha}) must not exceed beta ({beta})")
    if sims is None:
        sims = similarity_matrix(vectors)
    in_range = (sims >= alpha) & (sims <= beta)
    np.fill_diagonal(in_range, False)
    return [int(c) for c in in_range.sum(axis=1)]
