"""Greedy duplicate/outlier elimination and retention-targeted threshold search.

Filtering is two-phase. The duplicate pass removes points while any surviving
pair is more similar than `beta`; the outlier pass then removes points while
any surviving pair is less similar than `alpha`. In both phases the most
extreme violating pair is handled first and the endpoint with fewer in-range
neighbors is eliminated, with total-order tie-breaks so identical inputs give
identical outcomes. `alpha` is usually not given directly: it is searched by
bisection so the outlier pass retains a target fraction of the post-dedup
points.

Retention is measured over the phase-two input (post-dedup survivors), so the
searched alpha never compensates for duplicate removals.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from air.core.types import DatasetManifest, FilterVerdict
from air.errors import AirError, ValidationError
from air.filtering.similarity import similarity_matrix

DEFAULT_BETA = 0.9825
DEFAULT_RETENTION_TARGET = 0.9


@dataclass(frozen=True)
class FilterParams:
    beta: float = DEFAULT_BETA
    retention_target: float = DEFAULT_RETENTION_TARGET
    alpha: float | None = None  # absent: searched to hit retention_target
    per_class: bool = True
    search_iterations: int = 40

    def __post_init__(self) -> None:
        if not (0.0 < self.beta <= 1.0):
            raise ValidationError(f"beta must be in (0, 1], got {self.beta}")
        if not (0.0 < self.retention_target <= 1.0):
            raise ValidationError(
                f"retention_target must be in (0, 1], got {self.retention_target}"
            )
        if self.alpha is not None and self.alpha >= self.beta:
            raise ValidationError(f"alpha ({self.alpha}) must be below beta ({self.beta})")
        if self.search_iterations < 1:
            raise ValidationError("search_iterations must be positive")

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "beta": self.beta,
            "retention_target": self.retention_target,
            "alpha": self.alpha,
            "per_class": self.per_class,
            "search_iterations": self.search_iterations,
        }

    @classmethod
    def from_json_dict(cls, raw: dict[str, Any]) -> "FilterParams":
        return cls(
            beta=float(raw.get("beta", DEFAULT_BETA)),
            retention_target=float(raw.get("retention_target", DEFAULT_RETENTION_TARGET)),
            alpha=None if raw.get("alpha") is None else float(raw["alpha"]),
            per_class=bool(raw.get("per_class", True)),
            search_iterations=int(raw.get("search_iterations", 40)),
        )


@dataclass(frozen=True)
class FilterReport:
    alpha_used: float
    removed_duplicates: tuple[str, ...]
    removed_outliers: tuple[str, ...]
    retention_achieved: float
    per_class_breakdown: dict[str, dict[str, Any]] = field(default_factory=dict)
    warnings: tuple[str, ...] = ()

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "alpha_used": self.alpha_used,
            "removed_duplicates": list(self.removed_duplicates),
            "removed_outliers": list(self.removed_outliers),
            "retention_achieved": self.retention_achieved,
            "per_class_breakdown": {k: dict(v) for k, v in self.per_class_breakdown.items()},
            "warnings": list(self.warnings),
        }


class _PairTable:
    """Violating pairs in processing order, plus survivor bookkeeping.

    Similarities never change during a pass, so the violating pairs and their
    processing order are fixed up front; dead pairs are skipped as the scan
    advances. Neighbor counts are evaluated fresh against the current
    survivor set each time a victim is picked, which is equivalent to full
    recomputation after every removal.
    """

    def __init__(self, ids: Sequence[str], sims: np.ndarray) -> None:
        self.ids = list(ids)
        self.sims = sims
        self.alive = np.ones(len(self.ids), dtype=bool)
        # Rank of each position under lexicographic id order; used for tie-breaks.
        order = sorted(range(len(self.ids)), key=lambda i: self.ids[i])
        self.rank = np.empty(len(self.ids), dtype=np.int64)
        for pos, idx in enumerate(order):
            self.rank[idx] = pos

    def violating_pairs(self, mask: np.ndarray, descending: bool) -> np.ndarray:
        """(k, 2) array of index pairs ordered most-extreme-first, ties by id pair."""
        upper = np.triu(mask, k=1)
        i_idx, j_idx = np.nonzero(upper)
        if len(i_idx) == 0:
            return np.empty((0, 2), dtype=np.int64)
        sims = self.sims[i_idx, j_idx]
        rank_a = np.minimum(self.rank[i_idx], self.rank[j_idx])
        rank_b = np.maximum(self.rank[i_idx], self.rank[j_idx])
        key = -sims if descending else sims
        order = np.lexsort((rank_b, rank_a, key))
        return np.stack([i_idx[order], j_idx[order]], axis=1)

    def pick_victim(self, i: int, j: int, neighbor_row_mask) -> int:
        """Endpoint with fewer neighbors; ties remove the lexicographically larger id."""
        count_i = int(np.count_nonzero(neighbor_row_mask(i) & self.alive)) - int(
            neighbor_row_mask(i)[i]
        )
        count_j = int(np.count_nonzero(neighbor_row_mask(j) & self.alive)) - int(
            neighbor_row_mask(j)[j]
        )
        if count_i < count_j:
            return i
        if count_j < count_i:
            return j
        return i if self.ids[i] > self.ids[j] else j

    def run(self, mask: np.ndarray, descending: bool, neighbor_row_mask) -> list[int]:
        removed: list[int] = []
        for i, j in self.violating_pairs(mask, descending):
            if not (self.alive[i] and self.alive[j]):
                continue
            victim = self.pick_victim(int(i), int(j), neighbor_row_mask)
            self.alive[victim] = False
            removed.append(victim)
        return removed


def dedup_pass(
    ids: Sequence[str],
    vectors: Sequence[Sequence[float]] | np.ndarray,
    beta: float,
    sims: np.ndarray | None = None,
) -> tuple[list[str], list[str]]:
    """Remove points until no surviving pair has similarity above beta.

    During this phase a neighbor is any other survivor with similarity <= beta
    (no lower bound applies yet).
    """
    if sims is None:
        sims = similarity_matrix(vectors)
    table = _PairTable(ids, sims)
    removed = table.run(
        sims > beta,
        descending=True,
        neighbor_row_mask=lambda i: sims[i] <= beta,
    )
    survivors = [ids[k] for k in range(len(ids)) if table.alive[k]]
    return survivors, [ids[k] for k in removed]


def outlier_pass(
    ids: Sequence[str],
    vectors: Sequence[Sequence[float]] | np.ndarray,
    alpha: float,
    beta: float,
    sims: np.ndarray | None = None,
) -> tuple[list[str], list[str]]:
    """Remove points until every surviving pair has similarity at least alpha.

    Expects a dedup'd input (no pair above beta); neighbors are counted in
    the inclusive range [alpha, beta].
    """
    if sims is None:
        sims = similarity_matrix(vectors)
    table = _PairTable(ids, sims)
    removed = table.run(
        sims < alpha,
        descending=False,
        neighbor_row_mask=lambda i: (sims[i] >= alpha) & (sims[i] <= beta),
    )
    survivors = [ids[k] for k in range(len(ids)) if table.alive[k]]
    return survivors, [ids[k] for k in removed]


def search_alpha(
    ids: Sequence[str],
    vectors: Sequence[Sequence[float]] | np.ndarray,
    params: FilterParams,
    sims: np.ndarray | None = None,
) -> tuple[float, dict[float, tuple[list[str], list[str]]]]:
    """Bisect alpha in [-1, beta] so the outlier pass keeps >= retention_target.

    Returns the largest probed alpha meeting the target plus the memoized
    outlier-pass results keyed by probe value. retain(alpha) is evaluated on
    the given (post-dedup) input; if it is non-monotone at probed points the
    result is still the largest probed alpha that met the target.
    """
    if len(ids) < 2:
        raise ValidationError("alpha search requires at least 2 points")
    if sims is None:
        sims = similarity_matrix(vectors)
    n = len(ids)
    memo: dict[float, tuple[list[str], list[str]]] = {}

    def retain(alpha: float) -> float:
        if alpha not in memo:
            memo[alpha] = outlier_pass(ids, vectors, alpha, params.beta, sims=sims)
        return len(memo[alpha][0]) / n

    if retain(params.beta) >= params.retention_target:
        return params.beta, memo
    lo, hi = -1.0, params.beta
    if retain(lo) < params.retention_target:
        raise AirError(
            "retention target unreachable even with alpha=-1; similarities below -1 encountered"
        )
    for _ in range(params.search_iterations):
        mid = (lo + hi) / 2.0
        if retain(mid) >= params.retention_target:
            lo = mid
        else:
            hi = mid
    return lo, memo


def _filter_group(
    ids: list[str],
    vectors: np.ndarray,
    params: FilterParams,
) -> tuple[list[str], list[str], list[str], float | None, int]:
    """One class (or the whole set): returns (kept, dup ids, outlier ids, alpha, phase2 n)."""
    sims = similarity_matrix(vectors)
    survivors, removed_dup = dedup_pass(ids, vectors, params.beta, sims=sims)
    if len(survivors) < 2:
        return survivors, removed_dup, [], None, len(survivors)
    survivor_set = set(survivors)
    keep_idx = [k for k, image_id in enumerate(ids) if image_id in survivor_set]
    sub_sims = sims[np.ix_(keep_idx, keep_idx)]
    sub_ids = [ids[k] for k in keep_idx]
    sub_vectors = vectors[keep_idx]
    if params.alpha is not None:
        alpha = params.alpha
        kept, removed_out = outlier_pass(sub_ids, sub_vectors, alpha, params.beta, sims=sub_sims)
    else:
        alpha, memo = search_alpha(sub_ids, sub_vectors, params, sims=sub_sims)
        kept, removed_out = memo[alpha]
    return kept, removed_dup, removed_out, alpha, len(sub_ids)


def filter_dataset(
    manifest: DatasetManifest, params: FilterParams
) -> tuple[DatasetManifest, FilterReport]:
    """Assign fresh filter verdicts to every image; returns a new manifest.

    With per_class set, each class is filtered independently (its own alpha);
    otherwise one pass runs over the full image set. Classes with fewer than
    two images are skipped with a warning and kept as-is.
    """
    if params.per_class:
        groups = [(c, imgs) for c, imgs in manifest.images_by_class().items()]
    else:
        groups = [("(all)", list(manifest.images))]

    verdicts: dict[str, FilterVerdict] = {}
    breakdown: dict[str, dict[str, Any]] = {}
    warnings: list[str] = []
    all_dups: list[str] = []
    all_outliers: list[str] = []
    alphas: list[float] = []
    total_phase2 = 0
    total_kept = 0

    for group_name, images in groups:
        if len(images) < 2:
            if images:
                warnings.append(
                    f"class {group_name!r} has {len(images)} image(s); filter skipped"
                )
                for img in images:
                    verdicts[img.id] = FilterVerdict.KEPT
                breakdown[group_name] = {
                    "kept": len(images),
                    "removed_duplicates": 0,
                    "removed_outliers": 0,
                    "alpha": None,
                    "phase2_input": len(images),
                }
                total_phase2 += len(images)
                total_kept += len(images)
            continue
        ids = [img.id for img in images]
        vectors = np.asarray([img.embedding for img in images], dtype=np.float64)
        kept, removed_dup, removed_out, alpha, phase2 = _filter_group(ids, vectors, params)
        for image_id in kept:
            verdicts[image_id] = FilterVerdict.KEPT
        for image_id in removed_dup:
            verdicts[image_id] = FilterVerdict.REMOVED_DUPLICATE
        for image_id in removed_out:
            verdicts[image_id] = FilterVerdict.REMOVED_OUTLIER
        all_dups.extend(removed_dup)
        all_outliers.extend(removed_out)
        if alpha is not None:
            alphas.append(alpha)
        total_phase2 += phase2
        total_kept += len(kept)
        breakdown[group_name] = {
            "kept": len(kept),
            "removed_duplicates": len(removed_dup),
            "removed_outliers": len(removed_out),
            "alpha": alpha,
            "phase2_input": phase2,
        }

    report = FilterReport(
        alpha_used=(sum(alphas) / len(alphas)) if alphas else -1.0,
        removed_duplicates=tuple(all_dups),
        removed_outliers=tuple(all_outliers),
        retention_achieved=(total_kept / total_phase2) if total_phase2 else 1.0,
        per_class_breakdown=breakdown,
        warnings=tuple(warnings),
    )
    return manifest.with_verdicts(verdicts), report
