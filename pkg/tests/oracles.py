"""Independent brute-force reference implementations used only by tests.

Everything here is written as directly as possible (plain loops, full
recomputation after every removal) and shares no code with the package
under test beyond numpy itself.
"""

from __future__ import annotations

import numpy as np


def oracle_cosine(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if np.array_equal(u, v):
        return 1.0  # identical vectors: cosine is exactly one by definition
    return float(np.dot(u, v) / (np.linalg.norm(u) * np.linalg.norm(v)))


def oracle_sim_matrix(vectors) -> np.ndarray:
    n = len(vectors)
    sims = np.empty((n, n), dtype=np.float64)
    for i in range(n):
        for j in range(i, n):
            sims[i, j] = oracle_cosine(vectors[i], vectors[j])
            sims[j, i] = sims[i, j]
    return sims


def oracle_neighbor_counts(vectors, alpha: float, beta: float) -> list[int]:
    n = len(vectors)
    counts = []
    for i in range(n):
        c = 0
        for j in range(n):
            if j == i:
                continue
            s = oracle_cosine(vectors[i], vectors[j])
            if alpha <= s <= beta:
                c += 1
        counts.append(c)
    return counts


def _pair_key(ids, i, j):
    a, b = ids[i], ids[j]
    return (a, b) if a <= b else (b, a)


def _oracle_greedy(ids, sims, violation_mask, neighbor_mask, use_max):
    """Generic elimination loop: pairs and counts fully recomputed every round."""
    n = len(ids)
    alive = np.ones(n, dtype=bool)
    removed = []
    while True:
        live = np.triu(violation_mask & np.outer(alive, alive), k=1)
        if not live.any():
            break
        values = sims[live]
        extreme = values.max() if use_max else values.min()
        candidates = np.argwhere(live & (sims == extreme))
        i, j = min(
            [(int(a), int(b)) for a, b in candidates],
            key=lambda p: _pair_key(ids, p[0], p[1]),
        )
        count_i = int((neighbor_mask[i] & alive).sum()) - int(neighbor_mask[i, i])
        count_j = int((neighbor_mask[j] & alive).sum()) - int(neighbor_mask[j, j])
        if count_i < count_j:
            victim = i
        elif count_j < count_i:
            victim = j
        else:
            victim = i if ids[i] > ids[j] else j
        alive[victim] = False
        removed.append(victim)
    survivors = [ids[k] for k in range(n) if alive[k]]
    return survivors, [ids[k] for k in removed]


def oracle_dedup(ids, vectors, beta: float, sims=None):
    if sims is None:
        sims = oracle_sim_matrix(vectors)
    return _oracle_greedy(
        ids,
        sims,
        violation_mask=sims > beta,
        neighbor_mask=sims <= beta,
        use_max=True,
    )


def oracle_outlier(ids, vectors, alpha: float, beta: float, sims=None):
    if sims is None:
        sims = oracle_sim_matrix(vectors)
    return _oracle_greedy(
        ids,
        sims,
        violation_mask=sims < alpha,
        neighbor_mask=(sims >= alpha) & (sims <= beta),
        use_max=False,
    )


def oracle_search_alpha(ids, vectors, beta: float, target: float, iterations: int = 40, sims=None):
    """Largest probed alpha whose outlier pass keeps >= target of the input."""
    if sims is None:
        sims = oracle_sim_matrix(vectors)
    n = len(ids)
    memo = {}

    def retain(alpha: float) -> float:
        if alpha not in memo:
            memo[alpha] = oracle_outlier(ids, vectors, alpha, beta, sims=sims)
        return len(memo[alpha][0]) / n

    if retain(beta) >= target:
        return beta, memo
    lo, hi = -1.0, beta
    assert retain(lo) >= target
    for _ in range(iterations):
        mid = (lo + hi) / 2.0
        if retain(mid) >= target:
            lo = mid
        else:
            hi = mid
    return lo, memo


def oracle_filter_by_class(
    ids, labels, vectors, beta: float, target: float, iterations: int = 40, alpha=None
):
    """Per-class dedup + alpha search + outlier pass; returns verdict per id."""
    verdicts = {}
    by_class: dict[str, list[int]] = {}
    for idx, label in enumerate(labels):
        by_class.setdefault(label, []).append(idx)
    for label in by_class:
        idxs = by_class[label]
        class_ids = [ids[k] for k in idxs]
        class_vecs = np.asarray([vectors[k] for k in idxs])
        if len(class_ids) < 2:
            for cid in class_ids:
                verdicts[cid] = "kept"
            continue
        survivors, dups = oracle_dedup(class_ids, class_vecs, beta)
        for cid in dups:
            verdicts[cid] = "removed_duplicate"
        if len(survivors) < 2:
            for cid in survivors:
                verdicts[cid] = "kept"
            continue
        keep_pos = [k for k, cid in enumerate(class_ids) if cid in set(survivors)]
        sub_ids = [class_ids[k] for k in keep_pos]
        sub_vecs = class_vecs[keep_pos]
        if alpha is None:
            found, memo = oracle_search_alpha(sub_ids, sub_vecs, beta, target, iterations)
            kept, outliers = memo[found]
        else:
            kept, outliers = oracle_outlier(sub_ids, sub_vecs, alpha, beta)
        for cid in kept:
            verdicts[cid] = "kept"
        for cid in outliers:
            verdicts[cid] = "removed_outlier"
    return verdicts


def oracle_enumerate(option_lists: list[list[str]]) -> list[tuple[str, ...]]:
    """Nested-loop Cartesian product, leftmost list varying slowest."""
    combos: list[tuple[str, ...]] = [()]
    for options in option_lists:
        combos = [prefix + (opt,) for prefix in combos for opt in options]
    return combos


def oracle_weighted_metrics(confusion: np.ndarray) -> dict[str, float]:
    """Weighted precision/recall/F1 and accuracy straight from the definitions."""
    confusion = np.asarray(confusion, dtype=np.float64)
    total = confusion.sum()
    num_classes = confusion.shape[0]
    accuracy = float(np.trace(confusion) / total)
    precision = recall = f1 = 0.0
    for c in range(num_classes):
        support = confusion[c, :].sum()
        predicted = confusion[:, c].sum()
        tp = confusion[c, c]
        p_c = float(tp / predicted) if predicted > 0 else 0.0
        r_c = float(tp / support) if support > 0 else 0.0
        f_c = (2 * p_c * r_c / (p_c + r_c)) if (p_c + r_c) > 0 else 0.0
        weight = float(support / total)
        precision += weight * p_c
        recall += weight * r_c
        f1 += weight * f_c
    return {
        "accuracy": accuracy,
        "weighted_precision": precision,
        "weighted_recall": recall,
        "weighted_f1": f1,
    }
