import numpy as np
import pytest

from air.core.types import FilterVerdict
from air.errors import ValidationError
from air.filtering import (
    FilterParams,
    cosine_similarity,
    dedup_pass,
    filter_dataset,
    neighbor_counts,
    outlier_pass,
    search_alpha,
    similarity_matrix,
)
from cloudfix import make_fixture, make_retention_cloud
from conftest import make_manifest, unit_rows
from oracles import (
    oracle_dedup,
    oracle_filter_by_class,
    oracle_neighbor_counts,
    oracle_outlier,
    oracle_search_alpha,
)


def _vec(*head, dim=512):
    v = np.zeros(dim)
    v[: len(head)] = head
    return v


# --- cosine similarity


def test_self_similarity_is_one():
    u = _vec(0.5, 0.5, 0.5, 0.5)
    assert cosine_similarity(u, u) == pytest.approx(1.0, abs=1e-12)


def test_orthogonal_vectors():
    assert cosine_similarity(_vec(1.0), _vec(0.0, 1.0)) == pytest.approx(0.0, abs=1e-15)


def test_unit_vector_dot_example():
    assert cosine_similarity(_vec(1.0), _vec(0.6, 0.8)) == pytest.approx(0.6, abs=1e-12)


def test_scale_invariance():
    rng = np.random.default_rng(1)
    for _ in range(20):
        u, v = rng.standard_normal(512), rng.standard_normal(512)
        c = float(rng.uniform(0.01, 100))
        base = cosine_similarity(u, v)
        assert abs(cosine_similarity(c * u, v) - base) <= 1e-12 * abs(base)


def test_symmetry():
    u, v = unit_rows(2, seed=8)
    assert cosine_similarity(u, v) == cosine_similarity(v, u)


def test_zero_vector_rejected():
    with pytest.raises(ValidationError):
        cosine_similarity(np.zeros(512), _vec(1.0))
    with pytest.raises(ValidationError):
        similarity_matrix(np.stack([np.zeros(512), _vec(1.0)]))


# --- neighbor counts


def test_identical_vectors_out_of_range_when_beta_below_one():
    # exact arithmetic: components are powers of two, self-pairs sim exactly 1.0
    vecs = np.stack([_vec(0.5, 0.5, 0.5, 0.5)] * 3)
    assert neighbor_counts(vecs, 0.5, 0.9) == [0, 0, 0]


def test_identical_vectors_counted_when_beta_is_one():
    vecs = np.stack([_vec(0.5, 0.5, 0.5, 0.5)] * 3)
    assert neighbor_counts(vecs, 0.5, 1.0) == [2, 2, 2]


def test_counts_match_oracle_on_random_vectors():
    vecs = unit_rows(20, seed=4)
    for alpha, beta in [(-1.0, 1.0), (0.0, 0.5), (-0.1, 0.1), (0.9, 0.9825)]:
        assert neighbor_counts(vecs, alpha, beta) == oracle_neighbor_counts(vecs, alpha, beta)


def test_counts_match_oracle_on_cloud_fixture():
    fx = make_fixture(0)
    idxs = fx.class_indices("blaze")
    vecs = fx.vectors[idxs]
    assert neighbor_counts(vecs, 0.8, 0.9825) == oracle_neighbor_counts(vecs, 0.8, 0.9825)


def test_alpha_above_beta_rejected():
    with pytest.raises(ValidationError):
        neighbor_counts(unit_rows(3), 0.9, 0.5)


# --- dedup pass


def test_two_identical_vectors_one_removed():
    vecs = np.stack([_vec(0.5, 0.5, 0.5, 0.5)] * 2)
    survivors, removed = dedup_pass(["a", "b"], vecs, beta=0.9825)
    assert survivors == ["a"]  # tie on neighbors: larger id removed
    assert removed == ["b"]


def test_distinct_vectors_below_beta_untouched():
    vecs = unit_rows(10, seed=2)
    sims = similarity_matrix(vecs)
    assert sims[np.triu_indices(10, k=1)].max() < 0.9825
    survivors, removed = dedup_pass([f"v{i}" for i in range(10)], vecs, beta=0.9825)
    assert removed == []
    assert len(survivors) == 10


def test_planted_copy_cluster_collapses_to_single_representative():
    rng = np.random.default_rng(7)
    anchor = rng.standard_normal(512)
    anchor /= np.linalg.norm(anchor)
    cloud = [anchor + 0.4 * (d / np.linalg.norm(d)) for d in rng.standard_normal((10, 512))]
    cloud = [v / np.linalg.norm(v) for v in cloud]
    vecs = np.stack(cloud + [cloud[0].copy()] * 3)
    ids = [f"p{i:02d}" for i in range(10)] + ["q0", "q1", "q2"]
    survivors, removed = dedup_pass(ids, vecs, beta=0.9825)
    assert len(survivors) == 10
    group = {"p00", "q0", "q1", "q2"}
    assert len(group & set(survivors)) == 1
    assert set(removed) <= group
    # matches the independent oracle
    o_survivors, o_removed = oracle_dedup(ids, vecs, beta=0.9825)
    assert survivors == o_survivors and removed == o_removed


def test_dedup_is_idempotent():
    fx = make_fixture(3)
    survivors, removed = dedup_pass(fx.ids, fx.vectors, beta=0.9825)
    keep = [k for k, i in enumerate(fx.ids) if i in set(survivors)]
    again, removed_again = dedup_pass(survivors, fx.vectors[keep], beta=0.9825)
    assert again == survivors and removed_again == []


# --- outlier pass


def test_single_far_outlier_is_the_victim():
    rng = np.random.default_rng(11)
    anchor = rng.standard_normal(512)
    anchor /= np.linalg.norm(anchor)
    cloud = [anchor + 0.3 * (d / np.linalg.norm(d)) for d in rng.standard_normal((8, 512))]
    cloud = [v / np.linalg.norm(v) for v in cloud]
    outlier = rng.standard_normal(512)
    outlier /= np.linalg.norm(outlier)
    vecs = np.stack(cloud + [outlier])
    ids = [f"c{i}" for i in range(8)] + ["outlier"]
    survivors, removed = outlier_pass(ids, vecs, alpha=0.5, beta=0.9825)
    assert removed == ["outlier"]
    assert len(survivors) == 8


def test_alpha_minus_one_removes_nothing():
    vecs = unit_rows(15, seed=6)
    survivors, removed = outlier_pass([f"v{i}" for i in range(15)], vecs, alpha=-1.0, beta=1.0)
    assert removed == []


def test_smaller_antipodal_cluster_eliminated_point_by_point():
    rng = np.random.default_rng(13)
    a = rng.standard_normal(512)
    a /= np.linalg.norm(a)
    big = [a + 0.2 * (d / np.linalg.norm(d)) for d in rng.standard_normal((6, 512))]
    small = [-a + 0.2 * (d / np.linalg.norm(d)) for d in rng.standard_normal((3, 512))]
    vecs = np.stack([v / np.linalg.norm(v) for v in big + small])
    ids = [f"big{i}" for i in range(6)] + [f"sml{i}" for i in range(3)]
    survivors, removed = outlier_pass(ids, vecs, alpha=0.0, beta=1.0)
    assert set(removed) == {"sml0", "sml1", "sml2"}
    assert survivors == [f"big{i}" for i in range(6)]
    o_survivors, o_removed = oracle_outlier(ids, vecs, alpha=0.0, beta=1.0)
    assert survivors == o_survivors and removed == o_removed


def test_outlier_pass_idempotent_at_fixed_alpha():
    fx = make_fixture(5)
    idxs = fx.class_indices("blaze")
    ids = [fx.ids[k] for k in idxs]
    vecs = fx.vectors[idxs]
    survivors, _ = dedup_pass(ids, vecs, beta=0.9825)
    keep = [k for k, i in enumerate(ids) if i in set(survivors)]
    s1, r1 = outlier_pass(survivors, vecs[keep], alpha=0.7, beta=0.9825)
    keep2 = [k for k, i in enumerate(survivors) if i in set(s1)]
    s2, r2 = outlier_pass(s1, vecs[keep][keep2], alpha=0.7, beta=0.9825)
    assert s2 == s1 and r2 == []


# --- alpha search


def test_retention_target_one_removes_nothing():
    vecs = unit_rows(30, seed=14)
    ids = [f"v{i}" for i in range(30)]
    params = FilterParams(retention_target=1.0)
    alpha, memo = search_alpha(ids, vecs, params)
    kept, removed = memo[alpha]
    assert removed == []
    assert len(kept) == 30


def test_search_alpha_hits_retention_window_on_500_point_cloud():
    fx = make_retention_cloud()
    params = FilterParams()
    alpha, memo = search_alpha(fx.ids, fx.vectors, params)
    kept, removed = memo[alpha]
    retention = len(kept) / fx.n
    assert 0.88 <= retention <= 0.92
    assert set(fx.outlier_ids) <= set(removed)


def test_search_alpha_matches_oracle_on_small_fixture():
    fx = make_fixture(9)
    idxs = fx.class_indices("calm")
    ids = [fx.ids[k] for k in idxs]
    vecs = fx.vectors[idxs]
    survivors, _ = dedup_pass(ids, vecs, beta=0.9825)
    keep = [k for k, i in enumerate(ids) if i in set(survivors)]
    params = FilterParams()
    alpha, memo = search_alpha(survivors, vecs[keep], params)
    o_alpha, o_memo = oracle_search_alpha(
        survivors, vecs[keep], params.beta, params.retention_target, params.search_iterations
    )
    assert alpha == o_alpha
    assert memo[alpha][0] == o_memo[o_alpha][0]


def test_retain_grid_is_non_increasing():
    fx = make_retention_cloud()
    sims = similarity_matrix(fx.vectors)
    retentions = []
    for alpha in np.linspace(-1.0, 0.9825, 10):
        kept, _ = outlier_pass(fx.ids, fx.vectors, float(alpha), 0.9825, sims=sims)
        retentions.append(len(kept) / fx.n)
    assert all(a >= b for a, b in zip(retentions, retentions[1:]))


def test_search_requires_two_points():
    with pytest.raises(ValidationError):
        search_alpha(["a"], unit_rows(1), FilterParams())


# --- filter_dataset


def _manifest_from_fixture(fx):
    return make_manifest(
        (i, lab, vec) for i, lab, vec in zip(fx.ids, fx.labels, fx.vectors)
    )


def test_all_identical_embeddings_leave_one_survivor():
    vec = _vec(0.5, 0.5, 0.5, 0.5)
    manifest = make_manifest([(f"img-{k}", "c", vec) for k in range(5)], classes=["c"])
    filtered, report = filter_dataset(manifest, FilterParams())
    assert len(filtered.kept_images()) == 1
    assert len(report.removed_duplicates) == 4
    assert report.removed_outliers == ()


def test_per_class_filtering_never_mixes_classes():
    # two well-separated class clouds: cross-class similarity is ~0 but must not
    # cause removals because each class is filtered independently
    fx = make_fixture(21, n_per_class=30, dup_group_sizes=(), n_outliers=0)
    manifest = _manifest_from_fixture(fx)
    filtered, report = filter_dataset(manifest, FilterParams(retention_target=1.0))
    assert report.removed_outliers == ()


def test_filter_matches_oracle_verdict_for_verdict():
    params = FilterParams()
    for seed in (0, 17, 33):
        fx = make_fixture(seed)
        manifest = _manifest_from_fixture(fx)
        filtered, report = filter_dataset(manifest, params)
        verdicts = {img.id: img.filter_verdict.value for img in filtered.images}
        expected = oracle_filter_by_class(
            fx.ids,
            fx.labels,
            [np.array(img.embedding) for img in manifest.images],
            params.beta,
            params.retention_target,
            params.search_iterations,
        )
        assert verdicts == expected


def test_filter_is_pure_and_deterministic():
    fx = make_fixture(2)
    manifest = _manifest_from_fixture(fx)
    first, report1 = filter_dataset(manifest, FilterParams())
    second, report2 = filter_dataset(manifest, FilterParams())
    assert first == second
    assert report1 == report2
    assert all(img.filter_verdict is FilterVerdict.PENDING for img in manifest.images)


def test_surviving_same_class_pairs_within_bounds():
    fx = make_fixture(4)
    manifest = _manifest_from_fixture(fx)
    filtered, report = filter_dataset(manifest, FilterParams())
    for label in set(fx.labels):
        kept = [img for img in filtered.kept_images() if img.class_label == label]
        vecs = np.asarray([img.embedding for img in kept])
        sims = similarity_matrix(vecs)
        upper = sims[np.triu_indices(len(kept), k=1)]
        alpha = report.per_class_breakdown[label]["alpha"]
        assert upper.max() <= 0.9825
        assert upper.min() >= alpha


def test_removed_sets_disjoint_and_cover():
    fx = make_fixture(6)
    manifest = _manifest_from_fixture(fx)
    filtered, report = filter_dataset(manifest, FilterParams())
    dups, outs = set(report.removed_duplicates), set(report.removed_outliers)
    kept = {img.id for img in filtered.kept_images()}
    assert dups & outs == set()
    assert dups | outs | kept == set(fx.ids)
    entry = report.per_class_breakdown["blaze"]
    assert entry["kept"] + entry["removed_outliers"] == entry["phase2_input"]


def test_retention_reported_over_phase_two_input():
    fx = make_fixture(8)
    manifest = _manifest_from_fixture(fx)
    _, report = filter_dataset(manifest, FilterParams())
    phase2 = sum(e["phase2_input"] for e in report.per_class_breakdown.values())
    kept = sum(e["kept"] for e in report.per_class_breakdown.values())
    assert report.retention_achieved == pytest.approx(kept / phase2)


def test_tiny_class_skipped_with_warning():
    vecs = unit_rows(4, seed=30)
    manifest = make_manifest(
        [("a0", "big", vecs[0]), ("a1", "big", vecs[1]), ("a2", "big", vecs[2]),
         ("solo", "rare", vecs[3])]
    )
    filtered, report = filter_dataset(manifest, FilterParams(retention_target=1.0))
    assert any("rare" in w for w in report.warnings)
    solo = next(img for img in filtered.images if img.id == "solo")
    assert solo.filter_verdict is FilterVerdict.KEPT


def test_explicit_alpha_skips_search():
    fx = make_fixture(10)
    manifest = _manifest_from_fixture(fx)
    filtered, report = filter_dataset(manifest, FilterParams(alpha=0.2))
    assert report.alpha_used == pytest.approx(0.2)
    for entry in report.per_class_breakdown.values():
        assert entry["alpha"] == 0.2


def test_global_mode_uses_single_pass():
    fx = make_fixture(12, n_per_class=20, dup_group_sizes=(), n_outliers=0)
    manifest = _manifest_from_fixture(fx)
    filtered, report = filter_dataset(
        manifest, FilterParams(per_class=False, retention_target=0.9)
    )
    assert list(report.per_class_breakdown) == ["(all)"]


def test_invalid_params_rejected():
    with pytest.raises(ValidationError):
        FilterParams(beta=0.0)
    with pytest.raises(ValidationError):
        FilterParams(alpha=0.99, beta=0.9825)
    with pytest.raises(ValidationError):
        FilterParams(retention_target=0.0)
