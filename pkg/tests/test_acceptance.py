"""Acceptance suite: one test per release criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s`.
"""

import json
import time

import numpy as np
import pytest

from air.cli import main as cli_main
from air.core.manifest import load_manifest
from air.core.splits import kfold_split
from air.core.types import Context, ContextGrammar, FilterVerdict, PromptSource
from air.filtering import FilterParams, filter_dataset, outlier_pass, search_alpha, similarity_matrix
from air.prompts.combinations import enumerate_combinations
from air.prompts.syntax import parse_prompt, serialize_prompt
from air.training import TrainConfig, confusion_metrics, evaluate, train_probe
from air.training.crossval import merge_for_training
from air.training.probe import softmax_gradients
from cloudfix import make_fixture, make_retention_cloud
from conftest import make_manifest
from oracles import oracle_enumerate, oracle_filter_by_class, oracle_weighted_metrics
from test_pipeline import directory_digest
from test_trainer import perceptron_is_separable, separable_fixture

BETA = 0.9825
N_FIXTURES = 50


def _pass(line: str) -> None:
    print(f"\n[PASS] {line}")


@pytest.fixture(scope="module")
def filtered_fixtures():
    """All 50 cloud fixtures filtered by both implementations, with timing."""
    results = []
    started = time.perf_counter()
    params = FilterParams()
    for seed in range(N_FIXTURES):
        fx = make_fixture(seed)
        manifest = make_manifest(zip(fx.ids, fx.labels, fx.vectors))
        filtered, report = filter_dataset(manifest, params)
        verdicts = {img.id: img.filter_verdict.value for img in filtered.images}
        oracle = oracle_filter_by_class(
            fx.ids,
            fx.labels,
            [np.array(img.embedding) for img in manifest.images],
            params.beta,
            params.retention_target,
            params.search_iterations,
        )
        results.append((fx, filtered, verdicts, oracle))
    elapsed = time.perf_counter() - started
    return results, elapsed


def test_filter_oracle_equivalence(filtered_fixtures):
    """Verdicts match an independent brute-force filter on 50 fixtures in <10s."""
    results, elapsed = filtered_fixtures
    assert len(results) == N_FIXTURES
    for fx, _, verdicts, oracle in results:
        assert fx.n <= 200
        assert verdicts == oracle, f"fixture mismatch (seed cloud {fx.ids[0]})"
    assert elapsed < 10.0, f"equivalence sweep took {elapsed:.2f}s"
    _pass(
        f"filter oracle equivalence: {N_FIXTURES} fixtures verdict-for-verdict in {elapsed:.2f}s"
    )


def test_retention_targeting():
    """Alpha search hits retention 0.9 +/- 0.02 on a 500-point fixture; grid monotone."""
    fx = make_retention_cloud()
    assert fx.n == 500
    params = FilterParams()
    alpha, memo = search_alpha(fx.ids, fx.vectors, params)
    kept, _ = memo[alpha]
    retention = len(kept) / fx.n
    assert 0.88 <= retention <= 0.92, retention
    sims = similarity_matrix(fx.vectors)
    grid = [
        len(outlier_pass(fx.ids, fx.vectors, float(a), BETA, sims=sims)[0]) / fx.n
        for a in np.linspace(-1.0, BETA, 10)
    ]
    assert all(a >= b for a, b in zip(grid, grid[1:])), grid
    _pass(
        f"retention targeting: achieved {retention:.4f} at alpha {alpha:.4f}; "
        f"10-point retain grid non-increasing"
    )


def test_duplicate_guarantee(filtered_fixtures):
    """No surviving same-class pair above beta; planted copies collapse to one."""
    results, _ = filtered_fixtures
    for fx, filtered, verdicts, _ in results:
        for label in set(fx.labels):
            kept_vecs = [
                np.array(img.embedding)
                for img in filtered.images
                if img.class_label == label and img.filter_verdict is FilterVerdict.KEPT
            ]
            if len(kept_vecs) < 2:
                continue
            sims = similarity_matrix(np.asarray(kept_vecs))
            assert sims[np.triu_indices(len(kept_vecs), k=1)].max() <= BETA
        for group in fx.dup_groups:
            survivors = [g for g in group if verdicts[g] == "kept"]
            assert len(survivors) == 1, (group, survivors)
    _pass(
        f"duplicate guarantee: all surviving same-class pairs <= {BETA}; "
        f"every planted duplicate group reduced to one representative"
    )


def test_prompt_engine_contracts():
    """Combination counts, parse/serialize round trip, attention-weight syntax."""
    rng = np.random.default_rng(2024)
    for _ in range(200):
        n_contexts = int(rng.integers(1, 5))
        option_lists = []
        for c in range(n_contexts):
            count = int(rng.integers(1, 5))
            option_lists.append([f"c{c}o{k}" for k in range(count)])
        contexts = [Context("category", tuple(option_lists[0]), mandatory=True)]
        contexts += [
            Context(f"ctx{c}", tuple(option_lists[c])) for c in range(1, n_contexts)
        ]
        grammar = ContextGrammar(contexts=tuple(contexts))
        combos = enumerate_combinations(grammar)
        expected = oracle_enumerate(option_lists)
        assert len(combos) == int(np.prod([len(o) for o in option_lists]))
        assert [c.options() for c in combos] == expected

    alphabet = list("abcdefXYZ 0123!#'-")
    for _ in range(1000):
        n_terms = int(rng.integers(1, 7))
        terms = []
        for _ in range(n_terms):
            length = int(rng.integers(1, 12))
            word = "".join(rng.choice(alphabet) for _ in range(length)).strip() or "w"
            weight = 1.0 if rng.random() < 0.4 else round(float(rng.integers(1, 1000)) / 100, 2)
            terms.append((word, weight))
        assert parse_prompt(serialize_prompt(terms)) == terms

    assert parse_prompt("(dramatic:1.4)") == [("dramatic", 1.4)]
    assert parse_prompt("(dramatic:1.4)")[0][1] == 1.4
    _pass(
        "prompt engine: 200 grammars match the nested-loop oracle; "
        "1000 fuzzed prompts round-trip; (dramatic:1.4) parses to weight 1.4"
    )


def test_trainer_contracts():
    """Gradient check, separable fixture accuracy, metric oracle, 5-fold shape."""
    rng = np.random.default_rng(7)
    dim, classes, n = 5, 3, 10
    features = rng.standard_normal((n, dim))
    labels = rng.integers(0, classes, size=n)
    eps = 1e-6
    for _ in range(20):
        weights = rng.standard_normal((classes, dim))
        bias = rng.standard_normal(classes)
        _, grad_w, grad_b = softmax_gradients(weights, bias, features, labels)
        numeric = np.zeros_like(weights)
        for i in range(classes):
            for j in range(dim):
                up, down = weights.copy(), weights.copy()
                up[i, j] += eps
                down[i, j] -= eps
                numeric[i, j] = (
                    softmax_gradients(up, bias, features, labels)[0]
                    - softmax_gradients(down, bias, features, labels)[0]
                ) / (2 * eps)
        rel = np.abs(grad_w - numeric).max() / max(np.abs(grad_w).max(), 1e-12)
        assert rel < 1e-5, rel

    features512, labels512 = separable_fixture()
    assert perceptron_is_separable(features512, labels512)
    order = np.random.default_rng(0).permutation(len(labels512))
    tr, va = order[:80], order[80:]
    model = train_probe(
        features512[tr], labels512[tr], TrainConfig(), class_names=("a", "b"),
    )
    report = evaluate(model, features512[va], labels512[va])
    assert report.accuracy >= 0.99

    rng2 = np.random.default_rng(8)
    for _ in range(100):
        k = int(rng2.integers(2, 6))
        confusion = rng2.integers(0, 40, size=(k, k))
        if confusion.sum() == 0:
            confusion[0, 0] = 1
        ours = confusion_metrics(confusion)
        expected = oracle_weighted_metrics(confusion)
        for key in expected:
            assert abs(ours[key] - expected[key]) < 1e-12

    manifest = make_manifest(
        ((f"img-{c}-{k}", c, v) for c in ("x", "y") for k, v in enumerate(
            np.random.default_rng(3).standard_normal((25, 512))
        )),
        verdict=FilterVerdict.KEPT,
    )
    folds = kfold_split(manifest, 5, seed=1)
    assert len(folds) == 5
    all_val = [i for _, val in folds for i in val]
    assert len(all_val) == len(set(all_val))
    assert set(all_val) == {img.id for img in manifest.kept_images()}
    _pass(
        "trainer: gradcheck rel err < 1e-5; separable fixture >= 99% val accuracy "
        "with default config; metrics match oracle to 1e-12; 5 disjoint covering folds"
    )


def _hundred_image_dataset(tmp_path):
    grammar = {
        "contexts": [
            {"name": "category", "options": [f"kind-{k}" for k in range(5)], "mandatory": True},
            {"name": "location", "options": [f"place-{k}" for k in range(5)]},
        ]
    }
    grammar_path = tmp_path / "grammar.json"
    grammar_path.write_text(json.dumps(grammar))
    assert cli_main([
        "gen", "--grammar", str(grammar_path), "--out", str(tmp_path / "source"),
        "--images-per-prompt", "4", "--image-size", "256", "--no-filter", "--quiet",
    ]) == 0
    return load_manifest(tmp_path / "source"), tmp_path / "source"


def test_aug_one_to_one_and_merge_fractions(tmp_path, capsys):
    """Replication is 1:1 on a 100-image dataset; merge counts are exact."""
    source, source_dir = _hundred_image_dataset(tmp_path)
    assert len(source.kept_images()) == 100
    assert cli_main([
        "aug", "--source", str(source_dir), "--out", str(tmp_path / "replica"),
        "--image-size", "256", "--no-filter", "--quiet",
    ]) == 0
    capsys.readouterr()
    replica = load_manifest(tmp_path / "replica")
    assert len(replica.prompts) == 100
    assert len(replica.images) == 100
    assert all(p.source is PromptSource.EXTRACTED for p in replica.prompts)

    rng = np.random.default_rng(1)
    original = make_manifest(
        [(f"o-{k}", "a" if k < 30 else "b", rng.standard_normal(512)) for k in range(60)],
        verdict=FilterVerdict.KEPT,
    )
    augmented = make_manifest(
        [(f"g-{k:03d}", "a" if k < 60 else "b", rng.standard_normal(512)) for k in range(100)],
        verdict=FilterVerdict.KEPT,
    )
    for fraction, expected_added in ((0.0, 0), (0.1, 6 + 4), (0.2, 12 + 8), (0.5, 30 + 20), (1.0, 100)):
        combined = merge_for_training(original, augmented, fraction, seed=3)
        added = [r for r in combined if r.id.startswith("g-")]
        assert len(combined) == 60 + expected_added
        assert len(added) == expected_added
        if fraction in (0.1, 0.2, 0.5):
            a_count = sum(1 for r in added if r.class_label == "a")
            assert a_count == int(fraction * 60)
    _pass(
        "augmentation: 100 extracted prompts and 100 pre-filter images from a "
        "100-image source; merge fractions {0,.1,.2,.5,1} give exact stratified counts"
    )


def test_end_to_end_determinism_and_runtime(tmp_path, capsys):
    """CLI runs are byte-identical across reruns and parallelism; full flow < 60s."""
    grammar = {
        "contexts": [
            {"name": "category", "options": ["small fire and smoke", "normal"], "mandatory": True},
            {"name": "location", "options": ["tropical forest", "boreal forest"]},
            {"name": "view", "options": ["drone's view"]},
            {"name": "time", "options": ["morning"]},
        ]
    }
    grammar_path = tmp_path / "grammar.json"
    grammar_path.write_text(json.dumps(grammar))
    started = time.perf_counter()

    def gen(out, parallelism):
        assert cli_main([
            "gen", "--grammar", str(grammar_path), "--out", str(out),
            "--seed", "11", "--parallelism", str(parallelism), "--quiet",
        ]) == 0
        capsys.readouterr()

    gen(tmp_path / "r1", 1)
    gen(tmp_path / "r2", 1)
    gen(tmp_path / "r3", 8)
    d1, d2, d3 = (directory_digest(tmp_path / r) for r in ("r1", "r2", "r3"))
    assert d1 == d2 == d3

    assert cli_main([
        "train", "--dataset", str(tmp_path / "r1"), "--out", str(tmp_path / "model"),
    ]) == 0
    capsys.readouterr()
    blob = next((tmp_path / "r1" / "blobs").iterdir())
    assert cli_main([
        "predict", "--model", str(tmp_path / "model"), "--image", str(blob),
    ]) == 0
    prediction = json.loads(capsys.readouterr().out)
    assert prediction["label"] in ("normal", "small fire and smoke")
    elapsed = time.perf_counter() - started
    assert elapsed < 60.0, f"full flow took {elapsed:.1f}s"
    _pass(
        f"end-to-end determinism: rerun and parallelism 1 vs 8 byte-identical; "
        f"gen+filter+train+predict in {elapsed:.1f}s"
    )


def test_ablation_toggles(tmp_path, capsys):
    """Stage toggles change only the fields they own."""
    grammar = {
        "contexts": [
            {"name": "category", "options": ["small fire and smoke", "normal"], "mandatory": True},
            {"name": "location", "options": ["tropical forest", "boreal forest"]},
            {"name": "view", "options": ["drone's view"]},
            {"name": "time", "options": ["morning"]},
        ]
    }
    grammar_path = tmp_path / "grammar.json"
    grammar_path.write_text(json.dumps(grammar))

    def gen(out, *extra):
        # tight mock clusters so the default filter provably removes duplicates
        assert cli_main([
            "gen", "--grammar", str(grammar_path), "--out", str(out),
            "--images-per-prompt", "4", "--image-size", "256", "--seed", "5",
            "--mock-sigma", "0.05", "--quiet", *extra,
        ]) == 0
        capsys.readouterr()
        return load_manifest(out)

    default = gen(tmp_path / "default")
    unfiltered = gen(tmp_path / "nofilter", "--no-filter")
    keyword_only = gen(tmp_path / "norewriter", "--no-rewriter")

    # no-filter: identical images except every verdict is kept
    assert [img.id for img in unfiltered.images] == [img.id for img in default.images]
    for ours, base in zip(unfiltered.images, default.images):
        assert ours.image_ref == base.image_ref
        assert ours.embedding == base.embedding
        assert ours.seed == base.seed
        assert ours.filter_verdict is FilterVerdict.KEPT
    assert unfiltered.prompts == default.prompts
    assert any(
        img.filter_verdict is not FilterVerdict.KEPT for img in default.images
    )

    # no-rewriter: same combinations and counts, but prompts are raw keywords
    assert all(p.source is PromptSource.ENGINEERED for p in default.prompts)
    assert all(p.source is PromptSource.SIMPLISTIC for p in keyword_only.prompts)
    assert all(all(w == 1.0 for _, w in p.terms) for p in keyword_only.prompts)
    assert [p.combination for p in keyword_only.prompts] == [
        p.combination for p in default.prompts
    ]
    assert len(keyword_only.images) == len(default.images)
    assert keyword_only.classes == default.classes
    _pass(
        "ablation toggles: --no-filter changes only verdicts; --no-rewriter changes "
        "only prompt source/text over the same combinations"
    )
