import pytest

from air.core.splits import kfold_split, split_dataset
from air.core.types import FilterVerdict
from air.errors import InsufficientDataError, ValidationError
from conftest import make_manifest, unit_rows


def _balanced_manifest(n_per_class, classes=("fire", "normal"), verdict=FilterVerdict.KEPT):
    vectors = unit_rows(n_per_class * len(classes), seed=3)
    triples = [
        (f"img-{c}-{k:03d}", c, vectors[i * n_per_class + k])
        for i, c in enumerate(classes)
        for k in range(n_per_class)
    ]
    return make_manifest(triples, verdict=verdict)


def test_stratified_80_20_split():
    manifest = _balanced_manifest(50)
    train, val = split_dataset(manifest, 0.8, seed=7)
    assert len(train) == 80 and len(val) == 20
    for c in ("fire", "normal"):
        assert sum(1 for i in train if f"-{c}-" in i) == 40
        assert sum(1 for i in val if f"-{c}-" in i) == 10


def test_split_is_deterministic():
    manifest = _balanced_manifest(50)
    assert split_dataset(manifest, 0.8, seed=7) == split_dataset(manifest, 0.8, seed=7)
    assert split_dataset(manifest, 0.8, seed=7) != split_dataset(manifest, 0.8, seed=8)


@pytest.mark.parametrize(
    "n,fraction,expected_train",
    [(3, 0.5, 2), (3, 0.4, 1), (5, 0.5, 3), (4, 0.5, 2), (10, 0.75, 8), (2, 0.5, 1)],
)
def test_train_count_rounds_half_up(n, fraction, expected_train):
    manifest = _balanced_manifest(n, classes=("only",))
    train, val = split_dataset(manifest, fraction, seed=1)
    assert len(train) == expected_train
    assert len(val) == n - expected_train


def test_split_partitions_kept_images():
    manifest = _balanced_manifest(13)
    kept_ids = {img.id for img in manifest.kept_images()}
    train, val = split_dataset(manifest, 0.6, seed=42)
    assert set(train) | set(val) == kept_ids
    assert set(train) & set(val) == set()


def test_split_ignores_unkept_images():
    manifest = _balanced_manifest(10)
    pending = manifest.with_verdicts(
        {manifest.images[0].id: FilterVerdict.REMOVED_OUTLIER,
         manifest.images[1].id: FilterVerdict.REMOVED_DUPLICATE}
    )
    train, val = split_dataset(pending, 0.5, seed=0)
    assert manifest.images[0].id not in set(train) | set(val)
    assert len(train) + len(val) == 18


def test_small_class_raises_with_class_name():
    manifest = _balanced_manifest(1, classes=("tiny", "big"))
    with pytest.raises(InsufficientDataError, match="tiny|big"):
        split_dataset(manifest, 0.5, seed=0)


def test_bad_fraction_rejected():
    manifest = _balanced_manifest(4)
    for fraction in (0.0, 1.0, -0.1, 1.5):
        with pytest.raises(ValidationError):
            split_dataset(manifest, fraction, seed=0)


def test_kfold_five_balanced_folds():
    manifest = _balanced_manifest(50)
    folds = kfold_split(manifest, 5, seed=11)
    assert len(folds) == 5
    for train, val in folds:
        assert len(val) == 20
        assert len(train) == 80
        for c in ("fire", "normal"):
            assert sum(1 for i in val if f"-{c}-" in i) == 10


def test_kfold_validation_folds_partition_kept_set():
    manifest = _balanced_manifest(13)
    kept_ids = {img.id for img in manifest.kept_images()}
    folds = kfold_split(manifest, 4, seed=2)
    all_val = [i for _, val in folds for i in val]
    assert len(all_val) == len(set(all_val))
    assert set(all_val) == kept_ids
    # per-class fold sizes differ by at most one
    for c in ("fire", "normal"):
        sizes = [sum(1 for i in val if f"-{c}-" in i) for _, val in folds]
        assert max(sizes) - min(sizes) <= 1


def test_kfold_two_over_four():
    manifest = _balanced_manifest(2, classes=("only",))
    folds = kfold_split(manifest, 2, seed=0)
    assert len(folds) == 2
    assert {i for _, val in folds for i in val} == {img.id for img in manifest.images}
    assert set(folds[0][1]) & set(folds[1][1]) == set()


def test_kfold_preconditions():
    manifest = _balanced_manifest(3)
    with pytest.raises(ValidationError):
        kfold_split(manifest, 1, seed=0)
    with pytest.raises(InsufficientDataError):
        kfold_split(manifest, 4, seed=0)


def test_kfold_deterministic():
    manifest = _balanced_manifest(20)
    assert kfold_split(manifest, 5, seed=9) == kfold_split(manifest, 5, seed=9)
