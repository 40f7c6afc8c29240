import numpy as np
import pytest

from _oracles import traverse_tree_oracle, vote_oracle
from conftest import make_dataset
from stairlift._grower import derive_tree_seeds
from stairlift.balance import Dataset
from stairlift.domain import CLASS_NAMES, ActivityLabel
from stairlift.errors import (
    ArityMismatchError,
    DegenerateDataError,
    EmptyDatasetError,
    InsufficientDataError,
)
from stairlift.forest import (
    ForestHyperparams,
    TrainedForest,
    default_grid,
    feature_importances,
    grid_search,
    load_forest,
    predict,
    predict_many,
    save_forest,
    train_forest,
)


def separable_dataset(n_per_class=60, seed=0, classes=(0, 3)):
    rng = np.random.default_rng(seed)
    rows = {}
    for i, cls in enumerate(classes):
        rows[cls] = n_per_class
    data = make_dataset(rows, d=6, seed=seed)
    return data


class TestTrainForest:
    def test_separable_training_accuracy(self):
        data = separable_dataset()
        forest = train_forest(data, ForestHyperparams(None, 20), seed=1)
        preds = predict_many(forest, data.X)
        assert (preds == data.y).mean() == 1.0

    def test_determinism_double_run(self, rng):
        data = make_dataset({0: 50, 1: 30, 3: 40}, d=8, seed=2)
        probe = rng.normal(size=(100, 8))
        a = train_forest(data, ForestHyperparams(10, 15), seed=9)
        b = train_forest(data, ForestHyperparams(10, 15), seed=9)
        np.testing.assert_array_equal(predict_many(a, probe), predict_many(b, probe))
        np.testing.assert_array_equal(a.node_threshold, b.node_threshold)
        np.testing.assert_array_equal(a.node_feature, b.node_feature)
        c = train_forest(data, ForestHyperparams(10, 15), seed=10)
        assert not np.array_equal(a.node_threshold, c.node_threshold)

    def test_depth_one_cannot_shatter_xor(self):
        X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
        y = np.array([0, 1, 1, 0], dtype=np.int16)
        data = Dataset(
            feature_names=("a", "b"),
            X=X,
            y=y,
            participant_ids=np.array(["p"] * 4, dtype=object),
            start_ms=np.zeros(4, dtype=np.int64),
        )
        forest = train_forest(data, ForestHyperparams(1, 1), seed=3)
        acc = (predict_many(forest, X) == y).mean()
        assert acc <= 0.75

    def test_capacity_monotonicity(self):
        data = make_dataset({0: 60, 1: 60, 4: 60}, d=5, seed=4)
        deep = train_forest(data, ForestHyperparams(None, 10), seed=5)
        shallow = train_forest(data, ForestHyperparams(1, 10), seed=5)
        acc_deep = (predict_many(deep, data.X) == data.y).mean()
        acc_shallow = (predict_many(shallow, data.X) == data.y).mean()
        assert acc_deep >= acc_shallow

    def test_depth_cap_equals_truncated_unbounded(self):
        # path-seeded node randomness: a capped tree is the uncapped tree
        # truncated at the cap, so grid evaluation by truncation is exact
        data = make_dataset({0: 40, 1: 35, 2: 30, 3: 25, 4: 20}, d=7, seed=6)
        probe = np.random.default_rng(0).normal(size=(200, 7))
        probe[:, 0] += np.random.default_rng(1).choice([0, 4, 8, 12, 16], size=200)
        unbounded = train_forest(data, ForestHyperparams(None, 12), seed=7)
        for cap in (1, 2, 4, 8):
            capped = train_forest(data, ForestHyperparams(cap, 12), seed=7)
            direct = predict_many(capped, probe)
            from stairlift.forest import _majority, _votes

            truncated = _majority(_votes(unbounded, probe, depth_cap=cap))
            np.testing.assert_array_equal(direct, truncated)

    def test_errors(self):
        data = make_dataset({0: 10})
        with pytest.raises(DegenerateDataError):
            train_forest(data, ForestHyperparams(None, 5), seed=0)
        empty = data.select(np.array([], dtype=np.int64))
        with pytest.raises(EmptyDatasetError):
            train_forest(empty, ForestHyperparams(None, 5), seed=0)

    def test_hyperparam_validation(self):
        with pytest.raises(ValueError):
            ForestHyperparams(None, 0)
        with pytest.raises(ValueError):
            ForestHyperparams(0, 10)


def _manual_forest(preds: list[int]) -> TrainedForest:
    """Forest of single-leaf trees with fixed votes."""
    n = len(preds)
    return TrainedForest(
        feature_names=("f0",),
        class_names=CLASS_NAMES,
        hyperparams=ForestHyperparams(None, n),
        seed=0,
        tree_offsets=np.arange(n + 1, dtype=np.int64),
        node_feature=np.full(n, -1, dtype=np.int16),
        node_threshold=np.zeros(n),
        node_left=np.full(n, -1, dtype=np.int32),
        node_right=np.full(n, -1, dtype=np.int32),
        node_pred=np.array(preds, dtype=np.uint8),
        node_counts=np.ones((n, 5), dtype=np.float32),
    )


class TestPredict:
    def test_unanimous(self):
        forest = _manual_forest([1, 1, 1])
        assert predict(forest, np.zeros(1)) is ActivityLabel.LIFT_UP

    def test_tie_breaks_to_lowest_ordinal(self):
        forest = _manual_forest([0, 0, 1, 1])
        assert predict(forest, np.zeros(1)) is ActivityLabel.NULL
        forest = _manual_forest([4, 2, 2, 4])
        assert predict(forest, np.zeros(1)) is ActivityLabel.LIFT_DOWN

    def test_matches_traversal_oracle(self, rng):
        data = make_dataset({0: 40, 1: 40, 2: 40, 3: 40, 4: 40}, d=6, seed=8)
        forest = train_forest(data, ForestHyperparams(6, 9), seed=11)
        probe = rng.normal(size=(200, 6))
        probe[:, 0] += rng.choice([0, 4, 8, 12, 16], size=200)
        fast = predict_many(forest, probe)
        for i in range(len(probe)):
            assert fast[i] == vote_oracle(forest, probe[i])

    def test_arity_mismatch(self):
        data = separable_dataset()
        forest = train_forest(data, ForestHyperparams(None, 3), seed=0)
        with pytest.raises(ArityMismatchError):
            predict(forest, np.zeros(4))
        with pytest.raises(ArityMismatchError):
            predict_many(forest, np.zeros((5, 4)))


class TestFeatureImportances:
    def test_single_split_tree(self):
        data = separable_dataset(n_per_class=30)
        # one tree, depth 1: a single split; that feature gets importance 1
        forest = train_forest(data, ForestHyperparams(1, 1), seed=2)
        imp = feature_importances(forest)
        assert imp.min() >= 0
        assert imp.sum() == pytest.approx(1.0, abs=1e-9)
        assert np.count_nonzero(imp) == 1
        assert imp[0] == pytest.approx(1.0)  # class signal lives on feature 0

    def test_normalized_and_nonnegative(self):
        data = make_dataset({0: 50, 1: 50, 2: 50}, d=6, seed=3)
        forest = train_forest(data, ForestHyperparams(None, 25), seed=4)
        imp = feature_importances(forest)
        assert (imp >= 0).all()
        assert imp.sum() == pytest.approx(1.0, abs=1e-9)

    def test_unused_features_score_zero(self):
        data = separable_dataset(n_per_class=50)
        forest = train_forest(data, ForestHyperparams(2, 30), seed=5)
        imp = feature_importances(forest)
        used = set(
            int(f) for f in forest.node_feature[forest.node_feature >= 0]
        )
        for f in range(6):
            if f not in used:
                assert imp[f] == 0.0


class TestGridSearch:
    def test_singleton_grid(self):
        data = make_dataset({0: 30, 1: 30}, d=4, seed=0)
        cell = ForestHyperparams(5, 10)
        assert grid_search(data, [cell], k=3, seed=0) == cell

    def test_tiebreak_on_separable_data(self):
        data = make_dataset({0: 40, 3: 40}, d=4, seed=1)
        grid = [ForestHyperparams(d, n) for d in (15, 20, None) for n in (10, 20)]
        best = grid_search(data, grid, k=5, seed=2)
        # all cells hit CV accuracy 1.0; ties break to fewer trees, then the
        # smaller bounded depth
        assert best == ForestHyperparams(15, 10)

    def test_default_grid_shape(self):
        grid = default_grid()
        assert len(grid) == 21
        assert {c.max_depth for c in grid} == {15, 20, None}
        assert {c.n_estimators for c in grid} == {200, 225, 250, 275, 300, 325, 350}

    def test_insufficient_data(self):
        data = make_dataset({0: 30, 1: 4}, d=4, seed=3)
        with pytest.raises(InsufficientDataError):
            grid_search(data, [ForestHyperparams(None, 5)], k=10, seed=0)

    def test_shared_evaluation_equals_per_cell_training(self):
        # the one-grow-per-fold evaluation must equal literally training
        # every cell: rebuild each fold by hand and compare accuracies
        from stairlift.balance import random_oversample
        from stairlift.forest import _fold_seed, _stratified_folds

        data = make_dataset({0: 40, 1: 30, 2: 26, 4: 24}, d=5, seed=9)
        grid = [ForestHyperparams(d, n) for d in (2, 4, None) for n in (5, 11)]
        k = 4
        seed = 13
        best = grid_search(data, grid, k=k, seed=seed)

        fold_of = _stratified_folds(data.y, k, seed)
        acc_sum = {cell: 0.0 for cell in grid}
        for fold in range(k):
            val_idx = np.flatnonzero(fold_of == fold)
            train_idx = np.flatnonzero(fold_of != fold)
            balanced = random_oversample(data.select(train_idx), seed=_fold_seed(seed, fold, 1))
            for cell in grid:
                forest = train_forest(balanced, cell, seed=_fold_seed(seed, fold, 2))
                preds = predict_many(forest, data.X[val_idx])
                acc_sum[cell] += float(np.mean(preds == data.y[val_idx]))
        naive_best = max(
            grid,
            key=lambda c: (
                acc_sum[c] / k,
                -c.n_estimators,
                -(0 if c.max_depth is not None else 1),
                -(c.max_depth or 0),
            ),
        )
        assert best == naive_best

    def test_tree_seed_prefix_property(self):
        assert np.array_equal(derive_tree_seeds(99, 10), derive_tree_seeds(99, 25)[:10])


class TestPersistence:
    def test_save_load_predict_bit_identical(self, tmp_path, rng):
        data = make_dataset({0: 40, 2: 35, 3: 30}, d=6, seed=12)
        forest = train_forest(data, ForestHyperparams(15, 12), seed=21)
        path = tmp_path / "model.json"
        save_forest(forest, path)
        loaded = load_forest(path)
        probe = rng.normal(size=(300, 6))
        probe[:, 0] += rng.choice([0, 8, 12], size=300)
        np.testing.assert_array_equal(
            predict_many(forest, probe), predict_many(loaded, probe)
        )
        np.testing.assert_array_equal(forest.node_threshold, loaded.node_threshold)
        np.testing.assert_array_equal(
            feature_importances(forest), feature_importances(loaded)
        )
        assert loaded.feature_names == forest.feature_names
        assert loaded.hyperparams == forest.hyperparams
        assert loaded.class_names == CLASS_NAMES

    def test_rejects_foreign_files(self, tmp_path):
        path = tmp_path / "other.json"
        path.write_text('{"format": "something-else"}')
        with pytest.raises(ValueError):
            load_forest(path)
