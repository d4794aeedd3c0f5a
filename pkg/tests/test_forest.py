import numpy as np
import pytest

from imatch.forest import (ForestError, ForestModel, ForestParams, TrainingSet, fit_norm,
                           grow_tree, train_forest)

SMALL = ForestParams(num_trees=15, max_depth=6, min_leaf=1, seed=3)


def blobs(n=200, seed=0):
    """Two classes on disjoint feature ranges."""
    rng = np.random.default_rng(seed)
    half = n // 2
    a = rng.uniform(0, 1, size=(half, 4))
    b = rng.uniform(2, 3, size=(n - half, 4))
    return TrainingSet(np.vstack([a, b]), ["a"] * half + ["b"] * (n - half))


def one_hot(k=5, per=10):
    X = np.repeat(np.eye(k), per, axis=0)
    return TrainingSet(X, [str(i) for i in range(k) for _ in range(per)])


def test_separable_blobs_training_accuracy():
    data = blobs()
    model = train_forest(data, SMALL)
    acc = np.mean(np.array(model.predict_many(data.X)) == np.array(data.labels))
    assert acc >= 0.95


def test_one_hot_each_ensemble_perfect():
    data = one_hot()
    model = train_forest(data, SMALL)
    scores = model.class_scores(data.X)
    for c, label in enumerate(data.classes):
        positive = np.array(data.labels) == label
        pred = scores[:, c] > 0.5
        assert np.array_equal(pred, positive)


def test_predict_centroid_and_training_row():
    data = blobs()
    model = train_forest(data, SMALL)
    assert model.predict(data.X[0])[0] == "a"
    labels = np.array(data.labels)
    for k in data.classes:
        assert model.predict(data.X[labels == k].mean(axis=0))[0] == k


def test_byte_identical_and_round_trip(tmp_path):
    data = blobs()
    m1, m2 = train_forest(data, SMALL), train_forest(data, SMALL)
    assert m1.to_bytes() == m2.to_bytes()
    path = tmp_path / "m.bin"
    m1.save(path)
    back = ForestModel.load(path)
    assert back.to_bytes() == m1.to_bytes()
    assert np.array_equal(back.class_scores(data.X), m1.class_scores(data.X))


def test_serial_equals_parallel():
    data = blobs()
    assert train_forest(data, SMALL, jobs=1).to_bytes() == train_forest(data, SMALL, jobs=3).to_bytes()


def test_row_permutation_invariance():
    data = blobs(seed=1)
    perm = np.random.default_rng(9).permutation(len(data.X))
    shuffled = TrainingSet(data.X[perm], [data.labels[i] for i in perm], data.classes)
    assert train_forest(data, SMALL).to_bytes() == train_forest(shuffled, SMALL).to_bytes()


def test_seed_changes_model():
    data = blobs()
    other = ForestParams(num_trees=15, max_depth=6, min_leaf=1, seed=4)
    assert train_forest(data, SMALL).to_bytes() != train_forest(data, other).to_bytes()


def test_tree_respects_depth_and_min_leaf():
    data = blobs()
    y = (np.array(data.labels) == "a").astype(float)
    params = ForestParams(num_trees=1, max_depth=2, min_leaf=5, seed=0)
    tree = grow_tree(fit_norm(data.X).transform(data.X), y, params, np.random.default_rng(0))
    assert tree.depth() <= 2
    assert tree.leaf_counts().min() >= 5


def test_errors():
    with pytest.raises(ForestError):
        train_forest(TrainingSet(np.zeros((3, 2)), ["a", "a", "a"]), SMALL)
    with pytest.raises(ForestError):
        train_forest(TrainingSet(np.zeros((1, 2)), ["a"]), SMALL)
    with pytest.raises(ForestError):
        TrainingSet(np.zeros((2, 2)), ["a"])
    model = train_forest(blobs(), SMALL)
    with pytest.raises(ForestError):
        model.class_scores(np.zeros((1, 3)))
    with pytest.raises(ForestError):
        ForestModel.from_bytes(b"NOTAFOREST")


def test_constant_feature_normalization():
    stats = fit_norm(np.array([[1.0, 5.0], [3.0, 5.0]]))
    assert np.array_equal(stats.std, [1.0, 1.0])
    assert np.array_equal(stats.transform([[2.0, 5.0]]), [[0.0, 0.0]])
