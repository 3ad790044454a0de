"""Shared softmax classifier: fitting, determinism, guards, serialization."""

import numpy as np
import pytest

from spgnn.errors import DegenerateDataError
from spgnn.nn import MLPClassifier, softmax


def blobs(seed=0, n=60):
    """Three well-separated 2-D clusters."""
    rng = np.random.default_rng(seed)
    centers = np.array([[0.0, 0.0], [6.0, 0.0], [0.0, 6.0]])
    x = np.vstack([rng.normal(c, 0.4, size=(n, 2)) for c in centers])
    y = np.repeat(np.arange(3), n)
    return x, y


def test_softmax_rows_sum_to_one():
    z = np.array([[1.0, 2.0, 3.0], [1000.0, 1000.0, 1000.0]])
    p = softmax(z)
    assert np.allclose(p.sum(axis=1), 1.0)
    assert np.all(p > 0.0)  # the shifted exponent avoids overflow to 0/inf


def test_fit_separable_data():
    x, y = blobs()
    clf = MLPClassifier(input_dim=2, hidden=(8,), n_classes=3, seed=0)
    trace = clf.fit(x, y, epochs=60)
    assert (clf.predict(x) == y).mean() == 1.0
    assert trace[-1] < trace[0]
    assert clf.predict_proba(x).shape == (len(y), 3)


def test_fit_is_deterministic():
    x, y = blobs()
    runs = []
    for _ in range(2):
        clf = MLPClassifier(input_dim=2, hidden=(8,), n_classes=3, seed=3)
        trace = clf.fit(x, y, epochs=10)
        runs.append((trace, [w.copy() for w in clf.weights]))
    assert runs[0][0] == runs[1][0]
    for w1, w2 in zip(runs[0][1], runs[1][1]):
        assert np.array_equal(w1, w2)


def test_single_class_refused():
    x = np.zeros((10, 2))
    y = np.zeros(10, dtype=int)
    clf = MLPClassifier(input_dim=2, hidden=(4,), n_classes=3, seed=0)
    with pytest.raises(DegenerateDataError, match="single class"):
        clf.fit(x, y)


def test_labels_out_of_range_rejected():
    x = np.zeros((4, 2))
    clf = MLPClassifier(input_dim=2, hidden=(4,), n_classes=2, seed=0)
    with pytest.raises(ValueError, match="outside"):
        clf.fit(x, np.array([0, 1, 2, 1]))


def test_constant_feature_does_not_divide_by_zero():
    x, y = blobs(n=30)
    x = np.column_stack([x, np.full(len(y), 5.0)])
    clf = MLPClassifier(input_dim=3, hidden=(8,), n_classes=3, seed=0)
    clf.fit(x, y, epochs=30)
    assert np.isfinite(clf.predict_proba(x)).all()


def test_round_trip_serialization():
    x, y = blobs(n=20)
    clf = MLPClassifier(input_dim=2, hidden=(8, 4), n_classes=3, seed=1)
    clf.fit(x, y, epochs=20)
    clone = MLPClassifier.from_dict(clf.to_dict())
    assert np.allclose(clone.predict_proba(x), clf.predict_proba(x))
