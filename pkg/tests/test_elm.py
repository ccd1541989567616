import numpy as np
import pytest

from evolm import elm
from evolm.errors import ShapeError
from evolm.numerics import RngStream

XOR_X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
XOR_Y = np.array([0, 1, 1, 0])


def one_hot(labels, classes=2):
    out = np.zeros((len(labels), classes))
    out[np.arange(len(labels)), labels] = 1.0
    return out


class TestHiddenOutputMatrix:
    def test_zero_weights_give_half(self):
        X = np.random.default_rng(0).normal(size=(5, 4))
        H = elm.hidden_output_matrix(X, np.zeros((3, 4)), np.zeros(3))
        assert np.allclose(H, 0.5)

    def test_single_neuron_at_origin(self):
        H = elm.hidden_output_matrix(np.array([[0.0]]), np.array([[1.0]]), np.zeros(1))
        assert np.allclose(H, [[0.5]])

    def test_shape_is_samples_by_hidden(self):
        rng = np.random.default_rng(1)
        H = elm.hidden_output_matrix(
            rng.normal(size=(7, 20)), rng.normal(size=(120, 20)), rng.normal(size=120)
        )
        assert H.shape == (7, 120)

    def test_dim_mismatch_rejected(self):
        with pytest.raises(ShapeError):
            elm.hidden_output_matrix(np.ones((2, 3)), np.ones((4, 5)), np.ones(4))


class TestTrainOutputWeights:
    def test_zero_targets(self):
        H = np.random.default_rng(2).normal(size=(6, 4))
        assert np.allclose(elm.train_output_weights(H, np.zeros((6, 2))), 0.0)

    def test_identity_hidden(self):
        t = np.arange(8.0).reshape(4, 2)
        assert np.allclose(elm.train_output_weights(np.eye(4), t), t)

    def test_square_system_residual(self):
        rng = RngStream(30)
        X = rng.uniform(-1, 1, (30, 10))
        W, b = elm.random_elm(10, 30, rng.child("init"))
        H = elm.hidden_output_matrix(X, W, b)
        T = rng.child("targets").uniform(-1, 1, (30, 2))
        Q = elm.train_output_weights(H, T)
        assert np.linalg.norm(H @ Q - T) < 1e-3

    def test_row_mismatch_rejected(self):
        with pytest.raises(ShapeError):
            elm.train_output_weights(np.ones((3, 2)), np.ones((4, 2)))


class TestPredict:
    def test_zero_output_weights(self):
        model = elm.ElmModel(W=np.ones((3, 2)), b=np.zeros(3), Q=np.zeros((3, 2)))
        assert np.allclose(elm.predict(model, np.ones((5, 2))), 0.0)

    def test_single_sample_self_interpolation(self):
        rng = RngStream(4)
        X = rng.uniform(-1, 1, (1, 6))
        target = np.array([[0.3, 0.7]])
        W, b = elm.random_elm(6, 8, rng.child("w"))
        model = elm.fit(X, target, W, b)
        assert np.max(np.abs(elm.predict(model, X) - target)) < 1e-6

    def test_batch_equals_rowwise(self):
        rng = RngStream(5)
        X = rng.uniform(-1, 1, (9, 4))
        W, b = elm.random_elm(4, 7, rng.child("w"))
        model = elm.fit(X, rng.child("t").uniform(0, 1, (9, 2)), W, b)
        batch = elm.predict(model, X)
        rows = np.vstack([elm.predict(model, X[i : i + 1]) for i in range(9)])
        # gemm vs gemv accumulation order may differ in the last ulp
        assert np.allclose(batch, rows, rtol=1e-13, atol=1e-15)


class TestRandomElm:
    def test_reproducible(self):
        W1, b1 = elm.random_elm(5, 11, RngStream(77).child("elm-init"))
        W2, b2 = elm.random_elm(5, 11, RngStream(77).child("elm-init"))
        assert np.array_equal(W1, W2) and np.array_equal(b1, b2)

    def test_shapes(self):
        W, b = elm.random_elm(5, 11, RngStream(1))
        assert W.shape == (11, 5) and b.shape == (11,)

    def test_mean_near_zero(self):
        W, b = elm.random_elm(100, 100, RngStream(9))
        assert abs(W.mean()) < 0.05
        assert np.all(W >= -1.0) and np.all(W < 1.0)


def test_exact_interpolation_when_samples_at_most_hidden():
    rng = RngStream(123)
    X = rng.uniform(-1, 1, (30, 12))
    T = rng.child("t").uniform(0, 1, (30, 2))
    W, b = elm.random_elm(12, 30, rng.child("w"))
    model = elm.fit(X, T, W, b)
    H = elm.hidden_output_matrix(X, W, b)
    assert np.linalg.norm(H @ model.Q - T) < 1e-3


def test_xor_interpolation_across_seeds():
    hits = 0
    targets = one_hot(XOR_Y)
    for seed in range(10):
        W, b = elm.random_elm(2, 10, RngStream(seed).child("xor"))
        model = elm.fit(XOR_X, targets, W, b)
        preds = np.argmax(elm.predict(model, XOR_X), axis=1)
        hits += int(np.array_equal(preds, XOR_Y))
    assert hits >= 8


def test_save_load_round_trip(tmp_path):
    rng = RngStream(6)
    X = rng.uniform(-1, 1, (10, 3))
    W, b = elm.random_elm(3, 5, rng.child("w"))
    model = elm.fit(X, rng.child("t").uniform(0, 1, (10, 2)), W, b)
    path = tmp_path / "elm.json"
    elm.save_model(model, path)
    loaded = elm.load_model(path)
    assert np.array_equal(loaded.W, model.W)
    assert np.array_equal(loaded.b, model.b)
    assert np.array_equal(loaded.Q, model.Q)
    assert loaded.activation == "sigmoid"
