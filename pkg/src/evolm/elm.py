"""Extreme learning machine head.

Input weights and biases are random (or supplied by an optimizer); the
hidden layer is sigmoid; output weights come from a single least-squares
solve, so training is closed-form.
"""

from dataclasses import dataclass

import numpy as np

from . import modelio, numerics
from .errors import ShapeError


def sigmoid(z):
    """Numerically stable 1 / (1 + exp(-z))."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class ElmModel:
    W: np.ndarray  # (hidden, inputs) input weights
    b: np.ndarray  # (hidden,) hidden biases
    Q: np.ndarray  # (hidden, outputs) output weights
    activation: str = "sigmoid"

    @property
    def inputs(self):
        return self.W.shape[1]

    @property
    def hidden(self):
        return self.W.shape[0]

    @property
    def outputs(self):
        return self.Q.shape[1]


def hidden_output_matrix(X, W, b):
    """Hidden activations, one row per sample: sigmoid(x_j . w_i + b_i)."""
    X = np.asarray(X, dtype=np.float64)
    W = np.asarray(W, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if X.ndim != 2 or W.ndim != 2:
        raise ShapeError("samples and weights must be 2-D")
    if X.shape[1] != W.shape[1]:
        raise ShapeError(
            f"feature dim mismatch: samples have {X.shape[1]}, weights expect {W.shape[1]}"
        )
    if b.shape != (W.shape[0],):
        raise ShapeError(f"bias shape {b.shape} does not match {W.shape[0]} hidden units")
    return sigmoid(X @ W.T + b)


def train_output_weights(H, targets):
    """Minimum-norm least-squares output weights for hidden activations H."""
    H = np.asarray(H, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if H.shape[0] != targets.shape[0]:
        raise ShapeError(
            f"row mismatch: H has {H.shape[0]} rows, targets have {targets.shape[0]}"
        )
    return numerics.solve_least_squares(H, targets)


def predict(model, X):
    """Raw output scores, one row per sample."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.inputs:
        raise ShapeError(f"expected samples of dim {model.inputs}, got shape {X.shape}")
    return hidden_output_matrix(X, model.W, model.b) @ model.Q


def random_elm(n, L, stream):
    """Random input weights and biases, uniform in [-1, 1]."""
    W = stream.uniform(-1.0, 1.0, (int(L), int(n)))
    b = stream.uniform(-1.0, 1.0, int(L))
    return W, b


def fit(X, targets, W, b):
    """Assemble a trained model from given input weights and biases."""
    H = hidden_output_matrix(X, W, b)
    Q = train_output_weights(H, targets)
    return ElmModel(W=np.asarray(W, float), b=np.asarray(b, float), Q=Q)


def save_model(model, path):
    modelio.write_json(
        path,
        {
            "format_version": modelio.FORMAT_VERSION,
            "kind": "elm",
            "inputs": model.inputs,
            "hidden": model.hidden,
            "outputs": model.outputs,
            "activation": model.activation,
            "W": modelio.array_to_json(model.W),
            "b": modelio.array_to_json(model.b),
            "Q": modelio.array_to_json(model.Q),
        },
    )


def load_model(path):
    doc = modelio.read_json(path)
    if doc.get("kind") != "elm":
        raise ValueError(f"not an elm model file: {path}")
    return ElmModel(
        W=modelio.array_from_json(doc["W"]),
        b=modelio.array_from_json(doc["b"]),
        Q=modelio.array_from_json(doc["Q"]),
        activation=doc.get("activation", "sigmoid"),
    )
