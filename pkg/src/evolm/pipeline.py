"""End-to-end hybrid classifier.

A frozen convolutional stack supplies features; an ELM head classifies
them; the sine-cosine optimizer tunes the head's input weights and biases,
encoded as one flat candidate vector, against the closed-form training
loss.
"""

import dataclasses
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import cnn, elm, modelio, numerics, sca
from .errors import DomainError, ShapeError


def encode(W, b):
    """Flatten (W, b) feature-major: weights block first, biases last."""
    W = np.asarray(W, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if W.ndim != 2 or b.ndim != 1 or W.shape[0] != b.shape[0]:
        raise ShapeError(f"inconsistent shapes W {W.shape}, b {b.shape}")
    return np.concatenate([W.T.ravel(), b])


def decode(v, n, L):
    """Inverse of encode; requires length n*L + L."""
    v = np.asarray(v, dtype=np.float64).ravel()
    if v.size != n * L + L:
        raise ShapeError(f"candidate length {v.size} != {n}*{L} + {L}")
    W = v[: n * L].reshape(n, L).T.copy()
    b = v[n * L :].copy()
    return W, b


def training_loss(outputs, targets):
    """Half root-mean-square deviation over all output entries:
    0.5 * sqrt(sum((o - u)^2) / N) with N the number of samples."""
    outputs = np.asarray(outputs, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if outputs.shape != targets.shape:
        raise ShapeError(f"outputs {outputs.shape} and targets {targets.shape} differ")
    n = outputs.shape[0]
    value = 0.5 * math.sqrt(float(np.sum((outputs - targets) ** 2)) / n)
    return value if math.isfinite(value) else math.inf


def fitness(candidate, features, targets, n, L):
    """Training loss of the closed-form head for one encoded candidate."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != n:
        raise ShapeError(f"features must be (samples, {n}), got {features.shape}")
    W, b = decode(candidate, n, L)
    try:
        H = elm.hidden_output_matrix(features, W, b)
        Q = elm.train_output_weights(H, targets)
        return training_loss(H @ Q, targets)
    except (FloatingPointError, np.linalg.LinAlgError):
        return math.inf


def evolve_elm(features, targets, config, hidden):
    """Tune ELM input weights/biases by the sine-cosine optimizer.

    The search box defaults to [-1, 1] per dimension.  The returned model's
    output weights are re-solved from the best candidate, so recomputing its
    fitness reproduces the final convergence-curve value.
    """
    features = np.asarray(features, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if features.ndim != 2 or features.size == 0:
        raise DomainError("features must be a non-empty 2-D matrix")
    n = features.shape[1]
    dim = n * hidden + hidden
    if config.bounds is None:
        config = dataclasses.replace(config, bounds=[(-1.0, 1.0)] * dim)
    else:
        bounds = np.asarray(config.bounds, dtype=np.float64)
        if bounds.shape[0] != dim:
            raise ShapeError(f"bounds cover {bounds.shape[0]} dims, candidate has {dim}")

    def objective(v):
        return fitness(v, features, targets, n, hidden)

    result = sca.optimize(objective, config)
    W, b = decode(result.best_position, n, hidden)
    model = elm.fit(features, targets, W, b)
    return model, result.diagnostics


def one_hot(label_values, classes=2):
    label_values = np.asarray(label_values, dtype=np.int64)
    out = np.zeros((label_values.size, classes))
    out[np.arange(label_values.size), label_values] = 1.0
    return out


def softmax(scores):
    scores = np.asarray(scores, dtype=np.float64)
    z = scores - scores.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


@dataclass
class PipelineHyper:
    lr: float = 1e-4
    batch: int = 12
    epochs: int = 10
    pop: int = 50
    iters: int = 10
    a: float = 2.0
    hidden: int = 120
    threshold: float = 0.5
    loss_threshold: float | None = None


@dataclass
class PipelineModel:
    cnn: cnn.CnnModel
    elm: elm.ElmModel
    threshold: float = 0.5


@dataclass
class TrainReport:
    cnn_loss_trace: list
    sca_diagnostics: sca.DiagnosticsLog
    timings_ms: dict


def train_pipeline(train_images, train_labels, arch, hyper, seed):
    """Pretrain the conv stack, freeze it, extract features, and evolve the
    ELM head.  Deterministic for a fixed seed."""
    train_images = np.asarray(train_images, dtype=np.float64)
    train_labels = np.asarray(train_labels, dtype=np.int64)
    present = set(np.unique(train_labels).tolist())
    if not {0, 1} <= present:
        raise DomainError(f"need at least one sample of each class, got labels {sorted(present)}")

    root = numerics.RngStream(seed)
    timings = {}

    t0 = time.perf_counter()
    model = cnn.build_model(arch, root.child("cnn-init"), classes=2)
    trace = cnn.pretrain_gdbp(
        model, train_images, train_labels,
        lr=hyper.lr, batch=hyper.batch, epochs=hyper.epochs,
        stream=root.child("data-shuffle"),
    )
    cnn.freeze(model)
    timings["pretrain_ms"] = (time.perf_counter() - t0) * 1000.0

    t0 = time.perf_counter()
    features = cnn.extract_features(model, train_images)
    timings["extract_ms"] = (time.perf_counter() - t0) * 1000.0

    t0 = time.perf_counter()
    config = sca.ScaConfig(
        population=hyper.pop,
        max_iterations=hyper.iters,
        a=hyper.a,
        loss_threshold=hyper.loss_threshold,
        seed=numerics.derive_seed(seed, "sca"),
    )
    head, diagnostics = evolve_elm(features, one_hot(train_labels), config, hyper.hidden)
    timings["evolve_ms"] = (time.perf_counter() - t0) * 1000.0

    return (
        PipelineModel(cnn=model, elm=head, threshold=hyper.threshold),
        TrainReport(cnn_loss_trace=trace, sca_diagnostics=diagnostics, timings_ms=timings),
    )


def predict_epg_batch(model, batch_images):
    """Positive-class probability grade per image (softmax of raw scores)."""
    features = cnn.extract_features(model.cnn, batch_images)
    scores = elm.predict(model.elm, features)
    return softmax(scores)[:, 1]


def predict_epg(model, image):
    image = np.asarray(image, dtype=np.float64)
    if image.shape != (cnn.INPUT_SIZE, cnn.INPUT_SIZE):
        raise ShapeError(f"expected a 32x32 image, got {image.shape}")
    return float(predict_epg_batch(model, image[None])[0])


def classify(model, image, threshold=None):
    """1 (positive) when the probability grade reaches the threshold."""
    thr = model.threshold if threshold is None else threshold
    return int(predict_epg(model, image) >= thr)


# ---------------------------------------------------------------------------
# bundle persistence: cnn model + elm model + manifest


CNN_FILE = "cnn.json"
ELM_FILE = "elm.json"
MANIFEST_FILE = "manifest.json"


def save_bundle(directory, model, seed=None, hyper=None, arch=None, extra=None):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    cnn.save_model(model.cnn, directory / CNN_FILE)
    elm.save_model(model.elm, directory / ELM_FILE)
    manifest = {
        "format_version": modelio.FORMAT_VERSION,
        "architecture": arch or model.cnn.architecture.text,
        "seed": seed,
        "hyperparameters": dataclasses.asdict(hyper) if hyper is not None else None,
        "threshold": model.threshold,
    }
    if extra:
        manifest.update(extra)
    modelio.write_json(directory / MANIFEST_FILE, manifest)


def load_bundle(directory):
    directory = Path(directory)
    conv = cnn.load_model(directory / CNN_FILE)
    head = elm.load_model(directory / ELM_FILE)
    manifest = modelio.read_json(directory / MANIFEST_FILE)
    if conv.architecture.feature_dim != head.inputs:
        raise ShapeError(
            f"bundle mismatch: cnn features {conv.architecture.feature_dim} != elm inputs {head.inputs}"
        )
    return PipelineModel(cnn=conv, elm=head, threshold=float(manifest.get("threshold", 0.5)))
