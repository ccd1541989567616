"""LeNet-style convolution/pooling stack trained by plain SGD backprop.

Architectures are parsed from strings like ``in_6c_2p_12c_2p``: alternating
5x5 valid convolutions (tanh) and 2x2 sum-pooling stages with a trainable
per-map scale and bias (tanh).  A temporary softmax head is attached for
pretraining; freezing drops the head and the stack becomes an immutable
feature extractor.
"""

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import modelio
from .errors import DomainError, ParseError, ShapeError, StateError

INPUT_SIZE = 32
KERNEL = 5


@dataclass
class ConvSpec:
    maps: int


@dataclass
class PoolSpec:
    factor: int


@dataclass
class CnnArchitecture:
    text: str
    stages: list
    shape_chain: list  # spatial sizes, input first
    feature_maps: int
    feature_dim: int


def parse_architecture(text):
    """Parse ``in_<maps>c_<factor>p_...`` and validate the 32x32 size chain."""
    tokens = text.split("_")
    if len(tokens) < 3 or tokens[0] != "in" or (len(tokens) - 1) % 2 != 0:
        raise ParseError(f"architecture must match in_(<int>c_<int>p_)+, got {text!r}")
    stages = []
    size = INPUT_SIZE
    maps = 1
    chain = [size]
    for pos, tok in enumerate(tokens[1:]):
        kind, num = tok[-1:], tok[:-1]
        if not num.isdigit() or int(num) <= 0:
            raise ParseError(f"bad stage token {tok!r} in {text!r}")
        value = int(num)
        expected = "c" if pos % 2 == 0 else "p"
        if kind != expected:
            raise ParseError(
                f"stage {pos + 1} of {text!r} must be a {'convolution' if expected == 'c' else 'pooling'} token"
            )
        if kind == "c":
            if size < KERNEL:
                raise ShapeError(f"{text!r}: map size {size} too small for a {KERNEL}x{KERNEL} kernel")
            size -= KERNEL - 1
            stages.append(ConvSpec(value))
            maps = value
        else:
            if size % value:
                raise ShapeError(f"{text!r}: size {size} not divisible by pool factor {value}")
            size //= value
            stages.append(PoolSpec(value))
        chain.append(size)
    return CnnArchitecture(
        text=text,
        stages=stages,
        shape_chain=chain,
        feature_maps=maps,
        feature_dim=maps * size * size,
    )


@dataclass
class ConvLayer:
    kernels: np.ndarray  # (out_maps, in_maps, 5, 5)
    biases: np.ndarray  # (out_maps,)


@dataclass
class PoolLayer:
    beta: np.ndarray  # (maps,) trainable scale
    bias: np.ndarray  # (maps,) trainable bias
    factor: int = 2


@dataclass
class Head:
    weights: np.ndarray  # (feature_dim, classes)
    biases: np.ndarray  # (classes,)


@dataclass
class CnnModel:
    architecture: CnnArchitecture
    layers: list
    head: Head | None
    frozen: bool = False


def build_model(arch, stream, classes=2):
    """Fresh model with scaled-uniform weights and a softmax pretraining head."""
    if isinstance(arch, str):
        arch = parse_architecture(arch)
    layers = []
    in_maps = 1
    for spec in arch.stages:
        if isinstance(spec, ConvSpec):
            fan_in = in_maps * KERNEL * KERNEL
            fan_out = spec.maps * KERNEL * KERNEL
            bound = math.sqrt(6.0 / (fan_in + fan_out))
            kernels = stream.uniform(-bound, bound, (spec.maps, in_maps, KERNEL, KERNEL))
            layers.append(ConvLayer(kernels=kernels, biases=np.zeros(spec.maps)))
            in_maps = spec.maps
        else:
            # Scale 1/window-area starts pooling as a plain average, which
            # keeps the tanh away from saturation.
            area = spec.factor * spec.factor
            layers.append(
                PoolLayer(beta=np.full(in_maps, 1.0 / area), bias=np.zeros(in_maps), factor=spec.factor)
            )
    bound = math.sqrt(6.0 / (arch.feature_dim + classes))
    head = Head(
        weights=stream.uniform(-bound, bound, (arch.feature_dim, classes)),
        biases=np.zeros(classes),
    )
    return CnnModel(architecture=arch, layers=layers, head=head, frozen=False)


# ---------------------------------------------------------------------------
# batched forward / backward


def _conv_act(layer, x):
    if x.shape[2] < KERNEL or x.shape[3] < KERNEL:
        raise ShapeError(f"input maps {x.shape[2]}x{x.shape[3]} smaller than the kernel")
    if x.shape[1] != layer.kernels.shape[1]:
        raise ShapeError(
            f"layer expects {layer.kernels.shape[1]} input maps, got {x.shape[1]}"
        )
    win = sliding_window_view(x, (KERNEL, KERNEL), axis=(2, 3))
    pre = np.einsum("oiuv,nihwuv->nohw", layer.kernels, win, optimize=True)
    pre += layer.biases[None, :, None, None]
    return np.tanh(pre)


def _conv_backward(layer, x, act, dact):
    dpre = dact * (1.0 - act * act)
    dbias = dpre.sum(axis=(0, 2, 3))
    win = sliding_window_view(x, (KERNEL, KERNEL), axis=(2, 3))
    dkern = np.einsum("nihwuv,nohw->oiuv", win, dpre, optimize=True)
    pad = KERNEL - 1
    dpre_pad = np.pad(dpre, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    winp = sliding_window_view(dpre_pad, (KERNEL, KERNEL), axis=(2, 3))
    flipped = layer.kernels[:, :, ::-1, ::-1]
    dx = np.einsum("nohwuv,oiuv->nihw", winp, flipped, optimize=True)
    return dx, dkern, dbias


def _pool_sum(layer, x):
    f = layer.factor
    n, c, h, w = x.shape
    if h % f or w % f:
        raise ShapeError(f"map size {h}x{w} not divisible by pool factor {f}")
    return x.reshape(n, c, h // f, f, w // f, f).sum(axis=(3, 5))


def _pool_act(layer, x):
    if x.shape[1] != layer.beta.shape[0]:
        raise ShapeError(f"layer expects {layer.beta.shape[0]} input maps, got {x.shape[1]}")
    s = _pool_sum(layer, x)
    pre = layer.beta[None, :, None, None] * s + layer.bias[None, :, None, None]
    return np.tanh(pre), s


def _pool_backward(layer, s, act, dact):
    f = layer.factor
    dpre = dact * (1.0 - act * act)
    dbeta = np.einsum("nchw,nchw->c", dpre, s)
    dbias = dpre.sum(axis=(0, 2, 3))
    g = dpre * layer.beta[None, :, None, None]
    dx = np.repeat(np.repeat(g, f, axis=2), f, axis=3)
    return dx, dbeta, dbias


def _forward_stack(model, x, keep=False):
    caches = []
    a = x
    for layer in model.layers:
        if isinstance(layer, ConvLayer):
            out = _conv_act(layer, a)
            if keep:
                caches.append((layer, a, out))
        else:
            out, s = _pool_act(layer, a)
            if keep:
                caches.append((layer, s, out))
        a = out
    return a, caches


def _softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _cross_entropy(logits, labels):
    shifted = logits - logits.max(axis=1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=1))
    per_sample = lse - shifted[np.arange(len(labels)), labels]
    return float(per_sample.mean())


def loss_and_gradients(model, images, labels):
    """Mean cross-entropy through the softmax head, plus gradients for every
    trainable parameter (conv kernels/biases, pool scales/biases, head)."""
    if model.head is None:
        raise StateError("model has no classification head")
    x = np.asarray(images, dtype=np.float64)[:, None]
    labels = np.asarray(labels)
    n = x.shape[0]
    maps, caches = _forward_stack(model, x, keep=True)
    feats = maps.reshape(n, -1)
    logits = feats @ model.head.weights + model.head.biases
    loss = _cross_entropy(logits, labels)

    probs = _softmax(logits)
    dlogits = probs.copy()
    dlogits[np.arange(n), labels] -= 1.0
    dlogits /= n
    head_grads = (feats.T @ dlogits, dlogits.sum(axis=0))

    da = (dlogits @ model.head.weights.T).reshape(maps.shape)
    layer_grads = [None] * len(model.layers)
    for idx in range(len(model.layers) - 1, -1, -1):
        layer, stored, act = caches[idx]
        if isinstance(layer, ConvLayer):
            da, dkern, dbias = _conv_backward(layer, stored, act, da)
            layer_grads[idx] = (dkern, dbias)
        else:
            da, dbeta, dbias = _pool_backward(layer, stored, act, da)
            layer_grads[idx] = (dbeta, dbias)
    return loss, layer_grads, head_grads


def pretrain_gdbp(model, images, labels, lr, batch, epochs, stream):
    """Mini-batch SGD through the temporary head; returns per-epoch mean loss."""
    if model.frozen:
        raise StateError("model is frozen; training is not permitted")
    if model.head is None:
        raise StateError("model has no classification head to train through")
    images = np.asarray(images, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if images.ndim != 3 or images.shape[0] == 0:
        raise DomainError("training data must be a non-empty (n, 32, 32) stack")
    classes = model.head.weights.shape[1]
    if labels.min() < 0 or labels.max() >= classes:
        raise DomainError(f"labels must lie in [0, {classes})")
    if batch < 1:
        raise DomainError(f"batch size must be >= 1, got {batch}")

    n = images.shape[0]
    trace = []
    for _ in range(int(epochs)):
        order = stream.permutation(n)
        total = 0.0
        for start in range(0, n, int(batch)):
            idx = order[start : start + int(batch)]
            loss, layer_grads, head_grads = loss_and_gradients(
                model, images[idx], labels[idx]
            )
            total += loss * len(idx)
            for layer, grads in zip(model.layers, layer_grads):
                if isinstance(layer, ConvLayer):
                    layer.kernels -= lr * grads[0]
                    layer.biases -= lr * grads[1]
                else:
                    layer.beta -= lr * grads[0]
                    layer.bias -= lr * grads[1]
            model.head.weights -= lr * head_grads[0]
            model.head.biases -= lr * head_grads[1]
        trace.append(total / n)
    return trace


def freeze(model):
    """Drop the head and lock the weights; idempotent."""
    model.frozen = True
    model.head = None
    return model


def forward_features(model, image):
    """Flattened final feature-map stack for one 32x32 image."""
    image = np.asarray(image, dtype=np.float64)
    if image.shape != (INPUT_SIZE, INPUT_SIZE):
        raise ShapeError(f"expected a {INPUT_SIZE}x{INPUT_SIZE} image, got {image.shape}")
    maps, _ = _forward_stack(model, image[None, None])
    return maps.reshape(-1)


def extract_features(model, images):
    """Feature matrix for a stack of images, one row per image."""
    images = np.asarray(images, dtype=np.float64)
    if images.ndim != 3 or images.shape[1:] != (INPUT_SIZE, INPUT_SIZE):
        raise ShapeError(f"expected (n, {INPUT_SIZE}, {INPUT_SIZE}) images, got {images.shape}")
    maps, _ = _forward_stack(model, images[:, None])
    return maps.reshape(images.shape[0], -1)


# ---------------------------------------------------------------------------
# spec'd single-image layer operations


def conv_forward(layer, input_maps):
    """Valid 5x5 cross-correlation over all input maps, tanh squashed."""
    maps = np.asarray(input_maps, dtype=np.float64)
    if maps.ndim != 3:
        raise ShapeError(f"expected a (maps, h, w) stack, got shape {maps.shape}")
    return _conv_act(layer, maps[None])[0]


def pool_forward(layer, input_maps):
    """Sum over pooling windows, scaled and biased per map, tanh squashed."""
    maps = np.asarray(input_maps, dtype=np.float64)
    if maps.ndim != 3:
        raise ShapeError(f"expected a (maps, h, w) stack, got shape {maps.shape}")
    return _pool_act(layer, maps[None])[0][0]


# ---------------------------------------------------------------------------
# persistence


def save_model(model, path):
    layers = []
    for layer in model.layers:
        if isinstance(layer, ConvLayer):
            layers.append(
                {
                    "type": "conv",
                    "kernels": modelio.array_to_json(layer.kernels),
                    "biases": modelio.array_to_json(layer.biases),
                }
            )
        else:
            layers.append(
                {
                    "type": "pool",
                    "factor": layer.factor,
                    "beta": modelio.array_to_json(layer.beta),
                    "bias": modelio.array_to_json(layer.bias),
                }
            )
    doc = {
        "format_version": modelio.FORMAT_VERSION,
        "kind": "cnn",
        "architecture": model.architecture.text,
        "frozen": model.frozen,
        "layers": layers,
        "head": None
        if model.head is None
        else {
            "weights": modelio.array_to_json(model.head.weights),
            "biases": modelio.array_to_json(model.head.biases),
        },
    }
    modelio.write_json(path, doc)


def load_model(path):
    doc = modelio.read_json(path)
    if doc.get("kind") != "cnn":
        raise ValueError(f"not a cnn model file: {path}")
    arch = parse_architecture(doc["architecture"])
    layers = []
    for entry in doc["layers"]:
        if entry["type"] == "conv":
            layers.append(
                ConvLayer(
                    kernels=modelio.array_from_json(entry["kernels"]),
                    biases=modelio.array_from_json(entry["biases"]),
                )
            )
        else:
            layers.append(
                PoolLayer(
                    beta=modelio.array_from_json(entry["beta"]),
                    bias=modelio.array_from_json(entry["bias"]),
                    factor=int(entry["factor"]),
                )
            )
    head = None
    if doc.get("head"):
        head = Head(
            weights=modelio.array_from_json(doc["head"]["weights"]),
            biases=modelio.array_from_json(doc["head"]["biases"]),
        )
    return CnnModel(architecture=arch, layers=layers, head=head, frozen=bool(doc["frozen"]))


# ---------------------------------------------------------------------------
# standalone gradient-descent classifier head (used for timing baselines)


def train_head_gdbp(features, labels, lr, batch, epochs, stream, hidden=(), classes=2):
    """Train a tanh MLP head (features -> hidden... -> classes) by plain SGD.

    ``hidden=()`` gives a single softmax layer; ``hidden=(120, 84)`` is the
    classic fully-connected classifier block.  Returns (weights, biases,
    per-epoch loss trace).
    """
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if features.ndim != 2 or features.shape[0] == 0:
        raise DomainError("features must be a non-empty 2-D matrix")
    sizes = [features.shape[1], *hidden, classes]
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(stream.uniform(-bound, bound, (fan_in, fan_out)))
        biases.append(np.zeros(fan_out))

    n = features.shape[0]
    trace = []
    for _ in range(int(epochs)):
        order = stream.permutation(n)
        total = 0.0
        for start in range(0, n, int(batch)):
            idx = order[start : start + int(batch)]
            x = features[idx]
            y = labels[idx]
            acts = [x]
            for li in range(len(weights) - 1):
                acts.append(np.tanh(acts[-1] @ weights[li] + biases[li]))
            logits = acts[-1] @ weights[-1] + biases[-1]
            total += _cross_entropy(logits, y) * len(idx)

            dlogits = _softmax(logits)
            dlogits[np.arange(len(idx)), y] -= 1.0
            dlogits /= len(idx)
            grad = dlogits
            for li in range(len(weights) - 1, -1, -1):
                dw = acts[li].T @ grad
                db = grad.sum(axis=0)
                if li > 0:
                    grad = (grad @ weights[li].T) * (1.0 - acts[li] * acts[li])
                weights[li] -= lr * dw
                biases[li] -= lr * db
        trace.append(total / n)
    return weights, biases, trace
