"""Feedforward signal classifier on a flat parameter vector.

Dense ReLU layers with inverted dropout, a softmax output, cross-entropy loss
and RMSprop. Parameters live in one flat float64 vector so that federated
averaging is plain vector arithmetic; ``unpack`` gives per-layer views.
Layout per layer: weight matrix of shape (fan_in, fan_out), row-major, then
the bias vector.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

CHECKPOINT_MAGIC = "fedpoison-model"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class Architecture:
    input_size: int = 32
    hidden_sizes: tuple = (128, 64, 32)
    output_size: int = 2
    dropout_rate: float = 0.2

    def __post_init__(self):
        object.__setattr__(self, "hidden_sizes", tuple(int(h) for h in self.hidden_sizes))
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must lie in [0, 1)")

    @property
    def sizes(self):
        return (self.input_size, *self.hidden_sizes, self.output_size)

    @property
    def layer_shapes(self):
        s = self.sizes
        return list(zip(s[:-1], s[1:]))


CLASSIFIER = Architecture()


def param_count(arch: Architecture = CLASSIFIER) -> int:
    return sum(a * b + b for a, b in arch.layer_shapes)


def unpack(params: np.ndarray, arch: Architecture):
    """List of (W, b) views into ``params``."""
    if params.shape != (param_count(arch),):
        raise ValueError(f"expected {param_count(arch)} parameters, got shape {params.shape}")
    layers, at = [], 0
    for a, b in arch.layer_shapes:
        W = params[at:at + a * b].reshape(a, b)
        at += a * b
        layers.append((W, params[at:at + b]))
        at += b
    return layers


def init_params(arch: Architecture, rng: np.random.Generator) -> np.ndarray:
    """Glorot-uniform weights, zero biases."""
    params = np.zeros(param_count(arch))
    for W, _ in unpack(params, arch):
        limit = np.sqrt(6.0 / (W.shape[0] + W.shape[1]))
        W[...] = rng.uniform(-limit, limit, size=W.shape)
    return params


def _log_softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def _forward(params, X, arch, rng):
    """Returns logits and the cache needed for backprop.

    ``rng=None`` means evaluation mode (no dropout).
    """
    layers = unpack(params, arch)
    keep = 1.0 - arch.dropout_rate
    h = X
    cache = []
    for W, b in layers[:-1]:
        z = h @ W + b
        a = np.maximum(z, 0.0)
        if rng is not None and arch.dropout_rate > 0:
            mask = (rng.random(a.shape) < keep) / keep
            a = a * mask
        else:
            mask = None
        cache.append((h, z, mask))
        h = a
    W, b = layers[-1]
    cache.append((h, None, None))
    return h @ W + b, cache


def _check_features(X):
    X = np.asarray(X, dtype=float)
    if not np.isfinite(X).all():
        raise ValueError("features must be finite")
    return X


def forward(params, features, arch: Architecture = CLASSIFIER, rng=None) -> np.ndarray:
    """Class probabilities for one 32-vector or a batch of shape (N, 32).

    Passing an ``rng`` selects training mode, i.e. inverted dropout on every
    hidden layer.
    """
    X = _check_features(features)
    single = X.ndim == 1
    logits, _ = _forward(params, np.atleast_2d(X), arch, rng)
    probs = np.exp(_log_softmax(logits))
    return probs[0] if single else probs


def predict(params, X, arch: Architecture = CLASSIFIER) -> np.ndarray:
    logits, _ = _forward(params, _check_features(X), arch, None)
    return logits.argmax(axis=1)


def accuracy(params, X, y, arch: Architecture = CLASSIFIER) -> float:
    return float(np.mean(predict(params, X, arch) == np.asarray(y)))


def loss_and_grad(params, X, y, arch: Architecture = CLASSIFIER, rng=None):
    """Mean cross-entropy over the batch and its gradient w.r.t. ``params``.

    The dropout masks drawn for the forward pass are reused for backprop.
    With ``rng=None`` no dropout is applied.
    """
    X = np.atleast_2d(_check_features(X))
    y = np.asarray(y, dtype=np.int64)
    if len(y) == 0 or len(X) != len(y):
        raise ValueError("need a non-empty batch with one label per row")
    n = len(y)
    logits, cache = _forward(params, X, arch, rng)
    logp = _log_softmax(logits)
    loss = -logp[np.arange(n), y].mean()

    delta = np.exp(logp)
    delta[np.arange(n), y] -= 1.0
    delta /= n

    layers = unpack(params, arch)
    grad = np.empty_like(params)
    grads = unpack(grad, arch)
    for li in range(len(layers) - 1, -1, -1):
        h_in = cache[li][0]
        gW, gb = grads[li]
        gW[...] = h_in.T @ delta
        gb[...] = delta.sum(axis=0)
        if li == 0:
            break
        delta = delta @ layers[li][0].T
        _, z, mask = cache[li - 1]
        if mask is not None:
            delta = delta * mask
        delta = delta * (z > 0)
    return float(loss), grad


@dataclass
class OptimizerState:
    accumulator: np.ndarray
    learning_rate: float = 1e-3
    rho: float = 0.9
    epsilon: float = 1e-8

    @classmethod
    def fresh(cls, size: int, **kw) -> "OptimizerState":
        return cls(np.zeros(size), **kw)


def rmsprop_step(params, grad, state: OptimizerState):
    """One RMSprop update; returns new (params, state) and leaves inputs untouched."""
    if not (params.shape == grad.shape == state.accumulator.shape):
        raise ValueError("params, grad and accumulator must have equal length")
    acc = state.rho * state.accumulator + (1.0 - state.rho) * grad * grad
    new = params - state.learning_rate * grad / np.sqrt(acc + state.epsilon)
    return new, replace(state, accumulator=acc)


def train_epochs(params, X, y, state: OptimizerState, rng, arch: Architecture = CLASSIFIER,
                 epochs: int = 1, batch_size: int = 32):
    """Shuffled minibatch RMSprop with dropout; returns (params, state, last loss)."""
    n = len(y)
    loss = float("nan")
    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            loss, g = loss_and_grad(params, X[idx], y[idx], arch, rng)
            params, state = rmsprop_step(params, g, state)
    return params, state, loss


@dataclass
class Checkpoint:
    arch: Architecture
    params: np.ndarray
    meta: dict = field(default_factory=dict)


def save_checkpoint(path, params, arch: Architecture = CLASSIFIER, **meta) -> None:
    """One JSON header line, then the raw little-endian float64 parameters."""
    params = np.asarray(params, dtype="<f8")
    if params.shape != (param_count(arch),):
        raise ValueError("parameter vector does not match the architecture")
    header = {
        "format": CHECKPOINT_MAGIC,
        "version": CHECKPOINT_VERSION,
        "input_size": arch.input_size,
        "hidden_sizes": list(arch.hidden_sizes),
        "output_size": arch.output_size,
        "dropout_rate": arch.dropout_rate,
        "count": len(params),
        "meta": meta,
    }
    with Path(path).open("wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        fh.write(params.tobytes())


def load_checkpoint(path) -> Checkpoint:
    with Path(path).open("rb") as fh:
        header = json.loads(fh.readline())
        blob = fh.read()
    if header.get("format") != CHECKPOINT_MAGIC or header.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: not a version-{CHECKPOINT_VERSION} checkpoint")
    arch = Architecture(header["input_size"], tuple(header["hidden_sizes"]),
                        header["output_size"], header["dropout_rate"])
    params = np.frombuffer(blob, dtype="<f8").astype(float)
    if len(params) != header["count"] or len(params) != param_count(arch):
        raise ValueError(f"{path}: truncated or mismatched parameter block")
    return Checkpoint(arch, params, header.get("meta", {}))
