"""Feed-forward ReLU/softmax networks, forward propagation and backprop.

Weights of layer ``k`` are stored with shape ``(L_{k+1}, L_k)`` so that the
outgoing connections of neuron ``i`` in layer ``k`` form column ``i`` of the
matrix. Everything is float64.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

RELU = "relu"
SOFTMAX = "softmax"
ACTIVATIONS = (RELU, SOFTMAX)

LOG_CLAMP = 1e-12


@dataclass(frozen=True)
class Network:
    """Parameters of a fully connected classifier.

    ``weights[k]`` has shape ``(layer_dims[k + 1], layer_dims[k])`` and
    ``biases[k]`` has length ``layer_dims[k + 1]``.
    """

    layer_dims: tuple[int, ...]
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    activations: tuple[str, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.layer_dims)
        object.__setattr__(self, "layer_dims", dims)
        object.__setattr__(self, "weights", tuple(self.weights))
        object.__setattr__(self, "biases", tuple(self.biases))
        object.__setattr__(self, "activations", tuple(self.activations))
        n_layers = len(dims) - 1
        if n_layers < 1 or min(dims) < 1:
            raise ValueError(f"invalid layer_dims {dims}")
        if not (len(self.weights) == len(self.biases) == len(self.activations) == n_layers):
            raise ValueError("weights, biases and activations must have one entry per layer")
        for k in range(n_layers):
            if self.weights[k].shape != (dims[k + 1], dims[k]):
                raise ValueError(
                    f"weight {k} has shape {self.weights[k].shape}, expected {(dims[k + 1], dims[k])}"
                )
            if self.biases[k].shape != (dims[k + 1],):
                raise ValueError(f"bias {k} has shape {self.biases[k].shape}, expected {(dims[k + 1],)}")
        if self.activations[-1] != SOFTMAX or SOFTMAX in self.activations[:-1]:
            raise ValueError("exactly one softmax activation, on the output layer, is required")
        if any(a not in ACTIVATIONS for a in self.activations):
            raise ValueError(f"unknown activation in {self.activations}")

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def n_inputs(self) -> int:
        return self.layer_dims[0]

    @property
    def n_outputs(self) -> int:
        return self.layer_dims[-1]

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def flat(self) -> np.ndarray:
        """Concatenation ``[W_1, b_1, W_2, b_2, ...]`` with row-major weights."""
        return np.concatenate([a.ravel() for pair in zip(self.weights, self.biases) for a in pair])

    def with_flat(self, w: np.ndarray) -> "Network":
        """Network with the same architecture whose parameters view ``w``."""
        weights, biases = unflatten(self.layer_dims, w)
        return Network(self.layer_dims, weights, biases, self.activations)

    def copy(self) -> "Network":
        return self.with_flat(self.flat())


def default_activations(n_layers: int) -> tuple[str, ...]:
    return (RELU,) * (n_layers - 1) + (SOFTMAX,)


def param_slices(layer_dims) -> list[tuple[slice, slice]]:
    """Offsets of ``(W_k, b_k)`` inside the flat parameter vector."""
    out = []
    pos = 0
    for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
        w_sl = slice(pos, pos + fan_in * fan_out)
        pos = w_sl.stop
        b_sl = slice(pos, pos + fan_out)
        pos = b_sl.stop
        out.append((w_sl, b_sl))
    return out


def unflatten(layer_dims, w: np.ndarray):
    w = np.asarray(w, dtype=np.float64)
    slices = param_slices(layer_dims)
    if w.shape != (slices[-1][1].stop,):
        raise ValueError(f"parameter vector of length {w.size} does not match {tuple(layer_dims)}")
    weights = tuple(w[ws].reshape(n_out, n_in)
                    for (ws, _), n_in, n_out in zip(slices, layer_dims[:-1], layer_dims[1:]))
    biases = tuple(w[bs] for _, bs in slices)
    return weights, biases


def init_glorot(layer_dims, activations=None, seed: int = 0) -> Network:
    """Glorot-uniform weights, zero biases, deterministic in ``seed``."""
    layer_dims = [int(d) for d in layer_dims]
    if len(layer_dims) < 2:
        raise ValueError("need at least an input and an output layer")
    if min(layer_dims) < 1:
        raise ValueError(f"layer dimensions must be positive, got {layer_dims}")
    if activations is None:
        activations = default_activations(len(layer_dims) - 1)
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return Network(tuple(layer_dims), weights, biases, activations)


def relu(s):
    return np.maximum(s, 0.0)


def softmax(s):
    """Row-wise softmax with max subtraction."""
    s = np.asarray(s, dtype=np.float64)
    z = np.exp(s - s.max(axis=-1, keepdims=True))
    return z / z.sum(axis=-1, keepdims=True)


def cross_entropy(d, p) -> float:
    """``-sum(d * log p)`` for one sample, or the mean over rows of a batch."""
    d = np.asarray(d, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    if d.shape != p.shape:
        raise ValueError(f"shape mismatch: targets {d.shape} vs probabilities {p.shape}")
    losses = -(d * np.log(np.maximum(p, LOG_CLAMP))).sum(axis=-1)
    return float(np.mean(losses))


def _activate(kind, s):
    return relu(s) if kind == RELU else softmax(s)


@dataclass(frozen=True)
class ForwardTrace:
    """Pre-activations ``s_k`` and activations ``h_k`` for one batch.

    ``activations[0]`` is the input batch and ``activations[-1]`` the class
    probabilities.
    """

    pre_activations: tuple[np.ndarray, ...]
    activations: tuple[np.ndarray, ...]

    @property
    def output(self) -> np.ndarray:
        return self.activations[-1]


def forward(net: Network, X) -> ForwardTrace:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != net.n_inputs:
        raise ValueError(f"expected a batch with {net.n_inputs} columns, got shape {X.shape}")
    h = X
    pre, acts = [], [X]
    for W, b, kind in zip(net.weights, net.biases, net.activations):
        s = h @ W.T + b
        h = _activate(kind, s)
        pre.append(s)
        acts.append(h)
    return ForwardTrace(tuple(pre), tuple(acts))


def predict_proba(net: Network, X) -> np.ndarray:
    return forward(net, X).output


def predict(net: Network, X) -> np.ndarray:
    return np.argmax(predict_proba(net, X), axis=1)


def accuracy(net: Network, X, labels) -> float:
    return float(np.mean(predict(net, X) == np.asarray(labels)))


def data_loss(net: Network, X, D) -> float:
    return cross_entropy(D, predict_proba(net, X))


def data_loss_gradient(net: Network, X, D, trace: ForwardTrace | None = None) -> np.ndarray:
    """Flat gradient of the mean cross-entropy over the batch.

    Uses the fused softmax/cross-entropy output delta ``p - d``.
    """
    D = np.asarray(D, dtype=np.float64)
    if trace is None:
        trace = forward(net, X)
    P = trace.output
    if D.shape != P.shape:
        raise ValueError(f"targets have shape {D.shape}, network outputs {P.shape}")
    if not np.all(np.isfinite(P)):
        raise FloatingPointError("non-finite activations in forward pass")
    n = P.shape[0]
    delta = (P - D) / n
    grads = [None] * (2 * net.n_layers)
    for k in range(net.n_layers - 1, -1, -1):
        h = trace.activations[k]
        grads[2 * k] = (delta.T @ h).ravel()
        grads[2 * k + 1] = delta.sum(axis=0)
        if k > 0:
            delta = (delta @ net.weights[k]) * (trace.pre_activations[k - 1] > 0)
    return np.concatenate(grads)
