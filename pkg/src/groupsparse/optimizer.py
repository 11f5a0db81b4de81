"""Adam and the mini-batch training loop."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, minibatches
from .network import Network, cross_entropy, forward
from .penalties import BiasMode, PenaltyKind, build_groups, penalty_value, total_gradient

logger = logging.getLogger(__name__)


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def adam_init(n_params: int, lr=0.001, beta1=0.9, beta2=0.999, eps=1e-8) -> AdamState:
    if n_params < 1:
        raise ValueError("need at least one parameter")
    if eps <= 0:
        raise ValueError("eps must be positive")
    return AdamState(np.zeros(n_params), np.zeros(n_params), 0, lr, beta1, beta2, eps)


def adam_step(state: AdamState, params: np.ndarray, grad: np.ndarray) -> tuple[AdamState, np.ndarray]:
    """One bias-corrected Adam update; inputs are left untouched."""
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != params.shape or state.m.shape != params.shape:
        raise ValueError("parameter, gradient and moment vectors must have equal length")
    if not np.all(np.isfinite(grad)):
        bad = np.flatnonzero(~np.isfinite(grad))
        raise FloatingPointError(f"non-finite gradient at step {state.t + 1}, e.g. index {bad[0]}")
    t = state.t + 1
    m = state.beta1 * state.m + (1 - state.beta1) * grad
    v = state.beta2 * state.v + (1 - state.beta2) * grad * grad
    m_hat = m / (1 - state.beta1 ** t)
    v_hat = v / (1 - state.beta2 ** t)
    new_params = params - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return AdamState(m, v, t, state.lr, state.beta1, state.beta2, state.eps), new_params


@dataclass(frozen=True)
class TrainConfig:
    penalty: PenaltyKind = PenaltyKind.SPARSE_GROUP_LASSO
    lam: float = 1e-3
    epochs: int = 200
    batch_size: int = 300
    seed: int = 0
    bias_mode: BiasMode = BiasMode.PER_BIAS
    threshold: float = 1e-3
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        object.__setattr__(self, "penalty", PenaltyKind.parse(self.penalty))
        object.__setattr__(self, "bias_mode", BiasMode(self.bias_mode))
        if self.lam < 0:
            raise ValueError("lambda must be non-negative")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if self.threshold < 0:
            raise ValueError("threshold must be non-negative")


@dataclass
class TrainHistory:
    objective: list = field(default_factory=list)
    data_loss: list = field(default_factory=list)
    train_accuracy: list = field(default_factory=list)

    def __len__(self):
        return len(self.objective)


def train(net: Network, train_set: Dataset, config: TrainConfig, record=True, step_callback=None):
    """Minimise mean cross-entropy plus ``lam * penalty`` with Adam.

    Every epoch reshuffles the samples with a generator seeded by
    ``(config.seed, epoch)`` and takes one step per consecutive slice,
    keeping the final partial batch. With ``record`` the full-training-set
    objective, loss and accuracy are logged after each epoch.

    Returns the trained network and its :class:`TrainHistory`.
    """
    n = len(train_set)
    if n == 0:
        raise ValueError("empty training set")
    if train_set.n_features != net.n_inputs or train_set.n_classes != net.n_outputs:
        raise ValueError("dataset does not match the network's input/output sizes")
    X = train_set.features
    D = train_set.one_hot()
    partition = build_groups(net, config.bias_mode)
    w = net.flat()
    state = adam_init(w.size, config.lr, config.beta1, config.beta2, config.eps)
    history = TrainHistory()
    batch = min(config.batch_size, n)
    for epoch in range(config.epochs):
        for idx in minibatches(n, batch, (config.seed, epoch)):
            current = net.with_flat(w)
            grad = total_gradient(current, X[idx], D[idx], config.penalty, config.lam, partition)
            state, w_next = adam_step(state, w, grad)
            if step_callback is not None:
                step_callback(w, w_next)
            w = w_next
        if record:
            current = net.with_flat(w)
            probs = forward(current, X).output
            loss = cross_entropy(D, probs)
            obj = loss + config.lam * penalty_value(config.penalty, w, partition)
            if not np.isfinite(obj):
                raise FloatingPointError(f"objective became {obj} at epoch {epoch + 1}")
            history.objective.append(obj)
            history.data_loss.append(loss)
            history.train_accuracy.append(float(np.mean(probs.argmax(axis=1) == train_set.labels)))
    trained = net.with_flat(w.copy())
    if not record and not np.all(np.isfinite(w)):
        raise FloatingPointError("training produced non-finite parameters")
    logger.debug("trained %s (lambda=%g) for %d epochs", config.penalty.value, config.lam, config.epochs)
    return trained, history
