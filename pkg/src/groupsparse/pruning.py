"""Post-training thresholding, sparsity metrics and network compaction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import Network


class DegenerateNetworkError(ValueError):
    """Compaction would leave a layer with no neurons."""


def threshold_weights(net: Network, tau=1e-3) -> Network:
    """Zero every weight and bias with ``|value| < tau``."""
    if tau < 0:
        raise ValueError("threshold must be non-negative")
    w = net.flat()
    w[np.abs(w) < tau] = 0.0
    return net.with_flat(w)


def sparsity(net: Network) -> list[float]:
    """Fraction of exact zeros in each weight matrix (biases excluded)."""
    return [float(np.count_nonzero(W == 0) / W.size) for W in net.weights]


def total_sparsity(net: Network) -> float:
    zeros = sum(np.count_nonzero(W == 0) for W in net.weights)
    return float(zeros / sum(W.size for W in net.weights))


def active_masks(net: Network) -> list[np.ndarray]:
    """Per non-output layer, which neurons have a nonzero outgoing weight."""
    return [np.any(W != 0, axis=0) for W in net.weights]


def active_neurons(net: Network) -> list[int]:
    """Active neuron counts for the input layer and every hidden layer."""
    return [int(m.sum()) for m in active_masks(net)]


def selected_features(net: Network) -> np.ndarray:
    return active_masks(net)[0]


def compact(net: Network) -> tuple[Network, list[np.ndarray]]:
    """Drop unselected inputs and hidden neurons whose outgoing group is zero.

    Returns the smaller network and, for each non-output layer, the indices
    of the kept neurons in the original numbering. The output layer is
    never reduced. Only terms multiplied by exact zeros are removed, so the
    compacted network computes the same function.
    """
    masks = active_masks(net)
    for k, m in enumerate(masks):
        if not m.any():
            what = "input layer" if k == 0 else f"hidden layer {k}"
            raise DegenerateNetworkError(f"{what} would lose all of its neurons")
    keep = [np.flatnonzero(m) for m in masks]
    weights, biases = [], []
    for k, (W, b) in enumerate(zip(net.weights, net.biases)):
        rows = keep[k + 1] if k + 1 < len(keep) else np.arange(W.shape[0])
        weights.append(W[np.ix_(rows, keep[k])].copy())
        biases.append(b[rows].copy())
    dims = [len(ix) for ix in keep] + [net.n_outputs]
    return Network(tuple(dims), weights, biases, net.activations), keep


@dataclass(frozen=True)
class PruneReport:
    sparsity: list[float]
    neurons: list[int]
    n_selected_features: int
    feature_mask: np.ndarray
    compacted_dims: list[int]
    threshold: float

    @property
    def total_hidden_neurons(self) -> int:
        return int(sum(self.neurons[1:]))

    def to_dict(self) -> dict:
        return {
            "sparsity": list(self.sparsity),
            "neurons": list(self.neurons),
            "selected_features": self.n_selected_features,
            "feature_mask": [bool(b) for b in self.feature_mask],
            "compacted_dims": list(self.compacted_dims),
            "threshold": self.threshold,
        }


def prune_report(net_before: Network, net_after: Network, tau: float) -> PruneReport:
    """Metrics of a thresholded network; ``net_before`` only fixes the architecture."""
    if net_before.layer_dims != net_after.layer_dims:
        raise ValueError(f"architectures differ: {net_before.layer_dims} vs {net_after.layer_dims}")
    mask = selected_features(net_after)
    neurons = active_neurons(net_after)
    return PruneReport(
        sparsity=sparsity(net_after),
        neurons=neurons,
        n_selected_features=int(mask.sum()),
        feature_mask=mask,
        compacted_dims=neurons + [net_after.n_outputs],
        threshold=float(tau),
    )
