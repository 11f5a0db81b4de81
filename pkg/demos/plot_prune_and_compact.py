"""
Thresholding and shrinking a trained network
============================================

After training, weights under 1e-3 are zeroed. A neuron whose outgoing
weights are all zero can be cut out, giving a smaller dense network that
computes exactly the same outputs.
"""

import numpy as np

from groupsparse import (TrainConfig, compact, init_glorot, load_digits, normalize_minmax, split,
                         threshold_weights, train)
from groupsparse.network import predict_proba
from groupsparse.pruning import active_neurons, total_sparsity

digits = normalize_minmax(load_digits())
train_set, test_set = split(digits, 0.25, seed=0)

net = init_glorot([64, 40, 20, 10], seed=0)
trained, history = train(net, train_set, TrainConfig(penalty="sgl", lam=1e-3, epochs=200, batch_size=300))
print("final objective", history.objective[-1])

pruned = threshold_weights(trained, 1e-3)
print("zero weights:", f"{total_sparsity(pruned):.2%}")
print("active neurons per layer:", active_neurons(pruned))

small, keep = compact(pruned)
print("compacted layer sizes:", small.layer_dims)

# The compacted net only sees the kept pixels.
X = test_set.features
gap = np.abs(predict_proba(small, X[:, keep[0]]) - predict_proba(pruned, X)).max()
print("largest output difference:", gap)

# Which pixels were dropped, as an 8x8 mask.
mask = np.zeros(64, dtype=int)
mask[keep[0]] = 1
print(mask.reshape(8, 8))
