"""Group-sparse training of feed-forward networks.

Train ReLU/softmax classifiers under weight decay, lasso, group lasso or
sparse group lasso, then threshold, measure and compact the result.
"""

from .data import (Dataset, load_csv, load_digits, load_idx, minibatches, normalize_minmax,
                   one_hot, split, synth_blobs, write_idx)
from .experiment import (PRESETS, ExperimentConfig, RunResult, SweepRecord, aggregate,
                         feature_map_export, lambda_sweep, render_report, run_experiment,
                         run_once, run_repeats, write_sweep_csv)
from .network import (ForwardTrace, Network, accuracy, cross_entropy, data_loss_gradient,
                       forward, init_glorot, predict, relu, softmax)
from .optimizer import AdamState, TrainConfig, TrainHistory, adam_init, adam_step, train
from .penalties import (BiasMode, Group, GroupKind, GroupPartition, PenaltyKind, build_groups,
                        objective, penalty_subgradient, penalty_value, total_gradient)
from .pruning import (DegenerateNetworkError, PruneReport, active_neurons, compact, prune_report,
                      sparsity, threshold_weights, total_sparsity)
from .serialize import deserialize_model, serialize_model

__version__ = "0.1.0"
