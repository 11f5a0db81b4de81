"""
Four penalties on the 8x8 digits
================================

Train the same 40/20 network with weight decay, lasso, group lasso and
sparse group lasso, then compare accuracy and how much of the network
survives thresholding.
"""

from dataclasses import replace

from groupsparse import ExperimentConfig, load_digits, normalize_minmax, run_experiment
from groupsparse.experiment import report_table

digits = normalize_minmax(load_digits())
print(len(digits), "images with", digits.n_features, "pixels")

# The preset fixes the architecture, lambda=1e-3, 200 epochs and batches of 300.
# Three seeds keep the demo short; the reported numbers use more.
config = ExperimentConfig.from_preset("digits", repeats=3)

results = {}
for penalty in ("l2", "l1", "gl", "sgl"):
    run = replace(config, train=replace(config.train, penalty=penalty))
    results[penalty] = run_experiment(digits, run, n_jobs=3)

# Sparsity is per weight matrix, Neurons counts surviving inputs then hidden units.
print(report_table(results))

for penalty, agg in results.items():
    print(f"{penalty:>4}: {agg['selected_features']['mean']:5.1f} pixels used, "
          f"{agg['hidden_neurons']['mean']:5.1f} hidden neurons left")
