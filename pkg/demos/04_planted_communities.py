"""
Recovering planted communities from three noisy networks
========================================================

Three independent draws of a 3-community graph share 60 nodes. We embed them
jointly, then ask a linear classifier to recover community membership.
The whole script runs in a few seconds.
"""
import time

import numpy as np

from deepmne.evaluation import kfold_cv
from deepmne.neural import TrainConfig
from deepmne.pipeline import PipelineConfig, network_features, run_deepmne
from deepmne.synthetic import planted_partition

graphs, labels = planted_partition(60, 3, p_in=0.3, p_out=0.02, n_networks=3, seed=1)
print("edges per network:", [len(g.edges) for g in graphs])

train = TrainConfig(activation="tanh", learning_rate=0.01, epochs=1000, batch_size=16,
                    lam=1.0, lambda1=1.0, lambda2=0.1, seed=1)

###############################################################################
# With and without constraint exchange
# ------------------------------------

runs = {}
for name, T in (("exchange", None), ("no exchange", 0)):
    cfg = PipelineConfig(layer_dims=(60, 30, 10), iterations_T=T, constraint_fraction_P=0.01, train=train)
    start = time.perf_counter()
    runs[name] = run_deepmne(graphs, cfg)
    rep = kfold_cv(runs[name].combined, labels.assign, k=5, seed=1)
    print(f"{name:12s} F1 {rep.micro_f1:.3f}  AUROC {rep.micro_auroc:.3f}  ({time.perf_counter() - start:.1f}s)")

# On a single seed either variant can come out ahead; the gap is small at
# this size. Loop over a few seeds before drawing conclusions.

###############################################################################
# What was exchanged
# ------------------
# With P = 0.01 each network extracts 17 must-links and 17 cannot-links out of
# 1770 pairs; only the few that both other networks agree on are passed on.

for entry in runs["exchange"].provenance["constraint_trace"]:
    print({k: entry[k] for k in ("network", "merged_must", "merged_cannot", "conflicts", "drift")})

###############################################################################
# For comparison, the diffusion features alone
# --------------------------------------------

raw = np.hstack([network_features(g, cfg)[0] for g in graphs])
print(f"raw RWR features  AUROC {kfold_cv(raw, labels.assign, k=5, seed=1).micro_auroc:.3f}")
