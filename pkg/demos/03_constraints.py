"""
Picking constraints from correlated embeddings
==============================================

Rank node pairs by Pearson correlation, keep the extremes, and merge what
several networks agree on.
"""
import numpy as np

from deepmne.constraints import extract_threshold, extract_topk, merge_constraints, pairwise_pcc

rng = np.random.default_rng(5)

# two groups of rows built around opposite prototypes
proto = rng.normal(size=6)
H = np.vstack([proto + rng.normal(0, 0.2, 6) for _ in range(4)] +
              [-proto + rng.normal(0, 0.2, 6) for _ in range(4)])

pcc = pairwise_pcc(H)
print(f"{len(pcc)} pairs, correlation range {min(pcc.values()):.2f} .. {max(pcc.values()):.2f}")

###############################################################################
# Top-k and thresholds
# --------------------

top = extract_topk(H, 3)
print("must:", sorted(top.must))
print("cannot:", sorted(top.cannot))

th = extract_threshold(H, f1=0.95, f2=-0.9)
print(f"threshold rule: {len(th.must)} must, {len(th.cannot)} cannot")

###############################################################################
# Merging across networks
# -----------------------
# Each "network" sees a noisy copy; only pairs every copy agrees on survive.

views = [extract_topk(H + rng.normal(0, 0.3, H.shape), 5) for _ in range(3)]
merged = merge_constraints(views)
print("per view:", [len(v.must) for v in views], "-> merged must:", sorted(merged.must))
