"""
An autoencoder that respects pairwise constraints
=================================================

Train the same autoencoder with and without must-link / cannot-link terms and
watch what happens to the constrained pairs in the hidden layer.
"""
import numpy as np

from deepmne.neural import (ConstraintMatrices, TrainConfig, gradients, init_autoencoder, total_loss,
                            train_semi_ae)

rng = np.random.default_rng(0)
X = rng.random((30, 12))

must = [(0, 1), (2, 3)]
cannot = [(4, 5)]
cm = ConstraintMatrices.from_pairs(30, must, cannot)

###############################################################################
# Check the gradient numerically on one entry
# -------------------------------------------

pair = init_autoencoder(12, 4, seed=1)
cfg = TrainConfig(lam=0.5)
g = gradients(pair, X, cm, cfg)["encoder.W"][0, 0]
eps = 1e-6
W = pair.encoder.W
W[0, 0] += eps
up = total_loss(pair, X, cm, cfg)
W[0, 0] -= 2 * eps
down = total_loss(pair, X, cm, cfg)
W[0, 0] += eps
print(f"analytic {g:.8f}  numeric {(up - down) / (2 * eps):.8f}")

###############################################################################
# Train twice
# -----------

base = TrainConfig(epochs=300, batch_size=30, learning_rate=0.1, seed=3)
plain = train_semi_ae(X, cm, 4, TrainConfig.from_dict({**base.to_dict(), "lambda": 0.0})).H
semi = train_semi_ae(X, cm, 4, TrainConfig.from_dict({**base.to_dict(), "lambda": 1.0})).H


def dist(H, p):
    return np.linalg.norm(H[p[0]] - H[p[1]])


for label, pairs in (("must", must), ("cannot", cannot)):
    for p in pairs:
        print(f"{label:6s} {p}: plain {dist(plain, p):.3f}  constrained {dist(semi, p):.3f}")
