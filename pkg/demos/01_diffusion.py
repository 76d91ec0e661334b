"""
Random walk with restart on a small graph
=========================================

Diffuse a toy network and compare the iterative result with a direct solve.
"""
import numpy as np

from deepmne.diffusion import rwr, rwr_exact, transition_matrix

###############################################################################
# A path 0-1-2-3 plus an isolated node 4
# --------------------------------------

A = np.zeros((5, 5))
for i, j in [(0, 1), (1, 2), (2, 3)]:
    A[i, j] = A[j, i] = 1.0

T, isolated = transition_matrix(A)
print("isolated nodes:", sorted(isolated))
print("column sums of T:", T.sum(axis=0))

###############################################################################
# Iterate to the fixed point
# --------------------------
# Column j of S is the visiting distribution of a walker that restarts at j.

dm = rwr(T, alpha=0.5)
print(f"{dm.iterations_used} iterations, residual {dm.residual:.1e}")
print(np.round(dm.S, 3))

# the isolated node keeps all of its mass
assert dm.S[4, 4] == 1.0

###############################################################################
# Same answer from a linear solve
# -------------------------------

gap = np.abs(dm.S - rwr_exact(T, 0.5).S).max()
print(f"max gap to the direct solve: {gap:.1e}")

# a larger restart probability keeps the walker closer to home
for alpha in (0.1, 0.5, 0.9):
    print(alpha, np.round(rwr(T, alpha).S[0], 3))
