"""Reshaping a single-qubit Hamiltonian and watching the randomised evolution converge."""
import math

import numpy as np

from hamlearn import LowIntersectionHamiltonian, TwirlDistribution, effective_hamiltonian
from hamlearn.sim import qdrift_evolve

#
# An unknown qubit Hamiltonian with all three Pauli components.
#
h = LowIntersectionHamiltonian.from_terms(1, [("X", 0.3), ("Y", -0.2), ("Z", 0.5)])

#
# Conjugating by I or X with equal weight cancels the Y and Z parts.
#
d = TwirlDistribution(1, clusters=((0,),), gammas=(("X",),))
print("effective Hamiltonian:", {str(p): c for p, c in effective_hamiltonian(h, d).terms})

#
# Physically, we interleave short evolutions with random X flips.  With r
# segments the averaged return probability approaches cos(0.3 t)^2 and the
# gap closes roughly like 1/r.
#
t = 1.0
rng = np.random.default_rng(0)
start = np.tile(np.array([1, 0], dtype=complex), (2000, 1))
target = math.cos(0.3 * t) ** 2
for r in (2, 8, 32, 128):
    out = qdrift_evolve(start, h, d, t, r, rng)
    p0 = np.mean(np.abs(out[:, 0]) ** 2)
    print(f"r={r:4d}  P(0)={p0:.4f}  target={target:.4f}  gap={abs(p0 - target):.4f}")
