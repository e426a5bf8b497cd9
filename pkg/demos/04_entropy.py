# # Relative entropy on subalgebras
#
# Araki's relative entropy is computed from the relative modular operator.
# On a subalgebra it reduces to the Umegaki entropy of the restricted states
# block by block, which gives an independent check.

import math

import numpy as np

from hknet import modular as M
from hknet import opalg

# ## Classical pair

rho, sigma = np.diag([2 / 3, 1 / 3]), np.eye(2) / 2
S = M.araki_entropy(rho, sigma, opalg.full_algebra(2))
print("S =", S, " KL =", (2 / 3) * math.log(4 / 3) + (1 / 3) * math.log(2 / 3))

# ## A subalgebra with multiplicity
#
# M_2 (x) 1_2 inside M_4: only the reduced states matter.

A = opalg.block_algebra(((2, 2),))
rho, sigma = opalg.random_density(4, 0), opalg.random_density(4, 1)
dec = opalg.decompose(A)
print("Araki:", M.araki_entropy(rho, sigma, A))
print("blockwise Umegaki:", M.umegaki_blockwise(opalg.conditional_expectation(A, rho),
                                                opalg.conditional_expectation(A, sigma), dec))

# ## Data processing and Petz recovery

ch = opalg.random_channel(4, 2, 4, seed=3)
full4, full2 = opalg.full_algebra(4), opalg.full_algebra(2)
res = M.dpi_check(ch, rho, sigma, full4, full2)
print(f"S before {res.S_before:.4f}, after {res.S_after:.4f}, slack {res.slack:.4f}")
R = M.petz_recovery(ch, sigma)
print("||R(Phi(sigma)) - sigma|| =", np.linalg.norm(R.schrodinger(ch.schrodinger(sigma)) - sigma))
