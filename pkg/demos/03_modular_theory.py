# # Modular theory in finite dimensions
#
# A faithful state on an algebra gives a cyclic and separating vector in the
# standard form.  The Tomita operator S: x Omega -> x* Omega has polar
# decomposition J Delta^{1/2}; J swaps the algebra with its commutant and
# Delta^{it} implements a flow satisfying the KMS condition.

import numpy as np

from hknet import modular as M
from hknet import opalg

A = opalg.full_algebra(2)
omega = np.diag([2 / 3, 1 / 3])

form = M.standard_form(A, omega)
md = M.tomita_operator(form)
print("representation dimension:", form.rep_dim)
print("polar residual:", M.polar_residual(md))
print("J Omega = Omega, Delta Omega = Omega residuals:", M.vacuum_residuals(md))

# ## Tomita-Takesaki checks
#
# J M J = M', and the flow maps M and M' into themselves.

res = M.tomita_takesaki_check(md)
print(res)

# ## Modular spectrum
#
# For a full matrix algebra Delta = omega (x) omega^{-1}, so its spectrum is
# the set of ratios of eigenvalues of omega.

print("spectrum of Delta:", np.round(np.sort(np.linalg.eigvalsh(md.Delta)), 6))

# ## KMS condition
#
# omega(A sigma_{-i}(B)) = omega(B A) on random pairs, acting in the standard form.

rng = np.random.default_rng(0)
pairs = [tuple(form.represent(opalg.random_element(A, int(s), "complex"))
               for s in rng.integers(0, 2**31, 2)) for _ in range(10)]
print("KMS residual:", M.kms_check(md, pairs))
