# # Signalling witnesses
#
# On a net satisfying duality, any strict enlargement of A(O) must contain
# an operation that disturbs some spacelike observer.  The witness search
# returns the unitary, the disturbed observable, a state showing the change
# and the relative entropy between the states before and after.

import numpy as np

from hknet import net as N
from hknet import nosignal as ns

net = N.load_net_config("full-net-2q")
O = net.region([0])

# ## The fixed menu of one-site extensions
#
# Each Pauli on a site outside O generates an extension of A(O).

for gen, ext in ns.single_generator_extensions(net, O):
    w = ns.find_signalling_witness(net, O, ext, seed=0)
    print(f"{gen:>8}: observer {w.region_B.label()}  ||[u,b]|| = {w.commutator_norm:.3f}  "
          f"S = {w.entropy_value:.3e}  theta = {w.theta:.3f}")

# ## The witness unitary as a channel
#
# Ad_u moves a spacelike observable: the Heisenberg image differs from b.

w = ns.find_signalling_witness(net, O, ns.single_generator_extensions(net, O)[0][1], seed=0)
u, b = w.unitary_u, w.element_b
print("\n||u* b u - b|| =", np.linalg.norm(u.conj().T @ b @ u - b, 2))
