# # Duality, maximal extensions and sharpness
#
# A local algebra A(O) can never be enlarged by an observable that still
# commutes with everything spacelike to O beyond A(O')'. When duality
# A(O)' = A(O') holds these coincide and A(O) is already maximal.  When it
# fails, the gap A(O')' minus A(O) contains operations that are invisible
# to every spacelike observer.

import numpy as np

from hknet import net as N
from hknet import nosignal as ns

# ## Full net on two qubits
#
# Every interval algebra is a full matrix algebra, so duality holds everywhere.

full = N.load_net_config("full-net-2q")
for O in N.all_intervals(full.chain):
    if not N.spacelike_complement(O).sites:
        continue
    rep = ns.essential_duality_check(full, O)
    print(f"full {O.label():>5}: holds={rep.holds} dim A(O)={rep.dim_A} "
          f"dim A(O')'={rep.dim_max_extension}")

# ## Z2 fixed-point net
#
# Keeping only parity-even observables breaks duality: the commutant of the
# complement contains parity-odd operators on O that A(O) lacks.

z2 = N.load_net_config("z2-net-2q")
O = z2.region([0])
rep = ns.essential_duality_check(z2, O)
print(f"\nz2 {O.label()}: holds={rep.holds} dim A(O)={rep.dim_A} "
      f"dim A(O')'={rep.dim_max_extension} gap={rep.gap}")

# ## Those extra operators do not signal
#
# Random unitaries of A(O')' leave every observable of O' fixed.

sh = ns.sharpness_demo(z2, O, n_samples=32, seed=1)
print(f"32 unitaries of A(O')': max deviation on O' = {sh.max_deviation:.2e}")
print(f"sample deviations: {np.round(sh.samples[:5], 14)}")
